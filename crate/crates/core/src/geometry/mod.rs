//! Reference meshes, shape maps, and deformed surfaces.
//!
//! The obstacle boundary is parameterized over the unit sphere: an icosphere
//! mesh supplies flat reference panels with collocation at projected
//! centroids, and a [`ShapeMap`] φ carries sphere points, tangent frames,
//! and area elements onto the deformed surface.  Area factors and normals
//! come from analytic differentials of φ, not from finite differences, so
//! shape sensitivities see a smooth discrete geometry.

mod mesh;
mod shape;
mod surface;

pub use mesh::{spherical_triangle_area, ReferenceMesh, MAX_LEVEL};
pub use shape::{Bump, ShapeMap};
pub use surface::{
    apply_shape, export_mesh, validate_shape, winding_number, CurvedSample, DeformedSurface,
    PanelGeometry, ShapeReport, MIN_JACOBIAN,
};
