//! Deformed surfaces: a reference mesh pushed through a shape map.

use std::io::Write;

use serde::Serialize;

use super::mesh::ReferenceMesh;
use super::shape::ShapeMap;
use crate::quadrature::Bary;
use crate::vec3::{cross, dist, dot, norm, normalize, scale, Vec3};
use crate::{Error, Result};

/// Area elements below this are treated as a degenerate (non-immersive)
/// parameterization and rejected.
pub const MIN_JACOBIAN: f64 = 1e-10;

/// A shape map realized on a reference mesh: per-panel collocation points
/// on the deformed surface with analytic normals and quadrature weights.
#[derive(Debug, Clone)]
pub struct DeformedSurface {
    pub mesh: ReferenceMesh,
    pub shape: ShapeMap,
    /// φ(centroid) per panel.
    pub points: Vec<Vec3>,
    /// Unit outward normals at the collocation points.
    pub normals: Vec<Vec3>,
    /// Area elements σ̃ at the collocation points.
    pub sigmas: Vec<f64>,
    /// Panel quadrature weights: flat reference area × σ̃.
    pub weights: Vec<f64>,
    /// Deformed panel corners φ(node) (nodes are unit vectors already).
    pub corners: Vec<[Vec3; 3]>,
    /// Longest edge of each deformed panel.
    pub diameters: Vec<f64>,
    /// Digest binding shape parameters and mesh level.
    pub shape_hash: String,
}

/// Builds the deformed surface, rejecting invalid shape parameters and
/// degenerate tangent frames at the collocation points.
pub fn apply_shape(mesh: ReferenceMesh, shape: ShapeMap) -> Result<DeformedSurface> {
    shape.validate()?;
    let n = mesh.panel_count();
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut corners = Vec::with_capacity(n);
    let mut diameters = Vec::with_capacity(n);

    for p in 0..n {
        let c = mesh.centroids[p];
        let (nu, sigma) = shape.frame(c);
        if !sigma.is_finite() || sigma < MIN_JACOBIAN {
            return Err(Error::Shape(format!(
                "area element {sigma:.3e} at panel {p} below {MIN_JACOBIAN:.0e}; \
                 map is not an immersion on this mesh"
            )));
        }
        points.push(shape.eval(c));
        normals.push(nu);
        sigmas.push(sigma);
        weights.push(mesh.flat_areas[p] * sigma);
        let ref_corners = mesh.panel_corners(p);
        let def = [
            shape.eval(ref_corners[0]),
            shape.eval(ref_corners[1]),
            shape.eval(ref_corners[2]),
        ];
        diameters.push(
            dist(def[0], def[1])
                .max(dist(def[1], def[2]))
                .max(dist(def[2], def[0])),
        );
        corners.push(def);
    }

    let shape_hash = shape.surface_digest(mesh.level);
    Ok(DeformedSurface {
        mesh,
        shape,
        points,
        normals,
        sigmas,
        weights,
        corners,
        diameters,
        shape_hash,
    })
}

impl DeformedSurface {
    pub fn panel_count(&self) -> usize {
        self.points.len()
    }

    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    /// Curved-panel geometry helper for panel `p`.
    pub fn panel(&self, p: usize) -> PanelGeometry<'_> {
        PanelGeometry { surface: self, p }
    }
}

/// A quadrature sample on the curved image of a reference panel.
#[derive(Debug, Clone, Copy)]
pub struct CurvedSample {
    /// Point on the deformed surface.
    pub y: Vec3,
    /// Unit outward normal at `y`.
    pub nu: Vec3,
    /// Measure factor relative to the flat reference chart: the product of
    /// the flat-to-sphere projection Jacobian and σ̃.  A barycentric rule
    /// weight gets multiplied by 2·(flat area)·jacobian.
    pub jacobian: f64,
}

/// Maps barycentric coordinates of one reference panel onto the curved
/// deformed surface: s ↦ s/|s| onto the sphere, then through φ.
pub struct PanelGeometry<'a> {
    surface: &'a DeformedSurface,
    p: usize,
}

impl PanelGeometry<'_> {
    /// Barycentric point mapped to the unit sphere.
    pub fn sphere_point(&self, b: Bary) -> Vec3 {
        let c = self.surface.mesh.panel_corners(self.p);
        normalize([
            b[0] * c[0][0] + b[1] * c[1][0] + b[2] * c[2][0],
            b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1],
            b[0] * c[0][2] + b[1] * c[1][2] + b[2] * c[2][2],
        ])
    }

    /// Barycentric point mapped through sphere projection and shape map,
    /// used for distance queries during near-singular splitting.
    pub fn deformed_point(&self, b: Bary) -> Vec3 {
        self.surface.shape.eval(self.sphere_point(b))
    }

    /// Full quadrature sample with the exact curved measure.
    pub fn sample(&self, b: Bary) -> CurvedSample {
        let c = self.surface.mesh.panel_corners(self.p);
        let s = [
            b[0] * c[0][0] + b[1] * c[1][0] + b[2] * c[2][0],
            b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1],
            b[0] * c[0][2] + b[1] * c[1][2] + b[2] * c[2][2],
        ];
        let sn = norm(s);
        let x = scale(1.0 / sn, s);
        // Radial projection of the flat chart onto the sphere scales areas
        // by (n̂·ŝ)/|s|².
        let proj = dot(self.surface.mesh.flat_normals[self.p], s) / (sn * sn * sn);
        let (nu, sigma) = self.surface.shape.frame(x);
        CurvedSample {
            y: self.surface.shape.eval(x),
            nu,
            jacobian: proj * sigma,
        }
    }

    /// Flat reference area of the panel.
    pub fn flat_area(&self) -> f64 {
        self.surface.mesh.flat_areas[self.p]
    }
}

/// Diagnostics of a deformed surface.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeReport {
    /// Smallest area element over the collocation points.
    pub min_jacobian: f64,
    /// Smallest distance between non-adjacent panel centroids, divided by
    /// the local panel diameter (injectivity heuristic).
    pub min_gap_ratio: f64,
    /// Normals point away from the origin everywhere (star-shaped catalog).
    pub oriented_outward: bool,
    pub immersive: bool,
    pub injective: bool,
    pub ok: bool,
}

/// Injectivity heuristic threshold on the non-neighbor gap ratio.
const MIN_GAP_RATIO: f64 = 0.1;

/// Scans the surface for degenerate frames, self-approach of distant
/// panels, and orientation defects.
pub fn validate_shape(surface: &DeformedSurface) -> ShapeReport {
    let n = surface.panel_count();
    let min_jacobian = surface.sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut min_gap_ratio = f64::INFINITY;
    for i in 0..n {
        let mut nearest = f64::INFINITY;
        for j in 0..n {
            if i == j || surface.mesh.panels_adjacent(i, j) {
                continue;
            }
            nearest = nearest.min(dist(surface.points[i], surface.points[j]));
        }
        min_gap_ratio = min_gap_ratio.min(nearest / surface.diameters[i]);
    }
    let oriented_outward = (0..n).all(|p| dot(surface.normals[p], surface.points[p]) > 0.0);
    let immersive = min_jacobian >= MIN_JACOBIAN;
    let injective = min_gap_ratio > MIN_GAP_RATIO;
    ShapeReport {
        min_jacobian,
        min_gap_ratio,
        oriented_outward,
        immersive,
        injective,
        ok: oriented_outward && immersive && injective,
    }
}

/// Writes the deformed mesh as ASCII `v x y z` / `f i j k` lines with
/// 1-based node indices.
pub fn export_mesh(surface: &DeformedSurface, out: &mut impl Write) -> Result<()> {
    for node in &surface.mesh.nodes {
        let v = surface.shape.eval(*node);
        writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for panel in &surface.mesh.panels {
        writeln!(out, "f {} {} {}", panel[0] + 1, panel[1] + 1, panel[2] + 1)?;
    }
    Ok(())
}

/// Generalized winding number of the deformed panel mesh around `x`:
/// close to 1 inside, close to 0 outside.  Signed solid angles summed over
/// all panels.
pub fn winding_number(surface: &DeformedSurface, x: Vec3) -> f64 {
    let mut total = 0.0;
    for corners in &surface.corners {
        let a = crate::vec3::sub(corners[0], x);
        let b = crate::vec3::sub(corners[1], x);
        let c = crate::vec3::sub(corners[2], x);
        let (la, lb, lc) = (norm(a), norm(b), norm(c));
        let num = dot(a, cross(b, c));
        let den = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}
