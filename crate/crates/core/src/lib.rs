//! Boundary-element solver for the exterior Dirichlet problem of the
//! Helmholtz equation Δu + k²u = 0 outside a smoothly deformed unit sphere,
//! with Im k ≥ 0 and a Sommerfeld radiation condition at infinity (decay
//! for k = 0).
//!
//! The obstacle is described by a smooth map φ applied to the unit sphere.
//! The solver discretizes a combined-field boundary integral equation on an
//! icosphere mesh with one collocation point per panel, solves for a density
//! θ, and exposes the scattered field, its far-field pattern, and the
//! Dirichlet-to-Neumann trace pulled back to the sphere.  A sensitivity
//! layer probes smoothness of solver outputs along one-parameter families of
//! shapes, wave numbers, and boundary data.
//!
//! Module map:
//! - [`geometry`]: icosphere meshes, shape maps, deformed surfaces
//! - [`kernels`]: fundamental solution, layer-potential and far-field kernels
//! - [`quadrature`]: panel rules, Duffy self-panel rule, near-singular splitting
//! - [`linalg`]: dense complex LU with condition estimation
//! - [`operators`]: boundary operator assembly and density solves
//! - [`fields`]: field evaluation, traces, far-field routes
//! - [`oracle`]: closed-form reference solutions (point source, radial, Mie)
//! - [`sensitivity`]: parameter sweeps, finite differences, analyticity probes
//! - [`io`]: artifact formats (CSV, JSON records, binary operator dumps)

pub mod error;
pub mod fields;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod quadrature;
pub mod sensitivity;
pub mod vec3;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Runs `f` on a dedicated thread pool with `threads` workers.
///
/// Assembly and evaluation loops parallelize over independent output rows,
/// so results are bitwise identical for every thread count.  `threads = 0`
/// lets the pool pick the available parallelism.
pub fn run_with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool construction cannot fail with default stack sizes");
    pool.install(f)
}
