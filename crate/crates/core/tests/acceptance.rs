//! End-to-end acceptance gate.
//!
//! Twelve numbered criteria cover the deliverable behavior of the solver:
//! the manufactured point-source master test over the shape catalog and a
//! spread of wave numbers, mesh convergence, operator identities, the radial
//! closed form, far-field route agreement, the Mie series, jump relations,
//! the radiation condition, closed-form shape derivatives, analyticity
//! probes, and bitwise determinism across thread counts.
//!
//! Each criterion prints exactly one `[PASS]`/`[FAIL]` line with the measured
//! quantity and its tolerance; the test fails at the end if any criterion
//! failed.  Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines as they complete.

use std::collections::HashMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use helm_scatter::fields::{
    dtn_apply, eval_solution, far_field_direct, far_field_sphere_formula, layer_offset_trace,
    radiation_residual_at, Layer, Side, TraceMethod,
};
use helm_scatter::geometry::{apply_shape, Bump, DeformedSurface, ReferenceMesh, ShapeMap};
use helm_scatter::io::{content_digest, direction_csv};
use helm_scatter::kernels::WaveNumber;
use helm_scatter::operators::{
    assemble_adjoint_double_layer, assemble_double_layer, assemble_single_layer, solve_density,
    BoundarySolution, DenseOperator, RESIDUAL_LIMIT,
};
use helm_scatter::oracle::{
    golden_spiral_directions, mie_far_field_terms, point_source_far_field, radial_field,
    radial_flux, realize_datum, DirichletDatum,
};
use helm_scatter::sensitivity::{
    central_difference, chebyshev_report, mixed_difference_pair, DiffOrder, FamilySpec,
    ObservableSpec, GEOMETRIC_RHO_THRESHOLD,
};
use helm_scatter::vec3::{normalize, scale, Vec3};
use helm_scatter::{run_with_threads, Result};

const LEVEL: u32 = 3;
const SOURCE: Vec3 = [0.2, 0.1, -0.1];

/// Collects one printed PASS/FAIL line per criterion.
#[derive(Default)]
struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn run(&mut self, id: &str, body: impl FnOnce() -> Result<(bool, String)>) {
        let (pass, detail) = match body() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(format!("{id}: {detail}"));
        }
    }
}

/// The shape catalog exercised by the gate.
fn catalog() -> Vec<(&'static str, ShapeMap)> {
    vec![
        ("identity", ShapeMap::Identity),
        ("ellipsoid", ShapeMap::axes_scale(1.0, 1.3, 0.7).unwrap()),
        (
            "star",
            ShapeMap::radial_star(vec![Bump {
                center: [1.0, 1.0, 1.0],
                width: 0.7,
                amplitude: 0.15,
            }])
            .unwrap(),
        ),
    ]
}

fn wave_numbers() -> Vec<(&'static str, WaveNumber)> {
    vec![
        ("k=0", WaveNumber::real(0.0)),
        ("k=1", WaveNumber::real(1.0)),
        ("k=1+0.5i", WaveNumber::new(1.0, 0.5).unwrap()),
        ("k=2", WaveNumber::real(2.0)),
    ]
}

/// Shared state: level-3 surfaces and the operators, densities, and far
/// fields produced by the master test, reused by the later criteria.
struct Bench {
    surfaces: Vec<DeformedSurface>,
    dirs: Vec<Vec3>,
    /// Operators kept for reuse: all wave numbers on the identity sphere,
    /// and k = 0 on every shape (the other pairs are dropped to bound
    /// memory — a level-3 operator is 25 MB).
    ops: HashMap<(usize, usize), (DenseOperator, DenseOperator)>,
    sols: HashMap<(usize, usize), BoundarySolution>,
    far: HashMap<(usize, usize), Vec<Complex64>>,
    /// Master-test relative far-field errors per (shape, wave number).
    errors: HashMap<(usize, usize), f64>,
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solves the point-source problem on one prebuilt surface and returns the
/// far field together with its max relative error against the closed form.
fn point_source_case(
    surface: &DeformedSurface,
    k: WaveNumber,
    dirs: &[Vec3],
) -> Result<(BoundarySolution, Vec<Complex64>, f64, DenseOperator, DenseOperator)> {
    let v = assemble_single_layer(surface, k)?;
    let w = assemble_double_layer(surface, k)?;
    let g = realize_datum(surface, k, &DirichletDatum::point_source(SOURCE))?;
    let sol = solve_density(&v, &w, &g)?;
    let ff = far_field_direct(surface, &sol, dirs)?;
    let err = dirs
        .iter()
        .zip(&ff)
        .map(|(&d, &got)| {
            let exact = point_source_far_field(k, SOURCE, d);
            (got - exact).norm() / exact.norm()
        })
        .fold(0.0, f64::max);
    Ok((sol, ff, err, v, w))
}

#[test]
fn acceptance() {
    let mut gate = Gate::default();
    let shapes = catalog();
    let ks = wave_numbers();

    println!("acceptance gate: {} shapes x {} wave numbers at level {LEVEL}", shapes.len(), ks.len());

    let surfaces: Vec<DeformedSurface> = shapes
        .iter()
        .map(|(_, s)| apply_shape(ReferenceMesh::build(LEVEL).unwrap(), s.clone()).unwrap())
        .collect();
    let mut bench = Bench {
        surfaces,
        dirs: golden_spiral_directions(50),
        ops: HashMap::new(),
        sols: HashMap::new(),
        far: HashMap::new(),
        errors: HashMap::new(),
    };

    criterion_01_point_source_master(&mut gate, &mut bench, &shapes, &ks);
    criterion_02_mesh_convergence(&mut gate, &mut bench, &shapes);
    criterion_03_gauss_identity(&mut gate, &bench, &shapes);
    criterion_04_constant_density(&mut gate, &bench);
    criterion_05_radial_solution(&mut gate, &bench);
    criterion_06_route_agreement(&mut gate, &bench);
    criterion_07_mie_series(&mut gate, &bench);
    criterion_08_jump_relations(&mut gate, &bench);
    criterion_09_radiation_condition(&mut gate, &bench);
    criterion_10_shape_derivative(&mut gate);
    criterion_11_analyticity(&mut gate);
    criterion_12_determinism(&mut gate);

    assert!(
        gate.failures.is_empty(),
        "{} criterion(s) failed:\n{}",
        gate.failures.len(),
        gate.failures.join("\n")
    );
}

/// 1. Point-source master test: every catalog shape x every wave number
/// reproduces the closed-form far field within 1e-2 (max relative error
/// over 50 directions) at level 3; each case completes within 2 minutes.
fn criterion_01_point_source_master(
    gate: &mut Gate,
    bench: &mut Bench,
    shapes: &[(&'static str, ShapeMap)],
    ks: &[(&'static str, WaveNumber)],
) {
    gate.run("criterion  1 point-source master", || {
        let mut worst_err: f64 = 0.0;
        let mut worst_time: f64 = 0.0;
        for (si, (sname, _)) in shapes.iter().enumerate() {
            for (ki, &(kname, k)) in ks.iter().enumerate() {
                let t0 = Instant::now();
                let (sol, ff, err, v, w) = point_source_case(&bench.surfaces[si], k, &bench.dirs)?;
                let dt = t0.elapsed().as_secs_f64();
                println!("    {sname:<10} {kname:<9} far-field rel err {err:.3e}  ({dt:.1}s)");
                worst_err = worst_err.max(err);
                worst_time = worst_time.max(dt);
                bench.errors.insert((si, ki), err);
                bench.sols.insert((si, ki), sol);
                bench.far.insert((si, ki), ff);
                if si == 0 || ki == 0 {
                    bench.ops.insert((si, ki), (v, w));
                }
            }
        }
        Ok((
            worst_err <= 1e-2 && worst_time <= 120.0,
            format!(
                "max rel far-field error {worst_err:.3e} (tol 1e-2), slowest case {worst_time:.1}s (limit 120s)"
            ),
        ))
    });
}

/// 2. Mesh convergence: the far-field error shrinks from level 2 to level 3
/// by at least 1.7x on the sphere and 1.5x on the ellipsoid (k = 1).
fn criterion_02_mesh_convergence(
    gate: &mut Gate,
    bench: &mut Bench,
    shapes: &[(&'static str, ShapeMap)],
) {
    gate.run("criterion  2 mesh convergence", || {
        let k = WaveNumber::real(1.0);
        let mut ratios = Vec::new();
        for (si, floor) in [(0usize, 1.7), (1usize, 1.5)] {
            let coarse = apply_shape(ReferenceMesh::build(LEVEL - 1)?, shapes[si].1.clone())?;
            let (_, _, err2, _, _) = point_source_case(&coarse, k, &bench.dirs)?;
            let err3 = bench.errors[&(si, 1)];
            ratios.push((shapes[si].0, err2 / err3, floor));
        }
        let pass = ratios.iter().all(|&(_, r, floor)| r >= floor);
        let detail = ratios
            .iter()
            .map(|(n, r, f)| format!("{n} L2/L3 error ratio {r:.2} (min {f})"))
            .collect::<Vec<_>>()
            .join(", ");
        Ok((pass, detail))
    });
}

/// 3. Gauss identity: at k = 0 the double layer applied to the constant
/// density gives exactly 1/2 on every catalog shape, within 5e-3 in the
/// max norm at level 3.
fn criterion_03_gauss_identity(gate: &mut Gate, bench: &Bench, shapes: &[(&'static str, ShapeMap)]) {
    gate.run("criterion  3 Gauss identity", || {
        let one = vec![Complex64::new(1.0, 0.0); bench.surfaces[0].panel_count()];
        let mut worst: f64 = 0.0;
        for (si, (sname, _)) in shapes.iter().enumerate() {
            let (_, w) = &bench.ops[&(si, 0)];
            let w1 = w.matrix.mul_vec(&one);
            let defect = w1
                .iter()
                .map(|z| (z - Complex64::new(0.5, 0.0)).norm())
                .fold(0.0, f64::max);
            println!("    {sname:<10} max |(W 1)_i - 1/2| = {defect:.3e}");
            worst = worst.max(defect);
        }
        Ok((worst <= 5e-3, format!("max defect over shapes {worst:.3e} (tol 5e-3)")))
    });
}

/// 4. Constant density: on the unit sphere at k = 0 with g = 1 the
/// combined-field density is the constant -1 within 1e-2 (max norm), and
/// the solver's relative residual stays within its 1e-10 contract (the
/// contract is enforced on every solve; solve_density refuses otherwise).
fn criterion_04_constant_density(gate: &mut Gate, bench: &Bench) {
    gate.run("criterion  4 constant density", || {
        let (v, w) = &bench.ops[&(0, 0)];
        let g = vec![Complex64::new(1.0, 0.0); bench.surfaces[0].panel_count()];
        let sol = solve_density(v, w, &g)?;
        let defect = sol
            .theta
            .iter()
            .map(|t| (t + Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max);
        Ok((
            defect <= 1e-2 && sol.residual <= RESIDUAL_LIMIT,
            format!(
                "max |theta_i + 1| = {defect:.3e} (tol 1e-2), residual {:.1e} (limit {RESIDUAL_LIMIT:.0e})",
                sol.residual
            ),
        ))
    });
}

/// 5. Radial closed form: unit sphere, k = 1, g = 1. The field at (2,0,0)
/// equals e^i/2 within 1e-2 relative, and the Neumann trace equals
/// (i - 1) within 5e-2 by the direct flux solve and within 1e-1 by the
/// jump-formula route.
fn criterion_05_radial_solution(gate: &mut Gate, bench: &Bench) {
    gate.run("criterion  5 radial closed form", || {
        let surface = &bench.surfaces[0];
        let k = WaveNumber::real(1.0);
        let (v, w) = &bench.ops[&(0, 1)];
        let g = vec![Complex64::new(1.0, 0.0); surface.panel_count()];

        let sol = solve_density(v, w, &g)?;
        let u = eval_solution(surface, &sol, &[[2.0, 0.0, 0.0]])?[0];
        let exact = radial_field(k, 1.0, 2.0);
        let field_err = (u - exact).norm() / exact.norm();

        let wstar = assemble_adjoint_double_layer(surface, k)?;
        let flux = radial_flux(k, 1.0);
        let trace_defect = |psi: &[Complex64]| {
            psi.iter().map(|p| (p - flux).norm()).fold(0.0, f64::max)
        };
        let direct = dtn_apply(surface, v, w, &wstar, &g, TraceMethod::Direct)?;
        let jump = dtn_apply(surface, v, w, &wstar, &g, TraceMethod::JumpFormula)?;
        let derr = trace_defect(&direct);
        let jerr = trace_defect(&jump);
        Ok((
            field_err <= 1e-2 && derr <= 5e-2 && jerr <= 1e-1,
            format!(
                "field rel err {field_err:.3e} (tol 1e-2), flux defect direct {derr:.3e} (tol 5e-2), jump {jerr:.3e} (tol 1e-1)"
            ),
        ))
    });
}

/// 6. Far-field route agreement on the point-source sphere case (k = 1):
/// the collocation far field and the auxiliary-sphere formula agree within
/// 1e-3 relative, and the formula is radius-independent (R = 2 vs R = 3)
/// within 1e-3.
fn criterion_06_route_agreement(gate: &mut Gate, bench: &Bench) {
    gate.run("criterion  6 far-field route agreement", || {
        let surface = &bench.surfaces[0];
        let sol = &bench.sols[&(0, 1)];
        let direct = &bench.far[&(0, 1)];
        let r2 = far_field_sphere_formula(surface, sol, &bench.dirs, 2.0, 3)?;
        let r3 = far_field_sphere_formula(surface, sol, &bench.dirs, 3.0, 3)?;
        let scale = max_abs(direct);
        let gap = |a: &[Complex64], b: &[Complex64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
                / scale
        };
        let route_gap = gap(direct, &r2);
        let radius_gap = gap(&r2, &r3);
        Ok((
            route_gap <= 1e-3 && radius_gap <= 1e-3,
            format!("direct vs sphere-rule gap {route_gap:.3e}, R=2 vs R=3 gap {radius_gap:.3e} (tol 1e-3)"),
        ))
    });
}

/// 7. Mie series: plane-wave scattering by the sound-soft unit sphere at
/// k = 2 matches the 20-term partial-wave series within 2e-2 relative
/// (scaled by the pattern maximum) over 50 directions.
fn criterion_07_mie_series(gate: &mut Gate, bench: &Bench) {
    gate.run("criterion  7 Mie series", || {
        let surface = &bench.surfaces[0];
        let k = WaveNumber::real(2.0);
        let (v, w) = &bench.ops[&(0, 3)];
        let d = [0.0, 0.0, 1.0];
        let g = realize_datum(surface, k, &DirichletDatum::plane_wave(d)?)?;
        let sol = solve_density(v, w, &g)?;
        let ff = far_field_direct(surface, &sol, &bench.dirs)?;
        let mie: Vec<Complex64> = bench
            .dirs
            .iter()
            .map(|&x| mie_far_field_terms(2.0, d, x, 20))
            .collect::<Result<_>>()?;
        let scale = max_abs(&mie);
        let err = ff
            .iter()
            .zip(&mie)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale;
        Ok((err <= 2e-2, format!("max far-field gap {err:.3e} of pattern max (tol 2e-2)")))
    });
}

/// 8. Jump relations at level 3, five seeded random densities (k = 1):
/// the offset-extrapolated exterior double-layer trace matches
/// -mu/2 + W mu within 5e-2 of the density scale, and the single-layer
/// trace is continuous across the surface within 5e-2.
fn criterion_08_jump_relations(gate: &mut Gate, bench: &Bench) {
    gate.run("criterion  8 jump relations", || {
        let surface = &bench.surfaces[0];
        let k = WaveNumber::real(1.0);
        let (_, w) = &bench.ops[&(0, 1)];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = surface.panel_count();
        let mut dl_worst: f64 = 0.0;
        let mut sl_worst: f64 = 0.0;
        for _ in 0..5 {
            let mu: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let scale = max_abs(&mu);

            let dl = layer_offset_trace(surface, k, &mu, Layer::Double, Side::Exterior);
            let wmu = w.matrix.mul_vec(&mu);
            let dl_defect = dl
                .iter()
                .zip(&wmu)
                .zip(&mu)
                .map(|((t, wm), m)| (t - (wm - 0.5 * m)).norm())
                .fold(0.0, f64::max)
                / scale;

            let sl_out = layer_offset_trace(surface, k, &mu, Layer::Single, Side::Exterior);
            let sl_in = layer_offset_trace(surface, k, &mu, Layer::Single, Side::Interior);
            let sl_gap = sl_out
                .iter()
                .zip(&sl_in)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / scale;

            dl_worst = dl_worst.max(dl_defect);
            sl_worst = sl_worst.max(sl_gap);
        }
        Ok((
            dl_worst <= 5e-2 && sl_worst <= 5e-2,
            format!(
                "worst DL exterior-trace defect {dl_worst:.3e}, worst SL continuity gap {sl_worst:.3e} (tol 5e-2)"
            ),
        ))
    });
}

/// 9. Radiation condition on the point-source case: the scaled radiation
/// defect r(du/dr - iku) at r = 40 is at most 0.55x its value at r = 20
/// (k = 1), and at k = 0 the decay profile r|u(r)| stays bounded.
fn criterion_09_radiation_condition(gate: &mut Gate, bench: &Bench) {
    gate.run("criterion  9 radiation condition", || {
        let surface = &bench.surfaces[0];
        let sol1 = &bench.sols[&(0, 1)];
        let mut worst_ratio: f64 = 0.0;
        for dir in [[1.0, 0.7, 0.4], [-0.3, 1.0, 0.5], [0.2, -0.6, 1.0]] {
            let d = normalize(dir);
            let r20 = radiation_residual_at(surface, sol1, scale(20.0, d))?.norm();
            let r40 = radiation_residual_at(surface, sol1, scale(40.0, d))?.norm();
            worst_ratio = worst_ratio.max(r40 / r20);
        }

        let sol0 = &bench.sols[&(0, 0)];
        let d = normalize([1.0, 0.7, 0.4]);
        let profile: Vec<f64> = [20.0, 40.0, 80.0]
            .iter()
            .map(|&r| {
                eval_solution(surface, sol0, &[scale(r, d)]).map(|u| r * u[0].norm())
            })
            .collect::<Result<_>>()?;
        let bounded = profile[1] / profile[0] <= 1.1
            && profile[2] / profile[1] <= 1.1
            && profile[2] >= 0.9 * profile[0];
        Ok((
            worst_ratio <= 0.55 && bounded,
            format!(
                "worst residual ratio r40/r20 = {worst_ratio:.3} (limit 0.55); k=0 profile r|u| = {:.5}, {:.5}, {:.5} at r = 20, 40, 80",
                profile[0], profile[1], profile[2]
            ),
        ))
    });
}

/// 10. Closed-form shape derivative: along the radius family (unit sphere
/// scaled by 1 + t) with k = 1, g = 1, the far-field derivative at t = 0
/// is e^{-i}(1 - i), matched within 1e-2 by order-4 central differences
/// with step 0.02.
fn criterion_10_shape_derivative(gate: &mut Gate) {
    gate.run("criterion 10 shape derivative", || {
        let family = FamilySpec::Shape {
            base: ShapeMap::Identity,
            direction: ShapeMap::Identity,
            level: LEVEL,
            k: WaveNumber::real(1.0),
            datum: DirichletDatum::constant(Complex64::new(1.0, 0.0)),
        };
        let obs = ObservableSpec::FarFieldAt {
            direction: [0.0, 0.0, 1.0],
        };
        let d4 = central_difference(family.observable_fn(&obs), 0.0, 0.02, DiffOrder::Four)?;
        let exact = Complex64::new(0.0, -1.0).exp() * Complex64::new(1.0, -1.0);
        let err = (d4 - exact).norm();
        Ok((
            err <= 1e-2,
            format!(
                "derivative {:.6}{:+.6}i vs exact {:.6}{:+.6}i, |gap| {err:.3e} (tol 1e-2)",
                d4.re, d4.im, exact.re, exact.im
            ),
        ))
    });
}

/// 11. Analyticity probes: the Chebyshev coefficients of the far field
/// along the radius family decay geometrically with fitted base >= 1.3
/// (n = 32 on [-0.2, 0.2]); the non-smooth control |t| fails the geometric
/// fit; and mixed second differences in (radius, Re k) of the radial
/// closed form commute to 1e-8.
fn criterion_11_analyticity(gate: &mut Gate) {
    gate.run("criterion 11 analyticity probes", || {
        // Level 2 keeps the 33-node sweep cheap; the analyticity verdict is
        // a property of the parameter dependence, not of mesh resolution.
        let family = FamilySpec::Shape {
            base: ShapeMap::Identity,
            direction: ShapeMap::Identity,
            level: LEVEL - 1,
            k: WaveNumber::real(1.0),
            datum: DirichletDatum::constant(Complex64::new(1.0, 0.0)),
        };
        let obs = ObservableSpec::FarFieldAt {
            direction: [0.0, 0.0, 1.0],
        };
        let rep = chebyshev_report(family.observable_fn(&obs), 0.2, 32)?;
        let geometric_ok = rep.geometric && (rep.rho >= 1.3);

        let control = chebyshev_report(|t| Ok(Complex64::new(t.abs(), 0.0)), 0.2, 32)?;
        let control_ok = !control.geometric;

        // Radial closed form as a joint function of radius and Re k:
        // u_inf(s, t) = (1+s) e^{-i(1+t)(1+s)}.
        let closed = |s: f64, t: f64| -> Result<Complex64> {
            let a = 1.0 + s;
            let k = Complex64::new(1.0 + t, 0.0);
            Ok(a * (-Complex64::i() * k * a).exp())
        };
        let (st, ts) = mixed_difference_pair(closed, 0.02, 0.02)?;
        let commute = (st - ts).norm();

        Ok((
            geometric_ok && control_ok && commute <= 1e-8,
            format!(
                "fitted decay base {:.3e} (min 1.3, resolved {} coeffs); |t| control base {:.3} vs threshold {GEOMETRIC_RHO_THRESHOLD} (must fail); mixed-difference gap {commute:.3e} (tol 1e-8)",
                rep.rho, rep.resolved, control.rho
            ),
        ))
    });
}

/// 12. Determinism: the full pipeline (assemble, solve, far field, CSV)
/// under a fixed configuration produces byte-identical artifacts across
/// repeated runs and across 1, 2, and 4 worker threads.
fn criterion_12_determinism(gate: &mut Gate) {
    gate.run("criterion 12 determinism", || {
        let pipeline = || -> Result<String> {
            let surface = apply_shape(ReferenceMesh::build(2)?, ShapeMap::Identity)?;
            let k = WaveNumber::real(1.0);
            let v = assemble_single_layer(&surface, k)?;
            let w = assemble_double_layer(&surface, k)?;
            let g = realize_datum(&surface, k, &DirichletDatum::point_source(SOURCE))?;
            let sol = solve_density(&v, &w, &g)?;
            let dirs = golden_spiral_directions(16);
            let ff = far_field_direct(&surface, &sol, &dirs)?;
            Ok(content_digest(direction_csv(&dirs, &ff).as_bytes()))
        };
        let digests = vec![
            run_with_threads(1, pipeline)?,
            run_with_threads(2, pipeline)?,
            run_with_threads(4, pipeline)?,
            run_with_threads(4, pipeline)?,
        ];
        let all_equal = digests.iter().all(|d| d == &digests[0]);
        Ok((
            all_equal,
            format!("digest {} across threads 1/2/4 and a repeated run: {}",
                &digests[0][..16],
                if all_equal { "identical" } else { "MISMATCH" }
            ),
        ))
    });
}
