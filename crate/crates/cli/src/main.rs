//! Batch front end for the exterior Helmholtz solver.
//!
//! A single JSON configuration file drives each run; flags override the
//! scalar fields.  Commands write their results under `--out` as JSON/CSV
//! artifacts that embed the effective configuration and a content digest,
//! so any output can be traced back to the exact run that produced it.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure
//! (residual or conditioning refusal), 4 tolerance failure in `verify`,
//! 5 internal error.

mod artifacts;
mod config;

use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use helm_scatter::fields::{
    dtn_apply, eval_solution, far_field_direct, far_field_sphere_formula, layer_offset_trace,
    Layer, Side, TraceMethod,
};
use helm_scatter::geometry::{
    apply_shape, export_mesh, validate_shape, Bump, DeformedSurface, ReferenceMesh, ShapeMap,
    ShapeReport,
};
use helm_scatter::io::{direction_csv, sweep_csv, trace_csv, write_operator_dump, TAG_CUSTOM};
use helm_scatter::kernels::WaveNumber;
use helm_scatter::linalg::{lu_factor, ComplexMat};
use helm_scatter::operators::{
    assemble_adjoint_double_layer, assemble_double_layer, assemble_single_layer, solve_density,
    DenseOperator,
};
use helm_scatter::oracle::{
    golden_spiral_directions, point_source_far_field, realize_datum, DirichletDatum,
};
use helm_scatter::sensitivity::chebyshev_report;
use helm_scatter::{run_with_threads, Error};

use artifacts::ArtifactSet;
use config::{parse_datum_spec, parse_k_spec, parse_shape_spec, KSpec, RunConfig};

/// Densest mesh the dense solver accepts (5120 panels, ~400 MB of
/// operators); `export-mesh` alone goes further.
const MAX_DENSE_LEVEL: u32 = 4;

/// Point-source location of the `verify` and `convergence` presets.
const PRESET_SOURCE: [f64; 3] = [0.2, 0.1, -0.1];

/// A failed run: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn tolerance(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }

    fn internal(err: impl Display) -> Self {
        Self {
            code: 5,
            message: format!("internal error: {err}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Residual { .. } | Error::IllConditioned { .. } | Error::Singular => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "helm-scatter",
    version,
    about = "Boundary-element solver for exterior Helmholtz scattering from deformed spheres"
)]
struct Cli {
    /// JSON configuration file (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the mesh subdivision level.
    #[arg(long, global = true, value_name = "N")]
    level: Option<u32>,

    /// Override the wave number, e.g. `2` or `1,0.5`.
    #[arg(long, global = true, value_name = "RE[,IM]")]
    k: Option<String>,

    /// Override the obstacle shape, e.g. `axes_scale:1,1.3,0.7`.
    #[arg(long, global = true, value_name = "NAME[:params]")]
    shape: Option<String>,

    /// Override the Dirichlet datum, e.g. `point_source:0.2,0.1,-0.1`.
    #[arg(long, global = true, value_name = "NAME[:params]")]
    datum: Option<String>,

    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (falls back to HELM_SCATTER_THREADS, then the
    /// config, then automatic).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Abort sweeps on the first per-point failure.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the boundary equation and write the density with diagnostics.
    Solve,
    /// Far-field pattern by both routes plus an agreement report.
    Farfield,
    /// Neumann trace of the solution (optionally the dense DtN matrix).
    Dtn,
    /// Evaluate the solution at the configured exterior points.
    Field,
    /// Sweep a parameter family and report analyticity diagnostics.
    Sweep,
    /// Run the built-in oracle suite and gate it on the tolerance.
    Verify,
    /// Mesh ladder against the point-source oracle with observed orders.
    Convergence,
    /// Write the deformed boundary mesh with a validation report.
    ExportMesh,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::config(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(level) = cli.level {
        cfg.mesh_level = level;
    }
    if let Some(spec) = &cli.k {
        cfg.wavenumber = parse_k_spec(spec).map_err(Failure::config)?;
    }
    if let Some(spec) = &cli.shape {
        cfg.shape = parse_shape_spec(spec).map_err(Failure::config)?;
    }
    if let Some(spec) = &cli.datum {
        cfg.datum = parse_datum_spec(spec).map_err(Failure::config)?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    } else if let Ok(env) = std::env::var("HELM_SCATTER_THREADS") {
        cfg.threads = env
            .parse()
            .map_err(|_| Failure::config(format!("HELM_SCATTER_THREADS=`{env}` is not a thread count")))?;
    }
    cfg.strict = cfg.strict || cli.strict;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    let dense_level_ok = cfg.mesh_level <= MAX_DENSE_LEVEL;
    if !matches!(cli.command, Command::ExportMesh) && !dense_level_ok {
        return Err(Failure::config(format!(
            "mesh level {} needs a dense system beyond the supported size (max {MAX_DENSE_LEVEL})",
            cfg.mesh_level
        )));
    }
    let threads = cfg.threads;
    run_with_threads(threads, || dispatch(cli.command, &cfg))
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<(), Failure> {
    let out = ArtifactSet::new(&cfg.out_dir, cfg)?;
    match command {
        Command::Solve => cmd_solve(cfg, &out),
        Command::Farfield => cmd_farfield(cfg, &out),
        Command::Dtn => cmd_dtn(cfg, &out),
        Command::Field => cmd_field(cfg, &out),
        Command::Sweep => cmd_sweep(cfg, &out),
        Command::Verify => cmd_verify(cfg, &out),
        Command::Convergence => cmd_convergence(cfg, &out),
        Command::ExportMesh => cmd_export_mesh(cfg, &out),
    }
}

/// Builds the surface and the two assembled operators of the combined
/// equation for the configured problem.
fn build_problem(
    cfg: &RunConfig,
) -> Result<(DeformedSurface, DenseOperator, DenseOperator, WaveNumber), Failure> {
    let k = cfg.wavenumber.realize()?;
    let surface = apply_shape(ReferenceMesh::build(cfg.mesh_level)?, cfg.shape.clone())?;
    let v = assemble_single_layer(&surface, k)?;
    let w = assemble_double_layer(&surface, k)?;
    Ok((surface, v, w, k))
}

#[derive(Serialize)]
struct SolveReport {
    panel_count: usize,
    wavenumber: KSpec,
    coupling: [f64; 2],
    residual: f64,
    condition: f64,
    density_csv: String,
}

fn cmd_solve(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    let (surface, v, w, k) = build_problem(cfg)?;
    let g = realize_datum(&surface, k, &cfg.datum)?;
    let sol = solve_density(&v, &w, &g)?;
    out.write_raw("theta.csv", trace_csv(&surface.points, &sol.theta).as_bytes())?;
    out.write_json(
        "solve.json",
        &SolveReport {
            panel_count: surface.panel_count(),
            wavenumber: cfg.wavenumber,
            coupling: [sol.coupling.re, sol.coupling.im],
            residual: sol.residual,
            condition: sol.condition,
            density_csv: "theta.csv".into(),
        },
    )?;
    println!(
        "solved {} panels: residual {:.2e}, condition estimate {:.2e}",
        surface.panel_count(),
        sol.residual,
        sol.condition
    );
    Ok(())
}

#[derive(Serialize)]
struct FarfieldReport {
    directions: usize,
    sphere_radius: f64,
    sphere_level: u32,
    /// max |direct - sphere| / max |direct| over the direction set.
    max_route_gap_rel: f64,
    direct_csv: String,
    sphere_csv: String,
}

fn cmd_farfield(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    if cfg.directions == 0 {
        return Err(Failure::config("directions must be positive"));
    }
    let (surface, v, w, k) = build_problem(cfg)?;
    let g = realize_datum(&surface, k, &cfg.datum)?;
    let sol = solve_density(&v, &w, &g)?;
    let dirs = golden_spiral_directions(cfg.directions);
    let direct = far_field_direct(&surface, &sol, &dirs)?;
    let sphere =
        far_field_sphere_formula(&surface, &sol, &dirs, cfg.sphere_radius, cfg.sphere_level)?;
    let scale = direct.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let gap = direct
        .iter()
        .zip(&sphere)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;
    out.write_raw("farfield_direct.csv", direction_csv(&dirs, &direct).as_bytes())?;
    out.write_raw("farfield_sphere.csv", direction_csv(&dirs, &sphere).as_bytes())?;
    out.write_json(
        "farfield.json",
        &FarfieldReport {
            directions: dirs.len(),
            sphere_radius: cfg.sphere_radius,
            sphere_level: cfg.sphere_level,
            max_route_gap_rel: gap,
            direct_csv: "farfield_direct.csv".into(),
            sphere_csv: "farfield_sphere.csv".into(),
        },
    )?;
    println!(
        "far field over {} directions: route gap {:.2e} of pattern max",
        dirs.len(),
        gap
    );
    Ok(())
}

#[derive(Serialize)]
struct DtnReport {
    method: TraceMethod,
    panel_count: usize,
    trace_csv: String,
    dense_matrix: Option<String>,
}

fn cmd_dtn(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    let (surface, v, w, k) = build_problem(cfg)?;
    let g = realize_datum(&surface, k, &cfg.datum)?;
    let psi = match cfg.trace_method {
        TraceMethod::Direct => {
            helm_scatter::operators::direct_flux_solve(&v, &w, &g)?
        }
        TraceMethod::JumpFormula => {
            let wstar = assemble_adjoint_double_layer(&surface, k)?;
            dtn_apply(&surface, &v, &w, &wstar, &g, TraceMethod::JumpFormula)?
        }
    };
    out.write_raw("dtn.csv", trace_csv(&surface.points, &psi).as_bytes())?;

    let dense_matrix = if cfg.dense_dtn {
        // Column-by-column: V D = (I/2 + W) applied to the basis vectors.
        let n = surface.panel_count();
        let factors = lu_factor(&v.matrix)?;
        let mut dense = ComplexMat::zeros(n);
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for (i, r) in rhs.iter_mut().enumerate() {
                *r = w.matrix.at(i, j);
            }
            rhs[j] += 0.5;
            for (i, value) in factors.solve(&rhs).into_iter().enumerate() {
                *dense.at_mut(i, j) = value;
            }
        }
        let mut bytes = Vec::new();
        write_operator_dump(&mut bytes, TAG_CUSTOM, k, &dense)?;
        out.write_raw("dtn_matrix.bin", &bytes)?;
        Some("dtn_matrix.bin".to_string())
    } else {
        None
    };

    out.write_json(
        "dtn.json",
        &DtnReport {
            method: cfg.trace_method,
            panel_count: surface.panel_count(),
            trace_csv: "dtn.csv".into(),
            dense_matrix,
        },
    )?;
    println!(
        "Neumann trace over {} panels via {:?}",
        surface.panel_count(),
        cfg.trace_method
    );
    Ok(())
}

#[derive(Serialize)]
struct FieldReport {
    points: usize,
    field_csv: String,
}

fn cmd_field(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    if cfg.points.is_empty() {
        return Err(Failure::config("field needs at least one evaluation point"));
    }
    let (surface, v, w, k) = build_problem(cfg)?;
    let g = realize_datum(&surface, k, &cfg.datum)?;
    let sol = solve_density(&v, &w, &g)?;
    let values = eval_solution(&surface, &sol, &cfg.points)?;
    out.write_raw("field.csv", trace_csv(&cfg.points, &values).as_bytes())?;
    out.write_json(
        "field.json",
        &FieldReport {
            points: cfg.points.len(),
            field_csv: "field.csv".into(),
        },
    )?;
    println!("evaluated the field at {} points", cfg.points.len());
    Ok(())
}

#[derive(Serialize)]
struct SweepFailure {
    t: f64,
    error: String,
}

#[derive(Serialize)]
struct SweepReport {
    nodes: usize,
    radius: f64,
    /// Fitted Chebyshev decay base (absent when the coefficients fall to
    /// the noise floor too fast to fit, i.e. faster than measurable, or
    /// when any node failed).
    rho_fit: Option<f64>,
    geometric: Option<bool>,
    resolved: Option<usize>,
    noise_floor: Option<f64>,
    failures: Vec<SweepFailure>,
    sweep_csv: String,
}

fn cmd_sweep(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    let family = cfg
        .family
        .as_ref()
        .ok_or_else(|| Failure::config("sweep needs a `family` block in the config"))?;
    let n = cfg.sweep_nodes;
    let radius = cfg.sweep_radius;
    if !(8..=4096).contains(&n) {
        return Err(Failure::config(format!(
            "sweep_nodes {n} out of range (8..=4096)"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Failure::config(format!(
            "sweep_radius must be positive, got {radius}"
        )));
    }

    // Sample the Chebyshev nodes once; the analyticity fit reuses the
    // memoized values so no node is solved twice.
    let mut values: Vec<(f64, Result<Complex64, Error>)> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = radius * (std::f64::consts::PI * j as f64 / n as f64).cos();
        match (cfg.strict, family.evaluate(&cfg.observable, t)) {
            (true, Err(e)) => {
                let mut failure = Failure::from(e);
                failure.message = format!("sweep aborted at t = {t}: {}", failure.message);
                return Err(failure);
            }
            (_, value) => values.push((t, value)),
        }
    }

    let failures: Vec<SweepFailure> = values
        .iter()
        .filter_map(|(t, r)| {
            r.as_ref().err().map(|e| SweepFailure {
                t: *t,
                error: e.to_string(),
            })
        })
        .collect();

    let good: Vec<(f64, Complex64)> = values
        .iter()
        .filter_map(|(t, r)| r.as_ref().ok().map(|v| (*t, *v)))
        .collect();
    let ts: Vec<f64> = good.iter().map(|(t, _)| *t).collect();
    let vs: Vec<Complex64> = good.iter().map(|(_, v)| *v).collect();
    out.write_raw("sweep.csv", sweep_csv(&ts, &vs).as_bytes())?;

    let report = if failures.is_empty() {
        let lookup: std::collections::HashMap<u64, Complex64> = good
            .iter()
            .map(|(t, v)| (t.to_bits(), *v))
            .collect();
        let rep = chebyshev_report(|t| Ok(lookup[&t.to_bits()]), radius, n)?;
        SweepReport {
            nodes: n + 1,
            radius,
            rho_fit: rep.rho.is_finite().then_some(rep.rho),
            geometric: Some(rep.geometric),
            resolved: Some(rep.resolved),
            noise_floor: Some(rep.noise_floor),
            failures,
            sweep_csv: "sweep.csv".into(),
        }
    } else {
        SweepReport {
            nodes: n + 1,
            radius,
            rho_fit: None,
            geometric: None,
            resolved: None,
            noise_floor: None,
            failures,
            sweep_csv: "sweep.csv".into(),
        }
    };
    let failed = report.failures.len();
    let geometric = report.geometric;
    out.write_json("sweep.json", &report)?;
    match geometric {
        Some(flag) => println!(
            "sweep over {} nodes: geometric coefficient decay = {flag}",
            n + 1
        ),
        None => println!("sweep over {} nodes: {failed} node(s) failed", n + 1),
    }
    Ok(())
}

/// The catalog exercised by `verify`: the unit sphere, a flattened
/// ellipsoid, and a one-bump star, against wave numbers spanning the
/// static problem, a mid frequency, an absorbing medium, and k = 2.
fn verify_catalog() -> (Vec<(&'static str, ShapeMap)>, Vec<KSpec>) {
    let shapes = vec![
        ("identity", ShapeMap::Identity),
        ("ellipsoid", ShapeMap::axes_scale(1.0, 1.3, 0.7).expect("valid catalog shape")),
        (
            "star",
            ShapeMap::radial_star(vec![Bump {
                center: [1.0, 1.0, 1.0],
                width: 0.7,
                amplitude: 0.15,
            }])
            .expect("valid catalog shape"),
        ),
    ];
    let ks = vec![
        KSpec { re: 0.0, im: 0.0 },
        KSpec { re: 1.0, im: 0.0 },
        KSpec { re: 1.0, im: 0.5 },
        KSpec { re: 2.0, im: 0.0 },
    ];
    (shapes, ks)
}

/// Max relative far-field error of the solved point-source problem
/// against the closed form, over `dirs`.
fn point_source_error(
    surface: &DeformedSurface,
    k: WaveNumber,
    dirs: &[helm_scatter::vec3::Vec3],
) -> Result<f64, Failure> {
    let v = assemble_single_layer(surface, k)?;
    let w = assemble_double_layer(surface, k)?;
    let g = realize_datum(surface, k, &DirichletDatum::point_source(PRESET_SOURCE))?;
    let sol = solve_density(&v, &w, &g)?;
    let ff = far_field_direct(surface, &sol, dirs)?;
    Ok(dirs
        .iter()
        .zip(&ff)
        .map(|(&d, &got)| {
            let exact = point_source_far_field(k, PRESET_SOURCE, d);
            (got - exact).norm() / exact.norm()
        })
        .fold(0.0, f64::max))
}

#[derive(Serialize)]
struct VerifyCase {
    shape: String,
    wavenumber: KSpec,
    max_rel_err: f64,
    pass: bool,
}

#[derive(Serialize)]
struct JumpCheck {
    seed: u64,
    dl_trace_defect: f64,
    sl_continuity_gap: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    mesh_level: u32,
    directions: usize,
    tolerance: f64,
    cases: Vec<VerifyCase>,
    max_rel_err: f64,
    jump: JumpCheck,
    pass: bool,
}

fn cmd_verify(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    let (shapes, ks) = verify_catalog();
    let dirs = golden_spiral_directions(cfg.directions.max(1));
    let mut cases = Vec::new();
    let mut worst: f64 = 0.0;
    let mut identity_k1: Option<(DeformedSurface, DenseOperator)> = None;

    for (name, shape) in &shapes {
        let surface = apply_shape(ReferenceMesh::build(cfg.mesh_level)?, shape.clone())?;
        for kspec in &ks {
            let k = kspec.realize()?;
            let err = point_source_error(&surface, k, &dirs)?;
            println!("  {name:<10} k = {}+{}i: far-field rel err {err:.3e}", kspec.re, kspec.im);
            worst = worst.max(err);
            cases.push(VerifyCase {
                shape: (*name).into(),
                wavenumber: *kspec,
                max_rel_err: err,
                pass: err <= cfg.tolerance,
            });
            if *name == "identity" && kspec.re == 1.0 && kspec.im == 0.0 {
                let w = assemble_double_layer(&surface, k)?;
                identity_k1 = Some((surface.clone(), w));
            }
        }
    }

    // Seeded jump-relation spot check on the sphere at k = 1: the offset
    // exterior double-layer trace must match -mu/2 + W mu, and the
    // single-layer trace must be continuous across the surface.
    let (surface, w) = identity_k1.expect("catalog contains the identity/k=1 case");
    let k = WaveNumber::real(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mu: Vec<Complex64> = (0..surface.panel_count())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let scale = mu.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let wmu = w.matrix.mul_vec(&mu);
    let dl = layer_offset_trace(&surface, k, &mu, Layer::Double, Side::Exterior);
    let dl_defect = dl
        .iter()
        .zip(&wmu)
        .zip(&mu)
        .map(|((t, wm), m)| (t - (wm - 0.5 * m)).norm())
        .fold(0.0, f64::max)
        / scale;
    let sl_out = layer_offset_trace(&surface, k, &mu, Layer::Single, Side::Exterior);
    let sl_in = layer_offset_trace(&surface, k, &mu, Layer::Single, Side::Interior);
    let sl_gap = sl_out
        .iter()
        .zip(&sl_in)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;
    let jump_tol = cfg.tolerance.max(5e-2);
    let jump = JumpCheck {
        seed: cfg.seed,
        dl_trace_defect: dl_defect,
        sl_continuity_gap: sl_gap,
        tolerance: jump_tol,
        pass: dl_defect <= jump_tol && sl_gap <= jump_tol,
    };

    let pass = cases.iter().all(|c| c.pass) && jump.pass;
    let report = VerifyReport {
        mesh_level: cfg.mesh_level,
        directions: dirs.len(),
        tolerance: cfg.tolerance,
        cases,
        max_rel_err: worst,
        jump,
        pass,
    };
    out.write_json("verify.json", &report)?;
    println!(
        "verify: max far-field rel err {worst:.3e} (tolerance {:.1e}) -> {}",
        cfg.tolerance,
        if pass { "pass" } else { "FAIL" }
    );
    if !pass {
        return Err(Failure::tolerance(format!(
            "verification exceeded its tolerance: max far-field error {worst:.3e} > {:.3e} \
             (or jump-relation defect over {jump_tol:.1e}); see verify.json",
            cfg.tolerance
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRow {
    level: u32,
    panels: usize,
    max_rel_err: f64,
    /// log2(previous error / this error); absent on the first row.
    observed_order: Option<f64>,
}

#[derive(Serialize)]
struct ConvergenceReport {
    wavenumber: KSpec,
    rows: Vec<ConvergenceRow>,
    ladder_csv: String,
}

fn cmd_convergence(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    if cfg.levels.is_empty() {
        return Err(Failure::config("convergence needs a non-empty `levels` ladder"));
    }
    if let Some(&bad) = cfg.levels.iter().find(|&&l| l > MAX_DENSE_LEVEL) {
        return Err(Failure::config(format!(
            "ladder level {bad} needs a dense system beyond the supported size (max {MAX_DENSE_LEVEL})"
        )));
    }
    let k = cfg.wavenumber.realize()?;
    let dirs = golden_spiral_directions(cfg.directions.max(1));
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &level in &cfg.levels {
        let surface = apply_shape(ReferenceMesh::build(level)?, cfg.shape.clone())?;
        let err = point_source_error(&surface, k, &dirs)?;
        let observed_order = rows
            .last()
            .map(|prev: &ConvergenceRow| (prev.max_rel_err / err).log2());
        println!(
            "  level {level}: {} panels, far-field rel err {err:.3e}",
            surface.panel_count()
        );
        rows.push(ConvergenceRow {
            level,
            panels: surface.panel_count(),
            max_rel_err: err,
            observed_order,
        });
    }
    let mut csv = String::from("level,panels,max_rel_err\n");
    for r in &rows {
        use std::fmt::Write as _;
        let _ = writeln!(csv, "{},{},{}", r.level, r.panels, r.max_rel_err);
    }
    out.write_raw("convergence.csv", csv.as_bytes())?;
    out.write_json(
        "convergence.json",
        &ConvergenceReport {
            wavenumber: cfg.wavenumber,
            rows,
            ladder_csv: "convergence.csv".into(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct MeshReport {
    mesh_level: u32,
    panels: usize,
    report: ShapeReport,
    mesh_obj: String,
}

fn cmd_export_mesh(cfg: &RunConfig, out: &ArtifactSet) -> Result<(), Failure> {
    let surface = apply_shape(ReferenceMesh::build(cfg.mesh_level)?, cfg.shape.clone())?;
    let report = validate_shape(&surface);
    let ok = report.ok;
    let mut obj = Vec::new();
    export_mesh(&surface, &mut obj)?;
    out.write_raw("mesh.obj", &obj)?;
    out.write_json(
        "mesh.json",
        &MeshReport {
            mesh_level: cfg.mesh_level,
            panels: surface.panel_count(),
            report,
            mesh_obj: "mesh.obj".into(),
        },
    )?;
    println!(
        "exported {} panels (validation {})",
        surface.panel_count(),
        if ok { "ok" } else { "FAILED" }
    );
    Ok(())
}
