//! Run configuration: a single JSON file with flag overrides for the
//! scalar fields.  Every artifact embeds a full copy of the effective
//! configuration so runs can be reproduced from their outputs alone.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use helm_scatter::fields::TraceMethod;
use helm_scatter::geometry::{Bump, ShapeMap};
use helm_scatter::kernels::WaveNumber;
use helm_scatter::oracle::DirichletDatum;
use helm_scatter::sensitivity::{FamilySpec, ObservableSpec};
use helm_scatter::vec3::Vec3;
use num_complex::Complex64;

/// Complex wave number as a JSON-friendly pair of reals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSpec {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Default for KSpec {
    fn default() -> Self {
        Self { re: 1.0, im: 0.0 }
    }
}

impl KSpec {
    pub fn realize(self) -> helm_scatter::Result<WaveNumber> {
        WaveNumber::new(self.re, self.im)
    }
}

/// The full run configuration.  Missing JSON fields take the defaults
/// below; unknown fields are rejected so typos fail loudly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Icosphere subdivision level of the boundary mesh.
    pub mesh_level: u32,
    /// Obstacle boundary as a map of the unit sphere.
    pub shape: ShapeMap,
    pub wavenumber: KSpec,
    /// Dirichlet datum g on the boundary.
    pub datum: DirichletDatum,
    /// Far-field direction count (golden-spiral sample of the sphere).
    pub directions: usize,
    /// Auxiliary sphere radius and grid level for the far-field cross-check.
    pub sphere_radius: f64,
    pub sphere_level: u32,
    /// Exterior evaluation points for `field`.
    pub points: Vec<Vec3>,
    /// Neumann-trace route for `dtn`.
    pub trace_method: TraceMethod,
    /// Also write the dense Dirichlet-to-Neumann matrix from `dtn`.
    pub dense_dtn: bool,
    /// Parameter family for `sweep` (shape line, wave-number line, or
    /// datum line).
    pub family: Option<FamilySpec>,
    /// Scalar observable measured by `sweep`.
    pub observable: ObservableSpec,
    /// Sweep interval half-width and Chebyshev node count.
    pub sweep_radius: f64,
    pub sweep_nodes: usize,
    /// Far-field tolerance for `verify`.
    pub tolerance: f64,
    /// Mesh ladder for `convergence`.
    pub levels: Vec<u32>,
    /// Seed for the randomized jump-relation spot checks in `verify`.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads (0 = automatic).
    pub threads: usize,
    /// Abort sweeps on the first per-point failure instead of recording it.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh_level: 3,
            shape: ShapeMap::Identity,
            wavenumber: KSpec::default(),
            datum: DirichletDatum::constant(Complex64::new(1.0, 0.0)),
            directions: 50,
            sphere_radius: 2.5,
            sphere_level: helm_scatter::fields::SPHERE_RULE_LEVEL,
            points: vec![[2.0, 0.0, 0.0]],
            trace_method: TraceMethod::Direct,
            dense_dtn: false,
            family: None,
            observable: ObservableSpec::FarFieldAt {
                direction: [0.0, 0.0, 1.0],
            },
            sweep_radius: 0.2,
            sweep_nodes: 32,
            tolerance: 1e-2,
            levels: vec![1, 2, 3],
            seed: 8,
            out_dir: PathBuf::from("out"),
            threads: 0,
            strict: false,
        }
    }
}

fn split_params(spec: &str) -> (&str, Vec<&str>) {
    match spec.split_once(':') {
        Some((name, rest)) => (name, rest.split(',').collect()),
        None => (spec, Vec::new()),
    }
}

fn parse_floats(parts: &[&str], what: &str) -> Result<Vec<f64>, String> {
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("{what}: `{p}` is not a number"))
        })
        .collect()
}

/// Parses `--shape NAME[:params]`:
/// `identity`, `uniform_scale:a`, `axes_scale:a,b,c`,
/// `radial_star:cx,cy,cz,width,amplitude`.
pub fn parse_shape_spec(spec: &str) -> Result<ShapeMap, String> {
    let (name, parts) = split_params(spec);
    let shape = match (name, parts.len()) {
        ("identity", 0) => Ok(ShapeMap::Identity),
        ("uniform_scale", 1) => {
            let v = parse_floats(&parts, "uniform_scale")?;
            ShapeMap::uniform_scale(v[0]).map_err(|e| e.to_string())
        }
        ("axes_scale", 3) => {
            let v = parse_floats(&parts, "axes_scale")?;
            ShapeMap::axes_scale(v[0], v[1], v[2]).map_err(|e| e.to_string())
        }
        ("radial_star", 5) => {
            let v = parse_floats(&parts, "radial_star")?;
            ShapeMap::radial_star(vec![Bump {
                center: [v[0], v[1], v[2]],
                width: v[3],
                amplitude: v[4],
            }])
            .map_err(|e| e.to_string())
        }
        _ => Err(format!(
            "unknown shape spec `{spec}` (expected identity, uniform_scale:a, \
             axes_scale:a,b,c, or radial_star:cx,cy,cz,width,amplitude)"
        )),
    }?;
    Ok(shape)
}

/// Parses `--datum NAME[:params]`:
/// `constant:re[,im]`, `point_source:x,y,z`, `plane_wave:x,y,z`.
pub fn parse_datum_spec(spec: &str) -> Result<DirichletDatum, String> {
    let (name, parts) = split_params(spec);
    match (name, parts.len()) {
        ("constant", 1) | ("constant", 2) => {
            let v = parse_floats(&parts, "constant")?;
            let im = v.get(1).copied().unwrap_or(0.0);
            Ok(DirichletDatum::constant(Complex64::new(v[0], im)))
        }
        ("point_source", 3) => {
            let v = parse_floats(&parts, "point_source")?;
            Ok(DirichletDatum::point_source([v[0], v[1], v[2]]))
        }
        ("plane_wave", 3) => {
            let v = parse_floats(&parts, "plane_wave")?;
            DirichletDatum::plane_wave([v[0], v[1], v[2]]).map_err(|e| e.to_string())
        }
        _ => Err(format!(
            "unknown datum spec `{spec}` (expected constant:re[,im], \
             point_source:x,y,z, or plane_wave:x,y,z)"
        )),
    }
}

/// Parses `--k RE[,IM]`.
pub fn parse_k_spec(spec: &str) -> Result<KSpec, String> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.is_empty() || parts.len() > 2 {
        return Err(format!("wave number `{spec}` must be RE or RE,IM"));
    }
    let v = parse_floats(&parts, "wave number")?;
    Ok(KSpec {
        re: v[0],
        im: v.get(1).copied().unwrap_or(0.0),
    })
}
