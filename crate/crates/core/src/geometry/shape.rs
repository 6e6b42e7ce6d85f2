//! Shape maps φ from the unit sphere into space.
//!
//! Every map in the catalog has an analytic differential, so tangent
//! frames, outward normals, and the area element σ̃ = |dφ(t₁) × dφ(t₂)|
//! (with t₁, t₂ an orthonormal tangent frame) are evaluated exactly at any
//! sphere point.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::vec3::{add, cross, dot, norm, normalize, scale, Vec3};
use crate::{Error, Result};

/// One Gaussian-type bump of a radial star profile.
///
/// Contributes `amplitude · exp((center·x - 1)/width²)` to the radial
/// profile, a spherically symmetric bump of angular scale `width` around
/// `center` that is analytic on the whole sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec3,
    pub width: f64,
    pub amplitude: f64,
}

/// Smooth maps of the unit sphere used as obstacle boundaries and
/// perturbation directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeMap {
    /// φ(x) = x.
    Identity,
    /// φ(x) = a·x.
    UniformScale { a: f64 },
    /// φ(x) = (a·x₁, b·x₂, c·x₃): an ellipsoid with semi-axes a, b, c.
    AxesScale { a: f64, b: f64, c: f64 },
    /// φ(x) = ρ(x)·x with ρ(x) = 1 + Σ bumps.
    RadialStar { bumps: Vec<Bump> },
    /// φ(x) = base(x) + t·direction(x): a straight line of shapes through
    /// `base` with velocity field `direction` (itself given as a map).
    LinearFamily {
        base: Box<ShapeMap>,
        direction: Box<ShapeMap>,
        t: f64,
    },
}

impl ShapeMap {
    pub fn uniform_scale(a: f64) -> Result<Self> {
        let s = ShapeMap::UniformScale { a };
        s.validate()?;
        Ok(s)
    }

    pub fn axes_scale(a: f64, b: f64, c: f64) -> Result<Self> {
        let s = ShapeMap::AxesScale { a, b, c };
        s.validate()?;
        Ok(s)
    }

    pub fn radial_star(bumps: Vec<Bump>) -> Result<Self> {
        let s = ShapeMap::RadialStar { bumps };
        s.validate()?;
        Ok(s)
    }

    pub fn linear_family(base: ShapeMap, direction: ShapeMap, t: f64) -> Result<Self> {
        let s = ShapeMap::LinearFamily {
            base: Box::new(base),
            direction: Box::new(direction),
            t,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks parameter ranges; called both by the constructors and before
    /// building surfaces from deserialized configurations.
    pub fn validate(&self) -> Result<()> {
        match self {
            ShapeMap::Identity => Ok(()),
            ShapeMap::UniformScale { a } => {
                if !a.is_finite() || *a <= 0.0 {
                    return Err(Error::Shape(format!("uniform scale {a} must be positive")));
                }
                Ok(())
            }
            ShapeMap::AxesScale { a, b, c } => {
                for v in [a, b, c] {
                    if !v.is_finite() || *v <= 0.0 {
                        return Err(Error::Shape(format!(
                            "axes scales ({a}, {b}, {c}) must all be positive"
                        )));
                    }
                }
                Ok(())
            }
            ShapeMap::RadialStar { bumps } => {
                let mut lower = 1.0;
                for bump in bumps {
                    if !bump.width.is_finite() || bump.width <= 0.0 {
                        return Err(Error::Shape(format!(
                            "bump width {} must be positive",
                            bump.width
                        )));
                    }
                    if !bump.amplitude.is_finite() {
                        return Err(Error::Shape("bump amplitude must be finite".into()));
                    }
                    if norm(bump.center) < 1e-12 {
                        return Err(Error::Shape("bump center must be a nonzero direction".into()));
                    }
                    // Each bump factor lies in (0, 1], so negative
                    // amplitudes reduce the profile by at most |amplitude|.
                    lower += bump.amplitude.min(0.0);
                }
                if lower <= 0.0 {
                    return Err(Error::Shape(format!(
                        "radial profile can reach {lower:.3} <= 0; shape would self-intersect"
                    )));
                }
                Ok(())
            }
            ShapeMap::LinearFamily { base, direction, t } => {
                if !t.is_finite() {
                    return Err(Error::Shape("family parameter t must be finite".into()));
                }
                base.validate()?;
                direction.validate()
            }
        }
    }

    /// Radial profile of a star map (1 for bump-free directions).
    fn star_profile(bumps: &[Bump], x: Vec3) -> f64 {
        let mut rho = 1.0;
        for b in bumps {
            let c = normalize(b.center);
            rho += b.amplitude * ((dot(c, x) - 1.0) / (b.width * b.width)).exp();
        }
        rho
    }

    /// φ(x) for a unit vector x.
    pub fn eval(&self, x: Vec3) -> Vec3 {
        match self {
            ShapeMap::Identity => x,
            ShapeMap::UniformScale { a } => scale(*a, x),
            ShapeMap::AxesScale { a, b, c } => [a * x[0], b * x[1], c * x[2]],
            ShapeMap::RadialStar { bumps } => scale(Self::star_profile(bumps, x), x),
            ShapeMap::LinearFamily { base, direction, t } => {
                add(base.eval(x), scale(*t, direction.eval(x)))
            }
        }
    }

    /// Differential dφ_x(v) for a tangent vector v at the unit vector x
    /// (v·x = 0).  Defined through curves on the sphere, so no ambient
    /// extension of φ is involved.
    pub fn differential(&self, x: Vec3, v: Vec3) -> Vec3 {
        match self {
            ShapeMap::Identity => v,
            ShapeMap::UniformScale { a } => scale(*a, v),
            ShapeMap::AxesScale { a, b, c } => [a * v[0], b * v[1], c * v[2]],
            ShapeMap::RadialStar { bumps } => {
                let rho = Self::star_profile(bumps, x);
                let mut drho = 0.0;
                for b in bumps {
                    let c = normalize(b.center);
                    let w2 = b.width * b.width;
                    drho += b.amplitude * ((dot(c, x) - 1.0) / w2).exp() * dot(c, v) / w2;
                }
                add(scale(drho, x), scale(rho, v))
            }
            ShapeMap::LinearFamily { base, direction, t } => add(
                base.differential(x, v),
                scale(*t, direction.differential(x, v)),
            ),
        }
    }

    /// Deterministic orthonormal tangent frame (t₁, t₂) at x with
    /// t₁ × t₂ = x, so pushed-forward frames keep the outward orientation.
    pub fn tangent_frame(x: Vec3) -> (Vec3, Vec3) {
        let mut axis = 0;
        for i in 1..3 {
            if x[i].abs() < x[axis].abs() {
                axis = i;
            }
        }
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let t1 = normalize(cross(x, e));
        let t2 = cross(x, t1);
        (t1, t2)
    }

    /// Unit outward normal and area element σ̃ of the deformed surface at
    /// φ(x), from the pushed-forward tangent frame.
    pub fn frame(&self, x: Vec3) -> (Vec3, f64) {
        let (t1, t2) = Self::tangent_frame(x);
        let a = self.differential(x, t1);
        let b = self.differential(x, t2);
        let n = cross(a, b);
        let sigma = norm(n);
        (scale(1.0 / sigma, n), sigma)
    }

    /// Canonical text form; stable across runs, used for binding digests.
    pub fn canonical(&self) -> String {
        match self {
            ShapeMap::Identity => "identity".into(),
            ShapeMap::UniformScale { a } => format!("uniform_scale({a:?})"),
            ShapeMap::AxesScale { a, b, c } => format!("axes_scale({a:?},{b:?},{c:?})"),
            ShapeMap::RadialStar { bumps } => {
                let parts: Vec<String> = bumps
                    .iter()
                    .map(|b| {
                        format!(
                            "bump(c=[{:?},{:?},{:?}],w={:?},a={:?})",
                            b.center[0], b.center[1], b.center[2], b.width, b.amplitude
                        )
                    })
                    .collect();
                format!("radial_star[{}]", parts.join(","))
            }
            ShapeMap::LinearFamily { base, direction, t } => format!(
                "linear_family(base={},dir={},t={t:?})",
                base.canonical(),
                direction.canonical()
            ),
        }
    }

    /// Hex digest binding a shape and mesh level together; boundary fields
    /// and operators carry it to catch cross-surface mixups.
    pub fn surface_digest(&self, level: u32) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        hasher.update(level.to_le_bytes());
        let out = hasher.finalize();
        out[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        crate::vec3::dist(a, b) <= tol
    }

    #[test]
    fn catalog_values() {
        let x = normalize([1.0, 2.0, -2.0]);
        assert_eq!(ShapeMap::Identity.eval(x), x);
        let s = ShapeMap::uniform_scale(2.0).unwrap();
        assert!(close(s.eval(x), scale(2.0, x), 1e-15));
        let e = ShapeMap::axes_scale(1.0, 1.3, 0.7).unwrap();
        assert!(close(e.eval([0.0, 1.0, 0.0]), [0.0, 1.3, 0.0], 1e-15));
        // At the bump center the profile is exactly 1 + amplitude.
        let star = ShapeMap::radial_star(vec![Bump {
            center: [0.0, 0.0, 1.0],
            width: 0.7,
            amplitude: 0.15,
        }])
        .unwrap();
        assert!(close(star.eval([0.0, 0.0, 1.0]), [0.0, 0.0, 1.15], 1e-15));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ShapeMap::uniform_scale(0.0).is_err());
        assert!(ShapeMap::uniform_scale(-1.0).is_err());
        assert!(ShapeMap::axes_scale(1.0, 0.0, 1.0).is_err());
        // A single bump of amplitude -1.2 can push the profile to -0.2.
        assert!(ShapeMap::radial_star(vec![Bump {
            center: [0.0, 0.0, 1.0],
            width: 0.5,
            amplitude: -1.2,
        }])
        .is_err());
        assert!(ShapeMap::radial_star(vec![Bump {
            center: [0.0, 0.0, 1.0],
            width: 0.0,
            amplitude: 0.1,
        }])
        .is_err());
        // Negative amplitudes are fine while the lower bound stays positive.
        assert!(ShapeMap::radial_star(vec![Bump {
            center: [0.0, 0.0, 1.0],
            width: 0.5,
            amplitude: -0.6,
        }])
        .is_ok());
    }

    #[test]
    fn tangent_frame_is_orthonormal_and_outward() {
        for x in [
            normalize([1.0, 0.1, -0.4]),
            [0.0, 0.0, 1.0],
            normalize([-3.0, 2.0, 5.0]),
        ] {
            let (t1, t2) = ShapeMap::tangent_frame(x);
            assert_relative_eq!(norm(t1), 1.0, epsilon = 1e-14);
            assert_relative_eq!(norm(t2), 1.0, epsilon = 1e-14);
            assert!(dot(t1, x).abs() < 1e-14);
            assert!(dot(t2, x).abs() < 1e-14);
            assert!(close(cross(t1, t2), x, 1e-13));
        }
    }

    #[test]
    fn differentials_match_finite_differences_on_sphere_curves() {
        let shapes = [
            ShapeMap::uniform_scale(1.7).unwrap(),
            ShapeMap::axes_scale(1.0, 1.3, 0.7).unwrap(),
            ShapeMap::radial_star(vec![
                Bump {
                    center: [1.0, 1.0, 1.0],
                    width: 0.7,
                    amplitude: 0.15,
                },
                Bump {
                    center: [-1.0, 0.3, 0.2],
                    width: 0.4,
                    amplitude: -0.2,
                },
            ])
            .unwrap(),
            ShapeMap::linear_family(
                ShapeMap::Identity,
                ShapeMap::radial_star(vec![Bump {
                    center: [0.0, 1.0, 0.0],
                    width: 0.6,
                    amplitude: 0.3,
                }])
                .unwrap(),
                0.37,
            )
            .unwrap(),
        ];
        let h = 1e-6;
        for shape in &shapes {
            for x in [normalize([0.3, -0.8, 0.52]), normalize([-1.0, 2.0, 0.1])] {
                let (t1, t2) = ShapeMap::tangent_frame(x);
                for v in [t1, t2] {
                    let fd = scale(
                        1.0 / (2.0 * h),
                        crate::vec3::sub(
                            shape.eval(normalize(add(x, scale(h, v)))),
                            shape.eval(normalize(crate::vec3::sub(x, scale(h, v)))),
                        ),
                    );
                    assert!(
                        close(shape.differential(x, v), fd, 1e-6),
                        "differential mismatch for {}",
                        shape.canonical()
                    );
                }
            }
        }
    }

    #[test]
    fn area_elements_have_known_values() {
        let x = normalize([0.2, -0.5, 0.9]);
        let (_, s) = ShapeMap::Identity.frame(x);
        assert_relative_eq!(s, 1.0, epsilon = 1e-13);
        let (_, s) = ShapeMap::uniform_scale(0.5).unwrap().frame(x);
        assert_relative_eq!(s, 0.25, epsilon = 1e-13);
        // At the pole of an ellipsoid the tangent plane scales by a·b.
        let (nu, s) = ShapeMap::axes_scale(1.4, 0.8, 0.6)
            .unwrap()
            .frame([0.0, 0.0, 1.0]);
        assert_relative_eq!(s, 1.4 * 0.8, epsilon = 1e-13);
        assert!(close(nu, [0.0, 0.0, 1.0], 1e-13));
    }

    #[test]
    fn ellipsoid_normals_match_implicit_gradient() {
        // For φ = diag(a,b,c), the outward normal at y = φ(x) is parallel
        // to (y₁/a², y₂/b², y₃/c²).
        let (a, b, c) = (1.0, 1.3, 0.7);
        let shape = ShapeMap::axes_scale(a, b, c).unwrap();
        for x in [
            normalize([0.3, -0.8, 0.52]),
            normalize([1.0, 1.0, 1.0]),
            [1.0, 0.0, 0.0],
        ] {
            let (nu, _) = shape.frame(x);
            let y = shape.eval(x);
            let g = normalize([y[0] / (a * a), y[1] / (b * b), y[2] / (c * c)]);
            assert!(close(nu, g, 1e-12));
        }
    }

    #[test]
    fn linear_family_at_zero_matches_base_bitwise() {
        let base = ShapeMap::axes_scale(1.0, 1.3, 0.7).unwrap();
        let dir = ShapeMap::radial_star(vec![Bump {
            center: [1.0, -1.0, 0.5],
            width: 0.5,
            amplitude: 0.4,
        }])
        .unwrap();
        let family = ShapeMap::linear_family(base.clone(), dir, 0.0).unwrap();
        for x in [
            normalize([0.3, -0.8, 0.52]),
            [0.0, 0.0, 1.0],
            normalize([-2.0, 0.4, 1.0]),
        ] {
            let (t1, _) = ShapeMap::tangent_frame(x);
            let (pf, pb) = (family.eval(x), base.eval(x));
            let (df, db) = (family.differential(x, t1), base.differential(x, t1));
            for i in 0..3 {
                assert_eq!(pf[i].to_bits(), pb[i].to_bits());
                assert_eq!(df[i].to_bits(), db[i].to_bits());
            }
        }
    }

    #[test]
    fn digests_separate_shapes_and_levels() {
        let a = ShapeMap::Identity.surface_digest(3);
        let b = ShapeMap::Identity.surface_digest(2);
        let c = ShapeMap::uniform_scale(1.0).unwrap().surface_digest(3);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, ShapeMap::Identity.surface_digest(3));
    }

    #[test]
    fn serde_round_trip() {
        let star = ShapeMap::radial_star(vec![Bump {
            center: [1.0, 1.0, 1.0],
            width: 0.7,
            amplitude: 0.15,
        }])
        .unwrap();
        let text = serde_json::to_string(&star).unwrap();
        let back: ShapeMap = serde_json::from_str(&text).unwrap();
        assert_eq!(star, back);
    }

    proptest! {
        /// σ̃ from the analytic differential agrees with a finite-difference
        /// frame at random sphere points for the bumpy star.
        #[test]
        fn star_area_element_matches_finite_differences(
            ux in -1.0f64..1.0, uy in -1.0f64..1.0, uz in -1.0f64..1.0
        ) {
            prop_assume!(ux * ux + uy * uy + uz * uz > 1e-2);
            let x = normalize([ux, uy, uz]);
            let star = ShapeMap::radial_star(vec![Bump {
                center: [1.0, 1.0, 1.0],
                width: 0.7,
                amplitude: 0.15,
            }]).unwrap();
            let (_, sigma) = star.frame(x);
            let (t1, t2) = ShapeMap::tangent_frame(x);
            let h = 1e-5;
            let fd = |v: Vec3| scale(
                1.0 / (2.0 * h),
                crate::vec3::sub(
                    star.eval(normalize(add(x, scale(h, v)))),
                    star.eval(normalize(crate::vec3::sub(x, scale(h, v)))),
                ),
            );
            let sigma_fd = norm(cross(fd(t1), fd(t2)));
            prop_assert!((sigma - sigma_fd).abs() < 1e-6 * sigma);
        }
    }
}
