//! Reference solutions and boundary data.
//!
//! Everything here is independent of the panel discretization: closed-form
//! exterior fields (point source inside the obstacle, radial solutions on
//! spheres) and the classical separation-of-variables series for plane-wave
//! scattering by the unit sphere.  The solver is tested against these, never
//! the other way around.
//!
//! Conventions: the radiating fundamental solution is
//! S(k, ξ) = −e^{ik|ξ|}/(4π|ξ|), and far fields are defined by
//! u(x) = (e^{ik|x|}/|x|)(u∞(x̂) + O(1/|x|)) with no 4π in u∞.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{winding_number, DeformedSurface};
use crate::kernels::{fund_sol, WaveNumber, FOUR_PI};
use crate::vec3::{dot, norm, normalize, scale, sub, Vec3};
use crate::{Error, Result};

/// Dirichlet data on the obstacle boundary.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirichletDatum {
    /// g ≡ value.
    Constant { re: f64, im: f64 },
    /// Trace of the fundamental solution with source point inside the
    /// obstacle; the exterior solution is then known in closed form.
    PointSource { source: Vec3 },
    /// Sound-soft scattering datum g = −e^{ik x·d} for an incident plane
    /// wave travelling along the unit vector d.
    PlaneWave { direction: Vec3 },
}

impl DirichletDatum {
    pub fn constant(value: Complex64) -> Self {
        Self::Constant {
            re: value.re,
            im: value.im,
        }
    }

    pub fn point_source(source: Vec3) -> Self {
        Self::PointSource { source }
    }

    /// Normalizes the direction; rejects the zero vector.
    pub fn plane_wave(direction: Vec3) -> Result<Self> {
        let n = norm(direction);
        if !(n.is_finite() && n > 1e-12) {
            return Err(Error::Invalid(format!(
                "plane wave direction {direction:?} must be a nonzero vector"
            )));
        }
        Ok(Self::PlaneWave {
            direction: scale(1.0 / n, direction),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { re, im } => {
                if !(re.is_finite() && im.is_finite()) {
                    return Err(Error::Invalid("constant datum must be finite".into()));
                }
            }
            Self::PointSource { source } => {
                if !source.iter().all(|v| v.is_finite()) {
                    return Err(Error::Invalid("source point must be finite".into()));
                }
            }
            Self::PlaneWave { direction } => {
                let n = norm(*direction);
                if !(n.is_finite() && (n - 1.0).abs() < 1e-9) {
                    return Err(Error::Invalid(format!(
                        "plane wave direction must be unit length, |d| = {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the datum at a boundary point.
    pub fn eval(&self, k: WaveNumber, x: Vec3) -> Complex64 {
        match self {
            Self::Constant { re, im } => Complex64::new(*re, *im),
            Self::PointSource { source } => fund_sol(k, sub(x, *source)),
            Self::PlaneWave { direction } => {
                -(Complex64::i() * k.value() * dot(x, *direction)).exp()
            }
        }
    }
}

/// Samples the datum at the surface collocation points.  A point source
/// must lie strictly inside the obstacle (checked with the generalized
/// winding number), otherwise the closed-form exterior solution the datum
/// implies would not exist.
pub fn realize_datum(
    surface: &DeformedSurface,
    k: WaveNumber,
    datum: &DirichletDatum,
) -> Result<Vec<Complex64>> {
    datum.validate()?;
    if let DirichletDatum::PointSource { source } = datum {
        let w = winding_number(surface, *source);
        if (w - 1.0).abs() > 1e-3 {
            return Err(Error::Domain(format!(
                "point source {source:?} is not inside the obstacle (winding {w:.6})"
            )));
        }
    }
    Ok(surface.points.iter().map(|&x| datum.eval(k, x)).collect())
}

/// Exterior field of a point source at `z`: S(k, x − z).
pub fn point_source_field(k: WaveNumber, z: Vec3, x: Vec3) -> Complex64 {
    fund_sol(k, sub(x, z))
}

/// Far field of the point source: u∞(x̂) = −e^{−ik x̂·z}/(4π).
pub fn point_source_far_field(k: WaveNumber, z: Vec3, xhat: Vec3) -> Complex64 {
    -(-Complex64::i() * k.value() * dot(xhat, z)).exp() / FOUR_PI
}

/// Radial exterior solution for g ≡ 1 on the sphere of radius `a`:
/// u(r) = a e^{ik(r−a)}/r.
pub fn radial_field(k: WaveNumber, a: f64, r: f64) -> Complex64 {
    (a / r) * (Complex64::i() * k.value() * (r - a)).exp()
}

/// Normal derivative of the radial solution on the sphere: ik − 1/a.
pub fn radial_flux(k: WaveNumber, a: f64) -> Complex64 {
    Complex64::i() * k.value() - Complex64::new(1.0 / a, 0.0)
}

/// Far field of the radial solution: a e^{−ika} (independent of direction).
pub fn radial_far_field(k: WaveNumber, a: f64) -> Complex64 {
    a * (-Complex64::i() * k.value() * a).exp()
}

/// Spherical Bessel functions j_0..j_lmax and spherical Hankel functions of
/// the first kind h_0..h_lmax at real z > 0.  j by downward recurrence
/// (stable), y by upward recurrence (stable), h = j + i y.
pub fn spherical_jh(lmax: usize, z: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Invalid(format!(
            "spherical Bessel argument must be positive, got {z}"
        )));
    }
    let j = {
        // Start far enough above lmax that the downward recurrence has
        // converged onto the minimal solution by the time it reaches lmax.
        let start = lmax + 20 + z as usize;
        let mut next = 0.0f64;
        let mut curr = 1e-280f64;
        let mut j = vec![0.0f64; lmax + 1];
        for l in (0..=start).rev() {
            let prev = ((2 * l + 3) as f64 / z) * curr - next;
            next = curr;
            curr = prev;
            if l <= lmax {
                j[l] = curr;
            }
            // Rescale to avoid overflow for large lmax/small z.
            if curr.abs() > 1e250 {
                let s = 1e-250;
                curr *= s;
                next *= s;
                for v in j.iter_mut() {
                    *v *= s;
                }
            }
        }
        let scale = (z.sin() / z) / j[0];
        for v in j.iter_mut() {
            *v *= scale;
        }
        j
    };

    let mut y = vec![0.0f64; lmax.max(1) + 1];
    y[0] = -z.cos() / z;
    y[1] = -z.cos() / (z * z) - z.sin() / z;
    for l in 1..lmax {
        y[l + 1] = ((2 * l + 1) as f64 / z) * y[l] - y[l - 1];
    }
    let h = (0..=lmax)
        .map(|l| Complex64::new(j[l], y[l]))
        .collect::<Vec<_>>();
    Ok((j, h))
}

/// Legendre polynomials P_0..P_lmax at t via the three-term recurrence.
pub fn legendre(lmax: usize, t: f64) -> Vec<f64> {
    let mut p = vec![0.0; lmax + 1];
    p[0] = 1.0;
    if lmax >= 1 {
        p[1] = t;
    }
    for l in 1..lmax {
        p[l + 1] = (((2 * l + 1) as f64) * t * p[l] - l as f64 * p[l - 1]) / (l + 1) as f64;
    }
    p
}

/// Series far field for plane-wave scattering by the sound-soft unit
/// sphere, truncated at `lmax` terms:
/// u∞(x̂) = (i/k) Σ_{l≤lmax} (2l+1) [j_l(k)/h_l(k)] P_l(x̂·d).
pub fn mie_far_field_terms(k: f64, d: Vec3, xhat: Vec3, lmax: usize) -> Result<Complex64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Invalid(format!(
            "series far field needs a real positive wave number, got {k}"
        )));
    }
    let (j, h) = spherical_jh(lmax, k)?;
    let t = dot(normalize(xhat), normalize(d)).clamp(-1.0, 1.0);
    let p = legendre(lmax, t);
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..=lmax {
        sum += (2 * l + 1) as f64 * (j[l] / h[l]) * p[l];
    }
    Ok(Complex64::i() / k * sum)
}

/// Series far field with an automatic truncation (⌈k⌉ + 12 terms, enough
/// for double precision at moderate k).
pub fn mie_far_field(k: f64, d: Vec3, xhat: Vec3) -> Result<Complex64> {
    mie_far_field_terms(k, d, xhat, k.ceil() as usize + 12)
}

/// `n` roughly equidistributed unit vectors (golden-spiral construction);
/// deterministic in `n`.
pub fn golden_spiral_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            [r * th.cos(), r * th.sin(), z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_shape, ReferenceMesh, ShapeMap};
    use approx::assert_relative_eq;

    fn k(re: f64, im: f64) -> WaveNumber {
        WaveNumber::new(re, im).unwrap()
    }

    #[test]
    fn bessel_low_orders_match_closed_forms() {
        let z = 1.0f64;
        let (j, h) = spherical_jh(5, z).unwrap();
        assert_relative_eq!(j[0], z.sin() / z, epsilon = 1e-14);
        assert_relative_eq!(j[1], z.sin() / (z * z) - z.cos() / z, epsilon = 1e-14);
        // h₀(z) = −i e^{iz}/z = (sin z − i cos z)/z.
        assert_relative_eq!(h[0].re, z.sin() / z, epsilon = 1e-14);
        assert_relative_eq!(h[0].im, -z.cos() / z, epsilon = 1e-14);
        // h₁(z) = −(e^{iz}/z)(1 + i/z).
        let h1 = -(Complex64::i() * z).exp() / z * (1.0 + Complex64::i() / z);
        assert_relative_eq!(h[1].re, h1.re, epsilon = 1e-13);
        assert_relative_eq!(h[1].im, h1.im, epsilon = 1e-13);
    }

    #[test]
    fn bessel_small_argument_asymptotics() {
        // j_l(z) ~ z^l/(2l+1)!! for small z.
        let (j, _) = spherical_jh(5, 0.1).unwrap();
        let dfact = 3.0 * 5.0 * 7.0 * 9.0 * 11.0; // 11!!
        let lead = 0.1f64.powi(5) / dfact;
        // First correction factor (1 − z²/(2(2l+3))).
        let corrected = lead * (1.0 - 0.01 / 26.0);
        assert_relative_eq!(j[5], corrected, max_relative = 1e-5);
    }

    #[test]
    fn wronskian_identity_holds() {
        // j_l h_l' − j_l' h_l = i/z², with f_l' = f_{l−1} − (l+1)/z · f_l.
        let z = 2.7f64;
        let (j, h) = spherical_jh(9, z).unwrap();
        for l in 1..=8 {
            let jp = j[l - 1] - (l + 1) as f64 / z * j[l];
            let hp = h[l - 1] - (l + 1) as f64 / z * h[l];
            let w = j[l] * hp - jp * h[l];
            assert_relative_eq!(w.re, 0.0, epsilon = 1e-13);
            assert_relative_eq!(w.im, 1.0 / (z * z), max_relative = 1e-12);
        }
    }

    #[test]
    fn series_far_field_is_stable_in_truncation() {
        let d = [0.0, 0.0, 1.0];
        for xhat in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]] {
            let a = mie_far_field_terms(2.0, d, xhat, 20).unwrap();
            let b = mie_far_field_terms(2.0, d, xhat, 25).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn series_far_field_approaches_the_static_monopole() {
        // k → 0: the sound-soft sphere scatters like −1/r, so u∞ → −1.
        let u = mie_far_field(1e-4, [0.0, 0.0, 1.0], [0.3f64.sqrt(), 0.0, 0.7f64.sqrt()]).unwrap();
        assert_relative_eq!(u.re, -1.0, max_relative = 1e-3);
        assert!(u.im.abs() < 1e-3);
    }

    #[test]
    fn point_source_far_field_matches_large_radius_limit() {
        let kk = k(1.3, 0.0);
        let z = [0.2, 0.1, -0.1];
        let xhat = normalize([1.0, 2.0, -0.5]);
        let r = 1e5;
        let u = point_source_field(kk, z, scale(r, xhat));
        let limit = u * r * (-Complex64::i() * kk.value() * r).exp();
        let inf = point_source_far_field(kk, z, xhat);
        assert!((limit - inf).norm() / inf.norm() < 1e-4);
    }

    #[test]
    fn radial_solution_values() {
        let kk = k(1.0, 0.0);
        // u(2) = e^{i}/2 for the unit sphere.
        let u2 = radial_field(kk, 1.0, 2.0);
        let expect = (Complex64::i()).exp() / 2.0;
        assert_relative_eq!(u2.re, expect.re, epsilon = 1e-14);
        assert_relative_eq!(u2.im, expect.im, epsilon = 1e-14);
        // Boundary trace is 1, flux is ik − 1.
        assert_relative_eq!(radial_field(kk, 1.0, 1.0).re, 1.0, epsilon = 1e-15);
        let f = radial_flux(kk, 1.0);
        assert_relative_eq!(f.re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(f.im, 1.0, epsilon = 1e-15);
        // Far field e^{−i}.
        let ff = radial_far_field(kk, 1.0);
        assert_relative_eq!(ff.re, 1.0f64.cos(), epsilon = 1e-15);
        assert_relative_eq!(ff.im, -(1.0f64.sin()), epsilon = 1e-15);
        // Laplace limit: u = 1/r, flux −1.
        let k0 = k(0.0, 0.0);
        assert_relative_eq!(radial_field(k0, 1.0, 2.0).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(radial_flux(k0, 1.0).re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn datum_realization_and_source_position_guard() {
        let surface =
            apply_shape(ReferenceMesh::build(1).unwrap(), ShapeMap::Identity).unwrap();
        let kk = k(1.0, 0.0);

        let g = realize_datum(&surface, kk, &DirichletDatum::constant(Complex64::new(1.0, 0.0)))
            .unwrap();
        assert!(g.iter().all(|v| (v - 1.0).norm() < 1e-15));

        let inside = DirichletDatum::point_source([0.2, 0.1, -0.1]);
        assert!(realize_datum(&surface, kk, &inside).is_ok());
        let outside = DirichletDatum::point_source([1.5, 0.0, 0.0]);
        assert!(matches!(
            realize_datum(&surface, kk, &outside),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn plane_wave_datum_normalizes_and_evaluates() {
        let d = DirichletDatum::plane_wave([0.0, 0.0, 2.0]).unwrap();
        match &d {
            DirichletDatum::PlaneWave { direction } => {
                assert_relative_eq!(norm(*direction), 1.0, epsilon = 1e-15);
            }
            _ => unreachable!(),
        }
        assert!(DirichletDatum::plane_wave([0.0, 0.0, 0.0]).is_err());
        // k = 0 degenerates to g ≡ −1.
        let g = d.eval(k(0.0, 0.0), [0.3, -0.4, 0.5]);
        assert_relative_eq!(g.re, -1.0, epsilon = 1e-15);
        // At x·d = π/(2k) the phase is e^{iπ/2} = i, so g = −i.
        let g = d.eval(k(1.0, 0.0), [0.0, 0.0, std::f64::consts::FRAC_PI_2]);
        assert_relative_eq!(g.im, -1.0, epsilon = 1e-12);
        assert!(g.re.abs() < 1e-12);
    }

    #[test]
    fn golden_spiral_covers_the_sphere() {
        let dirs = golden_spiral_directions(50);
        assert_eq!(dirs.len(), 50);
        for d in &dirs {
            assert_relative_eq!(norm(*d), 1.0, epsilon = 1e-12);
        }
        // Mean should be near zero by symmetry of the construction.
        let mean = dirs.iter().fold([0.0; 3], |acc, d| {
            [acc[0] + d[0], acc[1] + d[1], acc[2] + d[2]]
        });
        assert!(norm(mean) / 50.0 < 0.05);
    }

    #[test]
    fn datum_serde_round_trip() {
        for d in [
            DirichletDatum::constant(Complex64::new(1.0, -2.0)),
            DirichletDatum::point_source([0.2, 0.1, -0.1]),
            DirichletDatum::plane_wave([0.0, 0.0, 1.0]).unwrap(),
        ] {
            let text = serde_json::to_string(&d).unwrap();
            let back: DirichletDatum = serde_json::from_str(&text).unwrap();
            assert_eq!(d, back);
        }
    }
}
