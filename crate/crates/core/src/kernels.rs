//! Helmholtz kernels: fundamental solution, layer-potential kernels, their
//! singular/smooth splittings, far-field kernels, and the radiation residual.
//!
//! Sign convention used throughout the crate:
//!
//! ```text
//! S(k, x) = -exp(ik|x|) / (4π|x|),      ∇S(k, x) = exp(ikr)(1 - ikr)/(4πr²) · x/r
//! ```
//!
//! so that for k = 0 the single layer of the unit density over the unit
//! sphere equals -1 on the surface.  Wave numbers live in the closed upper
//! half plane Im k ≥ 0; k = 0 (Laplace) is handled by the same code paths.
//!
//! Each layer kernel comes with a splitting into a k-independent singular
//! part (its k = 0 form) and a smooth remainder.  Remainders are evaluated
//! through explicit series for small |k|·r, so their values near coincident
//! points come from series coefficients rather than catastrophic
//! cancellation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::vec3::{dot, norm, scale, Vec3};
use crate::{Error, Result};

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Threshold on |k r| below which smooth remainders switch to their series.
const SERIES_THRESHOLD: f64 = 1e-2;

/// A wave number in the closed upper half plane Im k ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "WaveNumberRepr")]
pub struct WaveNumber(Complex64);

#[derive(Serialize, Deserialize)]
struct WaveNumberRepr {
    re: f64,
    im: f64,
}

impl From<WaveNumber> for WaveNumberRepr {
    fn from(k: WaveNumber) -> Self {
        WaveNumberRepr {
            re: k.0.re,
            im: k.0.im,
        }
    }
}

impl<'de> Deserialize<'de> for WaveNumber {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = WaveNumberRepr::deserialize(d)?;
        WaveNumber::new(repr.re, repr.im).map_err(serde::de::Error::custom)
    }
}

impl WaveNumber {
    /// Builds a wave number, rejecting Im k < 0 and non-finite parts.
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() || im < 0.0 {
            return Err(Error::WaveNumber { re, im });
        }
        Ok(WaveNumber(Complex64::new(re, im)))
    }

    /// Real wave number k ≥ 0 or any real value (still on the real axis).
    pub fn real(re: f64) -> Self {
        WaveNumber::new(re, 0.0).expect("real wave numbers are always admissible")
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn is_zero(self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }

    /// Coupling factor (1 - i·Re k) of the combined-field operator
    /// Λ = -½I + W + (1 - i·Re k)·V.
    pub fn coupling(self) -> Complex64 {
        Complex64::new(1.0, -self.0.re)
    }
}

impl std::fmt::Display for WaveNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

/// Fundamental solution S(k, ξ) = -e^{ik|ξ|}/(4π|ξ|).  Requires ξ ≠ 0.
#[inline]
pub fn fund_sol(k: WaveNumber, xi: Vec3) -> Complex64 {
    let r = norm(xi);
    -(Complex64::i() * k.0 * r).exp() / (FOUR_PI * r)
}

/// Gradient ∇S(k, ξ) = e^{ikr}(1 - ikr)/(4πr²) · ξ/r.
#[inline]
pub fn grad_fund_sol(k: WaveNumber, xi: Vec3) -> [Complex64; 3] {
    let r = norm(xi);
    let f = radial_derivative(k.0, r);
    [f * (xi[0] / r), f * (xi[1] / r), f * (xi[2] / r)]
}

/// f'(r) for S = f(r): e^{ikr}(1 - ikr)/(4πr²).
#[inline]
fn radial_derivative(k: Complex64, r: f64) -> Complex64 {
    let ikr = Complex64::i() * k * r;
    ikr.exp() * (Complex64::new(1.0, 0.0) - ikr) / (FOUR_PI * r * r)
}

/// f''(r) for S = f(r): e^{ikr}(k²r² - 2(1 - ikr))/(4πr³).
#[inline]
fn radial_second_derivative(k: Complex64, r: f64) -> Complex64 {
    let ikr = Complex64::i() * k * r;
    let kr = k * r;
    ikr.exp() * (kr * kr - 2.0 * (Complex64::new(1.0, 0.0) - ikr)) / (FOUR_PI * r * r * r)
}

/// Single-layer kernel S(k, x - y); ξ = x - y.
#[inline]
pub fn single_layer(k: WaveNumber, xi: Vec3) -> Complex64 {
    fund_sol(k, xi)
}

/// Double-layer kernel ∂S/∂ν(y) (k, x - y) = -ν(y)·∇S(k, ξ); ξ = x - y.
#[inline]
pub fn double_layer(k: WaveNumber, xi: Vec3, nu_y: Vec3) -> Complex64 {
    let r = norm(xi);
    -dot(nu_y, xi) / r * radial_derivative(k.0, r)
}

/// Adjoint double-layer kernel ∂S/∂ν(x) (k, x - y) = ν(x)·∇S(k, ξ).
#[inline]
pub fn adjoint_double_layer(k: WaveNumber, xi: Vec3, nu_x: Vec3) -> Complex64 {
    let r = norm(xi);
    dot(nu_x, xi) / r * radial_derivative(k.0, r)
}

// ---------------------------------------------------------------------------
// Singular / smooth splitting.  The singular part is the k = 0 kernel; the
// smooth remainder subtracts it and is series-evaluated for small |k|r.
// ---------------------------------------------------------------------------

/// Singular part of the single layer: -1/(4π|ξ|).
#[inline]
pub fn single_layer_singular(xi: Vec3) -> f64 {
    -1.0 / (FOUR_PI * norm(xi))
}

/// (e^z - 1)/z with a series branch near z = 0.
#[inline]
fn expm1_over_z(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_THRESHOLD {
        // 1 + z/2 + z²/6 + z³/24 + z⁴/120 + z⁵/720; next term < 1e-15 here.
        let mut acc = Complex64::new(1.0 / 720.0, 0.0);
        for c in [1.0 / 120.0, 1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0] {
            acc = acc * z + c;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// (e^z(1-z) - 1)/z² with a series branch near z = 0; tends to -1/2.
#[inline]
fn expz_one_minus_z_rem(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_THRESHOLD {
        // -(1/2 + z/3 + z²/8 + z³/30 + z⁴/144); next term < 1e-13 here.
        let mut acc = Complex64::new(1.0 / 144.0, 0.0);
        for c in [1.0 / 30.0, 1.0 / 8.0, 1.0 / 3.0, 0.5] {
            acc = acc * z + c;
        }
        -acc
    } else {
        (z.exp() * (Complex64::new(1.0, 0.0) - z) - 1.0) / (z * z)
    }
}

/// Smooth remainder of the single layer: S(k, ξ) + 1/(4π|ξ|).
///
/// Equals -ik/(4π)·(e^{ikr} - 1)/(ikr); the ξ → 0 limit is -ik/(4π).
#[inline]
pub fn single_layer_smooth(k: WaveNumber, xi: Vec3) -> Complex64 {
    let r = norm(xi);
    let z = Complex64::i() * k.0 * r;
    -Complex64::i() * k.0 / FOUR_PI * expm1_over_z(z)
}

/// ξ → 0 limit of [`single_layer_smooth`].
#[inline]
pub fn single_layer_smooth_limit(k: WaveNumber) -> Complex64 {
    -Complex64::i() * k.0 / FOUR_PI
}

/// Bounded factor H(r) = (e^{ikr}(1 - ikr) - 1)/(4πr²), H(0) = k²/(8π).
#[inline]
fn smooth_gradient_factor(k: Complex64, r: f64) -> Complex64 {
    let z = Complex64::i() * k * r;
    // (e^z(1-z) - 1)/z² · z²/(4πr²) = rem(z) · (-k²)/(4π)
    expz_one_minus_z_rem(z) * (-(k * k)) / FOUR_PI
}

/// Singular part of the double layer: -ν(y)·ξ/(4π|ξ|³).
#[inline]
pub fn double_layer_singular(xi: Vec3, nu_y: Vec3) -> f64 {
    let r = norm(xi);
    -dot(nu_y, xi) / (FOUR_PI * r * r * r)
}

/// Smooth remainder of the double layer; bounded, with value
/// -(ν·ξ/|ξ|)·k²/(8π)·(1 + O(k|ξ|)) near ξ = 0.
#[inline]
pub fn double_layer_smooth(k: WaveNumber, xi: Vec3, nu_y: Vec3) -> Complex64 {
    let r = norm(xi);
    -dot(nu_y, xi) / r * smooth_gradient_factor(k.0, r)
}

/// Singular part of the adjoint double layer: +ν(x)·ξ/(4π|ξ|³).
#[inline]
pub fn adjoint_double_layer_singular(xi: Vec3, nu_x: Vec3) -> f64 {
    let r = norm(xi);
    dot(nu_x, xi) / (FOUR_PI * r * r * r)
}

/// Smooth remainder of the adjoint double layer.
#[inline]
pub fn adjoint_double_layer_smooth(k: WaveNumber, xi: Vec3, nu_x: Vec3) -> Complex64 {
    let r = norm(xi);
    dot(nu_x, xi) / r * smooth_gradient_factor(k.0, r)
}

// ---------------------------------------------------------------------------
// Gradients of the layer kernels with respect to the evaluation point x,
// used for field gradients and Neumann traces.
// ---------------------------------------------------------------------------

/// ∇_x S(k, x - y) = ∇S(k, ξ).
#[inline]
pub fn grad_single_layer(k: WaveNumber, xi: Vec3) -> [Complex64; 3] {
    grad_fund_sol(k, xi)
}

/// ∇_x of the double-layer kernel:
/// -[f''(r)(ξ̂·ν)ξ̂ + f'(r)/r·(ν - (ξ̂·ν)ξ̂)] with S = f(r).
#[inline]
pub fn grad_double_layer(k: WaveNumber, xi: Vec3, nu_y: Vec3) -> [Complex64; 3] {
    let r = norm(xi);
    let xh = scale(1.0 / r, xi);
    let nd = dot(xh, nu_y);
    let f1 = radial_derivative(k.0, r);
    let f2 = radial_second_derivative(k.0, r);
    let radial = f2 * nd;
    let lateral = f1 / r;
    [
        -(radial * xh[0] + lateral * (nu_y[0] - nd * xh[0])),
        -(radial * xh[1] + lateral * (nu_y[1] - nd * xh[1])),
        -(radial * xh[2] + lateral * (nu_y[2] - nd * xh[2])),
    ]
}

// ---------------------------------------------------------------------------
// Far-field kernels.  The far-field pattern is normalized by
// u(x) = e^{ik|x|}/|x| · (u∞(x̂) + O(1/|x|)), without a 4π factor.
// ---------------------------------------------------------------------------

/// Far-field kernel of the single layer: -e^{-ik x̂·y}/(4π).
#[inline]
pub fn farfield_single(k: WaveNumber, xhat: Vec3, y: Vec3) -> Complex64 {
    -(-Complex64::i() * k.0 * dot(xhat, y)).exp() / FOUR_PI
}

/// Far-field kernel of the double layer: (ik/4π)(x̂·ν) e^{-ik x̂·y}.
#[inline]
pub fn farfield_double(k: WaveNumber, xhat: Vec3, y: Vec3, nu_y: Vec3) -> Complex64 {
    Complex64::i() * k.0 / FOUR_PI * dot(xhat, nu_y) * (-Complex64::i() * k.0 * dot(xhat, y)).exp()
}

/// Sommerfeld residual |x|·(∇u·x̂ - ik·u) at a point x.
///
/// For outgoing fields this stays bounded (and decays like 1/|x| for real
/// k); for incoming or non-radiating fields it grows with |x|.
#[inline]
pub fn radiation_residual(k: WaveNumber, x: Vec3, u: Complex64, grad_u: [Complex64; 3]) -> Complex64 {
    let r = norm(x);
    let radial = (grad_u[0] * x[0] + grad_u[1] * x[1] + grad_u[2] * x[2]) / r;
    r * (radial - Complex64::i() * k.0 * u)
}
