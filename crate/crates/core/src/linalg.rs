//! Dense complex linear algebra for the collocation systems.
//!
//! The boundary operators are dense, moderately sized (≤ ~20k unknowns) and
//! solved once per right-hand side, so an LU factorization with partial
//! pivoting is the whole story.  A Hager-style 1-norm condition estimate
//! rides on the factorization and guards against solving near a resonance
//! of the interior problem.
//!
//! Factorization and substitution are strictly sequential so results are
//! bitwise reproducible regardless of thread count.

use num_complex::Complex64;

use crate::{Error, Result};

/// Row-major dense complex matrix (square).
#[derive(Debug, Clone)]
pub struct ComplexMat {
    pub n: usize,
    /// Row-major entries; `data.len() == n * n`.
    pub data: Vec<Complex64>,
}

impl ComplexMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// Induced 1-norm: max column sum of absolute values.
    pub fn one_norm(&self) -> f64 {
        let mut col_sums = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                col_sums[j] += v.norm();
            }
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting: P A = L U, pivots stored as a
/// sequence of row swaps (`piv[k]` is the row exchanged with `k` at step k).
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

/// Factors `a` in place of a copy; fails with [`Error::Singular`] when a
/// pivot vanishes to working precision.
pub fn lu_factor(a: &ComplexMat) -> Result<LuFactors> {
    let n = a.n;
    let mut lu = a.data.clone();
    let mut piv = vec![0usize; n];
    // Scale reference for the singularity test.
    let scale = lu.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);

    for k in 0..n {
        let mut p = k;
        let mut best = lu[k * n + k].norm();
        for i in (k + 1)..n {
            let mag = lu[i * n + k].norm();
            if mag > best {
                best = mag;
                p = i;
            }
        }
        if best <= scale * 1e-300 {
            return Err(Error::Singular);
        }
        piv[k] = p;
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let factor = lu[i * n + k] / pivot;
            lu[i * n + k] = factor;
            if factor.norm_sqr() != 0.0 {
                for j in (k + 1)..n {
                    let upd = factor * lu[k * n + j];
                    lu[i * n + j] -= upd;
                }
            }
        }
    }
    Ok(LuFactors { n, lu, piv })
}

impl LuFactors {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        // Apply P.
        for k in 0..n {
            if self.piv[k] != k {
                x.swap(k, self.piv[k]);
            }
        }
        // L c = P b (unit diagonal).
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        // U x = c.
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves Aᴴ x = b using the factors of A
    /// (Aᴴ = Uᴴ Lᴴ P, so x = Pᵀ (Lᴴ)⁻¹ (Uᴴ)⁻¹ b).
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        // Uᴴ y = b: lower triangular with diagonal conj(U_ii).
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[j * n + i].conj() * x[j];
            }
            x[i] = s / self.lu[i * n + i].conj();
        }
        // Lᴴ w = y: upper triangular, unit diagonal.
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i].conj() * x[j];
            }
            x[i] = s;
        }
        // x = Pᵀ w: undo the swaps in reverse order.
        for k in (0..n).rev() {
            if self.piv[k] != k {
                x.swap(k, self.piv[k]);
            }
        }
        x
    }

    /// Hager/Higham estimate of ‖A⁻¹‖₁ (a lower bound, usually within a
    /// small factor).  Multiply by ‖A‖₁ for the condition number.
    pub fn inverse_one_norm_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut best = 0.0f64;
        for _ in 0..5 {
            let y = self.solve(&x);
            let est: f64 = y.iter().map(|v| v.norm()).sum();
            best = best.max(est);
            // ξ = sign(y) elementwise.
            let xi: Vec<Complex64> = y
                .iter()
                .map(|v| {
                    let m = v.norm();
                    if m == 0.0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        v / m
                    }
                })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (mut jmax, mut zmax) = (0usize, 0.0f64);
            for (j, v) in z.iter().enumerate() {
                if v.norm() > zmax {
                    zmax = v.norm();
                    jmax = j;
                }
            }
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= zx + 1e-14 * zx.abs() {
                break;
            }
            x = vec![Complex64::new(0.0, 0.0); n];
            x[jmax] = Complex64::new(1.0, 0.0);
        }
        best
    }

    /// 1-norm condition estimate given ‖A‖₁.
    pub fn condition_estimate(&self, a_one_norm: f64) -> f64 {
        a_one_norm * self.inverse_one_norm_estimate()
    }
}
