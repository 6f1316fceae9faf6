//! Orthonormal eigenbases on S² and SO(3) and the special functions behind them.
//!
//! Measure convention: the sphere and the rotation group both carry their
//! normalized invariant measures (total mass 1). Under this convention
//!
//! | quantity                         | value                                     |
//! |----------------------------------|-------------------------------------------|
//! | `Y_0^1`                          | `1`                                       |
//! | addition theorem                 | `sum_i Y_k^i(x) Y_k^i(y) = (2k+1) P_k(x.y)` |
//! | `||T_k^{ij}||^2`                 | `1 / (2k+1)`                              |
//! | Funk-Radon multiplier `mu_k`     | `P_k(0)`                                  |
//! | hemispherical multiplier `mu_k`  | `1/2` (k=0), `(1/2) int_0^1 P_k` (k odd)  |
//! | SO(3) Radon constant `kappa_k`   | `1 / (2k+1)`                              |
//!
//! Real spherical harmonics are indexed by `i = m + k + 1` with `m` in
//! `-k..=k`; `m > 0` are cosine-type, `m < 0` sine-type.

mod points;
mod wigner;

pub use points::{RotationPoint, SpherePoint};
pub use wigner::{eval_wigner, wigner_d_small, wigner_matrices, wigner_matrix, WIGNER_DEFAULT_KMAX};

use crate::error::{Error, Result};

/// Degree/order index of a basis function. `j` is only used on SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    pub k: usize,
    pub i: usize,
    pub j: Option<usize>,
}

impl HarmonicIndex {
    pub fn sphere(k: usize, i: usize) -> Self {
        HarmonicIndex { k, i, j: None }
    }

    pub fn rotation(k: usize, i: usize, j: usize) -> Self {
        HarmonicIndex { k, i, j: Some(j) }
    }

    /// Order `m = i - k - 1` of a sphere index.
    pub fn order(&self) -> i64 {
        self.i as i64 - self.k as i64 - 1
    }

    pub fn eigenvalue(&self) -> f64 {
        eigenvalue(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        let n = 2 * self.k + 1;
        let ok_i = (1..=n).contains(&self.i);
        let ok_j = self.j.is_none_or(|j| (1..=n).contains(&j));
        if ok_i && ok_j {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                k: self.k,
                i: self.i,
                j: self.j,
            })
        }
    }
}

/// `k(k+1)`, the Laplace-Beltrami eigenvalue magnitude of degree `k`.
pub fn eigenvalue(k: usize) -> f64 {
    (k * (k + 1)) as f64
}

/// Offset of degree `k` in the flat layout produced by [`sph_harmonics`].
pub fn sh_offset(k: usize) -> usize {
    k * k
}

/// All real spherical harmonics of degree `<= kmax` at `p`.
///
/// Entry `k*k + (i-1)` holds `Y_k^i(p)`.
pub fn sph_harmonics(kmax: usize, p: &SpherePoint) -> Vec<f64> {
    let mut out = vec![0.0; (kmax + 1) * (kmax + 1)];
    fill_sph_harmonics(kmax, p, &mut out);
    out
}

/// Writes all real spherical harmonics of degree `<= kmax` into `out`.
pub fn fill_sph_harmonics(kmax: usize, p: &SpherePoint, out: &mut [f64]) {
    let [x, y, z] = p.coords();
    let s = (x * x + y * y).sqrt();
    let (cphi, sphi) = if s > 0.0 { (x / s, y / s) } else { (1.0, 0.0) };

    // cos(m phi), sin(m phi) via angle addition
    let mut cm = vec![1.0; kmax + 1];
    let mut sm = vec![0.0; kmax + 1];
    for m in 1..=kmax {
        cm[m] = cm[m - 1] * cphi - sm[m - 1] * sphi;
        sm[m] = sm[m - 1] * cphi + cm[m - 1] * sphi;
    }

    let sqrt2 = std::f64::consts::SQRT_2;
    // Q_m^m, the normalized sectoral term, carried across m
    let mut qmm = 1.0;
    for m in 0..=kmax {
        if m > 0 {
            qmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        let scale = if m == 0 { 1.0 } else { sqrt2 };
        let mut q_prev2 = 0.0;
        let mut q_prev = qmm;
        for k in m..=kmax {
            let q = if k == m {
                qmm
            } else if k == m + 1 {
                ((2 * m + 3) as f64).sqrt() * z * qmm
            } else {
                let kf = k as f64;
                let mf = m as f64;
                let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
                let b = (((kf - 1.0).powi(2) - mf * mf) / (4.0 * (kf - 1.0).powi(2) - 1.0)).sqrt();
                a * (z * q_prev - b * q_prev2)
            };
            if k > m {
                q_prev2 = q_prev;
                q_prev = q;
            }
            let base = sh_offset(k) + k;
            if m == 0 {
                out[base] = q;
            } else {
                out[base + m] = scale * q * cm[m];
                out[base - m] = scale * q * sm[m];
            }
        }
    }
}

/// `Y_k^i(p)` for a single index.
pub fn eval_sph_harmonic(idx: HarmonicIndex, p: &SpherePoint) -> Result<f64> {
    if idx.j.is_some() {
        return Err(Error::IndexOutOfRange {
            k: idx.k,
            i: idx.i,
            j: idx.j,
        });
    }
    idx.validate()?;
    let all = sph_harmonics(idx.k, p);
    Ok(all[sh_offset(idx.k) + idx.i - 1])
}

/// Legendre polynomials `P_0(u), ..., P_kmax(u)`.
pub fn legendre_all(kmax: usize, u: f64) -> Vec<f64> {
    let mut p = vec![0.0; kmax + 1];
    p[0] = 1.0;
    if kmax >= 1 {
        p[1] = u;
    }
    for k in 2..=kmax {
        p[k] = ((2 * k - 1) as f64 * u * p[k - 1] - (k - 1) as f64 * p[k - 2]) / k as f64;
    }
    p
}

/// Gegenbauer polynomial `C_k^{1/2}(u)`, i.e. the Legendre polynomial `P_k(u)`.
///
/// With the normalized measure the addition theorem reads
/// `C_k^{1/2}(x.y) = (1/(2k+1)) sum_i Y_k^i(x) Y_k^i(y)`.
pub fn gegenbauer_half(k: usize, u: f64) -> Result<f64> {
    if !(u.abs() <= 1.0 + 1e-12) {
        return Err(Error::Domain(format!("|u| = {} exceeds 1", u.abs())));
    }
    Ok(legendre_all(k, u.clamp(-1.0, 1.0))[k])
}

/// Dimension of the space of degree-`k` spherical harmonics on S^n:
/// `(n+2k-1)(n+k-2)! / (k!(n-1)!)`.
pub fn dim_harmonic_space(n: usize, k: usize) -> Result<u128> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere dimension n={n} must be >= 2")));
    }
    let overflow = || Error::Overflow(format!("d_{n}({k})"));
    // C(n+k-2, k) built incrementally; each partial product is itself a binomial
    let top = (n + k - 2) as u128;
    let r = k.min(n - 2) as u128;
    let mut binom: u128 = 1;
    for t in 1..=r {
        binom = binom
            .checked_mul(top - r + t)
            .ok_or_else(overflow)?
            / t;
    }
    let num = binom
        .checked_mul((n + 2 * k - 1) as u128)
        .ok_or_else(overflow)?;
    Ok(num / (n as u128 - 1))
}
