//! Wigner functions on SO(3) in the real spherical-harmonic basis.
//!
//! `T_k^{ij}(g)` is the matrix of the rotation acting on degree-`k` harmonics,
//! normalized so that `Y_k^i(g w) = sum_j T_k^{ij}(g) Y_k^j(w)`. With this index
//! order the SO(3) Radon transform over `{g : g y = x}` maps `T_k^{ij}` onto
//! `Y_k^i(x) Y_k^j(y) / (2k+1)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use super::{HarmonicIndex, RotationPoint};
use crate::error::{Error, Result};

/// Default degree cap for Wigner evaluation.
pub const WIGNER_DEFAULT_KMAX: usize = 128;

/// Complex-basis small-d matrices `d^k_{m'm}(beta)` for `k <= kmax`.
///
/// Entry `[k][(m'+k)*(2k+1) + (m+k)]`. Computed with the three-term
/// recurrence in `k` at fixed `(m', m)`, seeded by the closed form at
/// `k = max(|m|, |m'|)`.
pub fn wigner_d_small(kmax: usize, beta: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..=kmax).map(|k| vec![0.0; (2 * k + 1).pow(2)]).collect();
    let cb = beta.cos();
    let (hs, hc) = (0.5 * beta).sin_cos();
    let kmax_i = kmax as i64;
    for mp in -kmax_i..=kmax_i {
        for m in -kmax_i..=kmax_i {
            let j0 = mp.abs().max(m.abs());
            let mut prev = 0.0;
            let mut cur = seed(j0, mp, m, hc, hs);
            store(&mut out, j0, mp, m, cur);
            for j in j0..kmax_i {
                let next = if j == 0 {
                    cb // d^1_{00}
                } else {
                    let jf = j as f64;
                    let (mf, mpf) = (m as f64, mp as f64);
                    let lhs = jf
                        * (((jf + 1.0).powi(2) - mf * mf) * ((jf + 1.0).powi(2) - mpf * mpf)).sqrt();
                    let a = (2.0 * jf + 1.0) * (jf * (jf + 1.0) * cb - mf * mpf);
                    let b = (jf + 1.0) * ((jf * jf - mf * mf) * (jf * jf - mpf * mpf)).sqrt();
                    (a * cur - b * prev) / lhs
                };
                prev = cur;
                cur = next;
                store(&mut out, j + 1, mp, m, cur);
            }
        }
    }
    out
}

fn store(out: &mut [Vec<f64>], j: i64, mp: i64, m: i64, v: f64) {
    let n = 2 * j + 1;
    out[j as usize][((mp + j) * n + (m + j)) as usize] = v;
}

fn ln_binom(n: i64, k: i64) -> f64 {
    ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
}

fn pow_i(x: f64, e: i64) -> f64 {
    x.powi(e as i32)
}

/// Closed form of `d^J_{m'm}` when `J = max(|m'|, |m|)`.
fn seed(j: i64, mp: i64, m: i64, c: f64, s: f64) -> f64 {
    let sign = |e: i64| if e.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    if mp == j {
        sign(j - m) * (0.5 * ln_binom(2 * j, j + m)).exp() * pow_i(c, j + m) * pow_i(s, j - m)
    } else if mp == -j {
        (0.5 * ln_binom(2 * j, j - m)).exp() * pow_i(c, j - m) * pow_i(s, j + m)
    } else if m == j {
        (0.5 * ln_binom(2 * j, j + mp)).exp() * pow_i(c, j + mp) * pow_i(s, j - mp)
    } else {
        // m == -j
        sign(j + mp) * (0.5 * ln_binom(2 * j, j - mp)).exp() * pow_i(c, j - mp) * pow_i(s, j + mp)
    }
}

/// Real-basis matrix of a rotation about the y-axis by `beta`, degree `k`.
fn real_y_rotation(k: usize, d: &[f64]) -> DMatrix<f64> {
    let n = 2 * k + 1;
    let ki = k as i64;
    let eps = |m: i64| if m > 0 && m % 2 == 1 { -1.0 } else { 1.0 };
    let dt = |m: i64, mp: i64| -> f64 { eps(m) * eps(mp) * d[((m + ki) * n as i64 + (mp + ki)) as usize] };
    let idx = |m: i64| (m + ki) as usize;
    let mut r = DMatrix::<f64>::zeros(n, n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    r[(idx(0), idx(0))] = dt(0, 0);
    for mp in 1..=ki {
        r[(idx(0), idx(mp))] = inv_sqrt2 * (dt(0, mp) + dt(0, -mp));
    }
    for m in 1..=ki {
        r[(idx(m), idx(0))] = inv_sqrt2 * (dt(m, 0) + dt(-m, 0));
        for mp in 1..=ki {
            r[(idx(m), idx(mp))] = 0.5 * (dt(m, mp) + dt(-m, mp) + dt(m, -mp) + dt(-m, -mp));
            r[(idx(-m), idx(-mp))] = 0.5 * (dt(m, mp) - dt(-m, mp) - dt(m, -mp) + dt(-m, -mp));
        }
    }
    r
}

/// Real-basis matrix of a rotation about the z-axis by `a`, degree `k`.
fn real_z_rotation(k: usize, a: f64) -> DMatrix<f64> {
    let n = 2 * k + 1;
    let mut r = DMatrix::<f64>::zeros(n, n);
    r[(k, k)] = 1.0;
    for m in 1..=k {
        let (s, c) = (m as f64 * a).sin_cos();
        let (pc, ps) = (k + m, k - m);
        r[(pc, pc)] = c;
        r[(pc, ps)] = -s;
        r[(ps, pc)] = s;
        r[(ps, ps)] = c;
    }
    r
}

/// The matrices `[T_k^{ij}(g)]_{ij}` for every `k <= kmax`.
pub fn wigner_matrices(kmax: usize, g: &RotationPoint) -> Vec<DMatrix<f64>> {
    let (alpha, beta, gamma) = g.euler();
    let d = wigner_d_small(kmax, beta);
    (0..=kmax)
        .map(|k| {
            let dy = real_y_rotation(k, &d[k]);
            // X(beta) = Z(-pi/2) Y(beta) Z(pi/2)
            let dx = real_z_rotation(k, -FRAC_PI_2) * dy * real_z_rotation(k, FRAC_PI_2);
            real_z_rotation(k, gamma) * dx * real_z_rotation(k, alpha)
        })
        .collect()
}

/// `[T_k^{ij}(g)]_{ij}` for one degree.
pub fn wigner_matrix(k: usize, g: &RotationPoint) -> DMatrix<f64> {
    wigner_matrices(k, g).pop().expect("at least one degree")
}

/// `T_k^{ij}(g)`.
pub fn eval_wigner(idx: HarmonicIndex, g: &RotationPoint) -> Result<f64> {
    let j = idx.j.ok_or(Error::IndexOutOfRange {
        k: idx.k,
        i: idx.i,
        j: None,
    })?;
    idx.validate()?;
    if idx.k > WIGNER_DEFAULT_KMAX {
        return Err(Error::IndexOutOfRange {
            k: idx.k,
            i: idx.i,
            j: idx.j,
        });
    }
    Ok(wigner_matrix(idx.k, g)[(idx.i - 1, j - 1)])
}
