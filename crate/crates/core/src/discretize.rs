//! Positive-weight cubature exact on bandlimited spaces, product-bandwidth
//! bookkeeping, discrete Fourier coefficients and the discrete inversion
//! formulas for the Funk-Radon and SO(3) Radon transforms.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Manifold, Result};
use crate::geometry::{voronoi_masses, Lattice};
use crate::harmonics::{sh_offset, sph_harmonics};
use crate::linalg::ordered_sum;
use crate::spaces::{analyze, basis_values, max_degree, HarmonicCoefficients, ManifoldPoint, BANDWIDTH_SLACK};
use crate::transforms::{funk_radon_inverse, so3_radon_inverse, PARITY_TOL};

/// Largest admissible moment residual of a certified cubature.
pub const MOMENT_TOL: f64 = 1e-10;

/// Weights below this fraction of the mean weight `1/N` count as zero: the
/// moment system is then only barely solvable on the lattice.
pub const MIN_RELATIVE_WEIGHT: f64 = 1e-6;

/// Guaranteed bandwidth of a product `f g` with `f ∈ E_ω1`, `g ∈ E_ω2`.
///
/// Degrees add on S² and SO(3), so the product has degree at most
/// `K1 + K2`. On S²×S² each factor degree adds separately; the smallest
/// eigenvalue ball containing every such pair has radius `2 K (K+1)`.
pub fn product_bandwidth(omega1: f64, omega2: f64, manifold: Manifold) -> f64 {
    let k = max_degree(omega1) + max_degree(omega2);
    let lam = (k * (k + 1)) as f64;
    match manifold {
        Manifold::S2 | Manifold::SO3 => lam,
        Manifold::S2xS2 => 2.0 * lam,
    }
}

/// Cubature weights on a lattice, exact for `E_{omega_exact}`.
#[derive(Debug, Clone)]
pub struct Cubature {
    lattice: Lattice,
    weights: Vec<f64>,
    omega_exact: f64,
    residual: f64,
}

impl Cubature {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        self.lattice.points()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega_exact(&self) -> f64 {
        self.omega_exact
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn manifold(&self) -> Manifold {
        self.lattice.manifold()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ μ_ν f(x_ν)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Rebuilds a cubature from stored weights, re-verifying positivity and
    /// every moment up to `omega_exact`.
    pub fn from_weights(lattice: Lattice, weights: Vec<f64>, omega_exact: f64) -> Result<Self> {
        if weights.len() != lattice.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} points",
                weights.len(),
                lattice.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::NonPositiveWeight);
        }
        let a = moment_matrix(lattice.manifold(), omega_exact, lattice.points())?;
        let (residual, worst) = moment_residual(&a, &DVector::from_column_slice(&weights));
        if residual > MOMENT_TOL {
            return Err(Error::CubatureInfeasible {
                residual,
                worst_moment: worst,
            });
        }
        Ok(Cubature {
            lattice,
            weights,
            omega_exact,
            residual,
        })
    }
}

/// Basis values with `λ <= omega` at every point, one column per point.
pub fn moment_matrix(manifold: Manifold, omega: f64, points: &[ManifoldPoint]) -> Result<DMatrix<f64>> {
    let cols: Vec<Vec<f64>> = points
        .par_iter()
        .map(|p| basis_values(manifold, omega, p))
        .collect::<Result<_>>()?;
    let d = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(d, cols.len(), |i, j| cols[j][i]))
}

/// `max_i |Σ_ν w_ν u_i(x_ν) - ∫ u_i|` and the index attaining it.
fn moment_residual(a: &DMatrix<f64>, w: &DVector<f64>) -> (f64, usize) {
    let mut r = a * w;
    r[0] -= 1.0;
    r.iter()
        .enumerate()
        .fold((0.0, 0), |(m, i), (j, v)| if v.abs() > m { (v.abs(), j) } else { (m, i) })
}

/// Per-moment residuals `|Σ μ_ν u_i(x_ν) - δ_{i0}|` up to `omega`, in basis order.
pub fn moment_residuals(cubature: &Cubature, omega: f64) -> Result<Vec<f64>> {
    let a = moment_matrix(cubature.manifold(), omega, cubature.points())?;
    let mut r = a * DVector::from_column_slice(&cubature.weights);
    r[0] -= 1.0;
    Ok(r.iter().map(|v| v.abs()).collect())
}

/// First basis index beyond `omega_exact` (up to `omega_probe`) whose moment
/// residual exceeds the tolerance.
pub fn first_violated_moment(cubature: &Cubature, omega_probe: f64) -> Result<Option<(usize, f64)>> {
    let r = moment_residuals(cubature, omega_probe)?;
    Ok(r.iter().enumerate().find(|(_, v)| **v > MOMENT_TOL).map(|(i, v)| (i, *v)))
}

/// Positive weights exact on `E_{omega_exact}`.
///
/// Starts from Voronoi cell masses `w0` and applies the weighted minimum-norm
/// correction `w = w0 (1 + z)`. If that leaves a non-positive weight, the
/// correction is replaced by the multiplicative form `w = w0 exp(A^T y)`,
/// which stays positive by construction and is solved by damped Newton.
pub fn compute_cubature(lattice: &Lattice, omega_exact: f64) -> Result<Cubature> {
    let mut w0 = voronoi_masses(lattice)?;
    let total: f64 = w0.iter().sum();
    for w in w0.iter_mut() {
        *w /= total;
    }
    if w0.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    let manifold = lattice.manifold();
    let a = moment_matrix(manifold, omega_exact, lattice.points())?;
    let (d, n) = a.shape();
    let w0v = DVector::from_vec(w0);
    if d == 1 {
        let (residual, _) = moment_residual(&a, &w0v);
        return Ok(Cubature {
            lattice: lattice.clone(),
            weights: w0v.as_slice().to_vec(),
            omega_exact,
            residual,
        });
    }
    if n < d {
        let (residual, worst) = moment_residual(&a, &w0v);
        return Err(Error::CubatureInfeasible {
            residual,
            worst_moment: worst,
        });
    }

    let w = match linear_correction(&a, &w0v) {
        Some(w) if w.iter().all(|x| *x > MIN_RELATIVE_WEIGHT / n as f64) => w,
        _ => entropy_correction(&a, &w0v).unwrap_or(w0v.clone()),
    };
    let (residual, worst) = moment_residual(&a, &w);
    let floor = MIN_RELATIVE_WEIGHT / n as f64;
    if residual > MOMENT_TOL || w.iter().any(|x| !(*x > floor)) {
        return Err(Error::CubatureInfeasible {
            residual,
            worst_moment: worst,
        });
    }
    Ok(Cubature {
        lattice: lattice.clone(),
        weights: w.as_slice().to_vec(),
        omega_exact,
        residual,
    })
}

/// Target moments: only the constant integrates to a nonzero value.
fn target(d: usize) -> DVector<f64> {
    let mut e = DVector::zeros(d);
    e[0] = 1.0;
    e
}

fn linear_correction(a: &DMatrix<f64>, w0: &DVector<f64>) -> Option<DVector<f64>> {
    let b = a * DMatrix::from_diagonal(w0);
    let chol = (&b * b.transpose()).cholesky()?;
    let e = target(a.nrows());
    let mut w = w0.clone();
    for _ in 0..4 {
        let r = &e - a * &w;
        if r.amax() < 1e-15 {
            break;
        }
        let y = chol.solve(&r);
        let dz = b.transpose() * y;
        w += w0.component_mul(&dz);
    }
    Some(w)
}

fn entropy_correction(a: &DMatrix<f64>, w0: &DVector<f64>) -> Option<DVector<f64>> {
    let e = target(a.nrows());
    let mut y = DVector::zeros(a.nrows());
    let weights = |y: &DVector<f64>| -> DVector<f64> {
        let s = a.transpose() * y;
        w0.zip_map(&s, |w, s| w * s.exp())
    };
    let mut w = weights(&y);
    let mut r = a * &w - &e;
    for _ in 0..100 {
        if r.amax() < 1e-14 {
            break;
        }
        let aw = a * DMatrix::from_diagonal(&w);
        let j = &aw * a.transpose();
        let step = j.cholesky()?.solve(&r);
        let norm = r.norm();
        let mut t = 1.0;
        loop {
            let y_new = &y - t * &step;
            let w_new = weights(&y_new);
            let r_new = a * &w_new - &e;
            if r_new.norm() < norm || t < 1e-8 {
                y = y_new;
                w = w_new;
                r = r_new;
                break;
            }
            t *= 0.5;
        }
    }
    Some(w)
}

/// Product of two S² cubatures on S²×S². Exactness holds for every pair of
/// degrees both covered by the factors, i.e. on the eigenvalue ball of radius
/// `(K+1)(K+2) - 2` with `K` the smaller factor degree. It is re-verified.
pub fn product_cubature(a: &Cubature, b: &Cubature) -> Result<Cubature> {
    for c in [a, b] {
        if c.manifold() != Manifold::S2 {
            return Err(Error::ManifoldMismatch {
                expected: Manifold::S2,
                found: c.manifold(),
            });
        }
    }
    let mut points = Vec::with_capacity(a.len() * b.len());
    let mut weights = Vec::with_capacity(a.len() * b.len());
    for (p, wp) in a.points().iter().zip(a.weights()) {
        for (q, wq) in b.points().iter().zip(b.weights()) {
            if let (ManifoldPoint::S2(x), ManifoldPoint::S2(y)) = (p, q) {
                points.push(ManifoldPoint::S2xS2(*x, *y));
                weights.push(wp * wq);
            }
        }
    }
    let k = max_degree(a.omega_exact).min(max_degree(b.omega_exact));
    let omega = ((k + 1) * (k + 2) - 2) as f64;
    let rho = std::f64::consts::SQRT_2 * a.lattice.rho().max(b.lattice.rho());
    let lattice = Lattice::new(Manifold::S2xS2, points, rho, false)?;
    Cubature::from_weights(lattice, weights, omega)
}

fn check_exactness(c: &Cubature, required: f64) -> Result<()> {
    if c.omega_exact + BANDWIDTH_SLACK < required {
        return Err(Error::InsufficientExactness {
            required,
            available: c.omega_exact,
        });
    }
    Ok(())
}

fn check_samples(c: &Cubature, samples: &[f64]) -> Result<()> {
    if samples.len() != c.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples for a cubature of {} points",
            samples.len(),
            c.len()
        )));
    }
    Ok(())
}

/// Fourier coefficients of `f ∈ E_ω` from its values on the cubature nodes.
pub fn discrete_fourier(samples: &[f64], cubature: &Cubature, omega: f64) -> Result<HarmonicCoefficients> {
    check_samples(cubature, samples)?;
    check_exactness(cubature, product_bandwidth(omega, omega, cubature.manifold()))?;
    let triples: Vec<(ManifoldPoint, f64, f64)> = cubature
        .points()
        .iter()
        .zip(samples)
        .zip(cubature.weights())
        .map(|((p, v), w)| (*p, *v, *w))
        .collect();
    analyze(cubature.manifold(), &triples, omega, Some(cubature.omega_exact))
}

/// Result of a discrete Funk-Radon inversion.
#[derive(Debug, Clone)]
pub struct DiscreteInversion {
    pub coefficients: HarmonicCoefficients,
    /// True when every analyzed coefficient of `Rf` vanished, i.e. the input
    /// lies in the kernel (odd functions) and nothing can be recovered.
    pub kernel_input: bool,
}

/// Recovers an even `f ∈ E_ω` from samples of `Rf` on a symmetric lattice.
pub fn discrete_invert_funk_radon(samples: &[f64], cubature: &Cubature, omega: f64) -> Result<DiscreteInversion> {
    if !cubature.lattice.symmetric() {
        return Err(Error::NotSymmetric);
    }
    let rf = discrete_fourier(samples, cubature, omega)?;
    let clean = rf.pruned(PARITY_TOL);
    let kernel_input = clean.max_abs() == 0.0;
    for ((k, _), b) in clean.blocks() {
        let m = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if k % 2 == 1 && m > 1e-9 {
            return Err(Error::NotEven { degree: k, magnitude: m });
        }
    }
    let even = clean.map_blocks(|(k, _), v| if k % 2 == 1 { 0.0 } else { v }).pruned(0.0);
    Ok(DiscreteInversion {
        coefficients: funk_radon_inverse(&even)?,
        kernel_input,
    })
}

/// Recovers `f ∈ E_ω(SO(3))` from samples of `Rf` on an S²×S² cubature.
///
/// Only the diagonal blocks `Y_k^i(x) Y_k^j(y)`, `k(k+1) <= ω`, are analyzed;
/// their pairwise products stay within `product_bandwidth(ω, ω, S2xS2)`.
pub fn discrete_invert_so3(samples: &[f64], cubature: &Cubature, omega: f64) -> Result<HarmonicCoefficients> {
    if cubature.manifold() != Manifold::S2xS2 {
        return Err(Error::ManifoldMismatch {
            expected: Manifold::S2xS2,
            found: cubature.manifold(),
        });
    }
    check_samples(cubature, samples)?;
    check_exactness(cubature, product_bandwidth(omega, omega, Manifold::S2xS2))?;
    let kmax = max_degree(omega);
    let total: usize = (0..=kmax).map(|k| (2 * k + 1).pow(2)).sum();
    let items: Vec<(&ManifoldPoint, f64)> = cubature
        .points()
        .iter()
        .zip(samples.iter().zip(cubature.weights()).map(|(v, w)| v * w))
        .collect();
    let flat = ordered_sum(&items, total, |(p, wv), acc| {
        if let ManifoldPoint::S2xS2(x, y) = p {
            let (a, b) = (sph_harmonics(kmax, x), sph_harmonics(kmax, y));
            let mut o = 0;
            for k in 0..=kmax {
                let n = 2 * k + 1;
                let (ya, yb) = (&a[sh_offset(k)..sh_offset(k) + n], &b[sh_offset(k)..sh_offset(k) + n]);
                for i in 0..n {
                    for j in 0..n {
                        acc[o + i * n + j] += wv * ya[i] * yb[j];
                    }
                }
                o += n * n;
            }
        }
    });
    let mut rf = HarmonicCoefficients::zeros(Manifold::S2xS2, 2.0 * omega);
    let mut o = 0;
    for k in 0..=kmax {
        let n = (2 * k + 1).pow(2);
        if flat.len() >= o + n {
            rf.set_block((k, k), flat[o..o + n].to_vec())?;
        }
        o += n;
    }
    so3_radon_inverse(&rf)
}
