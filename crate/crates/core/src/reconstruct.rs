//! Iterative recovery of bandlimited functions from point samples: the
//! Voronoi approximation-operator iteration and the relaxed frame algorithm,
//! plus Plancherel-Polya frame bounds of a sampling set.
//!
//! Everything runs in orthonormal coordinates `x_i = c_i ‖u_i‖`, where the
//! L2 norm of a function is the Euclidean norm of its coordinates.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{voronoi_partition, Lattice};
use crate::spaces::{basis_norms_sq, basis_values, HarmonicCoefficients};

/// Consecutive non-contracting steps that count as divergence.
pub const DIVERGENCE_STEPS: usize = 3;

/// Smallest admissible lower frame bound.
pub const RANK_TOL: f64 = 1e-12;

/// Record of one iterative reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// `‖f - f_m‖` per step when the true function is known, otherwise the
    /// update norms.
    pub errors: Vec<f64>,
    /// `‖f_m - f_{m-1}‖` per step.
    pub updates: Vec<f64>,
    /// Fitted contraction factor: geometric mean of the step ratios above the
    /// rounding floor.
    pub ratio: f64,
    /// A priori contraction bound, when one is known.
    pub bound: Option<f64>,
    pub steps: usize,
    pub converged: bool,
}

impl IterationTrace {
    /// `e_{m+1} / e_m` for consecutive recorded errors.
    pub fn step_ratios(&self) -> Vec<f64> {
        self.errors
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    /// Number of leading errors that sit above the rounding floor.
    pub fn pre_floor_len(&self) -> usize {
        let Some(first) = self.errors.first() else {
            return 0;
        };
        let floor = first * 1e-12;
        self.errors.iter().take_while(|e| **e > floor).count()
    }
}

fn fitted_ratio(errors: &[f64]) -> f64 {
    let first = match errors.first() {
        Some(e) if *e > 0.0 => *e,
        _ => return 0.0,
    };
    let n = errors.iter().take_while(|e| **e > first * 1e-12).count();
    if n < 2 {
        return 0.0;
    }
    (errors[n - 1] / first).powf(1.0 / (n - 1) as f64)
}

/// `Φ` with rows `e(x_ν)`, the orthonormal basis of `E_ω` at each lattice point.
fn sampling_matrix(lattice: &Lattice, omega: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let norms: Vec<f64> = basis_norms_sq(lattice.manifold(), omega).iter().map(|n| n.sqrt()).collect();
    let rows = lattice
        .points()
        .par_iter()
        .map(|p| {
            let mut u = basis_values(lattice.manifold(), omega, p)?;
            for (u, n) in u.iter_mut().zip(&norms) {
                *u /= n;
            }
            Ok(u)
        })
        .collect::<Result<Vec<_>>>()?;
    let d = norms.len();
    Ok((DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]), norms))
}

fn to_coefficients(lattice: &Lattice, omega: f64, x: &DVector<f64>, norms: &[f64]) -> Result<HarmonicCoefficients> {
    let c: Vec<f64> = x.iter().zip(norms).map(|(x, n)| x / n).collect();
    HarmonicCoefficients::from_vector(lattice.manifold(), omega, &c)
}

fn to_orthonormal(f: &HarmonicCoefficients, omega: f64, norms: &[f64]) -> Result<DVector<f64>> {
    let p = crate::spaces::project_bandlimit(f, omega);
    let full = HarmonicCoefficients::from_entries(f.manifold(), omega, p.entries())?;
    Ok(DVector::from_iterator(
        norms.len(),
        full.to_vector().iter().zip(norms).map(|(c, n)| c * n),
    ))
}

fn check_samples(lattice: &Lattice, samples: &[f64]) -> Result<()> {
    if samples.len() != lattice.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples for {} lattice points",
            samples.len(),
            lattice.len()
        )));
    }
    Ok(())
}

/// `P_ω ∘ V`: nearest-neighbor step function projected onto `E_ω`.
#[derive(Debug, Clone)]
pub struct VoronoiOperator {
    omega: f64,
    /// `D x N`; column `ν` holds `∫_{cell ν} e_i`.
    matrix: DMatrix<f64>,
    sampling: DMatrix<f64>,
    norms: Vec<f64>,
}

impl VoronoiOperator {
    pub fn new(lattice: &Lattice, omega: f64) -> Result<Self> {
        let part = voronoi_partition(lattice)?;
        let (sampling, norms) = sampling_matrix(lattice, omega)?;
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); lattice.len()];
        for (g, o) in part.owner.iter().enumerate() {
            cells[*o].push(g);
        }
        let m = lattice.manifold();
        let cols = cells
            .par_iter()
            .map(|cell| {
                let mut col = vec![0.0; norms.len()];
                for &g in cell {
                    let u = basis_values(m, omega, &part.grid_points[g])?;
                    let w = part.grid_weights[g];
                    for ((c, u), n) in col.iter_mut().zip(u).zip(&norms) {
                        *c += w * u / n;
                    }
                }
                Ok(col)
            })
            .collect::<Result<Vec<_>>>()?;
        let matrix = DMatrix::from_fn(norms.len(), lattice.len(), |i, j| cols[j][i]);
        Ok(VoronoiOperator {
            omega,
            matrix,
            sampling,
            norms,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn apply(&self, samples: &DVector<f64>) -> DVector<f64> {
        &self.matrix * samples
    }
}

/// `A f = P_ω V f` from samples of `f` on the lattice.
pub fn voronoi_approximation(samples: &[f64], lattice: &Lattice, omega: f64) -> Result<HarmonicCoefficients> {
    check_samples(lattice, samples)?;
    let op = VoronoiOperator::new(lattice, omega)?;
    let x = op.apply(&DVector::from_column_slice(samples));
    to_coefficients(lattice, omega, &x, &op.norms)
}

/// Stopping and diagnostic settings shared by both iterations.
#[derive(Debug, Clone, Copy)]
pub struct IterationSettings<'a> {
    /// Target L2 error.
    pub tol: f64,
    pub max_steps: usize,
    /// True function, used only to record errors.
    pub truth: Option<&'a HarmonicCoefficients>,
}

impl Default for IterationSettings<'_> {
    fn default() -> Self {
        IterationSettings {
            tol: 1e-9,
            max_steps: 200,
            truth: None,
        }
    }
}

/// Runs `x_{m+1} = x_m + step(x_m)` until the predicted remaining error is
/// below `tol`, watching for divergence.
fn iterate(
    d: usize,
    settings: &IterationSettings,
    truth: Option<DVector<f64>>,
    bound: Option<f64>,
    step: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> Result<(DVector<f64>, IterationTrace)> {
    let mut x = DVector::zeros(d);
    let mut errors = Vec::new();
    let mut updates: Vec<f64> = Vec::new();
    let mut rising = 0;
    let mut converged = false;
    let finish = |errors: Vec<f64>, updates: Vec<f64>, converged| {
        let ratio = fitted_ratio(&errors);
        IterationTrace {
            steps: updates.len(),
            errors,
            updates,
            ratio,
            bound,
            converged,
        }
    };
    for _ in 0..settings.max_steps {
        let dx = step(&x);
        x += &dx;
        let u = dx.norm();
        let r = updates.last().map(|p| if *p > 0.0 { u / p } else { 0.0 });
        updates.push(u);
        errors.push(match &truth {
            Some(t) => (&x - t).norm(),
            None => u,
        });
        if !u.is_finite() || r.is_some_and(|r| r >= 1.0) {
            rising += 1;
            if rising >= DIVERGENCE_STEPS || !u.is_finite() {
                return Err(Error::Divergence {
                    trace: Box::new(finish(errors, updates, false)),
                });
            }
        } else {
            rising = 0;
        }
        // remaining error of a contraction with factor r is about u r / (1 - r)
        let remaining = match r {
            Some(r) if r < 1.0 => u * r / (1.0 - r),
            _ => u,
        };
        if remaining <= settings.tol {
            converged = true;
            break;
        }
    }
    Ok((x, finish(errors, updates, converged)))
}

/// Voronoi iteration `f_{m+1} = f_m + A(f - f_m)`, with the samples of
/// `f - f_m` obtained by evaluating `f_m` on the lattice. Lattices with fewer
/// points than `dim E_ω` are rejected as rank deficient.
pub fn iterative_reconstruct(
    samples: &[f64],
    lattice: &Lattice,
    omega: f64,
    settings: &IterationSettings,
) -> Result<(HarmonicCoefficients, IterationTrace)> {
    check_samples(lattice, samples)?;
    let op = VoronoiOperator::new(lattice, omega)?;
    // fewer samples than dimensions: the iteration would settle on some
    // interpolant rather than diverge, so refuse up front
    if lattice.len() < op.norms.len() {
        return Err(Error::RankDeficient { lower: 0.0 });
    }
    let v = DVector::from_column_slice(samples);
    let truth = settings.truth.map(|t| to_orthonormal(t, omega, &op.norms)).transpose()?;
    let (x, trace) = iterate(op.norms.len(), settings, truth, None, |x| {
        op.apply(&(&v - &op.sampling * x))
    })?;
    Ok((to_coefficients(lattice, omega, &x, &op.norms)?, trace))
}

/// Extreme eigenvalues `(A, B)` of `ρ^n Σ_ν e(x_ν) e(x_ν)^T` on `E_ω`.
pub fn pp_frame_bounds(lattice: &Lattice, omega: f64) -> Result<(f64, f64)> {
    let (phi, _) = sampling_matrix(lattice, omega)?;
    frame_gram_bounds(&frame_gram(&phi, lattice))
}

fn frame_gram(phi: &DMatrix<f64>, lattice: &Lattice) -> DMatrix<f64> {
    phi.transpose() * phi * lattice.rho().powi(lattice.manifold().dim() as i32)
}

fn frame_gram_bounds(g: &DMatrix<f64>) -> Result<(f64, f64)> {
    let ev = g.clone().symmetric_eigen().eigenvalues;
    let (a, b) = (ev.min(), ev.max());
    if !(a > RANK_TOL) {
        return Err(Error::RankDeficient { lower: a });
    }
    Ok((a, b))
}

/// Frame algorithm `f_m = f_{m-1} + γ S(f - f_{m-1})` with
/// `S g = ρ^n Σ_ν <g, ψ_ν> ψ_ν` and `ψ_ν = P_ω δ_{x_ν}`.
///
/// `projections[ν] = <f, ψ_ν> = f(x_ν)`. `gamma` defaults to `2/(A+B)`.
pub fn frame_algorithm(
    projections: &[f64],
    lattice: &Lattice,
    omega: f64,
    gamma: Option<f64>,
    settings: &IterationSettings,
) -> Result<(HarmonicCoefficients, IterationTrace)> {
    check_samples(lattice, projections)?;
    let (phi, norms) = sampling_matrix(lattice, omega)?;
    let g = frame_gram(&phi, lattice);
    let (a, b) = frame_gram_bounds(&g)?;
    let gamma = gamma.unwrap_or(2.0 / (a + b));
    if !(gamma > 0.0 && gamma < 2.0 / b) {
        return Err(Error::InvalidParameter(format!(
            "relaxation {gamma} outside (0, {})",
            2.0 / b
        )));
    }
    let eta = (1.0 - gamma * a).abs().max((1.0 - gamma * b).abs());
    let sv = phi.transpose() * DVector::from_column_slice(projections) * lattice.rho().powi(lattice.manifold().dim() as i32);
    let truth = settings.truth.map(|t| to_orthonormal(t, omega, &norms)).transpose()?;
    let (x, trace) = iterate(norms.len(), settings, truth, Some(eta), |x| (&sv - &g * x) * gamma)?;
    Ok((to_coefficients(lattice, omega, &x, &norms)?, trace))
}
