//! Littlewood-Paley filter bank and the bandlimited Parseval frames built on
//! it: per-level lattices with cubature, atoms
//! `Ψ_{j,k} = √b_{j,k} Σ_i Φ(4^{-j} λ_i) e_i(x_{j,k}) e_i`, analysis, synthesis,
//! localization diagnostics and the fully discrete representation.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::discretize::{compute_cubature, product_bandwidth, Cubature};
use crate::error::{Error, Manifold, Result};
use crate::geometry::generate_lattice;
use crate::harmonics::{RotationPoint, SpherePoint};
use crate::linalg::ordered_sum;
use crate::spaces::{
    basis_eigenvalues, basis_norms_sq, basis_values, max_degree, project_bandlimit, weyl_dimension, HarmonicCoefficients,
    ManifoldPoint, BANDWIDTH_SLACK,
};

/// Levels used when none are given.
pub const DEFAULT_JMAX: usize = 3;

fn bump(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth monotone cutoff: `1` on `[0, 1]`, `0` on `[4, ∞)`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 4.0 {
        return 0.0;
    }
    let a = bump((4.0 - s) / 3.0);
    let b = bump((s - 1.0) / 3.0);
    a / (a + b)
}

/// Dyadic filters `Φ_0² = g`, `Φ_j²(λ) = g(4^{-j} λ) - g(4^{1-j} λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBank {
    pub j_max: usize,
}

impl FilterBank {
    pub fn new(j_max: usize) -> Result<Self> {
        if j_max < 1 {
            return Err(Error::InvalidParameter("J_max must be at least 1".into()));
        }
        Ok(FilterBank { j_max })
    }

    /// `Φ_j²(λ)`; defined for every `j`, not only up to `j_max`.
    pub fn phi_sq(&self, j: usize, lambda: f64) -> f64 {
        let s = lambda / 4f64.powi(j as i32);
        if j == 0 {
            smooth_step(s)
        } else {
            smooth_step(s) - smooth_step(4.0 * s)
        }
    }

    pub fn phi(&self, j: usize, lambda: f64) -> f64 {
        self.phi_sq(j, lambda).max(0.0).sqrt()
    }

    /// Open eigenvalue interval where `Φ_j` can be nonzero.
    pub fn band(&self, j: usize) -> (f64, f64) {
        let hi = 4f64.powi(j as i32 + 1);
        if j == 0 {
            (0.0, hi)
        } else {
            (hi / 16.0, hi)
        }
    }

    /// Largest eigenvalue reproduced by levels `0..=j_max`.
    pub fn coverage(&self) -> f64 {
        4f64.powi(self.j_max as i32)
    }

    /// `Σ_j Φ_j²(s)` over every level whose band reaches `s`.
    pub fn partition_sum(&self, s: f64) -> f64 {
        let mut j_top = 0;
        while 4f64.powi(j_top as i32) < s {
            j_top += 1;
        }
        (0..=j_top + 1).map(|j| self.phi_sq(j, s)).sum()
    }

    /// `max |1 - Σ_j Φ_j²(s)|` on `n` equispaced points of `[0, 4^{J+1}]`.
    pub fn partition_residual(&self, n: usize) -> f64 {
        let top = 4f64.powi(self.j_max as i32 + 1);
        (0..=n)
            .map(|i| (1.0 - self.partition_sum(top * i as f64 / n as f64)).abs())
            .fold(0.0, f64::max)
    }
}

/// One frame element `Ψ_{j,k}`, stored spectrally.
#[derive(Debug, Clone)]
pub struct Atom {
    pub level: usize,
    pub center: ManifoldPoint,
    /// Cubature weight `b_{j,k}`.
    pub weight: f64,
    pub coefficients: HarmonicCoefficients,
}

#[derive(Debug, Clone)]
pub struct FrameLevel {
    pub j: usize,
    pub cubature: Cubature,
    /// Largest eigenvalue with a nonzero filter value.
    pub band_omega: f64,
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone)]
pub struct FrameSystem {
    pub manifold: Manifold,
    pub bank: FilterBank,
    pub lattice_constant: f64,
    pub levels: Vec<FrameLevel>,
}

/// Largest eigenvalue `k(k+1)` strictly inside level `j`'s band.
fn band_top(bank: &FilterBank, j: usize) -> f64 {
    let hi = bank.band(j).1;
    let mut k = max_degree(hi);
    while k > 0 && (k * (k + 1)) as f64 >= hi {
        k -= 1;
    }
    (k * (k + 1)) as f64
}

fn atom_coefficients(
    manifold: Manifold,
    bank: &FilterBank,
    j: usize,
    omega: f64,
    center: &ManifoldPoint,
    scale: f64,
) -> Result<HarmonicCoefficients> {
    let u = basis_values(manifold, omega, center)?;
    let lam = basis_eigenvalues(manifold, omega);
    let norms = basis_norms_sq(manifold, omega);
    let v: Vec<f64> = u
        .iter()
        .zip(&lam)
        .zip(&norms)
        .map(|((u, l), n)| scale * bank.phi(j, *l) * u / n)
        .collect();
    HarmonicCoefficients::from_vector(manifold, omega, &v)
}

/// Exactness each level's cubature needs: products of two band-`j` functions.
pub fn level_exactness(manifold: Manifold, j: usize) -> f64 {
    let b = band_top(&FilterBank { j_max: j.max(1) }, j);
    product_bandwidth(b, b, manifold)
}

fn check_manifold(manifold: Manifold) -> Result<()> {
    if manifold == Manifold::S2xS2 {
        return Err(Error::InvalidParameter("frames are built on S2 and SO3".into()));
    }
    Ok(())
}

/// Builds levels `0..=j_max` with lattice radius `ρ_j = c 2^{-j}`; each level's
/// cubature is exact on products of two band-`j` functions.
pub fn build_frame(manifold: Manifold, j_max: usize, lattice_constant: f64, seed: u64) -> Result<FrameSystem> {
    check_manifold(manifold)?;
    FilterBank::new(j_max)?;
    let cubatures = (0..=j_max)
        .map(|j| {
            let rho = lattice_constant / 2f64.powi(j as i32);
            generate_lattice(manifold, rho, false, seed.wrapping_add(j as u64))
                .and_then(|l| compute_cubature(&l, level_exactness(manifold, j)))
                .map_err(|e| Error::FrameLevel {
                    level: j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_frame(lattice_constant, cubatures)
}

/// Frame from precomputed per-level cubatures, level `j` at index `j`.
pub fn assemble_frame(lattice_constant: f64, cubatures: Vec<Cubature>) -> Result<FrameSystem> {
    let manifold = cubatures
        .first()
        .map(|c| c.manifold())
        .ok_or_else(|| Error::InvalidParameter("no frame levels".into()))?;
    check_manifold(manifold)?;
    let bank = FilterBank::new(cubatures.len().saturating_sub(1))?;
    let mut levels = Vec::with_capacity(cubatures.len());
    for (j, cubature) in cubatures.into_iter().enumerate() {
        let wrap = |e: Error| Error::FrameLevel {
            level: j,
            source: Box::new(e),
        };
        if cubature.manifold() != manifold {
            return Err(wrap(Error::ManifoldMismatch {
                expected: manifold,
                found: cubature.manifold(),
            }));
        }
        let required = level_exactness(manifold, j);
        if cubature.omega_exact() + BANDWIDTH_SLACK < required {
            return Err(wrap(Error::InsufficientExactness {
                required,
                available: cubature.omega_exact(),
            }));
        }
        let band_omega = band_top(&bank, j);
        let atoms = cubature
            .points()
            .par_iter()
            .zip(cubature.weights().par_iter())
            .map(|(p, b)| {
                Ok(Atom {
                    level: j,
                    center: *p,
                    weight: *b,
                    coefficients: atom_coefficients(manifold, &bank, j, band_omega, p, b.sqrt())?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        levels.push(FrameLevel {
            j,
            cubature,
            band_omega,
            atoms,
        });
    }
    Ok(FrameSystem {
        manifold,
        bank,
        lattice_constant,
        levels,
    })
}

impl FrameSystem {
    pub fn atom_count(&self) -> usize {
        self.levels.iter().map(|l| l.atoms.len()).sum()
    }

    /// `(min, max)` of `b_{j,k} 2^{nj}` on level `j`.
    pub fn weight_bracket(&self, j: usize) -> Option<(f64, f64)> {
        let l = self.levels.get(j)?;
        let s = 2f64.powi((self.manifold.dim() * j) as i32);
        let w = l.cubature.weights();
        Some((
            w.iter().fold(f64::INFINITY, |a, b| a.min(*b)) * s,
            w.iter().fold(0.0f64, |a, b| a.max(*b)) * s,
        ))
    }

    fn top_omega(&self) -> f64 {
        self.levels.last().map_or(0.0, |l| l.band_omega)
    }
}

fn max_eigenvalue(c: &HarmonicCoefficients) -> f64 {
    c.blocks()
        .filter(|(_, b)| b.iter().any(|v| *v != 0.0))
        .map(|((k, _), _)| (k * (k + 1)) as f64)
        .fold(0.0, f64::max)
}

/// Frame coefficients `<f, Ψ_{j,k}>`, one vector per level.
pub fn frame_analyze(f: &HarmonicCoefficients, fs: &FrameSystem) -> Result<Vec<Vec<f64>>> {
    if f.manifold() != fs.manifold {
        return Err(Error::ManifoldMismatch {
            expected: fs.manifold,
            found: f.manifold(),
        });
    }
    let top = max_eigenvalue(f);
    if top > fs.bank.coverage() {
        return Err(Error::BandwidthExceeded {
            found: top,
            coverage: fs.bank.coverage(),
        });
    }
    fs.levels
        .iter()
        .map(|l| l.atoms.par_iter().map(|a| f.inner(&a.coefficients)).collect())
        .collect()
}

/// `Σ c_{j,k} Ψ_{j,k}`.
pub fn frame_synthesize(coeffs: &[Vec<f64>], fs: &FrameSystem) -> Result<HarmonicCoefficients> {
    if coeffs.len() != fs.levels.len() || coeffs.iter().zip(&fs.levels).any(|(c, l)| c.len() != l.atoms.len()) {
        return Err(Error::InvalidParameter("coefficient layout does not match the frame".into()));
    }
    let omega = fs.top_omega();
    let len = weyl_dimension(fs.manifold, omega) as usize;
    let pairs: Vec<(&Atom, f64)> = fs
        .levels
        .iter()
        .zip(coeffs)
        .flat_map(|(l, c)| l.atoms.iter().zip(c.iter().copied()))
        .collect();
    // lower-bandwidth vectors are prefixes of the full layout
    let acc = ordered_sum(&pairs, len, |(a, c), acc| {
        for (x, y) in acc.iter_mut().zip(a.coefficients.to_vector()) {
            *x += c * y;
        }
    });
    HarmonicCoefficients::from_vector(fs.manifold, omega, &acc)
}

/// Decay of one atom away from its center.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationReport {
    pub level: usize,
    pub index: usize,
    /// `|ψ_{j,k}(x_{j,k})|`.
    pub center_value: f64,
    /// Largest sampled `|ψ_{j,k}|`.
    pub max_value: f64,
    /// `(distance, max over directions of |ψ_{j,k}|)`.
    pub profile: Vec<(f64, f64)>,
    /// `(N, sup |ψ| (1 + 2^j d)^N 2^{-nj})` for `N = 2, 4, 6`.
    pub decay: Vec<(u32, f64)>,
    /// `‖Ψ_{j,k}‖`.
    pub atom_norm: f64,
}

fn geodesic_point(center: &ManifoldPoint, dir: f64, d: f64) -> ManifoldPoint {
    match center {
        ManifoldPoint::S2(c) => {
            let (e1, e2) = c.tangent_frame();
            let t = [
                dir.cos() * e1.x() + dir.sin() * e2.x(),
                dir.cos() * e1.y() + dir.sin() * e2.y(),
                dir.cos() * e1.z() + dir.sin() * e2.z(),
            ];
            ManifoldPoint::S2(SpherePoint::from_unit([
                d.cos() * c.x() + d.sin() * t[0],
                d.cos() * c.y() + d.sin() * t[1],
                d.cos() * c.z() + d.sin() * t[2],
            ]))
        }
        ManifoldPoint::SO3(g) => {
            // rotate by angle d about an axis tilted by `dir` from the z-axis
            let axis = SpherePoint::from_angles(dir.rem_euclid(PI), 2.0 * dir);
            let r = RotationPoint::north_to(&axis);
            let step = r.compose(&RotationPoint::about_z(d)).compose(&r.inverse());
            ManifoldPoint::SO3(g.compose(&step))
        }
        ManifoldPoint::S2xS2(..) => *center,
    }
}

/// Samples `|ψ_{j,k}|` along geodesics from the atom's center.
pub fn localization_profile(fs: &FrameSystem, j: usize, k: usize) -> Result<LocalizationReport> {
    let level = fs
        .levels
        .get(j)
        .ok_or_else(|| Error::InvalidParameter(format!("no level {j}")))?;
    let atom = level
        .atoms
        .get(k)
        .ok_or_else(|| Error::InvalidParameter(format!("no atom {k} on level {j}")))?;
    let psi = atom.coefficients.scale(1.0 / atom.weight.sqrt());
    let n_dist = 181;
    let n_dir = 8;
    let profile: Vec<(f64, f64)> = (0..n_dist)
        .into_par_iter()
        .map(|i| {
            let d = PI * i as f64 / (n_dist - 1) as f64;
            let mut m = 0.0f64;
            for r in 0..n_dir {
                let p = geodesic_point(&atom.center, 2.0 * PI * r as f64 / n_dir as f64, d);
                m = m.max(psi.evaluate(&p)?.abs());
            }
            Ok((d, m))
        })
        .collect::<Result<_>>()?;
    let center_value = psi.evaluate(&atom.center)?.abs();
    let max_value = profile.iter().map(|p| p.1).fold(center_value, f64::max);
    let scale = 2f64.powi(j as i32);
    let dim_scale = 2f64.powi((fs.manifold.dim() * j) as i32);
    let decay = [2u32, 4, 6]
        .iter()
        .map(|&n| {
            let c = profile
                .iter()
                .map(|(d, v)| v * (1.0 + scale * d).powi(n as i32) / dim_scale)
                .fold(0.0, f64::max);
            (n, c)
        })
        .collect();
    Ok(LocalizationReport {
        level: j,
        index: k,
        center_value,
        max_value,
        profile,
        decay,
        atom_norm: atom.coefficients.l2_norm(),
    })
}

/// Recovers `f ∈ E_ω`, `ω = 4^J - 1`, from its samples on a master cubature:
/// `f = Σ_{j<=J} Σ_k (Σ_ν μ_ν f(x_ν) Ψ_{j,k}(x_ν)) Ψ_{j,k}`.
pub fn discrete_frame_representation(
    samples: &[f64],
    master: &Cubature,
    fs: &FrameSystem,
    j: usize,
) -> Result<HarmonicCoefficients> {
    if master.manifold() != fs.manifold {
        return Err(Error::ManifoldMismatch {
            expected: fs.manifold,
            found: master.manifold(),
        });
    }
    if j > fs.bank.j_max {
        return Err(Error::InvalidParameter(format!("level {j} exceeds J_max {}", fs.bank.j_max)));
    }
    if samples.len() != master.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples for {} cubature nodes",
            samples.len(),
            master.len()
        )));
    }
    let omega = 4f64.powi(j as i32) - 1.0;
    let required = product_bandwidth(omega, fs.levels[j].band_omega, fs.manifold);
    if master.omega_exact() + BANDWIDTH_SLACK < required {
        return Err(Error::InsufficientExactness {
            required,
            available: master.omega_exact(),
        });
    }
    // q_i = Σ_ν μ_ν f(x_ν) u_i(x_ν), so that Σ_ν μ_ν f(x_ν) Ψ(x_ν) = <Ψ, q>
    let top = fs.levels[j].band_omega;
    let len = weyl_dimension(fs.manifold, top) as usize;
    let nodes: Vec<(ManifoldPoint, f64)> = master
        .points()
        .iter()
        .zip(samples.iter().zip(master.weights()))
        .map(|(p, (v, w))| (*p, v * w))
        .collect();
    // manifolds already agree, so basis evaluation cannot fail
    let q = ordered_sum(&nodes, len, |(p, c), acc| {
        if let Ok(u) = basis_values(fs.manifold, top, p) {
            for (a, u) in acc.iter_mut().zip(u) {
                *a += c * u;
            }
        }
    });
    let coeffs: Vec<Vec<f64>> = fs
        .levels
        .iter()
        .map(|l| {
            if l.j > j {
                return vec![0.0; l.atoms.len()];
            }
            l.atoms
                .par_iter()
                .map(|a| a.coefficients.to_vector().iter().zip(&q).map(|(c, q)| c * q).sum())
                .collect()
        })
        .collect();
    let full = frame_synthesize(&coeffs, fs)?;
    Ok(project_bandlimit(&full, omega))
}
