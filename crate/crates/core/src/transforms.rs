//! Funk-Radon, hemispherical and SO(3) Radon transforms as spectral
//! multipliers, their inverses on the admissible subspaces, and direct
//! quadrature evaluations used as independent oracles.
//!
//! Conventions (normalized measures on circles, spheres and SO(2)):
//!
//! * Funk-Radon: `Rf(θ)` is the mean of `f` over the great circle `θ^⊥`.
//!   Degree `k` is multiplied by `μ_k = P_k(0)`.
//! * Hemispherical: `Tf(θ)` integrates `f` over `{x : x.θ >= 0}` against the
//!   normalized sphere measure, so constants map to `1/2`.
//! * SO(3) Radon: `Rf(x, y)` is the mean of `f` over `{g : g y = x}` and maps
//!   `T_k^{ij}` to `κ_k Y_k^i(x) Y_k^j(y)` with `κ_k = 1/(2k+1)`.
//!
//! Absolute constants are calibrated by quadrature at the lowest admissible
//! degree; the closed-form ratios `r_k/r_0`, `m_k/m_1` then fix every other
//! entry.

use std::f64::consts::PI;
use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Manifold, Result};
use crate::geometry::GreatCircle;
use crate::harmonics::{sh_offset, sph_harmonics, RotationPoint, SpherePoint};
use crate::quadrature::gauss_legendre;
use crate::spaces::HarmonicCoefficients;

/// Default largest degree held in a multiplier table.
pub const TABLE_KMAX: usize = 200;

/// Coefficients below this are treated as absent when checking parity.
pub const PARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    FunkRadon,
    Hemispherical,
    SO3Radon,
}

/// Per-degree multipliers of one transform.
#[derive(Debug, Clone)]
pub struct MultiplierTable {
    pub kind: TransformKind,
    /// Sphere dimension the closed forms were evaluated for.
    pub n: usize,
    pub entries: Vec<f64>,
    pub kernel_degrees: Vec<usize>,
}

/// `ln|Γ(a)/Γ(b)|` for positive arguments.
fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    ln_gamma(a) - ln_gamma(b)
}

/// Uncalibrated Funk-Radon coefficient `r_k` on S^n.
pub fn funk_radon_raw(k: usize, n: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * ln_gamma_ratio((k as f64 + 1.0) / 2.0, (k + n) as f64 / 2.0).exp()
}

/// Uncalibrated hemispherical coefficient `m_k` on S^n (odd `k` only).
pub fn hemispherical_raw(k: usize, n: usize) -> f64 {
    if k.is_multiple_of(2) {
        return 0.0;
    }
    let sign = if ((k - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * ln_gamma_ratio(k as f64 / 2.0, (k + n + 1) as f64 / 2.0).exp()
}

impl MultiplierTable {
    /// Funk-Radon multipliers on S², calibrated by the circle trapezoid rule.
    pub fn funk_radon(kmax: usize) -> Self {
        let c = SpherePoint::new(0.3, -0.4, 0.8).expect("nonzero");
        let mu0 = funk_radon_geometric(&|_| 1.0, &GreatCircle::new(c), 64).expect("q >= 8");
        let r0 = funk_radon_raw(0, 2);
        let entries: Vec<f64> = (0..=kmax).map(|k| mu0 * funk_radon_raw(k, 2) / r0).collect();
        MultiplierTable {
            kind: TransformKind::FunkRadon,
            n: 2,
            kernel_degrees: (0..=kmax).filter(|k| k % 2 == 1).collect(),
            entries,
        }
    }

    /// Hemispherical multipliers on S². `μ_0` and `μ_1` come from hemisphere
    /// quadrature; odd degrees follow `m_k/m_1`.
    pub fn hemispherical(kmax: usize) -> Self {
        let north = SpherePoint::north();
        let mu0 = hemispherical_geometric(&|_| 1.0, &north, 32, 64);
        // Y_1 of order 0 is sqrt(3) z
        let mu1 = hemispherical_geometric(&|p| 3f64.sqrt() * p.z(), &north, 32, 64) / 3f64.sqrt();
        let m1 = hemispherical_raw(1, 2);
        let entries: Vec<f64> = (0..=kmax)
            .map(|k| match k {
                0 => mu0,
                _ if k % 2 == 0 => 0.0,
                _ => mu1 * hemispherical_raw(k, 2) / m1,
            })
            .collect();
        MultiplierTable {
            kind: TransformKind::Hemispherical,
            n: 2,
            kernel_degrees: (2..=kmax).filter(|k| k % 2 == 0).collect(),
            entries,
        }
    }

    /// SO(3) Radon constants `κ_k = κ_0/(2k+1)` with `κ_0` from the circle mean
    /// of the constant function.
    pub fn so3_radon(kmax: usize) -> Self {
        let x = SpherePoint::new(0.2, 0.5, -0.3).expect("nonzero");
        let y = SpherePoint::new(-0.6, 0.1, 0.4).expect("nonzero");
        let kappa0 = so3_radon_geometric(&|_| 1.0, &x, &y, 64).expect("q >= 8");
        MultiplierTable {
            kind: TransformKind::SO3Radon,
            n: 2,
            kernel_degrees: Vec::new(),
            entries: (0..=kmax).map(|k| kappa0 / (2 * k + 1) as f64).collect(),
        }
    }

    pub fn kmax(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn get(&self, k: usize) -> Result<f64> {
        self.entries.get(k).copied().ok_or(Error::BeyondTable {
            degree: k,
            max: self.kmax(),
        })
    }
}

/// Cached default tables.
pub fn funk_radon_table() -> &'static MultiplierTable {
    static T: OnceLock<MultiplierTable> = OnceLock::new();
    T.get_or_init(|| MultiplierTable::funk_radon(TABLE_KMAX))
}

pub fn hemispherical_table() -> &'static MultiplierTable {
    static T: OnceLock<MultiplierTable> = OnceLock::new();
    T.get_or_init(|| MultiplierTable::hemispherical(TABLE_KMAX))
}

pub fn so3_radon_table() -> &'static MultiplierTable {
    static T: OnceLock<MultiplierTable> = OnceLock::new();
    T.get_or_init(|| MultiplierTable::so3_radon(TABLE_KMAX))
}

/// Funk-Radon multiplier of degree `k` (`0` beyond the table for odd `k`).
pub fn funk_radon_multiplier(k: usize) -> Result<f64> {
    if k % 2 == 1 {
        return Ok(0.0);
    }
    funk_radon_table().get(k)
}

pub fn hemispherical_multiplier(k: usize) -> Result<f64> {
    if k > 0 && k.is_multiple_of(2) {
        return Ok(0.0);
    }
    hemispherical_table().get(k)
}

pub fn so3_radon_constant(k: usize) -> Result<f64> {
    so3_radon_table().get(k)
}

fn require(c: &HarmonicCoefficients, m: Manifold) -> Result<()> {
    if c.manifold() != m {
        return Err(Error::ManifoldMismatch {
            expected: m,
            found: c.manifold(),
        });
    }
    Ok(())
}

fn block_max(b: &[f64]) -> f64 {
    b.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn scale_sphere_blocks(
    c: &HarmonicCoefficients,
    mut factor: impl FnMut(usize) -> Result<Option<f64>>,
) -> Result<HarmonicCoefficients> {
    let mut out = HarmonicCoefficients::zeros(Manifold::S2, c.omega());
    for ((k, _), b) in c.blocks() {
        if let Some(f) = factor(k)? {
            out.set_block((k, 0), b.iter().map(|v| f * v).collect())?;
        }
    }
    Ok(out)
}

/// `R f` on S²: odd degrees are annihilated.
pub fn funk_radon_forward(c: &HarmonicCoefficients) -> Result<HarmonicCoefficients> {
    require(c, Manifold::S2)?;
    scale_sphere_blocks(c, |k| {
        if k % 2 == 1 {
            Ok(None)
        } else {
            funk_radon_multiplier(k).map(Some)
        }
    })
}

/// `R^{-1}` on even functions.
pub fn funk_radon_inverse(c: &HarmonicCoefficients) -> Result<HarmonicCoefficients> {
    require(c, Manifold::S2)?;
    for ((k, _), b) in c.blocks() {
        let m = block_max(b);
        if k % 2 == 1 && m > PARITY_TOL {
            return Err(Error::NotEven { degree: k, magnitude: m });
        }
    }
    scale_sphere_blocks(c, |k| {
        if k % 2 == 1 {
            Ok(None)
        } else {
            funk_radon_multiplier(k).map(|m| Some(1.0 / m))
        }
    })
}

/// Mean of `f` over `circle` by the `q`-point trapezoid rule.
pub fn funk_radon_geometric(f: &dyn Fn(&SpherePoint) -> f64, circle: &GreatCircle, q: usize) -> Result<f64> {
    if q < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 nodes, got {q}")));
    }
    let s: f64 = (0..q)
        .map(|j| f(&circle.point(2.0 * PI * j as f64 / q as f64)))
        .sum();
    Ok(s / q as f64)
}

/// `max |μ_0 / μ_k|` over even `k <= kmax`.
pub fn funk_radon_conditioning(kmax: usize) -> Result<f64> {
    let mu0 = funk_radon_multiplier(0)?;
    let mut worst = 1.0f64;
    for k in (0..=kmax).step_by(2) {
        worst = worst.max((mu0 / funk_radon_multiplier(k)?).abs());
    }
    Ok(worst)
}

/// `T f` on S²: even degrees above zero are annihilated.
pub fn hemispherical_forward(c: &HarmonicCoefficients) -> Result<HarmonicCoefficients> {
    require(c, Manifold::S2)?;
    scale_sphere_blocks(c, |k| {
        if k > 0 && k % 2 == 0 {
            Ok(None)
        } else {
            hemispherical_multiplier(k).map(Some)
        }
    })
}

/// `T^{-1}` on odd functions. Any degree-0 content is rejected.
pub fn hemispherical_inverse(c: &HarmonicCoefficients) -> Result<HarmonicCoefficients> {
    require(c, Manifold::S2)?;
    for ((k, _), b) in c.blocks() {
        let m = block_max(b);
        if k % 2 == 0 && m > PARITY_TOL {
            return Err(Error::NotOdd { degree: k, magnitude: m });
        }
    }
    scale_sphere_blocks(c, |k| {
        if k % 2 == 0 {
            Ok(None)
        } else {
            hemispherical_multiplier(k).map(|m| Some(1.0 / m))
        }
    })
}

/// Integral of `f` over the hemisphere centred at `pole` (normalized sphere
/// measure): Gauss-Legendre in `x.pole` times a uniform rule in azimuth.
pub fn hemispherical_geometric(f: &dyn Fn(&SpherePoint) -> f64, pole: &SpherePoint, n_t: usize, n_phi: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n_t);
    let (e1, e2) = pole.tangent_frame();
    let (p, a, b) = (pole.coords(), e1.coords(), e2.coords());
    let mut s = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let t = 0.5 * (x + 1.0);
        let r = (1.0 - t * t).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
            let (sp, cp) = phi.sin_cos();
            let v = [0, 1, 2].map(|d| t * p[d] + r * (cp * a[d] + sp * b[d]));
            s += 0.5 * w * f(&SpherePoint::from_unit(v));
        }
    }
    // dσ = dt dφ / (4π); the φ rule averages, contributing 2π / n_phi
    s * 2.0 * PI / n_phi as f64 / (4.0 * PI)
}

/// `Rf` on S²×S² from coefficients on SO(3). The output lies in the
/// diagonal subspace and has bandwidth `2ω` in the product eigenvalue.
pub fn so3_radon_forward(c: &HarmonicCoefficients) -> Result<HarmonicCoefficients> {
    require(c, Manifold::SO3)?;
    let mut out = HarmonicCoefficients::zeros(Manifold::S2xS2, 2.0 * c.omega());
    for ((k, _), b) in c.blocks() {
        let kappa = so3_radon_constant(k)?;
        out.set_block((k, k), b.iter().map(|v| kappa * v).collect())?;
    }
    Ok(out)
}

/// `R^{-1}` from the diagonal subspace back to SO(3).
pub fn so3_radon_inverse(c: &HarmonicCoefficients) -> Result<HarmonicCoefficients> {
    require(c, Manifold::S2xS2)?;
    if let Some((k1, k2, magnitude)) = c.off_diagonal_violation(PARITY_TOL) {
        return Err(Error::NotDiagonal { k1, k2, magnitude });
    }
    let mut out = HarmonicCoefficients::zeros(Manifold::SO3, 0.5 * c.omega());
    for ((k1, k2), b) in c.blocks() {
        if k1 != k2 {
            continue;
        }
        let kappa = so3_radon_constant(k1)?;
        out.set_block((k1, k1), b.iter().map(|v| v / kappa).collect())?;
    }
    Ok(out)
}

/// Mean of `f` over `{g : g y = x}`, written as `x' h y'^{-1}` with `h` a
/// rotation about the z-axis, by the `q`-point trapezoid rule in `h`.
pub fn so3_radon_geometric(f: &dyn Fn(&RotationPoint) -> f64, x: &SpherePoint, y: &SpherePoint, q: usize) -> Result<f64> {
    if q < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 nodes, got {q}")));
    }
    let xp = RotationPoint::north_to(x);
    let yi = RotationPoint::north_to(y).inverse();
    let s: f64 = (0..q)
        .map(|j| {
            let h = RotationPoint::about_z(2.0 * PI * j as f64 / q as f64);
            f(&xp.compose(&h).compose(&yi))
        })
        .sum();
    Ok(s / q as f64)
}

/// Crystallographic X-ray transform `(Rf(x,y) + Rf(-x,y))/2`: the diagonal
/// blocks of odd degree cancel.
pub fn xray_crystallographic(c: &HarmonicCoefficients) -> Result<HarmonicCoefficients> {
    let r = so3_radon_forward(c)?;
    let mut out = HarmonicCoefficients::zeros(Manifold::S2xS2, r.omega());
    for ((k1, k2), b) in r.blocks() {
        if k1 % 2 == 0 {
            out.set_block((k1, k2), b.to_vec())?;
        }
    }
    Ok(out)
}

/// Applies a per-degree multiplier at a single point: `Σ_k a_k Σ_i c_k^i Y_k^i(p)`.
pub fn evaluate_with_multipliers(
    c: &HarmonicCoefficients,
    p: &SpherePoint,
    mult: impl Fn(usize) -> Result<f64>,
) -> Result<f64> {
    require(c, Manifold::S2)?;
    let kmax = c.max_degree();
    let y = sph_harmonics(kmax, p);
    let mut s = 0.0;
    for ((k, _), b) in c.blocks() {
        let a = mult(k)?;
        if a == 0.0 {
            continue;
        }
        let o = sh_offset(k);
        s += a * b.iter().zip(&y[o..o + 2 * k + 1]).map(|(u, v)| u * v).sum::<f64>();
    }
    Ok(s)
}
