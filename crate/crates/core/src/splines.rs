//! Variational splines.
//!
//! Given functionals `F_1..F_N` and values `v`, the spline is the unique
//! minimizer of `‖(I - aL)^{t/2} s‖` subject to `F_ν(s) = v_ν`. It has the
//! spectral form `c_j = (1 + aλ_j)^{-t} Σ_ν α_ν F_ν(e_j)` (orthonormal `e_j`)
//! where `β α = v` and `β_{νμ} = Σ_j (1 + aλ_j)^{-t} F_ν(e_j) F_μ(e_j)`.
//!
//! Gram entries use addition-theorem closed forms; the series is truncated at
//! a degree chosen from an integral tail bound.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Manifold, Result};
use crate::geometry::{GreatCircle, Lattice};
use crate::harmonics::{legendre_all, sh_offset, sph_harmonics, wigner_matrices, RotationPoint, SpherePoint};
use crate::linalg::{min_eigenvalue, min_norm_solve, ordered_sum, SpdSolver};
use crate::spaces::{
    block_keys, max_degree, sobolev_norm, weyl_dimension, HarmonicCoefficients, ManifoldPoint, SobolevOrder,
    BANDWIDTH_SLACK,
};
use crate::transforms::{
    funk_radon_inverse, funk_radon_table, hemispherical_table, so3_radon_inverse, so3_radon_table, MultiplierTable,
    TABLE_KMAX,
};

/// Geometric tolerance under which two functionals count as the same.
pub const DEDUP_TOL: f64 = 1e-10;

/// Target for the truncated series tail, relative to the smallest diagonal entry.
pub const TAIL_TOL: f64 = 1e-12;

/// Above this Cholesky condition estimate the spectral solver takes over.
pub const CONDITION_LIMIT: f64 = 1e11;

/// Largest `N * dim` for which the spectral system is formed explicitly.
pub const SPECTRAL_LIMIT: usize = 40_000_000;

const KMAX_CAP_S2: usize = 1024;
const KMAX_CAP_SO3: usize = 256;
const OMEGA_CAP_S2XS2: f64 = 20_000.0;

/// One measurement functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `f(x)`.
    Point(ManifoldPoint),
    /// `f(x) + f(-x)` on S².
    SymPair(SpherePoint),
    /// Mean of `f` over a great circle of S².
    Circle(GreatCircle),
    /// Integral of `f` over the hemisphere `{x : x.p >= 0}`.
    Hemi(SpherePoint),
    /// Mean of `f ∈ L2(SO(3))` over `{g : g y = x}`.
    SO3Circle(SpherePoint, SpherePoint),
}

impl Functional {
    pub fn manifold(&self) -> Manifold {
        match self {
            Functional::Point(p) => p.manifold(),
            Functional::SymPair(_) | Functional::Circle(_) | Functional::Hemi(_) => Manifold::S2,
            Functional::SO3Circle(..) => Manifold::SO3,
        }
    }

    fn coincides(&self, other: &Functional) -> bool {
        let near = |a: &SpherePoint, b: &SpherePoint| a.distance(b) < DEDUP_TOL;
        let near_pm = |a: &SpherePoint, b: &SpherePoint| near(a, b) || near(a, &b.antipode());
        match (self, other) {
            (Functional::Point(a), Functional::Point(b)) => a.distance(b).is_some_and(|d| d < DEDUP_TOL),
            (Functional::SymPair(a), Functional::SymPair(b)) => near_pm(a, b),
            (Functional::Circle(a), Functional::Circle(b)) => near_pm(&a.pole, &b.pole),
            (Functional::Hemi(a), Functional::Hemi(b)) => near(a, b),
            // {g : g y = x} and {g : g(-y) = -x} are the same circle
            (Functional::SO3Circle(x, y), Functional::SO3Circle(u, v)) => {
                (near(x, u) && near(y, v)) || (near(x, &u.antipode()) && near(y, &v.antipode()))
            }
            _ => false,
        }
    }
}

/// Pairwise distinct functionals on one manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSet {
    manifold: Manifold,
    entries: Vec<Functional>,
}

impl FunctionalSet {
    pub fn new(manifold: Manifold, entries: Vec<Functional>) -> Result<Self> {
        for f in &entries {
            if f.manifold() != manifold {
                return Err(Error::ManifoldMismatch {
                    expected: manifold,
                    found: f.manifold(),
                });
            }
        }
        let dup = (0..entries.len())
            .into_par_iter()
            .find_map_first(|i| (0..i).find(|&j| entries[i].coincides(&entries[j])).map(|j| (j, i)));
        if let Some((j, i)) = dup {
            return Err(Error::InvalidParameter(format!("functionals {j} and {i} coincide")));
        }
        Ok(FunctionalSet { manifold, entries })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn entries(&self) -> &[Functional] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Where the spectral series is cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Eigenvalue bandwidth kept.
    pub omega: f64,
    /// Largest single-factor degree kept.
    pub k_max: usize,
    /// Tail bound of the dropped terms relative to the smallest diagonal entry.
    pub tail: f64,
}

/// Smallest admissible smoothness (exclusive): half the manifold dimension.
pub fn min_smoothness(manifold: Manifold) -> f64 {
    manifold.dim() as f64 / 2.0
}

fn check_smoothness(manifold: Manifold, t: f64) -> Result<()> {
    let min_t = min_smoothness(manifold);
    if !(t > min_t) {
        return Err(Error::SmoothnessTooSmall { t, min_t });
    }
    Ok(())
}

/// Truncation for a functional set: the degree doubles until the integral
/// tail bound drops below [`TAIL_TOL`], then grows until the truncated space
/// has at least `2N` dimensions.
pub fn choose_truncation(set: &FunctionalSet, t: f64) -> Result<Truncation> {
    let m = set.manifold;
    check_smoothness(m, t)?;
    let n = set.len();
    match m {
        Manifold::S2 => {
            let sym = set.entries.iter().any(|f| matches!(f, Functional::SymPair(_)));
            let a2 = if sym { 4.0 } else { 1.0 };
            let d0 = set
                .entries
                .iter()
                .map(|f| match f {
                    Functional::SymPair(_) => 4.0,
                    Functional::Hemi(_) => 0.25,
                    _ => 1.0,
                })
                .fold(f64::INFINITY, f64::min)
                .min(4.0);
            let tail = |k: usize| 2.0 * a2 * (k as f64 + 0.5).powf(2.0 - 2.0 * t) / (2.0 * t - 2.0) / d0;
            let mut k = 8;
            while tail(k) > TAIL_TOL && k < KMAX_CAP_S2 {
                k *= 2;
            }
            k = k.min(KMAX_CAP_S2);
            while (k + 1) * (k + 1) < 2 * n {
                k += 1;
            }
            Ok(Truncation {
                omega: (k * (k + 1)) as f64,
                k_max: k,
                tail: tail(k),
            })
        }
        Manifold::SO3 => {
            let points = set.entries.iter().any(|f| matches!(f, Functional::Point(_)));
            let circles = set.entries.iter().any(|f| matches!(f, Functional::SO3Circle(..)));
            let tail = |k: usize| {
                let x = (2 * k + 1) as f64;
                let mut s = 0.0;
                if points {
                    s += x.powf(3.0 - 2.0 * t) / (2.0 * (2.0 * t - 3.0));
                }
                if circles {
                    s += x.powf(2.0 - 2.0 * t) / (2.0 * (2.0 * t - 2.0));
                }
                s
            };
            let mut k = 4;
            while tail(k) > TAIL_TOL && k < KMAX_CAP_SO3 {
                k *= 2;
            }
            k = k.min(KMAX_CAP_SO3);
            while (k + 1) * (2 * k + 1) * (2 * k + 3) / 3 < 2 * n {
                k += 1;
            }
            Ok(Truncation {
                omega: (k * (k + 1)) as f64,
                k_max: k,
                tail: tail(k),
            })
        }
        Manifold::S2xS2 => {
            let tail = |w: f64| 2f64.powf(-t) * w.powf(2.0 - t) / (t - 2.0);
            let mut w = 8.0;
            while tail(w) > TAIL_TOL && w < OMEGA_CAP_S2XS2 {
                w *= 2.0;
            }
            w = w.min(OMEGA_CAP_S2XS2);
            while (weyl_dimension(m, w) as usize) < 2 * n {
                w += 2.0;
            }
            Ok(Truncation {
                omega: w,
                k_max: max_degree(w),
                tail: tail(w),
            })
        }
    }
}

/// Per-degree multipliers needed by functionals up to degree `kmax`.
struct Multipliers {
    fr: Vec<f64>,
    hemi: Vec<f64>,
    kappa: Vec<f64>,
}

impl Multipliers {
    fn new(kmax: usize) -> Self {
        if kmax <= TABLE_KMAX {
            Multipliers {
                fr: funk_radon_table().entries[..=kmax].to_vec(),
                hemi: hemispherical_table().entries[..=kmax].to_vec(),
                kappa: so3_radon_table().entries[..=kmax].to_vec(),
            }
        } else {
            Multipliers {
                fr: MultiplierTable::funk_radon(kmax).entries,
                hemi: MultiplierTable::hemispherical(kmax).entries,
                kappa: MultiplierTable::so3_radon(kmax).entries,
            }
        }
    }

    /// `F(Y_k^i) = a_k Y_k^i(p)` for the S² functionals.
    fn sphere_factor(&self, f: &Functional, k: usize) -> f64 {
        match f {
            Functional::SymPair(_) => {
                if k.is_multiple_of(2) {
                    2.0
                } else {
                    0.0
                }
            }
            Functional::Circle(_) => self.fr[k],
            Functional::Hemi(_) => self.hemi[k],
            _ => 1.0,
        }
    }
}

fn sphere_anchor(f: &Functional) -> SpherePoint {
    match f {
        Functional::Point(ManifoldPoint::S2(p)) | Functional::SymPair(p) | Functional::Hemi(p) => *p,
        Functional::Circle(c) => c.pole,
        _ => unreachable!("not an S² functional"),
    }
}

/// The reproducing kernel `Σ_j w_j F(e_j) G(e_j)` restricted to an eigenvalue band.
struct Kernel {
    manifold: Manifold,
    kmax: usize,
    w: Vec<f64>,
    w2: Vec<Vec<f64>>,
    /// S² per-kind factors `a_k`, indexed by kind.
    factors: [Vec<f64>; 4],
}

impl Kernel {
    /// Weights `(1 + aλ)^{-t}` for `lo < λ <= hi`.
    fn new(manifold: Manifold, t: f64, hi: f64, lo: Option<f64>) -> Self {
        let kmax = max_degree(hi);
        let a = manifold.sobolev_scale();
        let inside = |lam: f64| lam <= hi + BANDWIDTH_SLACK && lo.is_none_or(|l| lam > l + BANDWIDTH_SLACK);
        let lam = |k: usize| (k * (k + 1)) as f64;
        let mut w = Vec::new();
        let mut w2 = Vec::new();
        if manifold == Manifold::S2xS2 {
            w2 = (0..=kmax)
                .map(|k1| {
                    (0..=kmax)
                        .map(|k2| {
                            let l = lam(k1) + lam(k2);
                            if inside(l) {
                                (1.0 + a * l).powf(-t)
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
        } else {
            w = (0..=kmax)
                .map(|k| if inside(lam(k)) { (1.0 + a * lam(k)).powf(-t) } else { 0.0 })
                .collect();
        }
        let factors = if manifold == Manifold::S2 {
            let m = Multipliers::new(kmax);
            [
                vec![1.0; kmax + 1],
                (0..=kmax).map(|k| if k % 2 == 0 { 2.0 } else { 0.0 }).collect(),
                m.fr,
                m.hemi,
            ]
        } else {
            Default::default()
        };
        Kernel {
            manifold,
            kmax,
            w,
            w2,
            factors,
        }
    }

    fn sphere_factors(&self, f: &Functional) -> &[f64] {
        match f {
            Functional::SymPair(_) => &self.factors[1],
            Functional::Circle(_) => &self.factors[2],
            Functional::Hemi(_) => &self.factors[3],
            _ => &self.factors[0],
        }
    }

    /// `Σ_k w_k c_k (2k+1) P_k(u)`.
    fn legendre_series(&self, u: f64, c: impl Fn(usize) -> f64) -> f64 {
        let u = u.clamp(-1.0, 1.0);
        let (mut p0, mut p1) = (1.0, u);
        let mut s = self.w[0] * c(0);
        for k in 1..=self.kmax {
            if k > 1 {
                let p2 = ((2 * k - 1) as f64 * u * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            s += self.w[k] * c(k) * (2 * k + 1) as f64 * p1;
        }
        s
    }

    fn entry(&self, a: &Functional, b: &Functional) -> f64 {
        match self.manifold {
            Manifold::S2 => {
                let (fa, fb) = (self.sphere_factors(a), self.sphere_factors(b));
                let u = sphere_anchor(a).dot(&sphere_anchor(b));
                self.legendre_series(u, |k| fa[k] * fb[k])
            }
            Manifold::SO3 => match (a, b) {
                (Functional::Point(ManifoldPoint::SO3(g)), Functional::Point(ManifoldPoint::SO3(h))) => {
                    self.character_series(g, h)
                }
                (Functional::Point(ManifoldPoint::SO3(g)), Functional::SO3Circle(x, y))
                | (Functional::SO3Circle(x, y), Functional::Point(ManifoldPoint::SO3(g))) => {
                    self.legendre_series(x.dot(&g.apply(y)), |_| 1.0)
                }
                (Functional::SO3Circle(x, y), Functional::SO3Circle(u, v)) => {
                    let (pa, pb) = (legendre_all(self.kmax, x.dot(u).clamp(-1.0, 1.0)), legendre_all(self.kmax, y.dot(v).clamp(-1.0, 1.0)));
                    (0..=self.kmax)
                        .map(|k| self.w[k] * (2 * k + 1) as f64 * pa[k] * pb[k])
                        .sum()
                }
                _ => unreachable!("not an SO(3) functional"),
            },
            Manifold::S2xS2 => match (a, b) {
                (Functional::Point(ManifoldPoint::S2xS2(x, y)), Functional::Point(ManifoldPoint::S2xS2(u, v))) => {
                    let pa = legendre_all(self.kmax, x.dot(u).clamp(-1.0, 1.0));
                    let pb = legendre_all(self.kmax, y.dot(v).clamp(-1.0, 1.0));
                    let mut s = 0.0;
                    for (k1, row) in self.w2.iter().enumerate() {
                        let f1 = (2 * k1 + 1) as f64 * pa[k1];
                        let mut r = 0.0;
                        for (k2, w) in row.iter().enumerate() {
                            if *w == 0.0 {
                                break;
                            }
                            r += w * (2 * k2 + 1) as f64 * pb[k2];
                        }
                        s += f1 * r;
                    }
                    s
                }
                _ => unreachable!("not an S²×S² functional"),
            },
        }
    }

    /// `Σ_k w_k (2k+1) χ_k(g h^{-1})` with `χ_k(θ) = 1 + 2 Σ_{m<=k} cos(mθ)`.
    fn character_series(&self, g: &RotationPoint, h: &RotationPoint) -> f64 {
        let tr = g.matrix().component_mul(h.matrix()).sum();
        let c = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0);
        let (mut t0, mut t1) = (1.0, c);
        let mut chi = 1.0;
        let mut s = self.w[0];
        for k in 1..=self.kmax {
            if k > 1 {
                let t2 = 2.0 * c * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            chi += 2.0 * t1;
            s += self.w[k] * (2 * k + 1) as f64 * chi;
        }
        s
    }
}

/// Symmetric Gram matrix `β` truncated at eigenvalue `omega`.
pub fn assemble_gram(set: &FunctionalSet, t: f64, omega: f64) -> Result<DMatrix<f64>> {
    check_smoothness(set.manifold, t)?;
    let kernel = Kernel::new(set.manifold, t, omega, None);
    Ok(kernel_matrix(&kernel, &set.entries, &set.entries, true))
}

fn kernel_matrix(kernel: &Kernel, rows: &[Functional], cols: &[Functional], symmetric: bool) -> DMatrix<f64> {
    let data: Vec<Vec<f64>> = rows
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let start = if symmetric { i } else { 0 };
            cols[start..].iter().map(|b| kernel.entry(a, b)).collect()
        })
        .collect();
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (i, row) in data.iter().enumerate() {
        let start = if symmetric { i } else { 0 };
        for (j, v) in row.iter().enumerate() {
            m[(i, start + j)] = *v;
            if symmetric {
                m[(start + j, i)] = *v;
            }
        }
    }
    m
}

/// Harmonic values at the points a functional touches.
struct Features {
    f: Functional,
    ya: Vec<f64>,
    yb: Vec<f64>,
    wig: Vec<DMatrix<f64>>,
}

impl Features {
    fn new(f: &Functional, kmax: usize) -> Self {
        let (mut ya, mut yb, mut wig) = (Vec::new(), Vec::new(), Vec::new());
        match f {
            Functional::Point(ManifoldPoint::S2(p)) | Functional::SymPair(p) | Functional::Hemi(p) => {
                ya = sph_harmonics(kmax, p)
            }
            Functional::Circle(c) => ya = sph_harmonics(kmax, &c.pole),
            Functional::Point(ManifoldPoint::SO3(g)) => wig = wigner_matrices(kmax, g),
            Functional::SO3Circle(x, y) | Functional::Point(ManifoldPoint::S2xS2(x, y)) => {
                ya = sph_harmonics(kmax, x);
                yb = sph_harmonics(kmax, y);
            }
        }
        Features { f: *f, ya, yb, wig }
    }

    /// `F(u)` for every basis function `u` of one block, in block layout.
    fn block(&self, key: (usize, usize), m: &Multipliers, out: &mut Vec<f64>) {
        out.clear();
        let (k1, k2) = key;
        let ya = |k: usize| &self.ya[sh_offset(k)..sh_offset(k) + 2 * k + 1];
        let yb = |k: usize| &self.yb[sh_offset(k)..sh_offset(k) + 2 * k + 1];
        match &self.f {
            Functional::Point(ManifoldPoint::SO3(_)) => {
                let d = &self.wig[k1];
                for i in 0..d.nrows() {
                    for j in 0..d.ncols() {
                        out.push(d[(i, j)]);
                    }
                }
            }
            Functional::SO3Circle(..) => {
                let kap = m.kappa[k1];
                for a in ya(k1) {
                    out.extend(yb(k1).iter().map(|b| kap * a * b));
                }
            }
            Functional::Point(ManifoldPoint::S2xS2(..)) => {
                for a in ya(k1) {
                    out.extend(yb(k2).iter().map(|b| a * b));
                }
            }
            f => {
                let s = m.sphere_factor(f, k1);
                out.extend(ya(k1).iter().map(|y| s * y));
            }
        }
    }
}

fn block_norm_sq(manifold: Manifold, key: (usize, usize)) -> f64 {
    match manifold {
        Manifold::SO3 => 1.0 / (2 * key.0 + 1) as f64,
        _ => 1.0,
    }
}

fn block_lambda(manifold: Manifold, key: (usize, usize)) -> f64 {
    let lam = |k: usize| (k * (k + 1)) as f64;
    match manifold {
        Manifold::S2xS2 => lam(key.0) + lam(key.1),
        _ => lam(key.0),
    }
}

fn key_degree(key: (usize, usize)) -> usize {
    key.0.max(key.1)
}

/// `F(c)` computed exactly from the coefficients.
pub fn functional_apply(f: &Functional, c: &HarmonicCoefficients) -> Result<f64> {
    if f.manifold() != c.manifold() {
        return Err(Error::ManifoldMismatch {
            expected: c.manifold(),
            found: f.manifold(),
        });
    }
    let kmax = c.blocks().map(|(k, _)| key_degree(k)).max().unwrap_or(0);
    let feat = Features::new(f, kmax);
    let m = Multipliers::new(kmax);
    let mut buf = Vec::new();
    let mut s = 0.0;
    for (key, b) in c.blocks() {
        feat.block(key, &m, &mut buf);
        s += b.iter().zip(&buf).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(s)
}

/// `Σ_ν α_ν F_ν(u)` scaled by `(1 + aλ)^{-t}/‖u‖²`, over the selected blocks.
fn synthesize_coefficients(
    set: &FunctionalSet,
    alpha: &[f64],
    t: f64,
    keys: &[(usize, usize)],
    omega: f64,
) -> Result<HarmonicCoefficients> {
    let manifold = set.manifold;
    let kmax = keys.iter().map(|k| key_degree(*k)).max().unwrap_or(0);
    let m = Multipliers::new(kmax);
    let sizes: Vec<usize> = keys
        .iter()
        .map(|&(a, b)| match manifold {
            Manifold::S2 => 2 * a + 1,
            _ => (2 * a + 1) * (2 * b + 1),
        })
        .collect();
    let total: usize = sizes.iter().sum();
    let pairs: Vec<(&Functional, f64)> = set.entries.iter().zip(alpha.iter().copied()).collect();
    let acc = ordered_sum(&pairs, total, |(f, a), acc| {
        let feat = Features::new(f, kmax);
        let mut buf = Vec::new();
        let mut o = 0;
        for (key, n) in keys.iter().zip(&sizes) {
            feat.block(*key, &m, &mut buf);
            for (x, y) in acc[o..o + n].iter_mut().zip(&buf) {
                *x += a * y;
            }
            o += n;
        }
    });
    let order = SobolevOrder::for_manifold(manifold, t);
    let mut out = HarmonicCoefficients::zeros(manifold, omega);
    let mut o = 0;
    for (key, n) in keys.iter().zip(&sizes) {
        let s = 1.0 / (order.weight(block_lambda(manifold, *key)) * block_norm_sq(manifold, *key));
        out.set_block(*key, acc[o..o + n].iter().map(|v| v * s).collect())?;
        o += n;
    }
    Ok(out)
}

/// Functional values `F_ν(u_j)` scaled by `sqrt(w_j / ‖u_j‖²)`: `B B^T = β`.
fn spectral_matrix(set: &FunctionalSet, t: f64, omega: f64) -> (DMatrix<f64>, Vec<f64>) {
    let manifold = set.manifold;
    let keys = block_keys(manifold, omega);
    let kmax = max_degree(omega);
    let m = Multipliers::new(kmax);
    let order = SobolevOrder::for_manifold(manifold, t);
    let mut scale = Vec::new();
    for key in &keys {
        let s = (1.0 / (order.weight(block_lambda(manifold, *key)) * block_norm_sq(manifold, *key))).sqrt();
        let n = match manifold {
            Manifold::S2 => 2 * key.0 + 1,
            _ => (2 * key.0 + 1) * (2 * key.1 + 1),
        };
        scale.extend(std::iter::repeat_n(s, n));
    }
    let rows: Vec<Vec<f64>> = set
        .entries
        .par_iter()
        .map(|f| {
            let feat = Features::new(f, kmax);
            let mut buf = Vec::new();
            let mut row = Vec::with_capacity(scale.len());
            for key in &keys {
                feat.block(*key, &m, &mut buf);
                row.extend_from_slice(&buf);
            }
            for (x, s) in row.iter_mut().zip(&scale) {
                *x *= s;
            }
            row
        })
        .collect();
    (DMatrix::from_fn(rows.len(), scale.len(), |i, j| rows[i][j]), scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Cholesky on `β` with one refinement step.
    Cholesky,
    /// Minimum-norm QR solve of `B d = v` with `B B^T = β`; used when `β` is
    /// too ill-conditioned for the normal-equation form.
    Spectral,
}

/// A solved spline.
#[derive(Debug, Clone)]
pub struct Spline {
    pub functionals: FunctionalSet,
    pub t: f64,
    pub truncation: Truncation,
    pub alpha: DVector<f64>,
    pub gram: DMatrix<f64>,
    pub values: Vec<f64>,
    pub solver: SolverKind,
    /// Cholesky condition estimate (infinite when the factorization failed).
    pub condition: f64,
    /// `max_ν |F_ν(s) - v_ν|`.
    pub residual: f64,
    /// All coefficients up to the truncation, kept from a spectral solve.
    full: Option<HarmonicCoefficients>,
}

enum System {
    Chol(SpdSolver),
    Spectral(DMatrix<f64>, Vec<f64>),
}

impl System {
    /// `α` and, for the spectral form, the coefficient vector in `to_vector` layout.
    fn solve(&self, v: &DVector<f64>) -> Result<(DVector<f64>, Option<Vec<f64>>, f64)> {
        match self {
            System::Chol(s) => {
                let a = s.solve(v);
                let r = (s.matrix() * &a - v).amax();
                Ok((a, None, r))
            }
            System::Spectral(b, scale) => {
                let (d, y) = min_norm_solve(b, v)?;
                let r = (b * &d - v).amax();
                let c = d.iter().zip(scale).map(|(x, s)| x * s).collect();
                Ok((y, Some(c), r))
            }
        }
    }
}

/// Solves for the spline through `values`.
///
/// Cholesky is tried first. If it fails, if the condition estimate exceeds
/// [`CONDITION_LIMIT`], or if the residual misses `1e-10 ‖v‖∞`, the same
/// system is solved in its spectral form by a minimum-norm QR factorization,
/// provided it fits in [`SPECTRAL_LIMIT`].
pub fn solve_spline(set: &FunctionalSet, values: &[f64], t: f64) -> Result<Spline> {
    if values.len() != set.len() {
        return Err(Error::InvalidParameter(format!(
            "{} values for {} functionals",
            values.len(),
            set.len()
        )));
    }
    if set.is_empty() {
        return Err(Error::InvalidParameter("empty functional set".into()));
    }
    let truncation = choose_truncation(set, t)?;
    let gram = assemble_gram(set, t, truncation.omega)?;
    let v = DVector::from_column_slice(values);
    let vmax = v.amax();
    let tol = 1e-10 * vmax.max(f64::MIN_POSITIVE);

    let mut fallback_err = None;
    let mut chol_result = None;
    match SpdSolver::new(gram.clone()) {
        Ok(s) => {
            let cond = s.condition_estimate();
            let sys = System::Chol(s);
            let (alpha, _, r) = sys.solve(&v)?;
            if cond <= CONDITION_LIMIT && r <= tol {
                return Ok(Spline {
                    functionals: set.clone(),
                    t,
                    truncation,
                    alpha,
                    gram,
                    values: values.to_vec(),
                    solver: SolverKind::Cholesky,
                    condition: cond,
                    residual: r,
                    full: None,
                });
            }
            chol_result = Some((alpha, cond, r));
        }
        Err(e) => fallback_err = Some(e),
    }

    let dim = weyl_dimension(set.manifold, truncation.omega) as usize;
    if dim.saturating_mul(set.len()) <= SPECTRAL_LIMIT && dim >= set.len() {
        let (b, scale) = spectral_matrix(set, t, truncation.omega);
        let (alpha, full, r) = System::Spectral(b, scale).solve(&v)?;
        let full = HarmonicCoefficients::from_vector(set.manifold, truncation.omega, &full.unwrap_or_default())?;
        return Ok(Spline {
            functionals: set.clone(),
            t,
            truncation,
            alpha,
            gram,
            values: values.to_vec(),
            solver: SolverKind::Spectral,
            condition: chol_result.as_ref().map_or(f64::INFINITY, |c| c.1),
            residual: r,
            full: Some(full),
        });
    }
    match chol_result {
        Some((alpha, cond, r)) => Ok(Spline {
            functionals: set.clone(),
            t,
            truncation,
            alpha,
            gram,
            values: values.to_vec(),
            solver: SolverKind::Cholesky,
            condition: cond,
            residual: r,
            full: None,
        }),
        None => Err(fallback_err.unwrap_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })),
    }
}

impl Spline {
    pub fn manifold(&self) -> Manifold {
        self.functionals.manifold
    }

    pub fn k_max(&self) -> usize {
        self.truncation.k_max
    }

    fn system(&self) -> Result<System> {
        match self.solver {
            SolverKind::Cholesky => Ok(System::Chol(SpdSolver::new(self.gram.clone())?)),
            SolverKind::Spectral => {
                let (b, s) = spectral_matrix(&self.functionals, self.t, self.truncation.omega);
                Ok(System::Spectral(b, s))
            }
        }
    }

    /// `G(s)` for any functional on the same manifold.
    pub fn apply(&self, g: &Functional) -> Result<f64> {
        if g.manifold() != self.manifold() {
            return Err(Error::ManifoldMismatch {
                expected: self.manifold(),
                found: g.manifold(),
            });
        }
        if let Some(c) = &self.full {
            return functional_apply(g, c);
        }
        let kernel = Kernel::new(self.manifold(), self.t, self.truncation.omega, None);
        Ok(self
            .functionals
            .entries
            .iter()
            .zip(self.alpha.iter())
            .map(|(f, a)| a * kernel.entry(f, g))
            .sum())
    }

    /// Values at many points.
    pub fn values_at(&self, pts: &[ManifoldPoint]) -> Result<Vec<f64>> {
        pts.par_iter().map(|p| self.apply(&Functional::Point(*p))).collect()
    }

    /// Orthogonal projection onto `E_omega` (`omega` at most the truncation).
    pub fn coefficients(&self, omega: f64) -> Result<HarmonicCoefficients> {
        self.coefficients_where(omega, |_| true)
    }

    /// Projection onto the `(k, k)` blocks of `E_omega(S²×S²)`.
    pub fn delta_coefficients(&self, omega: f64) -> Result<HarmonicCoefficients> {
        if self.manifold() != Manifold::S2xS2 {
            return Err(Error::ManifoldMismatch {
                expected: Manifold::S2xS2,
                found: self.manifold(),
            });
        }
        self.coefficients_where(omega, |(a, b)| a == b)
    }

    fn coefficients_where(&self, omega: f64, keep: impl Fn((usize, usize)) -> bool) -> Result<HarmonicCoefficients> {
        if omega > self.truncation.omega + BANDWIDTH_SLACK {
            return Err(Error::BandwidthExceeded {
                found: omega,
                coverage: self.truncation.omega,
            });
        }
        let keys: Vec<(usize, usize)> = block_keys(self.manifold(), omega).into_iter().filter(|k| keep(*k)).collect();
        if let Some(c) = &self.full {
            let mut out = HarmonicCoefficients::zeros(self.manifold(), omega);
            for key in keys {
                if let Some(b) = c.product_block(key.0, key.1) {
                    out.set_block(key, b.to_vec())?;
                }
            }
            return Ok(out);
        }
        synthesize_coefficients(&self.functionals, self.alpha.as_slice(), self.t, &keys, omega)
    }

    /// `‖s‖²` in the native norm `‖(I - aL)^{t/2} s‖²`.
    pub fn native_norm_sq(&self) -> f64 {
        match &self.full {
            Some(c) => sobolev_norm(c, SobolevOrder::for_manifold(self.manifold(), self.t)).powi(2),
            None => self.alpha.dot(&(&self.gram * &self.alpha)),
        }
    }

    /// `‖s - P_ω s‖²` in L2, summed without cancellation.
    pub fn tail_energy(&self, omega: f64) -> f64 {
        if omega >= self.truncation.omega {
            return 0.0;
        }
        if let Some(c) = &self.full {
            let low = crate::spaces::project_bandlimit(c, omega).l2_norm_sq();
            return (c.l2_norm_sq() - low).max(0.0);
        }
        let m = self.manifold();
        let n = self.functionals.len();
        if (weyl_dimension(m, self.truncation.omega) as usize).saturating_mul(n) <= 400_000_000 {
            // the weights damp rounding in the coefficient sums, unlike the quadratic form below
            let keys: Vec<(usize, usize)> = block_keys(m, self.truncation.omega)
                .into_iter()
                .filter(|k| block_lambda(m, *k) > omega + BANDWIDTH_SLACK)
                .collect();
            if let Ok(c) = synthesize_coefficients(&self.functionals, self.alpha.as_slice(), self.t, &keys, self.truncation.omega) {
                return c.l2_norm_sq();
            }
        }
        // ‖s‖² in L2 is the kernel of order 2t
        let kernel = Kernel::new(m, 2.0 * self.t, self.truncation.omega, Some(omega));
        let e = &self.functionals.entries;
        let k = kernel_matrix(&kernel, e, e, true);
        self.alpha.dot(&(k * &self.alpha)).max(0.0)
    }
}

/// Spline interpolating `F_ν(f)`.
pub fn interpolate_function(f: &HarmonicCoefficients, set: &FunctionalSet, t: f64) -> Result<Spline> {
    let v: Vec<f64> = set
        .entries
        .par_iter()
        .map(|g| functional_apply(g, f))
        .collect::<Result<_>>()?;
    solve_spline(set, &v, t)
}

/// Smoothness `τ = 2^{l+1} + t + 1/2` used by the spline Funk-Radon inversion.
pub fn funk_radon_inversion_order(l: u32, t: f64) -> f64 {
    2f64.powi(l as i32 + 1) + t + 0.5
}

/// Smoothness `τ = 2^{l+2} + t + 1` used by the spline SO(3) inversion.
pub fn so3_inversion_order(l: u32, t: f64) -> f64 {
    2f64.powi(l as i32 + 2) + t + 1.0
}

/// Approximate inverse of the Funk-Radon transform from samples of `Rf` on a
/// symmetric lattice: a spline of order `τ` through the pair sums
/// `Rf(x) + Rf(-x)`, followed by the exact inverse on `E_omega_out`.
pub fn spline_inversion_funk_radon(
    lattice: &Lattice,
    samples: &[f64],
    l: u32,
    t: f64,
    omega_out: f64,
) -> Result<HarmonicCoefficients> {
    if lattice.manifold() != Manifold::S2 {
        return Err(Error::ManifoldMismatch {
            expected: Manifold::S2,
            found: lattice.manifold(),
        });
    }
    if !lattice.symmetric() {
        return Err(Error::NotSymmetric);
    }
    if samples.len() != lattice.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples for {} points",
            samples.len(),
            lattice.len()
        )));
    }
    let pts = lattice.sphere_points().ok_or(Error::NotSymmetric)?;
    let pairs = lattice.antipodal_pairs()?;
    let set = FunctionalSet::new(Manifold::S2, pairs.iter().map(|&(i, _)| Functional::SymPair(pts[i])).collect())?;
    let v: Vec<f64> = pairs.iter().map(|&(i, j)| samples[i] + samples[j]).collect();
    let s = solve_spline(&set, &v, funk_radon_inversion_order(l, t))?;
    let cap = (TABLE_KMAX * (TABLE_KMAX + 1)) as f64;
    let c = s.coefficients(omega_out.min(s.truncation.omega).min(cap))?;
    // pair functionals make the spline even; odd blocks hold only rounding
    funk_radon_inverse(&c.map_blocks(|(k, _), v| if k % 2 == 1 { 0.0 } else { v }))
}

/// Approximate inverse of the SO(3) Radon transform from samples on an
/// S²×S² lattice: spline of order `τ`, projection onto the equal-degree
/// blocks, then the exact inverse.
pub fn spline_inversion_so3(lattice: &Lattice, samples: &[f64], l: u32, t: f64) -> Result<HarmonicCoefficients> {
    if lattice.manifold() != Manifold::S2xS2 {
        return Err(Error::ManifoldMismatch {
            expected: Manifold::S2xS2,
            found: lattice.manifold(),
        });
    }
    if samples.len() != lattice.len() {
        return Err(Error::InvalidParameter(format!(
            "{} samples for {} points",
            samples.len(),
            lattice.len()
        )));
    }
    let set = FunctionalSet::new(Manifold::S2xS2, lattice.points().iter().map(|p| Functional::Point(*p)).collect())?;
    let s = solve_spline(&set, samples, so3_inversion_order(l, t))?;
    // keep the equal-degree blocks that fit in the multiplier table
    let kmax = s.truncation.k_max.min(TABLE_KMAX);
    let omega = s.truncation.omega.min((2 * kmax * (kmax + 1)) as f64);
    let delta = s.delta_coefficients(omega)?;
    so3_radon_inverse(&delta)
}

/// Outcome of the minimal-norm and symmetry-center checks.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub trials: usize,
    /// Trials in which `‖s‖ <= ‖h‖ + 1e-10`.
    pub minimal: usize,
    /// Largest `|<s, h - s>|` relative to `‖s‖ ‖h - s‖`.
    pub max_orthogonality: f64,
    /// Largest `|‖h‖² - ‖2s - h‖²|` relative to `‖h‖²`, the scale of its rounding.
    pub max_center_defect: f64,
    /// Smallest `‖h‖² - ‖s‖²`.
    pub min_norm_gap: f64,
    /// Largest `‖s - h‖` relative to half the distance between `h` and `2s - h`.
    pub max_radius_ratio: f64,
    /// `max |F_ν(s) - F_ν(f)|`.
    pub interpolation_error: f64,
}

impl OptimalityReport {
    pub fn passed(&self) -> bool {
        self.minimal == self.trials
            && self.max_orthogonality <= 1e-9
            && self.max_center_defect <= 1e-9
            && self.max_radius_ratio <= 1.0 + 1e-9
            && self.interpolation_error <= 1e-9
    }
}

/// Samples interpolants `h = s + u - s_u` (`u` random, `s_u` its spline, so
/// `F(h) = F(f)`) and checks that `s` has the smallest native norm and is the
/// center of symmetry of the sampled set.
pub fn optimality_check(s: &Spline, f: &HarmonicCoefficients, trials: usize, seed: u64) -> Result<OptimalityReport> {
    let set = &s.functionals;
    let mut interpolation_error = 0.0f64;
    for g in set.entries() {
        let e = (s.apply(g)? - functional_apply(g, f)?).abs();
        interpolation_error = interpolation_error.max(e);
    }
    let mut report = OptimalityReport {
        trials,
        minimal: 0,
        max_orthogonality: 0.0,
        max_center_defect: 0.0,
        min_norm_gap: f64::INFINITY,
        max_radius_ratio: 0.0,
        interpolation_error,
    };
    if trials == 0 {
        return Ok(report);
    }
    let manifold = s.manifold();
    let order = SobolevOrder::for_manifold(manifold, s.t);
    let omega = match manifold {
        Manifold::S2 => 110.0f64,
        Manifold::SO3 => 42.0,
        Manifold::S2xS2 => 24.0,
    }
    .min(s.truncation.omega);
    let system = s.system()?;
    let v = DVector::from_column_slice(&s.values);
    let s_norm = s.alpha.dot(&v);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radii = Vec::with_capacity(trials);
    for _ in 0..trials {
        let dim = weyl_dimension(manifold, omega) as usize;
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = HarmonicCoefficients::from_vector(manifold, omega, &raw)?;
        let fu: Vec<f64> = set.entries().iter().map(|g| functional_apply(g, &u)).collect::<Result<_>>()?;
        let fu = DVector::from_vec(fu);
        let (alpha_u, _, _) = system.solve(&fu)?;
        let u_norm = sobolev_norm(&u, order).powi(2);
        // e = u - s_u lies in the null space of F
        let inner = s.alpha.dot(&fu) - alpha_u.dot(&v);
        let e_norm = (u_norm - alpha_u.dot(&fu)).max(0.0);
        let h_norm = s_norm + 2.0 * inner + e_norm;
        let mirror = s_norm - 2.0 * inner + e_norm;
        let scale = (s_norm * e_norm).sqrt().max(f64::MIN_POSITIVE);
        report.max_orthogonality = report.max_orthogonality.max(inner.abs() / scale);
        report.max_center_defect = report.max_center_defect.max((h_norm - mirror).abs() / h_norm.max(s_norm).max(1.0));
        report.min_norm_gap = report.min_norm_gap.min(h_norm - s_norm);
        radii.push(e_norm.sqrt());
        if s_norm <= h_norm + 1e-10 {
            report.minimal += 1;
        }
    }
    // ‖s - h‖ = ‖e‖, and h, 2s - h are 2‖e‖ apart
    let diameter = 2.0 * radii.iter().fold(0.0f64, |a, r| a.max(*r));
    if diameter > 0.0 {
        report.max_radius_ratio = radii.iter().fold(0.0f64, |a, r| a.max(r / (0.5 * diameter)));
    }
    Ok(report)
}

/// Smallest eigenvalue of a spline's Gram matrix, for diagnostics.
pub fn gram_min_eigenvalue(s: &Spline) -> f64 {
    min_eigenvalue(&s.gram)
}
