//! Spectral representation of functions: bandlimited spaces, synthesis and
//! analysis, Sobolev norms and eigenvalue counting.
//!
//! Coefficients are stored densely per degree block and keyed by degree:
//!
//! * S²: block `k` holds the `2k+1` coefficients against `Y_k^i`;
//! * SO(3): block `k` holds the `(2k+1)^2` coefficients against the Wigner
//!   functions `T_k^{ij}` (row-major in `i, j`). These are not unit vectors:
//!   `||T_k^{ij}||^2 = 1/(2k+1)`;
//! * S²×S²: block `(k1, k2)` holds coefficients against `Y_{k1}^i(x) Y_{k2}^j(y)`.
//!   The diagonal subspace (range of the SO(3) Radon transform) only has
//!   blocks with `k1 == k2`.
//!
//! Bandwidths refer to the eigenvalue of the (product) Laplacian:
//! `k(k+1)` on S² and SO(3), `k1(k1+1) + k2(k2+1)` on S²×S².

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Manifold, Result};
use crate::harmonics::{sh_offset, sph_harmonics, wigner_matrices, RotationPoint, SpherePoint};

/// Slack used in every `lambda <= omega` comparison.
pub const BANDWIDTH_SLACK: f64 = 1e-9;

/// A point on one of the supported manifolds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldPoint {
    S2(SpherePoint),
    S2xS2(SpherePoint, SpherePoint),
    SO3(RotationPoint),
}

impl ManifoldPoint {
    pub fn manifold(&self) -> Manifold {
        match self {
            ManifoldPoint::S2(_) => Manifold::S2,
            ManifoldPoint::S2xS2(..) => Manifold::S2xS2,
            ManifoldPoint::SO3(_) => Manifold::SO3,
        }
    }

    /// Geodesic distance; `None` when the manifolds differ.
    pub fn distance(&self, other: &ManifoldPoint) -> Option<f64> {
        match (self, other) {
            (ManifoldPoint::S2(a), ManifoldPoint::S2(b)) => Some(a.distance(b)),
            (ManifoldPoint::S2xS2(a1, a2), ManifoldPoint::S2xS2(b1, b2)) => {
                Some(a1.distance(b1).hypot(a2.distance(b2)))
            }
            (ManifoldPoint::SO3(a), ManifoldPoint::SO3(b)) => Some(a.distance(b)),
            _ => None,
        }
    }
}

/// Index of one stored coefficient (1-based orders as in `HarmonicIndex`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoefIndex {
    S2 { k: usize, i: usize },
    SO3 { k: usize, i: usize, j: usize },
    S2xS2 { k1: usize, i: usize, k2: usize, j: usize },
}

impl CoefIndex {
    pub fn manifold(&self) -> Manifold {
        match self {
            CoefIndex::S2 { .. } => Manifold::S2,
            CoefIndex::SO3 { .. } => Manifold::SO3,
            CoefIndex::S2xS2 { .. } => Manifold::S2xS2,
        }
    }

    fn key_and_offset(&self) -> Result<((usize, usize), usize)> {
        let bad = |k, i, j| Error::IndexOutOfRange { k, i, j };
        match *self {
            CoefIndex::S2 { k, i } => {
                if !(1..=2 * k + 1).contains(&i) {
                    return Err(bad(k, i, None));
                }
                Ok(((k, 0), i - 1))
            }
            CoefIndex::SO3 { k, i, j } => {
                let n = 2 * k + 1;
                if !(1..=n).contains(&i) || !(1..=n).contains(&j) {
                    return Err(bad(k, i, Some(j)));
                }
                Ok(((k, k), (i - 1) * n + (j - 1)))
            }
            CoefIndex::S2xS2 { k1, i, k2, j } => {
                if !(1..=2 * k1 + 1).contains(&i) {
                    return Err(bad(k1, i, Some(j)));
                }
                if !(1..=2 * k2 + 1).contains(&j) {
                    return Err(bad(k2, j, Some(i)));
                }
                Ok(((k1, k2), (i - 1) * (2 * k2 + 1) + (j - 1)))
            }
        }
    }
}

/// Largest degree `k` with `k(k+1) <= omega`.
pub fn max_degree(omega: f64) -> usize {
    if omega < 0.0 {
        return 0;
    }
    let mut k = ((omega + 0.25).sqrt() - 0.5).floor().max(0.0) as usize;
    while ((k + 1) * (k + 2)) as f64 <= omega + BANDWIDTH_SLACK {
        k += 1;
    }
    while k > 0 && (k * (k + 1)) as f64 > omega + BANDWIDTH_SLACK {
        k -= 1;
    }
    k
}

fn block_len(manifold: Manifold, key: (usize, usize)) -> usize {
    match manifold {
        Manifold::S2 => 2 * key.0 + 1,
        Manifold::SO3 => (2 * key.0 + 1).pow(2),
        Manifold::S2xS2 => (2 * key.0 + 1) * (2 * key.1 + 1),
    }
}

fn block_eigenvalue(manifold: Manifold, key: (usize, usize)) -> f64 {
    let lam = |k: usize| (k * (k + 1)) as f64;
    match manifold {
        Manifold::S2 | Manifold::SO3 => lam(key.0),
        Manifold::S2xS2 => lam(key.0) + lam(key.1),
    }
}

/// Squared L2 norm of one basis function under the normalized measure.
fn block_norm_sq(manifold: Manifold, key: (usize, usize)) -> f64 {
    match manifold {
        Manifold::SO3 => 1.0 / (2 * key.0 + 1) as f64,
        _ => 1.0,
    }
}

/// All degree blocks with eigenvalue `<= omega`, in canonical order.
pub fn block_keys(manifold: Manifold, omega: f64) -> Vec<(usize, usize)> {
    let kmax = max_degree(omega);
    match manifold {
        Manifold::S2 => (0..=kmax).map(|k| (k, 0)).collect(),
        Manifold::SO3 => (0..=kmax).map(|k| (k, k)).collect(),
        Manifold::S2xS2 => {
            let mut keys = Vec::new();
            for k1 in 0..=kmax {
                for k2 in 0..=kmax {
                    if block_eigenvalue(manifold, (k1, k2)) <= omega + BANDWIDTH_SLACK {
                        keys.push((k1, k2));
                    }
                }
            }
            keys
        }
    }
}

/// Coefficients of a function on one manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    manifold: Manifold,
    omega: f64,
    blocks: BTreeMap<(usize, usize), Vec<f64>>,
}

impl HarmonicCoefficients {
    /// The zero function with bandwidth `omega`.
    pub fn zeros(manifold: Manifold, omega: f64) -> Self {
        HarmonicCoefficients {
            manifold,
            omega,
            blocks: BTreeMap::new(),
        }
    }

    /// Builds coefficients from `(index, value)` pairs; rejects duplicates,
    /// manifold mismatches and indices above the bandwidth.
    pub fn from_entries(
        manifold: Manifold,
        omega: f64,
        entries: impl IntoIterator<Item = (CoefIndex, f64)>,
    ) -> Result<Self> {
        let mut c = HarmonicCoefficients::zeros(manifold, omega);
        let mut seen = std::collections::HashSet::new();
        for (idx, v) in entries {
            if !seen.insert(idx) {
                return Err(Error::InvalidParameter(format!("duplicate index {idx:?}")));
            }
            c.set(idx, v)?;
        }
        Ok(c)
    }

    /// Builds coefficients from a dense vector laid out as [`Self::to_vector`].
    pub fn from_vector(manifold: Manifold, omega: f64, v: &[f64]) -> Result<Self> {
        let keys = block_keys(manifold, omega);
        let total: usize = keys.iter().map(|&k| block_len(manifold, k)).sum();
        if v.len() != total {
            return Err(Error::InvalidParameter(format!(
                "vector length {} does not match dimension {total}",
                v.len()
            )));
        }
        let mut blocks = BTreeMap::new();
        let mut o = 0;
        for key in keys {
            let n = block_len(manifold, key);
            let b = &v[o..o + n];
            if b.iter().any(|x| *x != 0.0) {
                blocks.insert(key, b.to_vec());
            }
            o += n;
        }
        Ok(HarmonicCoefficients {
            manifold,
            omega,
            blocks,
        })
    }

    /// Dense vector over all basis functions with eigenvalue `<= self.omega()`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for key in block_keys(self.manifold, self.omega) {
            match self.blocks.get(&key) {
                Some(b) => out.extend_from_slice(b),
                None => out.extend(std::iter::repeat_n(0.0, block_len(self.manifold, key))),
            }
        }
        out
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same coefficients, relabelled with a different bandwidth. Fails if a
    /// stored block would exceed it.
    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        for &key in self.blocks.keys() {
            let lam = block_eigenvalue(self.manifold, key);
            if lam > omega + BANDWIDTH_SLACK {
                return Err(Error::BandwidthExceeded {
                    found: lam,
                    coverage: omega,
                });
            }
        }
        self.omega = omega;
        Ok(self)
    }

    pub fn get(&self, idx: CoefIndex) -> f64 {
        if idx.manifold() != self.manifold {
            return 0.0;
        }
        match idx.key_and_offset() {
            Ok((key, o)) => self.blocks.get(&key).map_or(0.0, |b| b[o]),
            Err(_) => 0.0,
        }
    }

    pub fn set(&mut self, idx: CoefIndex, value: f64) -> Result<()> {
        if idx.manifold() != self.manifold {
            return Err(Error::ManifoldMismatch {
                expected: self.manifold,
                found: idx.manifold(),
            });
        }
        let (key, o) = idx.key_and_offset()?;
        let lam = block_eigenvalue(self.manifold, key);
        if lam > self.omega + BANDWIDTH_SLACK {
            return Err(Error::BandwidthExceeded {
                found: lam,
                coverage: self.omega,
            });
        }
        let n = block_len(self.manifold, key);
        self.blocks.entry(key).or_insert_with(|| vec![0.0; n])[o] = value;
        Ok(())
    }

    /// Block for S² degree `k` (or SO(3) degree `k`).
    pub fn block(&self, k: usize) -> Option<&[f64]> {
        let key = match self.manifold {
            Manifold::S2 => (k, 0),
            Manifold::SO3 => (k, k),
            Manifold::S2xS2 => (k, k),
        };
        self.blocks.get(&key).map(|v| v.as_slice())
    }

    pub fn product_block(&self, k1: usize, k2: usize) -> Option<&[f64]> {
        self.blocks.get(&(k1, k2)).map(|v| v.as_slice())
    }

    /// Inserts a whole degree block (S²/SO(3): `k`; S²×S²: `(k1, k2)`).
    pub fn set_block(&mut self, key: (usize, usize), values: Vec<f64>) -> Result<()> {
        let key = match self.manifold {
            Manifold::S2 => (key.0, 0),
            Manifold::SO3 => (key.0, key.0),
            Manifold::S2xS2 => key,
        };
        if values.len() != block_len(self.manifold, key) {
            return Err(Error::InvalidParameter(format!(
                "block {key:?} expects {} values, got {}",
                block_len(self.manifold, key),
                values.len()
            )));
        }
        let lam = block_eigenvalue(self.manifold, key);
        if lam > self.omega + BANDWIDTH_SLACK {
            return Err(Error::BandwidthExceeded {
                found: lam,
                coverage: self.omega,
            });
        }
        self.blocks.insert(key, values);
        Ok(())
    }

    /// Stored blocks keyed as `(k, 0)` on S², `(k, k)` on SO(3), `(k1, k2)` on S²×S².
    pub fn blocks(&self) -> impl Iterator<Item = ((usize, usize), &[f64])> {
        self.blocks.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// All stored entries (including explicit zeros inside stored blocks).
    pub fn entries(&self) -> Vec<(CoefIndex, f64)> {
        let mut out = Vec::new();
        for (&(k1, k2), b) in &self.blocks {
            match self.manifold {
                Manifold::S2 => {
                    for (o, v) in b.iter().enumerate() {
                        out.push((CoefIndex::S2 { k: k1, i: o + 1 }, *v));
                    }
                }
                Manifold::SO3 => {
                    let n = 2 * k1 + 1;
                    for (o, v) in b.iter().enumerate() {
                        out.push((
                            CoefIndex::SO3 {
                                k: k1,
                                i: o / n + 1,
                                j: o % n + 1,
                            },
                            *v,
                        ));
                    }
                }
                Manifold::S2xS2 => {
                    let n = 2 * k2 + 1;
                    for (o, v) in b.iter().enumerate() {
                        out.push((
                            CoefIndex::S2xS2 {
                                k1,
                                i: o / n + 1,
                                k2,
                                j: o % n + 1,
                            },
                            *v,
                        ));
                    }
                }
            }
        }
        out
    }

    /// Largest degree present (`max(k1, k2)` on S²×S²).
    pub fn max_degree(&self) -> usize {
        self.blocks
            .iter()
            .filter(|(_, b)| b.iter().any(|v| *v != 0.0))
            .map(|(&(a, b), _)| a.max(b))
            .max()
            .unwrap_or(0)
    }

    /// True when every S²×S² block with nonzero content has `k1 == k2`.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.off_diagonal_violation(tol).is_none()
    }

    /// First off-diagonal block whose largest entry exceeds `tol`.
    pub fn off_diagonal_violation(&self, tol: f64) -> Option<(usize, usize, f64)> {
        if self.manifold != Manifold::S2xS2 {
            return None;
        }
        self.blocks.iter().find_map(|(&(k1, k2), b)| {
            let m = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (k1 != k2 && m > tol).then_some((k1, k2, m))
        })
    }

    /// Squared L2 norm under the normalized measure.
    pub fn l2_norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(|(&key, b)| block_norm_sq(self.manifold, key) * b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Largest absolute coefficient.
    /// L2 inner product under the normalized measure.
    pub fn inner(&self, other: &HarmonicCoefficients) -> Result<f64> {
        if other.manifold != self.manifold {
            return Err(Error::ManifoldMismatch {
                expected: self.manifold,
                found: other.manifold,
            });
        }
        Ok(self
            .blocks
            .iter()
            .filter_map(|(key, a)| other.blocks.get(key).map(|b| block_norm_sq(self.manifold, *key) * dot(a, b)))
            .sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .values()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Applies `f(key, value)` to every coefficient.
    pub fn map_blocks(&self, mut f: impl FnMut((usize, usize), f64) -> f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|(&key, b)| (key, b.iter().map(|v| f(key, *v)).collect()))
            .collect();
        HarmonicCoefficients {
            manifold: self.manifold,
            omega: self.omega,
            blocks,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_blocks(|_, v| s * v)
    }

    /// `self + s * other`; bandwidth is the larger of the two.
    pub fn axpy(&self, s: f64, other: &HarmonicCoefficients) -> Result<Self> {
        if other.manifold != self.manifold {
            return Err(Error::ManifoldMismatch {
                expected: self.manifold,
                found: other.manifold,
            });
        }
        let mut out = self.clone();
        out.omega = self.omega.max(other.omega);
        for (&key, b) in &other.blocks {
            let n = b.len();
            let dst = out.blocks.entry(key).or_insert_with(|| vec![0.0; n]);
            for (d, v) in dst.iter_mut().zip(b) {
                *d += s * v;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &HarmonicCoefficients) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// Largest coefficient-wise absolute difference.
    pub fn max_abs_diff(&self, other: &HarmonicCoefficients) -> f64 {
        match self.sub(other) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Drops every block whose largest entry is `<= tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .filter(|(_, b)| b.iter().any(|v| v.abs() > tol))
            .map(|(k, b)| (*k, b.clone()))
            .collect();
        HarmonicCoefficients {
            manifold: self.manifold,
            omega: self.omega,
            blocks,
        }
    }

    /// Pointwise value.
    pub fn evaluate(&self, p: &ManifoldPoint) -> Result<f64> {
        if p.manifold() != self.manifold {
            return Err(Error::ManifoldMismatch {
                expected: self.manifold,
                found: p.manifold(),
            });
        }
        if self.blocks.is_empty() {
            return Ok(0.0);
        }
        let kmax = self.max_stored_degree();
        Ok(match p {
            ManifoldPoint::S2(x) => {
                let y = sph_harmonics(kmax, x);
                self.blocks
                    .iter()
                    .map(|(&(k, _), b)| dot(b, &y[sh_offset(k)..sh_offset(k) + 2 * k + 1]))
                    .sum()
            }
            ManifoldPoint::S2xS2(x, yp) => {
                let a = sph_harmonics(kmax, x);
                let c = sph_harmonics(kmax, yp);
                self.blocks
                    .iter()
                    .map(|(&(k1, k2), b)| {
                        let ya = &a[sh_offset(k1)..sh_offset(k1) + 2 * k1 + 1];
                        let yb = &c[sh_offset(k2)..sh_offset(k2) + 2 * k2 + 1];
                        let n2 = 2 * k2 + 1;
                        ya.iter()
                            .enumerate()
                            .map(|(i, yi)| yi * dot(&b[i * n2..(i + 1) * n2], yb))
                            .sum::<f64>()
                    })
                    .sum()
            }
            ManifoldPoint::SO3(g) => {
                let t = wigner_matrices(kmax, g);
                self.blocks
                    .iter()
                    .map(|(&(k, _), b)| {
                        let n = 2 * k + 1;
                        let mut s = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                s += b[i * n + j] * t[k][(i, j)];
                            }
                        }
                        s
                    })
                    .sum()
            }
        })
    }

    fn max_stored_degree(&self) -> usize {
        self.blocks.keys().map(|&(a, b)| a.max(b)).max().unwrap_or(0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Values of `c` at every point (parallel over points, deterministic).
pub fn synthesize(c: &HarmonicCoefficients, pts: &[ManifoldPoint]) -> Result<Vec<f64>> {
    pts.par_iter().map(|p| c.evaluate(p)).collect()
}

/// Values of every basis function with eigenvalue `<= omega` at `p`, in the
/// layout of [`HarmonicCoefficients::to_vector`].
pub fn basis_values(manifold: Manifold, omega: f64, p: &ManifoldPoint) -> Result<Vec<f64>> {
    if p.manifold() != manifold {
        return Err(Error::ManifoldMismatch {
            expected: manifold,
            found: p.manifold(),
        });
    }
    let kmax = max_degree(omega);
    Ok(match p {
        ManifoldPoint::S2(x) => sph_harmonics(kmax, x),
        ManifoldPoint::SO3(g) => {
            let mut out = Vec::new();
            for t in wigner_matrices(kmax, g) {
                let n = t.nrows();
                for i in 0..n {
                    for j in 0..n {
                        out.push(t[(i, j)]);
                    }
                }
            }
            out
        }
        ManifoldPoint::S2xS2(x, y) => {
            let a = sph_harmonics(kmax, x);
            let b = sph_harmonics(kmax, y);
            let mut out = Vec::new();
            for (k1, k2) in block_keys(manifold, omega) {
                for i in 0..2 * k1 + 1 {
                    for j in 0..2 * k2 + 1 {
                        out.push(a[sh_offset(k1) + i] * b[sh_offset(k2) + j]);
                    }
                }
            }
            out
        }
    })
}

/// Squared norms of the basis functions in [`basis_values`] order.
pub fn basis_norms_sq(manifold: Manifold, omega: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for key in block_keys(manifold, omega) {
        let w = block_norm_sq(manifold, key);
        out.extend(std::iter::repeat_n(w, block_len(manifold, key)));
    }
    out
}

/// Eigenvalues (before Sobolev scaling) in [`basis_values`] order.
pub fn basis_eigenvalues(manifold: Manifold, omega: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for key in block_keys(manifold, omega) {
        let lam = block_eigenvalue(manifold, key);
        out.extend(std::iter::repeat_n(lam, block_len(manifold, key)));
    }
    out
}

/// Fourier coefficients from weighted samples.
///
/// `certified_exactness` is the bandwidth on which the `(point, weight)` pairs
/// integrate exactly; it must cover the product bandwidth of `E_omega`.
pub fn analyze(
    manifold: Manifold,
    samples: &[(ManifoldPoint, f64, f64)],
    omega: f64,
    certified_exactness: Option<f64>,
) -> Result<HarmonicCoefficients> {
    let exact = certified_exactness.ok_or(Error::CertificateMissing)?;
    let required = crate::discretize::product_bandwidth(omega, omega, manifold);
    if exact + BANDWIDTH_SLACK < required {
        return Err(Error::InsufficientExactness {
            required,
            available: exact,
        });
    }
    if samples.iter().any(|(_, _, w)| !(*w > 0.0)) {
        return Err(Error::NonPositiveWeight);
    }
    let norms = basis_norms_sq(manifold, omega);
    let partial: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|(p, v, w)| {
            basis_values(manifold, omega, p).map(|mut b| {
                for x in b.iter_mut() {
                    *x *= w * v;
                }
                b
            })
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; norms.len()];
    for b in &partial {
        for (a, x) in acc.iter_mut().zip(b) {
            *a += x;
        }
    }
    // <f, u> / ||u||^2 gives the coefficient against u
    for (a, n) in acc.iter_mut().zip(&norms) {
        *a /= n;
    }
    HarmonicCoefficients::from_vector(manifold, omega, &acc)
}

/// Smoothness exponent `t` together with the operator scale `a` of `(I - a L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevOrder {
    pub t: f64,
    pub scale: f64,
}

impl SobolevOrder {
    /// Uses the operator scale that belongs to `manifold`
    /// (`1` on S², `2` on S²×S², `4` on SO(3)).
    pub fn for_manifold(manifold: Manifold, t: f64) -> Self {
        SobolevOrder {
            t,
            scale: manifold.sobolev_scale(),
        }
    }

    /// Multiplier `(1 + a*lambda)^t`.
    pub fn weight(&self, lambda: f64) -> f64 {
        (1.0 + self.scale * lambda).powf(self.t)
    }
}

/// `(sum (1 + a lambda)^t c^2 ||u||^2)^{1/2}`.
pub fn sobolev_norm(c: &HarmonicCoefficients, s: SobolevOrder) -> f64 {
    c.blocks()
        .map(|(key, b)| {
            let w = s.weight(block_eigenvalue(c.manifold(), key)) * block_norm_sq(c.manifold(), key);
            w * b.iter().map(|v| v * v).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Orthogonal projection onto `E_omega`.
pub fn project_bandlimit(c: &HarmonicCoefficients, omega: f64) -> HarmonicCoefficients {
    let blocks = c
        .blocks
        .iter()
        .filter(|(&key, _)| block_eigenvalue(c.manifold, key) <= omega + BANDWIDTH_SLACK)
        .map(|(k, b)| (*k, b.clone()))
        .collect();
    HarmonicCoefficients {
        manifold: c.manifold,
        omega: omega.min(c.omega),
        blocks,
    }
}

/// Exact dimension of `E_omega`, counted with multiplicity.
pub fn weyl_dimension(manifold: Manifold, omega: f64) -> u64 {
    block_keys(manifold, omega)
        .into_iter()
        .map(|key| block_len(manifold, key) as u64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{eval_sph_harmonic, HarmonicIndex};

    #[test]
    fn constant_synthesizes_to_one() {
        let c = HarmonicCoefficients::from_entries(Manifold::S2, 0.0, [(CoefIndex::S2 { k: 0, i: 1 }, 1.0)]).unwrap();
        let pts: Vec<_> = (0..5)
            .map(|t| ManifoldPoint::S2(SpherePoint::from_angles(0.3 * t as f64, 1.1 * t as f64)))
            .collect();
        for v in synthesize(&c, &pts).unwrap() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_term_matches_basis_function() {
        let c = HarmonicCoefficients::from_entries(Manifold::S2, 6.0, [(CoefIndex::S2 { k: 2, i: 4 }, 1.0)]).unwrap();
        let p = SpherePoint::new(0.1, 0.4, -0.3).unwrap();
        let v = c.evaluate(&ManifoldPoint::S2(p)).unwrap();
        assert_eq!(v, eval_sph_harmonic(HarmonicIndex::sphere(2, 4), &p).unwrap());
    }

    #[test]
    fn manifold_mismatch_is_reported() {
        let c = HarmonicCoefficients::zeros(Manifold::S2, 2.0);
        let g = ManifoldPoint::SO3(RotationPoint::identity());
        assert!(matches!(synthesize(&c, &[g]), Err(Error::ManifoldMismatch { .. })));
    }

    #[test]
    fn duplicate_entries_rejected() {
        let e = [(CoefIndex::S2 { k: 1, i: 1 }, 1.0), (CoefIndex::S2 { k: 1, i: 1 }, 2.0)];
        assert!(HarmonicCoefficients::from_entries(Manifold::S2, 2.0, e).is_err());
    }

    #[test]
    fn sobolev_norm_values() {
        let c = HarmonicCoefficients::from_entries(Manifold::S2, 0.0, [(CoefIndex::S2 { k: 0, i: 1 }, 1.0)]).unwrap();
        for t in [0.5, 1.0, 3.0] {
            assert_eq!(sobolev_norm(&c, SobolevOrder::for_manifold(Manifold::S2, t)), 1.0);
        }
        let c = HarmonicCoefficients::from_entries(Manifold::S2, 2.0, [(CoefIndex::S2 { k: 1, i: 2 }, 1.0)]).unwrap();
        let n = sobolev_norm(&c, SobolevOrder::for_manifold(Manifold::S2, 1.0));
        assert!((n - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projection_edge_cases() {
        let mut c = HarmonicCoefficients::zeros(Manifold::S2, 12.0);
        c.set(CoefIndex::S2 { k: 0, i: 1 }, 0.5).unwrap();
        c.set(CoefIndex::S2 { k: 3, i: 2 }, 2.0).unwrap();
        assert_eq!(project_bandlimit(&c, 100.0).entries(), c.entries());
        let p = project_bandlimit(&c, 0.0);
        assert_eq!(p.entries(), vec![(CoefIndex::S2 { k: 0, i: 1 }, 0.5)]);
    }

    #[test]
    fn weyl_dimension_values() {
        assert_eq!(weyl_dimension(Manifold::S2, 6.0), 9);
        assert_eq!(weyl_dimension(Manifold::SO3, 2.0), 10);
        for m in [Manifold::S2, Manifold::SO3, Manifold::S2xS2] {
            assert_eq!(weyl_dimension(m, 0.0), 1);
        }
    }

    #[test]
    fn max_degree_boundaries() {
        assert_eq!(max_degree(0.0), 0);
        assert_eq!(max_degree(1.999), 0);
        assert_eq!(max_degree(2.0), 1);
        assert_eq!(max_degree(6.0), 2);
        assert_eq!(max_degree(11.9), 2);
        assert_eq!(max_degree(12.0), 3);
    }

    #[test]
    fn vector_round_trip_and_layout() {
        let mut c = HarmonicCoefficients::zeros(Manifold::SO3, 6.0);
        c.set(CoefIndex::SO3 { k: 1, i: 2, j: 3 }, 0.7).unwrap();
        let v = c.to_vector();
        assert_eq!(v.len(), 1 + 9 + 25);
        assert_eq!(v[1 + 3 + 2], 0.7);
        let back = HarmonicCoefficients::from_vector(Manifold::SO3, 6.0, &v).unwrap();
        assert_eq!(back.get(CoefIndex::SO3 { k: 1, i: 2, j: 3 }), 0.7);
    }

    #[test]
    fn set_above_bandwidth_fails() {
        let mut c = HarmonicCoefficients::zeros(Manifold::S2, 2.0);
        assert!(c.set(CoefIndex::S2 { k: 2, i: 1 }, 1.0).is_err());
    }
}
