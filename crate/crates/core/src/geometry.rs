//! Metric ρ-lattices: generation, certification, antipodal symmetry, dual
//! great circles and Voronoi partitions.
//!
//! A point set is a ρ-lattice when its minimum pairwise distance is at least
//! `ρ/2` (balls of radius `ρ/4` are disjoint) and every point of the manifold
//! lies within `ρ/2` of the set. Covering is certified against a fixed grid,
//! and the certificate records that grid's density.

use std::f64::consts::PI;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Manifold, Result};
use crate::harmonics::{RotationPoint, SpherePoint};
use crate::quadrature::{RotationGrid, SphereGrid};
use crate::spaces::ManifoldPoint;

/// Largest covering grid we are willing to build.
const MAX_GRID: usize = 40_000_000;

/// Minimum pairwise distance and grid-certified covering radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub min_distance: f64,
    pub covering_radius: f64,
    /// Covering grid points per unit length.
    pub grid_density: usize,
}

impl Certificate {
    pub fn satisfies(&self, rho: f64) -> bool {
        self.min_distance >= 0.5 * rho - 1e-12 && self.covering_radius <= 0.5 * rho + 1e-12
    }
}

/// A finite point set with its mesh parameter and certificate.
#[derive(Debug, Clone)]
pub struct Lattice {
    manifold: Manifold,
    points: Vec<ManifoldPoint>,
    rho: f64,
    symmetric: bool,
    certificate: Certificate,
}

/// Grid density used when none is given: four grid steps per `ρ`, at least 10.
pub fn default_grid_density(rho: f64) -> usize {
    ((4.0 / rho).ceil() as usize).max(10)
}

impl Lattice {
    /// Wraps a point set and certifies it on the default grid.
    pub fn new(manifold: Manifold, points: Vec<ManifoldPoint>, rho: f64, symmetric: bool) -> Result<Self> {
        Lattice::with_grid_density(manifold, points, rho, symmetric, default_grid_density(rho))
    }

    pub fn with_grid_density(
        manifold: Manifold,
        points: Vec<ManifoldPoint>,
        rho: f64,
        symmetric: bool,
        grid_density: usize,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("lattice needs at least one point".into()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        if let Some(p) = points.iter().find(|p| p.manifold() != manifold) {
            return Err(Error::ManifoldMismatch {
                expected: manifold,
                found: p.manifold(),
            });
        }
        if symmetric && antipode_pairs(&points).is_none() {
            return Err(Error::NotSymmetric);
        }
        let certificate = certify(manifold, &points, grid_density)?;
        Ok(Lattice {
            manifold,
            points,
            rho,
            symmetric,
            certificate,
        })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    /// Index pairs `(i, j)`, `i < j`, with `x_j = -x_i`.
    pub fn antipodal_pairs(&self) -> Result<Vec<(usize, usize)>> {
        let pairs = antipode_pairs(&self.points).ok_or(Error::NotSymmetric)?;
        Ok(pairs.iter().enumerate().filter(|&(i, &j)| i < j).map(|(i, &j)| (i, j)).collect())
    }

    pub fn is_certified(&self) -> bool {
        self.certificate.satisfies(self.rho)
    }

    /// The points as sphere points, if the lattice lives on S².
    pub fn sphere_points(&self) -> Option<Vec<SpherePoint>> {
        self.points
            .iter()
            .map(|p| match p {
                ManifoldPoint::S2(x) => Some(*x),
                _ => None,
            })
            .collect()
    }
}

/// Pairs each point with its antipode; `None` if some antipode is missing.
fn antipode_pairs(points: &[ManifoldPoint]) -> Option<Vec<usize>> {
    let sp: Vec<SpherePoint> = points
        .iter()
        .map(|p| match p {
            ManifoldPoint::S2(x) => Some(*x),
            _ => None,
        })
        .collect::<Option<_>>()?;
    sp.iter()
        .map(|x| {
            let a = x.antipode();
            sp.iter().position(|y| y.distance(&a) < 1e-10)
        })
        .collect()
}

/// Great circle `theta^perp ∩ S²`, parameterized by `cos(phi) e1 + sin(phi) e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreatCircle {
    pub pole: SpherePoint,
    pub e1: SpherePoint,
    pub e2: SpherePoint,
}

impl GreatCircle {
    pub fn new(pole: SpherePoint) -> Self {
        let (e1, e2) = pole.tangent_frame();
        GreatCircle { pole, e1, e2 }
    }

    pub fn point(&self, phi: f64) -> SpherePoint {
        let (s, c) = phi.sin_cos();
        let (a, b) = (self.e1.coords(), self.e2.coords());
        SpherePoint::from_unit([c * a[0] + s * b[0], c * a[1] + s * b[1], c * a[2] + s * b[2]])
    }
}

// ---------------------------------------------------------------------------
// covering grids

/// A fixed grid against which covering radii are measured.
enum CoverGrid {
    Sphere(Vec<SpherePoint>),
    Rotation(Vec<RotationPoint>),
    /// Product of two sphere grids; index `u * n2 + v`.
    Product(Vec<SpherePoint>, Vec<SpherePoint>),
}

impl CoverGrid {
    fn new(manifold: Manifold, grid_density: usize) -> Result<Self> {
        let h = 1.0 / grid_density.max(1) as f64;
        let sphere_size = (PI / h).ceil().max(4.0) * (2.0 * PI / h).ceil().max(8.0);
        let est = match manifold {
            Manifold::S2 => sphere_size,
            Manifold::S2xS2 => sphere_size * sphere_size,
            Manifold::SO3 => (PI / h).ceil().max(4.0) * (2.0 * PI / h).ceil().max(8.0).powi(2),
        };
        if est > MAX_GRID as f64 {
            return Err(Error::InvalidParameter(format!(
                "covering grid of density {grid_density} on {manifold} is too large ({est:.0} points)"
            )));
        }
        Ok(match manifold {
            Manifold::S2 => CoverGrid::Sphere(SphereGrid::with_spacing(h).points),
            Manifold::SO3 => CoverGrid::Rotation(RotationGrid::with_spacing(h).points),
            Manifold::S2xS2 => {
                let g = SphereGrid::with_spacing(h).points;
                CoverGrid::Product(g.clone(), g)
            }
        })
    }

    fn len(&self) -> usize {
        match self {
            CoverGrid::Sphere(g) => g.len(),
            CoverGrid::Rotation(g) => g.len(),
            CoverGrid::Product(a, b) => a.len() * b.len(),
        }
    }

    fn point(&self, idx: usize) -> ManifoldPoint {
        match self {
            CoverGrid::Sphere(g) => ManifoldPoint::S2(g[idx]),
            CoverGrid::Rotation(g) => ManifoldPoint::SO3(g[idx]),
            CoverGrid::Product(a, b) => ManifoldPoint::S2xS2(a[idx / b.len()], b[idx % b.len()]),
        }
    }

    /// Lowers `nd[g]` to `dist(grid[g], p)` wherever that is smaller and
    /// records `owner[g] = tag` when it does. Grid points whose distance is
    /// known to be at most `cap` are never improved by points `>= cap` away.
    fn absorb(&self, p: &ManifoldPoint, tag: usize, cap: f64, nd: &mut [f64], owner: &mut [usize]) {
        match (self, p) {
            (CoverGrid::Sphere(g), ManifoldPoint::S2(x)) => {
                nd.par_iter_mut()
                    .zip(owner.par_iter_mut())
                    .zip(g.par_iter())
                    .for_each(|((d, o), y)| {
                        let e = x.distance(y);
                        if e < *d {
                            *d = e;
                            *o = tag;
                        }
                    });
            }
            (CoverGrid::Rotation(g), ManifoldPoint::SO3(r)) => {
                nd.par_iter_mut()
                    .zip(owner.par_iter_mut())
                    .zip(g.par_iter())
                    .for_each(|((d, o), y)| {
                        let e = r.distance(y);
                        if e < *d {
                            *d = e;
                            *o = tag;
                        }
                    });
            }
            (CoverGrid::Product(ga, gb), ManifoldPoint::S2xS2(x, y)) => {
                let n2 = gb.len();
                let db: Vec<f64> = gb.iter().map(|v| y.distance(v)).collect();
                nd.par_chunks_mut(n2)
                    .zip(owner.par_chunks_mut(n2))
                    .zip(ga.par_iter())
                    .for_each(|((row, orow), u)| {
                        let da = x.distance(u);
                        if da >= cap {
                            return;
                        }
                        let da2 = da * da;
                        for ((d, o), e2) in row.iter_mut().zip(orow.iter_mut()).zip(&db) {
                            if *e2 >= *d {
                                continue;
                            }
                            let e = (da2 + e2 * e2).sqrt();
                            if e < *d {
                                *d = e;
                                *o = tag;
                            }
                        }
                    });
            }
            _ => unreachable!("grid and point manifolds are checked by callers"),
        }
    }

    /// Nearest-point distance and owner (lowest index on ties) for every grid point.
    fn nearest(&self, pts: &[ManifoldPoint]) -> (Vec<f64>, Vec<usize>) {
        let n = self.len();
        let mut nd = vec![f64::INFINITY; n];
        let mut owner = vec![usize::MAX; n];
        if let CoverGrid::Product(ga, gb) = self {
            // per row: candidates sorted by first-factor distance, early exit
            let (xa, xb): (Vec<SpherePoint>, Vec<SpherePoint>) = pts
                .iter()
                .map(|p| match p {
                    ManifoldPoint::S2xS2(a, b) => (*a, *b),
                    _ => unreachable!("checked by callers"),
                })
                .unzip();
            let n2 = gb.len();
            let dbt: Vec<f64> = gb
                .par_iter()
                .flat_map_iter(|v| xb.iter().map(move |b| v.distance(b)))
                .collect();
            nd.par_chunks_mut(n2)
                .zip(owner.par_chunks_mut(n2))
                .zip(ga.par_iter())
                .for_each(|((row, orow), u)| {
                    let mut cand: Vec<(f64, usize)> = xa.iter().enumerate().map(|(i, a)| (u.distance(a), i)).collect();
                    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    for (v, (d, o)) in row.iter_mut().zip(orow.iter_mut()).enumerate() {
                        let dv = &dbt[v * xb.len()..(v + 1) * xb.len()];
                        let mut best = (f64::INFINITY, usize::MAX);
                        for &(da, i) in &cand {
                            if da > best.0 {
                                break;
                            }
                            let e = da.hypot(dv[i]);
                            if e < best.0 || (e == best.0 && i < best.1) {
                                best = (e, i);
                            }
                        }
                        *d = best.0;
                        *o = best.1;
                    }
                });
            return (nd, owner);
        }
        for (i, p) in pts.iter().enumerate() {
            self.absorb(p, i, f64::INFINITY, &mut nd, &mut owner);
        }
        (nd, owner)
    }
}

fn min_pairwise_distance(points: &[ManifoldPoint]) -> f64 {
    if points.len() < 2 {
        return f64::INFINITY;
    }
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            points[i + 1..]
                .iter()
                .map(|q| points[i].distance(q).unwrap_or(f64::INFINITY))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

fn certify(manifold: Manifold, points: &[ManifoldPoint], grid_density: usize) -> Result<Certificate> {
    let grid = CoverGrid::new(manifold, grid_density)?;
    let (nd, _) = grid.nearest(points);
    Ok(Certificate {
        min_distance: min_pairwise_distance(points),
        covering_radius: nd.iter().fold(0.0f64, |m, v| m.max(*v)),
        grid_density,
    })
}

/// Recomputes separation exactly and covering on a grid with `grid_density`
/// points per unit length.
pub fn verify_lattice(lattice: &Lattice, grid_density: usize) -> Result<Certificate> {
    if grid_density < 10 {
        return Err(Error::InvalidParameter(format!(
            "grid density {grid_density} below the minimum of 10 per unit length"
        )));
    }
    certify(lattice.manifold, &lattice.points, grid_density)
}

// ---------------------------------------------------------------------------
// generation

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    // uniform unit quaternion (Shoemake)
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (t2, t3) = (2.0 * PI * u2, 2.0 * PI * u3);
    let q = nalgebra::Quaternion::new(b * t3.cos(), a * t2.sin(), a * t2.cos(), b * t3.sin());
    *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix()
}

fn rotate_sphere(m: &Matrix3<f64>, p: &SpherePoint) -> SpherePoint {
    let v: Vector3<f64> = m * p.vector();
    SpherePoint::from_unit([v.x, v.y, v.z])
}

/// Spiral points on S², `n` of them.
fn spiral(n: usize) -> Vec<SpherePoint> {
    let golden = PI * (1.0 + 5f64.sqrt());
    (0..n)
        .map(|i| {
            let t = i as f64 + 0.5;
            let z = 1.0 - 2.0 * t / n as f64;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * t;
            SpherePoint::from_unit([s * phi.cos(), s * phi.sin(), z])
        })
        .collect()
}

/// Spiral points with spacing parameter `s = sqrt(4π/N)`.
fn spiral_with_spacing(s: f64) -> Vec<SpherePoint> {
    let n = ((4.0 * PI / (s * s)).round() as usize).max(1);
    spiral(n)
}

/// Greedy thinning: keeps a point (or antipodal pair) when it is at least
/// `sep` away from everything kept so far.
fn thin(points: Vec<ManifoldPoint>, sep: f64, symmetric: bool) -> Vec<ManifoldPoint> {
    let mut kept: Vec<ManifoldPoint> = Vec::new();
    for p in points {
        let ok = kept.iter().all(|q| p.distance(q).unwrap_or(0.0) >= sep);
        if !ok {
            continue;
        }
        if symmetric {
            if let ManifoldPoint::S2(x) = p {
                kept.push(p);
                kept.push(ManifoldPoint::S2(x.antipode()));
            }
        } else {
            kept.push(p);
        }
    }
    kept
}

/// Visits grid points from worst to best covered and inserts any still farther
/// than `radius` from the set. Inserted points are farther than `radius` from
/// everything present, so separation `>= radius` is preserved.
fn fill_holes(grid: &CoverGrid, mut points: Vec<ManifoldPoint>, radius: f64, symmetric: bool) -> Vec<ManifoldPoint> {
    let (mut nd, mut owner) = grid.nearest(&points);
    let cap = nd.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut order: Vec<usize> = (0..nd.len()).filter(|&g| nd[g] > radius).collect();
    order.sort_by(|&a, &b| nd[b].total_cmp(&nd[a]).then(a.cmp(&b)));
    for g in order {
        if nd[g] <= radius {
            continue;
        }
        let p = grid.point(g);
        let tag = points.len();
        points.push(p);
        grid.absorb(&p, tag, cap, &mut nd, &mut owner);
        if symmetric {
            if let ManifoldPoint::S2(x) = p {
                let q = ManifoldPoint::S2(x.antipode());
                points.push(q);
                grid.absorb(&q, tag + 1, cap, &mut nd, &mut owner);
            }
        }
    }
    points
}

/// Builds a certified ρ-lattice. Deterministic for a fixed seed.
///
/// Symmetric (antipodally closed) lattices are only defined on S².
pub fn generate_lattice(manifold: Manifold, rho: f64, symmetric: bool, seed: u64) -> Result<Lattice> {
    if !(rho > 1e-4 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho must exceed 1e-4, got {rho}")));
    }
    if symmetric && manifold != Manifold::S2 {
        return Err(Error::InvalidParameter(format!(
            "symmetric lattices are only defined on S2, not {manifold}"
        )));
    }
    let density = default_grid_density(rho);
    let grid = CoverGrid::new(manifold, density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * rho;

    let template: Vec<ManifoldPoint> = match manifold {
        Manifold::S2 => {
            let m = random_rotation(&mut rng);
            let pts = spiral_with_spacing(half / 0.8);
            pts.iter()
                .filter(|p| !symmetric || p.z() > 0.0)
                .map(|p| ManifoldPoint::S2(rotate_sphere(&m, p)))
                .collect()
        }
        Manifold::S2xS2 => {
            let (m1, m2) = (random_rotation(&mut rng), random_rotation(&mut rng));
            let f = spiral_with_spacing(half / 0.85);
            let a: Vec<_> = f.iter().map(|p| rotate_sphere(&m1, p)).collect();
            let b: Vec<_> = f.iter().map(|p| rotate_sphere(&m2, p)).collect();
            a.iter()
                .flat_map(|x| b.iter().map(move |y| ManifoldPoint::S2xS2(*x, *y)))
                .collect()
        }
        Manifold::SO3 => {
            let m = random_rotation(&mut rng);
            let s = 0.7 * rho;
            let na = ((2.0 * PI / s).ceil() as usize).max(1);
            let nb = ((PI / s).ceil() as usize).max(1);
            let mut out = Vec::with_capacity(na * na * nb);
            for ib in 0..nb {
                let beta = PI * (ib as f64 + 0.5) / nb as f64;
                // fewer angles where Z(gamma)X(beta)Z(alpha) degenerates
                let nab = ((na as f64 * beta.sin()).ceil() as usize).max(1);
                for ia in 0..nab {
                    for ig in 0..na {
                        let alpha = 2.0 * PI * ia as f64 / nab as f64;
                        let gamma = 2.0 * PI * ig as f64 / na as f64;
                        let g = RotationPoint::from_euler(alpha, beta, gamma);
                        let r = RotationPoint::from_matrix(m * g.matrix()).expect("rotation product");
                        out.push(ManifoldPoint::SO3(r));
                    }
                }
            }
            out
        }
    };

    let thinned = thin(template, half, symmetric);
    let points = fill_holes(&grid, thinned, half, symmetric);
    let lattice = Lattice::with_grid_density(manifold, points, rho, symmetric, density)?;
    if !lattice.is_certified() {
        return Err(Error::LatticeGeneration {
            covering_radius: lattice.certificate.covering_radius,
            target: half,
        });
    }
    Ok(lattice)
}

/// One great circle per antipodal pair, with the pair's first point as pole.
pub fn dual_circles(lattice: &Lattice) -> Result<Vec<GreatCircle>> {
    if !lattice.symmetric || lattice.manifold != Manifold::S2 {
        return Err(Error::NotSymmetric);
    }
    let pairs = antipode_pairs(&lattice.points).ok_or(Error::NotSymmetric)?;
    let pts = lattice.sphere_points().ok_or(Error::NotSymmetric)?;
    Ok(pairs
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < j)
        .map(|(i, _)| GreatCircle::new(pts[i]))
        .collect())
}

/// Nearest-point assignment of a fixed quadrature grid.
#[derive(Debug, Clone)]
pub struct VoronoiPartition {
    pub grid_points: Vec<ManifoldPoint>,
    pub grid_weights: Vec<f64>,
    /// Lattice index owning each grid cell (lowest index on ties).
    pub owner: Vec<usize>,
    /// Total grid mass per lattice point; sums to 1.
    pub masses: Vec<f64>,
}

/// Voronoi partition on a quadrature grid of spacing about `ρ/8`.
pub fn voronoi_partition(lattice: &Lattice) -> Result<VoronoiPartition> {
    let h = (lattice.rho / 8.0).clamp(0.02, 0.25);
    voronoi_partition_with_spacing(lattice, h)
}

/// Voronoi partition on a quadrature grid of spacing about `h`.
pub fn voronoi_partition_with_spacing(lattice: &Lattice, h: f64) -> Result<VoronoiPartition> {
    let (grid, weights): (CoverGrid, Vec<f64>) = match lattice.manifold {
        Manifold::S2 => {
            let g = SphereGrid::with_spacing(h);
            (CoverGrid::Sphere(g.points), g.weights)
        }
        Manifold::SO3 => {
            let g = RotationGrid::with_spacing(h);
            (CoverGrid::Rotation(g.points), g.weights)
        }
        Manifold::S2xS2 => {
            let g = SphereGrid::with_spacing(h);
            if g.len() * g.len() > MAX_GRID {
                return Err(Error::InvalidParameter("Voronoi grid too large".into()));
            }
            let w = g.weights.iter().flat_map(|a| g.weights.iter().map(move |b| a * b)).collect();
            (CoverGrid::Product(g.points.clone(), g.points), w)
        }
    };
    let (_, owner) = grid.nearest(&lattice.points);
    let mut masses = vec![0.0; lattice.len()];
    for (o, w) in owner.iter().zip(&weights) {
        masses[*o] += w;
    }
    let grid_points = (0..grid.len()).map(|g| grid.point(g)).collect();
    Ok(VoronoiPartition {
        grid_points,
        grid_weights: weights,
        owner,
        masses,
    })
}

/// Voronoi cell masses only, on a grid of spacing about `ρ/4`.
pub fn voronoi_masses(lattice: &Lattice) -> Result<Vec<f64>> {
    let h = (lattice.rho / 4.0).clamp(0.02, 0.3);
    let v = voronoi_partition_with_spacing(lattice, h)?;
    Ok(v.masses)
}
