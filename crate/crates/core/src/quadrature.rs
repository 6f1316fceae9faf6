//! Tensor-product quadrature grids used for Voronoi cell masses, projection
//! of step functions and covering certification.
//!
//! All weights are normalized so the manifold has total mass 1.

use std::f64::consts::PI;

use crate::harmonics::{RotationPoint, SpherePoint};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre: n must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre in `cos(theta)` times a uniform rule in `phi`.
///
/// Integrates every spherical polynomial of degree `< min(2 * n_theta, n_phi)`
/// exactly.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub points: Vec<SpherePoint>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (z, w) = gauss_legendre(n_theta);
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (zi, wi) in z.iter().zip(&w) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for p in 0..n_phi {
                let phi = 2.0 * PI * (p as f64 + 0.5) / n_phi as f64;
                points.push(SpherePoint::from_unit([s * phi.cos(), s * phi.sin(), *zi]));
                weights.push(0.5 * wi / n_phi as f64);
            }
        }
        SphereGrid { points, weights }
    }

    /// Grid exact for polynomials of degree `<= degree`.
    pub fn exact_for_degree(degree: usize) -> Self {
        SphereGrid::new(degree / 2 + 1, degree + 1)
    }

    /// Grid whose cells have roughly the given angular spacing.
    pub fn with_spacing(h: f64) -> Self {
        // even node counts keep the grid closed under the antipodal map
        let n_theta = ((PI / h).ceil() as usize).max(4).next_multiple_of(2);
        let n_phi = ((2.0 * PI / h).ceil() as usize).max(8).next_multiple_of(2);
        SphereGrid::new(n_theta, n_phi)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Euler-angle grid on SO(3): uniform in `alpha` and `gamma`,
/// Gauss-Legendre in `cos(beta)`. Weights follow the normalized Haar measure.
#[derive(Debug, Clone)]
pub struct RotationGrid {
    pub points: Vec<RotationPoint>,
    pub weights: Vec<f64>,
}

impl RotationGrid {
    pub fn new(n_alpha: usize, n_beta: usize, n_gamma: usize) -> Self {
        let (z, w) = gauss_legendre(n_beta);
        let mut points = Vec::with_capacity(n_alpha * n_beta * n_gamma);
        let mut weights = Vec::with_capacity(points.capacity());
        let scale = 0.5 / (n_alpha * n_gamma) as f64;
        for a in 0..n_alpha {
            let alpha = 2.0 * PI * (a as f64 + 0.5) / n_alpha as f64;
            for (zb, wb) in z.iter().zip(&w) {
                let beta = zb.clamp(-1.0, 1.0).acos();
                for c in 0..n_gamma {
                    let gamma = 2.0 * PI * (c as f64 + 0.5) / n_gamma as f64;
                    points.push(RotationPoint::from_euler(alpha, beta, gamma));
                    weights.push(wb * scale);
                }
            }
        }
        RotationGrid { points, weights }
    }

    /// Grid exact for all Wigner functions of degree `<= degree`.
    pub fn exact_for_degree(degree: usize) -> Self {
        RotationGrid::new(degree + 1, degree / 2 + 1, degree + 1)
    }

    pub fn with_spacing(h: f64) -> Self {
        let n = ((2.0 * PI / h).ceil() as usize).max(8);
        let nb = ((PI / h).ceil() as usize).max(4);
        RotationGrid::new(n, nb, n)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
