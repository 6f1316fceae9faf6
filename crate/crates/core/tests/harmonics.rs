#![allow(clippy::needless_range_loop)]

use std::f64::consts::{PI, TAU};

use manifold_radon::harmonics::*;
use manifold_radon::quadrature::{RotationGrid, SphereGrid};
use proptest::prelude::*;

fn unit(v: [f64; 3]) -> Option<SpherePoint> {
    SpherePoint::new(v[0], v[1], v[2]).ok()
}

#[test]
fn spherical_harmonics_are_orthonormal() {
    let kmax = 10;
    let grid = SphereGrid::exact_for_degree(2 * kmax);
    let n = sh_offset(kmax + 1);
    let mut gram = vec![0.0; n * n];
    for (p, w) in grid.points.iter().zip(&grid.weights) {
        let y = sph_harmonics(kmax, p);
        for a in 0..n {
            for b in 0..n {
                gram[a * n + b] += w * y[a] * y[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((gram[a * n + b] - want).abs() < 1e-12, "({a},{b}): {}", gram[a * n + b]);
        }
    }
}

#[test]
fn wigner_functions_are_orthogonal() {
    let kmax = 4;
    let grid = RotationGrid::exact_for_degree(2 * kmax);
    let mut acc: Vec<Vec<f64>> = Vec::new();
    for (g, w) in grid.points.iter().zip(&grid.weights) {
        let ds = wigner_matrices(kmax, g);
        let flat: Vec<f64> = ds.iter().flat_map(|d| d.iter().copied()).collect();
        if acc.is_empty() {
            acc = vec![vec![0.0; flat.len()]; flat.len()];
        }
        for a in 0..flat.len() {
            for b in 0..flat.len() {
                acc[a][b] += w * flat[a] * flat[b];
            }
        }
    }
    // expected: δ / (2k+1) within a degree
    let mut off = 0;
    for k in 0..=kmax {
        let m = (2 * k + 1) * (2 * k + 1);
        for a in 0..acc.len() {
            for b in off..off + m {
                let want = if a == b { 1.0 / (2 * k + 1) as f64 } else { 0.0 };
                assert!((acc[a][b] - want).abs() < 1e-12, "k={k} ({a},{b}): {}", acc[a][b]);
            }
        }
        off += m;
    }
}

#[test]
fn laplacian_by_finite_differences() {
    let h = 1e-3;
    for k in 0..=6 {
        for i in 1..=2 * k + 1 {
            let idx = HarmonicIndex::sphere(k, i);
            let y = |t: f64, p: f64| eval_sph_harmonic(idx, &SpherePoint::from_angles(t, p)).unwrap();
            for (t, p) in [(0.7, 0.3), (1.9, 4.0), (2.6, 2.2)] {
                let dtt = (y(t + h, p) - 2.0 * y(t, p) + y(t - h, p)) / (h * h);
                let dt = (y(t + h, p) - y(t - h, p)) / (2.0 * h);
                let dpp = (y(t, p + h) - 2.0 * y(t, p) + y(t, p - h)) / (h * h);
                let lap = dtt + t.cos() / t.sin() * dt + dpp / t.sin().powi(2);
                let want = -eigenvalue(k) * y(t, p);
                let scale = eigenvalue(k).max(1.0) * ((2 * k + 1) as f64).sqrt();
                assert!((lap - want).abs() < 1e-5 * scale, "k={k} i={i}: {lap} vs {want}");
            }
        }
    }
}

#[test]
fn legendre_matches_closed_forms() {
    for u in [-0.9, -0.2, 0.0, 0.45, 1.0] {
        let p = legendre_all(3, u);
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert!((p[1] - u).abs() < 1e-15);
        assert!((p[2] - 0.5 * (3.0 * u * u - 1.0)).abs() < 1e-15);
        assert!((p[3] - 0.5 * (5.0 * u * u * u - 3.0 * u)).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn addition_theorem(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0)) {
        let (Some(x), Some(y)) = (unit(a), unit(b)) else { return Ok(()) };
        let kmax = 10;
        let yx = sph_harmonics(kmax, &x);
        let yy = sph_harmonics(kmax, &y);
        let p = legendre_all(kmax, x.dot(&y));
        for k in 0..=kmax {
            let s: f64 = (sh_offset(k)..sh_offset(k + 1)).map(|j| yx[j] * yy[j]).sum();
            let want = (2 * k + 1) as f64 * p[k];
            prop_assert!((s - want).abs() < 1e-11 * (2 * k + 1) as f64, "k={} {} vs {}", k, s, want);
        }
    }

    #[test]
    fn wigner_matrices_are_orthogonal(a in 0.0f64..TAU, b in 0.0f64..PI, c in 0.0f64..TAU) {
        let g = RotationPoint::from_euler(a, b, c);
        for d in wigner_matrices(5, &g) {
            let e = (&d * d.transpose() - nalgebra::DMatrix::identity(d.nrows(), d.nrows())).amax();
            prop_assert!(e < 1e-12);
        }
    }

    #[test]
    fn wigner_representation_is_multiplicative(
        a in prop::array::uniform3(0.0f64..3.0),
        b in prop::array::uniform3(0.0f64..3.0),
    ) {
        let g = RotationPoint::from_euler(a[0], a[1], a[2]);
        let h = RotationPoint::from_euler(b[0], b[1], b[2]);
        let dg = wigner_matrices(3, &g);
        let dh = wigner_matrices(3, &h);
        let dgh = wigner_matrices(3, &g.compose(&h));
        for k in 0..=3 {
            let e = (&dg[k] * &dh[k] - &dgh[k]).amax();
            prop_assert!(e < 1e-12, "k={} err {}", k, e);
        }
    }
}
