mod common;

use common::*;
use manifold_radon::discretize::{compute_cubature, product_bandwidth};
use manifold_radon::geometry::generate_lattice;
use manifold_radon::harmonics::{eval_sph_harmonic, HarmonicIndex};
use manifold_radon::quadrature::SphereGrid;
use manifold_radon::spaces::*;
use manifold_radon::{Error, Manifold};
use proptest::prelude::*;

#[test]
fn synthesis_matches_naive_double_loop() {
    let mut r = rng(1);
    let c = random_coefficients(Manifold::S2, 20.0, &mut r);
    let pts: Vec<ManifoldPoint> = (0..50).map(|_| ManifoldPoint::S2(random_sphere(&mut r))).collect();
    let fast = synthesize(&c, &pts).unwrap();
    for (p, v) in pts.iter().zip(fast) {
        let ManifoldPoint::S2(s) = p else { unreachable!() };
        let mut naive = 0.0;
        for (idx, x) in c.entries() {
            let CoefIndex::S2 { k, i } = idx else { unreachable!() };
            naive += x * eval_sph_harmonic(HarmonicIndex::sphere(k, i), s).unwrap();
        }
        assert!((v - naive).abs() < 1e-12);
    }
}

#[test]
fn analysis_on_certified_cubature_round_trips() {
    let omega = 12.0;
    let lat = generate_lattice(Manifold::S2, 0.45, false, 3).unwrap();
    let cub = compute_cubature(&lat, product_bandwidth(omega, omega, Manifold::S2)).unwrap();
    let mut r = rng(2);
    let c = random_coefficients(Manifold::S2, omega, &mut r);
    let v = synthesize(&c, cub.points()).unwrap();
    let triples: Vec<_> = cub.points().iter().zip(&v).zip(cub.weights()).map(|((p, v), w)| (*p, *v, *w)).collect();
    let back = analyze(Manifold::S2, &triples, omega, Some(cub.omega_exact())).unwrap();
    assert!(back.max_abs_diff(&c) < 1e-9);
    // a single harmonic comes back as a unit coefficient
    let y3 = HarmonicCoefficients::from_entries(Manifold::S2, omega, [(CoefIndex::S2 { k: 3, i: 2 }, 1.0)]).unwrap();
    let v = synthesize(&y3, cub.points()).unwrap();
    let triples: Vec<_> = cub.points().iter().zip(&v).zip(cub.weights()).map(|((p, v), w)| (*p, *v, *w)).collect();
    let back = analyze(Manifold::S2, &triples, omega, Some(cub.omega_exact())).unwrap();
    assert!(back.max_abs_diff(&y3) < 1e-9);
}

#[test]
fn analysis_requires_certificate_and_positive_weights() {
    let p = ManifoldPoint::S2(manifold_radon::harmonics::SpherePoint::north());
    assert!(matches!(analyze(Manifold::S2, &[(p, 1.0, 1.0)], 2.0, None), Err(Error::CertificateMissing)));
    assert!(matches!(analyze(Manifold::S2, &[(p, 1.0, -1.0)], 0.0, Some(100.0)), Err(Error::NonPositiveWeight)));
    assert!(matches!(
        analyze(Manifold::S2, &[(p, 1.0, 1.0)], 6.0, Some(6.0)),
        Err(Error::InsufficientExactness { .. })
    ));
}

#[test]
fn parseval_against_quadrature() {
    let mut r = rng(4);
    let c = random_coefficients(Manifold::S2, 30.0, &mut r);
    let grid = SphereGrid::exact_for_degree(12);
    let pts: Vec<ManifoldPoint> = grid.points.iter().map(|p| ManifoldPoint::S2(*p)).collect();
    let v = synthesize(&c, &pts).unwrap();
    let q: f64 = v.iter().zip(&grid.weights).map(|(v, w)| w * v * v).sum();
    assert!((q - c.l2_norm_sq()).abs() < 1e-9 * q);
}

#[test]
fn sobolev_examples() {
    let one = HarmonicCoefficients::from_entries(Manifold::S2, 0.0, [(CoefIndex::S2 { k: 0, i: 1 }, 1.0)]).unwrap();
    for t in [0.5, 2.0, 7.0] {
        assert!((sobolev_norm(&one, SobolevOrder::for_manifold(Manifold::S2, t)) - 1.0).abs() < 1e-15);
    }
    let y1 = HarmonicCoefficients::from_entries(Manifold::S2, 2.0, [(CoefIndex::S2 { k: 1, i: 3 }, 1.0)]).unwrap();
    let n = sobolev_norm(&y1, SobolevOrder::for_manifold(Manifold::S2, 1.0));
    assert!((n - 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn weyl_dimension_examples_and_monotonicity() {
    assert_eq!(weyl_dimension(Manifold::S2, 6.0), 9);
    assert_eq!(weyl_dimension(Manifold::SO3, 2.0), 10);
    for m in [Manifold::S2, Manifold::SO3, Manifold::S2xS2] {
        assert_eq!(weyl_dimension(m, 0.0), 1);
        let mut prev = 0;
        for w in 0..200 {
            let d = weyl_dimension(m, w as f64);
            assert!(d >= prev);
            prev = d;
        }
    }
}

proptest! {
    #[test]
    fn bernstein_bound(seed in 0u64..1000, t in 0.5f64..4.0) {
        let mut r = rng(seed);
        let omega = 20.0;
        let c = random_coefficients(Manifold::S2, omega, &mut r);
        let s = sobolev_norm(&c, SobolevOrder::for_manifold(Manifold::S2, t));
        prop_assert!(s <= (1.0 + omega).powf(t / 2.0) * c.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn sobolev_triangle_inequality(seed in 0u64..1000) {
        let mut r = rng(seed);
        let a = random_coefficients(Manifold::SO3, 12.0, &mut r);
        let b = random_coefficients(Manifold::SO3, 12.0, &mut r);
        let o = SobolevOrder::for_manifold(Manifold::SO3, 1.5);
        let sum = a.axpy(1.0, &b).unwrap();
        prop_assert!(sobolev_norm(&sum, o) <= sobolev_norm(&a, o) + sobolev_norm(&b, o) + 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_contracting(seed in 0u64..1000, w in 0.0f64..40.0) {
        let mut r = rng(seed);
        let c = random_coefficients(Manifold::S2, 30.0, &mut r);
        let p = project_bandlimit(&c, w);
        prop_assert!(p.l2_norm() <= c.l2_norm() + 1e-15);
        prop_assert_eq!(project_bandlimit(&p, w).to_vector(), p.to_vector());
        if w >= 30.0 {
            prop_assert!(p.max_abs_diff(&c) == 0.0);
        }
    }
}
