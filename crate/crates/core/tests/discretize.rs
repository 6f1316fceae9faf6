mod common;

use common::*;
use manifold_radon::discretize::*;
use manifold_radon::geometry::generate_lattice;
use manifold_radon::spaces::{CoefIndex, HarmonicCoefficients};
use manifold_radon::transforms::{funk_radon_forward, so3_radon_forward};
use manifold_radon::{Error, Manifold};

#[test]
fn product_bandwidth_values() {
    assert_eq!(product_bandwidth(2.0, 6.0, Manifold::S2), 12.0);
    assert_eq!(product_bandwidth(6.0, 6.0, Manifold::S2), 20.0);
    assert_eq!(product_bandwidth(12.0, 12.0, Manifold::S2xS2), 2.0 * 6.0 * 7.0);
}

#[test]
fn cubature_is_exact_and_positive() {
    for (rho, omega) in [(0.8, 6.0), (0.5, 20.0), (0.35, 42.0)] {
        let l = generate_lattice(Manifold::S2, rho, false, 21).unwrap();
        let c = compute_cubature(&l, omega).unwrap();
        assert!(c.weights().iter().all(|w| *w > 0.0));
        assert!((c.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(moment_residuals(&c, omega).unwrap().iter().all(|r| r.abs() < MOMENT_TOL));
        assert_eq!(first_violated_moment(&c, omega).unwrap(), None);
    }
}

#[test]
fn harmonic_recovered_from_samples() {
    let l = generate_lattice(Manifold::S2, 0.4, false, 22).unwrap();
    let c = compute_cubature(&l, product_bandwidth(12.0, 12.0, Manifold::S2)).unwrap();
    for i in 1..=7 {
        let y = HarmonicCoefficients::from_entries(Manifold::S2, 12.0, [(CoefIndex::S2 { k: 3, i }, 1.0)]).unwrap();
        let got = discrete_fourier(&sample(&y, l.points()), &c, 12.0).unwrap();
        assert!(got.max_abs_diff(&y) < 1e-9, "i = {i}");
    }
}

#[test]
fn infeasible_bandwidth_is_reported() {
    let l = generate_lattice(Manifold::S2, 1.2, false, 23).unwrap();
    assert!(compute_cubature(&l, 200.0).is_err());
}

#[test]
fn from_weights_rejects_bad_lists() {
    let l = generate_lattice(Manifold::S2, 0.8, false, 24).unwrap();
    let n = l.len();
    assert!(Cubature::from_weights(l.clone(), vec![1.0 / n as f64; n - 1], 0.0).is_err());
    let mut w = vec![1.0 / n as f64; n];
    w[0] = -w[0];
    assert!(Cubature::from_weights(l, w, 0.0).is_err());
}

#[test]
fn discrete_funk_radon_inversion() {
    let l = generate_lattice(Manifold::S2, 0.45, true, 25).unwrap();
    let c = compute_cubature(&l, product_bandwidth(12.0, 12.0, Manifold::S2)).unwrap();
    let f = keep_degrees(&random_coefficients(Manifold::S2, 12.0, &mut rng(1)), |k| k % 2 == 0);
    let rf = funk_radon_forward(&f).unwrap();
    let inv = discrete_invert_funk_radon(&sample(&rf, l.points()), &c, 12.0).unwrap();
    assert!(!inv.kernel_input);
    assert!(inv.coefficients.max_abs_diff(&f) < 1e-9);

    let odd = keep_degrees(&random_coefficients(Manifold::S2, 12.0, &mut rng(2)), |k| k % 2 == 1);
    let z = discrete_invert_funk_radon(&sample(&funk_radon_forward(&odd).unwrap(), l.points()), &c, 12.0).unwrap();
    assert!(z.kernel_input);

    let plain = generate_lattice(Manifold::S2, 0.45, false, 25).unwrap();
    let pc = compute_cubature(&plain, 20.0).unwrap();
    assert!(matches!(discrete_invert_funk_radon(&vec![0.0; plain.len()], &pc, 6.0), Err(Error::NotSymmetric)));
}

#[test]
fn discrete_so3_inversion() {
    let l = generate_lattice(Manifold::S2, 0.7, false, 26).unwrap();
    let a = compute_cubature(&l, 30.0).unwrap();
    let prod = product_cubature(&a, &a).unwrap();
    let g = random_coefficients(Manifold::SO3, 6.0, &mut rng(3));
    let rg = so3_radon_forward(&g).unwrap();
    let got = discrete_invert_so3(&sample(&rg, prod.points()), &prod, 6.0).unwrap();
    assert!(got.max_abs_diff(&g) < 1e-9);
}

#[test]
fn cubature_is_deterministic() {
    let l = generate_lattice(Manifold::S2, 0.6, false, 27).unwrap();
    let a = compute_cubature(&l, 12.0).unwrap();
    let b = compute_cubature(&l, 12.0).unwrap();
    assert_eq!(a.weights(), b.weights());
}

#[test]
fn products_stay_in_the_predicted_band() {
    let mut r = rng(30);
    let (f, g) = (random_coefficients(Manifold::S2, 12.0, &mut r), random_coefficients(Manifold::S2, 12.0, &mut r));
    let band = product_bandwidth(12.0, 12.0, Manifold::S2);
    // the general 4dω bound, d = dim SO(3)
    assert!(band <= 4.0 * 3.0 * 12.0);
    let l = generate_lattice(Manifold::S2, 0.22, false, 31).unwrap();
    let c = compute_cubature(&l, product_bandwidth(56.0, 56.0, Manifold::S2)).unwrap();
    let fg: Vec<f64> = sample(&f, l.points()).iter().zip(sample(&g, l.points())).map(|(a, b)| a * b).collect();
    let h = discrete_fourier(&fg, &c, 56.0).unwrap();
    for ((k, _), b) in h.blocks() {
        let top = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if k > 6 {
            assert!(top < 1e-10, "degree {k}: {top}");
        } else if k == 6 {
            assert!(top > 1e-3);
        }
    }
}
