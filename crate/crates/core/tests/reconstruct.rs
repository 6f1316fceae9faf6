mod common;

use common::*;
use manifold_radon::discretize::{compute_cubature, discrete_fourier, product_bandwidth};
use manifold_radon::geometry::generate_lattice;
use manifold_radon::reconstruct::*;
use manifold_radon::spaces::HarmonicCoefficients;
use manifold_radon::{Error, Manifold};

#[test]
fn constants_are_reproduced() {
    let l = generate_lattice(Manifold::S2, 0.6, false, 1).unwrap();
    let one = HarmonicCoefficients::from_vector(Manifold::S2, 0.0, &[1.0]).unwrap().with_omega(6.0).unwrap();
    let v = voronoi_approximation(&vec![1.0; l.len()], &l, 6.0).unwrap();
    assert!(v.max_abs_diff(&one) < 1e-12);
}

#[test]
fn zero_samples_converge_immediately() {
    let l = generate_lattice(Manifold::S2, 0.6, false, 2).unwrap();
    let (c, trace) = iterative_reconstruct(&vec![0.0; l.len()], &l, 12.0, &IterationSettings::default()).unwrap();
    assert_eq!(c.max_abs(), 0.0);
    assert!(trace.converged && trace.steps <= 1);
}

#[test]
fn iterations_agree_with_cubature() {
    let l = generate_lattice(Manifold::S2, 0.6, false, 3).unwrap();
    let f = random_coefficients(Manifold::S2, 6.0, &mut rng(4));
    let v = sample(&f, l.points());
    let tol = 1e-10;
    let settings = IterationSettings { tol, max_steps: 500, truth: Some(&f) };
    let (a, ta) = iterative_reconstruct(&v, &l, 6.0, &settings).unwrap();
    let (b, tb) = frame_algorithm(&v, &l, 6.0, None, &settings).unwrap();
    assert!(ta.converged && tb.converged);
    assert!(ta.ratio < 1.0 && tb.ratio < 1.0);
    let cub = compute_cubature(&l, product_bandwidth(6.0, 6.0, Manifold::S2)).unwrap();
    let exact = discrete_fourier(&v, &cub, 6.0).unwrap();
    assert!(a.sub(&exact).unwrap().l2_norm() < 2.0 * tol);
    assert!(b.sub(&exact).unwrap().l2_norm() < 2.0 * tol);
}

#[test]
fn optimal_step_beats_conservative_step() {
    let l = generate_lattice(Manifold::S2, 0.6, false, 5).unwrap();
    let f = random_coefficients(Manifold::S2, 20.0, &mut rng(6));
    let v = sample(&f, l.points());
    let settings = IterationSettings { tol: 1e-10, max_steps: 2000, truth: Some(&f) };
    let (_, b) = pp_frame_bounds(&l, 20.0).unwrap();
    let (_, fast) = frame_algorithm(&v, &l, 20.0, None, &settings).unwrap();
    let (_, slow) = frame_algorithm(&v, &l, 20.0, Some(1.0 / b), &settings).unwrap();
    assert!(fast.steps < slow.steps, "{} vs {}", fast.steps, slow.steps);
    let eta = fast.bound.unwrap();
    assert!(fast.ratio <= eta + 1e-6);
    assert!(frame_algorithm(&v, &l, 20.0, Some(2.0 / b), &settings).is_err());
}

#[test]
fn sparse_lattice_is_rejected() {
    let l = generate_lattice(Manifold::S2, 1.5, false, 7).unwrap();
    assert!(matches!(pp_frame_bounds(&l, 72.0), Err(Error::RankDeficient { .. })));
    let v = vec![1.0; l.len()];
    let r = iterative_reconstruct(&v, &l, 72.0, &IterationSettings::default());
    assert!(matches!(r, Err(Error::RankDeficient { .. })));
    assert!(frame_algorithm(&v, &l, 72.0, None, &IterationSettings::default()).is_err());
}

#[test]
fn slow_contraction_is_reported_unconverged() {
    // barely enough points: the contraction is too weak for 200 steps
    let l = generate_lattice(Manifold::S2, 0.5, false, 7).unwrap();
    let f = random_coefficients(Manifold::S2, 110.0, &mut rng(10));
    let v = sample(&f, l.points());
    let (_, t) = iterative_reconstruct(&v, &l, 110.0, &IterationSettings { truth: Some(&f), ..Default::default() }).unwrap();
    assert!(!t.converged);
    assert_eq!(t.steps, 200);
    assert!(t.ratio > 0.5 && t.ratio < 1.0);
}

#[test]
fn sample_count_is_checked() {
    let l = generate_lattice(Manifold::S2, 0.6, false, 9).unwrap();
    assert!(iterative_reconstruct(&[1.0], &l, 6.0, &IterationSettings::default()).is_err());
}
