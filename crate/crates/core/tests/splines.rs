mod common;

use common::*;
use manifold_radon::geometry::{generate_lattice, GreatCircle};
use manifold_radon::harmonics::{RotationPoint, SpherePoint};
use manifold_radon::spaces::{sobolev_norm, ManifoldPoint, SobolevOrder};
use manifold_radon::splines::*;
use manifold_radon::transforms::funk_radon_forward;
use manifold_radon::{Error, Manifold};

fn points(n: usize, seed: u64) -> Vec<SpherePoint> {
    let mut r = rng(seed);
    (0..n).map(|_| random_sphere(&mut r)).collect()
}

#[test]
fn interpolates_point_values() {
    let f = random_coefficients(Manifold::S2, 30.0, &mut rng(1));
    let set = FunctionalSet::new(Manifold::S2, points(40, 2).into_iter().map(|p| Functional::Point(ManifoldPoint::S2(p))).collect()).unwrap();
    let s = interpolate_function(&f, &set, 2.0).unwrap();
    assert!(s.residual < 1e-10);
    for g in set.entries() {
        assert!((s.apply(g).unwrap() - functional_apply(g, &f).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn spline_has_minimal_norm() {
    let f = random_coefficients(Manifold::S2, 20.0, &mut rng(3));
    let pts = points(30, 4);
    let mut fs: Vec<Functional> = pts[..10].iter().map(|p| Functional::Circle(GreatCircle::new(*p))).collect();
    fs.extend(pts[10..20].iter().map(|p| Functional::Hemi(*p)));
    fs.extend(pts[20..].iter().map(|p| Functional::Point(ManifoldPoint::S2(*p))));
    let set = FunctionalSet::new(Manifold::S2, fs).unwrap();
    let s = interpolate_function(&f, &set, 3.0).unwrap();
    let rep = optimality_check(&s, &f, 40, 5).unwrap();
    assert!(rep.passed(), "{rep:?}");
    // the spline never has more energy than the function it interpolates
    let order = SobolevOrder::for_manifold(Manifold::S2, 3.0);
    assert!(s.native_norm_sq() <= sobolev_norm(&f, order).powi(2) * (1.0 + 1e-9));
}

#[test]
fn gram_is_positive_definite() {
    let set = FunctionalSet::new(Manifold::S2, points(25, 6).into_iter().map(|p| Functional::Point(ManifoldPoint::S2(p))).collect()).unwrap();
    let s = solve_spline(&set, &[1.0; 25], 3.0).unwrap();
    assert!(gram_min_eigenvalue(&s) > 0.0);
    assert!(s.truncation.tail <= TAIL_TOL);
    // slow decay runs into the degree cap; the bound is still reported
    let rough = choose_truncation(&set, 1.5).unwrap();
    assert!(rough.tail > TAIL_TOL && rough.tail.is_finite());
}

#[test]
fn rejects_bad_inputs() {
    let p = SpherePoint::north();
    assert!(FunctionalSet::new(Manifold::S2, vec![Functional::Point(ManifoldPoint::S2(p)), Functional::Point(ManifoldPoint::S2(p))]).is_err());
    let set = FunctionalSet::new(Manifold::S2, vec![Functional::Point(ManifoldPoint::S2(p))]).unwrap();
    assert!(solve_spline(&set, &[1.0], min_smoothness(Manifold::S2)).is_err());
    assert!(solve_spline(&set, &[1.0, 2.0], 2.0).is_err());
    let so3 = Functional::Point(ManifoldPoint::SO3(RotationPoint::identity()));
    assert!(matches!(FunctionalSet::new(Manifold::S2, vec![so3]), Err(Error::ManifoldMismatch { .. })));
}

#[test]
fn rotation_group_splines() {
    let f = random_coefficients(Manifold::SO3, 6.0, &mut rng(7));
    let pts = points(40, 8);
    let fs: Vec<Functional> = pts.chunks(2).map(|c| Functional::SO3Circle(c[0], c[1])).collect();
    let set = FunctionalSet::new(Manifold::SO3, fs).unwrap();
    let s = interpolate_function(&f, &set, 2.5).unwrap();
    assert!(s.residual < 1e-9);
    assert!(optimality_check(&s, &f, 20, 9).unwrap().passed());
}

#[test]
fn inversion_error_shrinks_with_smoothness() {
    let l = generate_lattice(Manifold::S2, 0.5, true, 10).unwrap();
    let g = keep_degrees(&random_coefficients(Manifold::S2, 30.0, &mut rng(11)), |k| k % 2 == 0);
    let samples = sample(&funk_radon_forward(&g).unwrap(), l.points());
    let err: Vec<f64> = (0..2)
        .map(|ord| {
            let h = spline_inversion_funk_radon(&l, &samples, ord, 0.0, 100.0 * 101.0).unwrap();
            h.sub(&g).unwrap().l2_norm()
        })
        .collect();
    assert!(err[1] < err[0], "{err:?}");
    let plain = generate_lattice(Manifold::S2, 0.5, false, 10).unwrap();
    assert!(matches!(
        spline_inversion_funk_radon(&plain, &vec![0.0; plain.len()], 0, 0.0, 30.0),
        Err(Error::NotSymmetric)
    ));
}
