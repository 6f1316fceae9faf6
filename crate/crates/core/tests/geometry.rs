mod common;

use common::*;
use manifold_radon::geometry::*;
use manifold_radon::harmonics::SpherePoint;
use manifold_radon::spaces::ManifoldPoint;
use manifold_radon::{Error, Manifold};

#[test]
fn coarse_sphere_lattice_is_small() {
    let l = generate_lattice(Manifold::S2, std::f64::consts::PI, false, 1).unwrap();
    assert!(l.len() <= 6);
    assert!(l.is_certified());
}

#[test]
fn symmetric_lattice_contains_antipodes() {
    let l = generate_lattice(Manifold::S2, 0.2, true, 7).unwrap();
    let pts = l.sphere_points().unwrap();
    for p in &pts {
        let a = p.antipode();
        assert!(pts.iter().any(|q| q.distance(&a) < 1e-12));
    }
    let n = l.len() as f64 * 0.04;
    assert!((30.0..=34.0).contains(&n), "|M| rho^2 = {n}");
    assert_eq!(dual_circles(&l).unwrap().len(), l.len() / 2);
}

#[test]
fn generated_lattices_verify_across_seeds() {
    for seed in 0..20 {
        let l = generate_lattice(Manifold::S2, 0.5, seed % 2 == 0, seed).unwrap();
        assert!(l.certificate().satisfies(0.5));
        // a finer grid can only find holes the generation grid's own mesh hides
        let c = verify_lattice(&l, 40).unwrap();
        let mesh = 1.0 / default_grid_density(0.5) as f64;
        assert!(c.covering_radius <= 0.25 + mesh, "seed {seed}: {c:?}");
        assert!(c.covering_radius >= l.certificate().covering_radius - mesh);
        // brute-force separation
        let mut min = f64::INFINITY;
        for i in 0..l.len() {
            for j in 0..i {
                min = min.min(l.points()[i].distance(&l.points()[j]).unwrap());
            }
        }
        assert_eq!(min, c.min_distance);
    }
}

#[test]
fn rotation_and_product_lattices_certify() {
    for m in [Manifold::SO3, Manifold::S2xS2] {
        let l = generate_lattice(m, 1.3, false, 2).unwrap();
        assert!(l.is_certified(), "{m}: {:?}", l.certificate());
        assert!(l.points().iter().all(|p| p.manifold() == m));
    }
}

#[test]
fn identical_seeds_give_identical_lattices() {
    for m in [Manifold::S2, Manifold::SO3] {
        let a = generate_lattice(m, 0.9, false, 11).unwrap();
        let b = generate_lattice(m, 0.9, false, 11).unwrap();
        assert_eq!(a.points(), b.points());
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(generate_lattice(Manifold::S2, 1e-5, false, 0).is_err());
    assert!(generate_lattice(Manifold::SO3, 0.5, true, 0).is_err());
    let l = generate_lattice(Manifold::S2, 0.5, false, 0).unwrap();
    assert!(verify_lattice(&l, 5).is_err());
    assert!(matches!(dual_circles(&l), Err(Error::NotSymmetric)));
}

#[test]
fn poles_give_equator() {
    let n = SpherePoint::north();
    let l = Lattice::new(
        Manifold::S2,
        vec![ManifoldPoint::S2(n), ManifoldPoint::S2(n.antipode())],
        std::f64::consts::PI,
        true,
    )
    .unwrap();
    let c = dual_circles(&l).unwrap();
    assert_eq!(c.len(), 1);
    for k in 0..16 {
        assert!(c[0].point(k as f64 * 0.4).z().abs() < 1e-12);
    }
    assert!((l.certificate().min_distance - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn voronoi_masses_partition_unity() {
    let l = generate_lattice(Manifold::S2, 0.4, false, 3).unwrap();
    let part = voronoi_partition(&l).unwrap();
    assert!(part.masses.iter().all(|m| *m > 0.0));
    assert!((part.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let single = Lattice::new(Manifold::S2, vec![ManifoldPoint::S2(random_sphere(&mut rng(1)))], 7.0, false).unwrap();
    assert!((voronoi_masses(&single).unwrap()[0] - 1.0).abs() < 1e-12);
    let r = generate_lattice(Manifold::SO3, 1.2, false, 3).unwrap();
    let m = voronoi_masses(&r).unwrap();
    assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
