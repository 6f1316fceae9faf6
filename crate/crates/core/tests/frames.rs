mod common;

use std::sync::OnceLock;

use common::*;
use manifold_radon::discretize::{compute_cubature, product_bandwidth};
use manifold_radon::frames::*;
use manifold_radon::geometry::generate_lattice;
use manifold_radon::{Error, Manifold};

fn sphere_frame() -> &'static FrameSystem {
    static FS: OnceLock<FrameSystem> = OnceLock::new();
    FS.get_or_init(|| build_frame(Manifold::S2, 2, 1.0, 11).unwrap())
}

/// Frozen bracket for the N = 2 decay constant of level-2 atoms.
const DECAY_BRACKET: (f64, f64) = (5.0, 50.0);

#[test]
fn filters_partition_unity() {
    let bank = FilterBank::new(3).unwrap();
    assert!(bank.partition_residual(20000) < 1e-14);
    assert_eq!(smooth_step(0.5), 1.0);
    assert_eq!(smooth_step(4.0), 0.0);
    assert!(FilterBank::new(0).is_err());
}

#[test]
fn parseval_and_round_trip() {
    let fs = sphere_frame();
    for seed in 0..5 {
        let f = random_coefficients(Manifold::S2, 12.0, &mut rng(seed));
        let a = frame_analyze(&f, fs).unwrap();
        let energy: f64 = a.iter().flatten().map(|x| x * x).sum();
        assert!((energy - f.l2_norm_sq()).abs() < 1e-12 * f.l2_norm_sq());
        let back = frame_synthesize(&a, fs).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-12);
    }
}

#[test]
fn atoms_grow_geometrically() {
    let fs = sphere_frame();
    let n: Vec<usize> = fs.levels.iter().map(|l| l.atoms.len()).collect();
    for w in n.windows(2) {
        let r = w[1] as f64 / w[0] as f64;
        assert!((3.0..=5.0).contains(&r), "{n:?}");
    }
    for l in &fs.levels {
        assert!(l.atoms.iter().all(|a| a.coefficients.l2_norm() <= 1.0 + 1e-12));
        assert!(l.cubature.omega_exact() >= level_exactness(Manifold::S2, l.j));
    }
}

#[test]
fn atoms_are_localized() {
    let fs = sphere_frame();
    let rep = localization_profile(fs, 2, 3).unwrap();
    assert!((rep.center_value - rep.max_value).abs() <= 1e-9 * rep.max_value);
    let (_, c2) = rep.decay.iter().find(|(n, _)| *n == 2).copied().unwrap();
    assert!(c2 >= DECAY_BRACKET.0 && c2 <= DECAY_BRACKET.1, "decay constant {c2}");
    // level 2 stops at degree 7, so sidelobes stay near 5% of the peak
    let tail = rep.profile.iter().filter(|(d, _)| *d > 1.5).map(|(_, v)| *v).fold(0.0, f64::max);
    assert!(tail < 0.1 * rep.center_value, "{tail} vs {}", rep.center_value);
    assert!(localization_profile(fs, 5, 0).is_err());
}

#[test]
fn bandwidth_beyond_coverage_is_rejected() {
    let f = random_coefficients(Manifold::S2, 20.0, &mut rng(9));
    assert!(matches!(frame_analyze(&f, sphere_frame()), Err(Error::BandwidthExceeded { .. })));
}

#[test]
fn discrete_representation_recovers_samples() {
    let fs = sphere_frame();
    let f = random_coefficients(Manifold::S2, 12.0, &mut rng(12));
    let l = generate_lattice(Manifold::S2, 0.3, false, 13).unwrap();
    let master = compute_cubature(&l, product_bandwidth(56.0, 56.0, Manifold::S2)).unwrap();
    let got = discrete_frame_representation(&sample(&f, l.points()), &master, fs, 2).unwrap();
    assert_eq!(got.omega(), 15.0);
    assert!(keep_degrees(&got, |k| k > 3).max_abs() < 1e-10);
    assert!(got.with_omega(12.0).unwrap().max_abs_diff(&f) < 1e-10);
}

#[test]
fn rotation_group_frame() {
    let fs = build_frame(Manifold::SO3, 1, 1.2, 14).unwrap();
    let f = random_coefficients(Manifold::SO3, 2.0, &mut rng(15));
    let a = frame_analyze(&f, &fs).unwrap();
    let energy: f64 = a.iter().flatten().map(|x| x * x).sum();
    assert!((energy - f.l2_norm_sq()).abs() < 1e-12 * f.l2_norm_sq());
}

#[test]
fn product_sphere_frames_are_unsupported() {
    assert!(matches!(build_frame(Manifold::S2xS2, 1, 1.0, 0), Err(Error::InvalidParameter(_))));
}
