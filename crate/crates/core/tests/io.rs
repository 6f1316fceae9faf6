mod common;

use std::io::Cursor;

use common::*;
use manifold_radon::discretize::compute_cubature;
use manifold_radon::geometry::{generate_lattice, GreatCircle};
use manifold_radon::io::*;
use manifold_radon::spaces::{CoefIndex, HarmonicCoefficients, ManifoldPoint};
use manifold_radon::splines::{Functional, FunctionalSet};
use manifold_radon::{Error, Manifold};

fn bytes(f: impl FnOnce(&mut Vec<u8>)) -> Vec<u8> {
    let mut b = Vec::new();
    f(&mut b);
    b
}

#[test]
fn coefficients_round_trip_bit_exact() {
    let mut r = rng(1);
    for m in [Manifold::S2, Manifold::SO3, Manifold::S2xS2] {
        let c = random_coefficients(m, 20.0, &mut r);
        let b = bytes(|b| write_coefficients(b, &c).unwrap());
        let back = read_coefficients(Cursor::new(&b)).unwrap();
        assert_eq!(back.to_vector(), c.to_vector());
        assert_eq!(bytes(|b| write_coefficients(b, &back).unwrap()), b);
    }
}

#[test]
fn coefficient_parser_rejects_duplicates_and_bad_fields() {
    let dup = "MRCOEF v1 manifold=S2 omega=6\n1 2 0.5\n1 2 0.25\n";
    assert!(matches!(read_coefficients(Cursor::new(dup)), Err(Error::Parse { line: 3, .. })));
    let wrong = "MRCOEF v1 manifold=SO3 omega=6\n1 2 0.5\n";
    assert!(read_coefficients(Cursor::new(wrong)).is_err());
    let out_of_band = "MRCOEF v1 manifold=S2 omega=2\n2 1 1.0\n";
    assert!(read_coefficients(Cursor::new(out_of_band)).is_err());
}

#[test]
fn product_sphere_diagonal_shorthand() {
    let text = "MRCOEF v1 manifold=S2xS2 omega=4\n1 2 3 0.5\n";
    let c = read_coefficients(Cursor::new(text)).unwrap();
    assert_eq!(c.get(CoefIndex::S2xS2 { k1: 1, i: 2, k2: 1, j: 3 }), 0.5);
}

#[test]
fn lattice_and_cubature_round_trip() {
    let lat = generate_lattice(Manifold::S2, 0.6, true, 5).unwrap();
    let b = bytes(|b| write_lattice(b, &lat).unwrap());
    let back = read_lattice(Cursor::new(&b)).unwrap();
    assert_eq!(back.points(), lat.points());
    assert!(back.symmetric());
    let cub = compute_cubature(&lat, 12.0).unwrap();
    let b = bytes(|b| write_cubature(b, &cub).unwrap());
    let back = read_cubature(Cursor::new(&b)).unwrap();
    assert_eq!(back.weights(), cub.weights());
    assert_eq!(back.omega_exact(), 12.0);
}

#[test]
fn rotation_lattice_round_trip_is_stable() {
    let lat = generate_lattice(Manifold::SO3, 1.2, false, 5).unwrap();
    let b = bytes(|b| write_lattice(b, &lat).unwrap());
    let once = read_lattice(Cursor::new(&b)).unwrap();
    let b2 = bytes(|b| write_lattice(b, &once).unwrap());
    let twice = read_lattice(Cursor::new(&b2)).unwrap();
    assert_eq!(once.points(), twice.points());
    for (p, q) in lat.points().iter().zip(once.points()) {
        let (ManifoldPoint::SO3(a), ManifoldPoint::SO3(b)) = (p, q) else { unreachable!() };
        assert!((a.matrix() - b.matrix()).amax() < 1e-14);
    }
}

#[test]
fn spline_problem_round_trip() {
    let mut r = rng(3);
    let mut fs = Vec::new();
    for i in 0..8 {
        let p = random_sphere(&mut r);
        fs.push(match i % 4 {
            0 => Functional::Point(ManifoldPoint::S2(p)),
            1 => Functional::SymPair(p),
            2 => Functional::Circle(GreatCircle::new(p)),
            _ => Functional::Hemi(p),
        });
    }
    let set = FunctionalSet::new(Manifold::S2, fs).unwrap();
    let values: Vec<f64> = (0..8).map(|i| i as f64 / 3.0).collect();
    let b = bytes(|b| write_spline_problem(b, &set, &values, 2.5).unwrap());
    let p = read_spline_problem(Cursor::new(&b)).unwrap();
    assert_eq!(p.values, values);
    assert_eq!(p.t, 2.5);
    assert_eq!(p.functionals.len(), 8);
    let so3 = "MRSPL v1 manifold=SO3 t=3\nso3circ 0 0 1 1 0 0 0.5\npoint 0.1 0.2 0.3 1.0\n";
    let p = read_spline_problem(Cursor::new(so3)).unwrap();
    assert_eq!(p.functionals.len(), 2);
    assert!(read_spline_problem(Cursor::new("MRSPL v1 manifold=S2 t=3\nblob 1 2 3 4\n")).is_err());
}

#[test]
fn frame_manifest_round_trip() {
    let m = FrameManifest {
        manifold: Manifold::S2,
        j_max: 2,
        lattice_constant: 1.0,
        levels: vec![(0, "level0.mrcub".into()), (1, "level1.mrcub".into()), (2, "level2.mrcub".into())],
    };
    let b = bytes(|b| write_frame_manifest(b, &m).unwrap());
    assert_eq!(read_frame_manifest(Cursor::new(&b)).unwrap(), m);
}

#[test]
fn unit_coefficient_file_layout() {
    let c = HarmonicCoefficients::from_entries(Manifold::S2, 2.0, [(CoefIndex::S2 { k: 1, i: 2 }, 1.0)]).unwrap();
    let text = String::from_utf8(bytes(|b| write_coefficients(b, &c).unwrap())).unwrap();
    assert!(text.starts_with("MRCOEF v1 manifold=S2 omega=2\n"));
    assert!(text.contains("1 2 1.0000000000000000e0\n"));
}
