use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mradon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mradon"))
        .args(args)
        .current_dir(dir)
        .env_remove("MR_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = mradon(dir, args);
    assert!(
        o.status.success(),
        "{args:?} failed ({:?}): {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

/// `key=value` from a report line.
fn field(out: &str, key: &str) -> f64 {
    out.split_whitespace()
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .parse()
        .unwrap()
}

/// An even S² function with a few low-degree terms.
const EVEN: &str = "MRCOEF v1 manifold=S2 omega=20\n0 1 0.5\n2 1 -0.25\n2 4 1.0\n4 3 0.75\n";
const ODD: &str = "MRCOEF v1 manifold=S2 omega=6\n1 2 1.0\n";

#[test]
fn lattice_is_certified_and_reproducible() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["lattice", "--manifold", "S2", "--rho", "0.2", "--symmetric", "--seed", "7", "--out", "a.mrlat"]);
    assert!(out.contains("certified=true"));
    ok(d.path(), &["lattice", "--manifold", "S2", "--rho", "0.2", "--symmetric", "--seed", "7", "--out", "b.mrlat"]);
    let a = fs::read(d.path().join("a.mrlat")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b.mrlat")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("MRLAT v1 manifold=S2 rho=0.2 symmetric=1\n"));
    let n = text.lines().count() - 1;
    assert_eq!(field(&out, "points") as usize, n);
    let manifest = fs::read_to_string(d.path().join("a.mrlat.manifest")).unwrap();
    assert!(manifest.contains("command=lattice\n") && manifest.contains("rho=0.2\n") && manifest.contains("version="));
}

#[test]
fn usage_errors_exit_64() {
    let d = TempDir::new().unwrap();
    assert_eq!(mradon(d.path(), &["lattice", "--manifold", "S2", "--out", "x"]).status.code(), Some(64));
    assert_eq!(mradon(d.path(), &["nonsense"]).status.code(), Some(64));
    assert_eq!(mradon(d.path(), &["lattice", "--rho", "abc", "--manifold", "S2", "--out", "x"]).status.code(), Some(64));
    assert_eq!(mradon(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn failures_map_to_exit_codes() {
    let d = TempDir::new().unwrap();
    // a symmetric rotation lattice is a precondition violation
    let o = mradon(d.path(), &["lattice", "--manifold", "SO3", "--rho", "1", "--symmetric", "--out", "x"]);
    assert_eq!(o.status.code(), Some(3));
    // a coarse lattice cannot carry a high-degree cubature
    ok(d.path(), &["lattice", "--manifold", "S2", "--rho", "1.2", "--out", "l.mrlat"]);
    let o = mradon(d.path(), &["cubature", "--lattice", "l.mrlat", "--omega", "200", "--out", "c.mrcub"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_manifest_replay() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("run.cfg"), "# lattice defaults\nmanifold=S2\nrho=0.5\nseed=3\nout=cfg.mrlat\n").unwrap();
    ok(d.path(), &["lattice", "--config", "run.cfg", "--rho", "0.6"]);
    let m = fs::read_to_string(d.path().join("cfg.mrlat.manifest")).unwrap();
    assert!(m.contains("rho=0.6\n") && m.contains("seed=3\n"));
    // replaying the manifest reproduces the output byte for byte
    ok(d.path(), &["lattice", "--config", "cfg.mrlat.manifest", "--out", "again.mrlat"]);
    assert_eq!(fs::read(d.path().join("cfg.mrlat")).unwrap(), fs::read(d.path().join("again.mrlat")).unwrap());
    // a manifest from another command is refused
    let o = mradon(d.path(), &["cubature", "--config", "cfg.mrlat.manifest"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn radon_round_trip_and_kernel() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("even.mrcoef"), EVEN).unwrap();
    fs::write(d.path().join("odd.mrcoef"), ODD).unwrap();
    ok(d.path(), &["radon", "--direction", "forward", "--transform", "funk", "--input", "even.mrcoef", "--out", "r.mrcoef"]);
    ok(d.path(), &["radon", "--direction", "inverse", "--transform", "funk", "--input", "r.mrcoef", "--out", "back.mrcoef"]);
    let back = fs::read_to_string(d.path().join("back.mrcoef")).unwrap();
    let want: Vec<Vec<f64>> = EVEN.lines().skip(1).map(|l| l.split(' ').map(|w| w.parse().unwrap()).collect()).collect();
    for l in back.lines().skip(1) {
        let v: Vec<f64> = l.split(' ').map(|w| w.parse().unwrap()).collect();
        let expect = want.iter().find(|w| w[0] == v[0] && w[1] == v[1]).map_or(0.0, |w| w[2]);
        assert!((v[2] - expect).abs() < 1e-12, "{l}");
    }
    let o = mradon(d.path(), &["radon", "--direction", "inverse", "--transform", "funk", "--input", "odd.mrcoef", "--out", "x"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degree 1"));
}

#[test]
fn so3_forward_lands_on_equal_degrees() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("w.mrcoef"), "MRCOEF v1 manifold=SO3 omega=2\n1 2 3 1.0\n").unwrap();
    ok(d.path(), &["radon", "--direction", "forward", "--transform", "so3", "--input", "w.mrcoef", "--out", "r.mrcoef"]);
    let text = fs::read_to_string(d.path().join("r.mrcoef")).unwrap();
    assert!(text.starts_with("MRCOEF v1 manifold=S2xS2"));
    let mut nonzero = 0;
    for l in text.lines().skip(1) {
        let w: Vec<&str> = l.split(' ').collect();
        let v: f64 = w[4].parse().unwrap();
        if v != 0.0 {
            assert_eq!(w[0], w[2], "{l}");
            nonzero += 1;
        }
    }
    assert_eq!(nonzero, 1);
}

#[test]
fn spline_through_circle_means() {
    let d = TempDir::new().unwrap();
    let mut text = String::from("MRSPL v1 manifold=S2 t=2.5\n");
    for i in 0..10 {
        let (a, b) = (0.7 * i as f64, 0.3 + 0.25 * i as f64);
        let (x, y, z) = (b.sin() * a.cos(), b.sin() * a.sin(), b.cos());
        text.push_str(&format!("circle {x:.17e} {y:.17e} {z:.17e} {}\n", 0.1 * i as f64 - 0.4));
    }
    fs::write(d.path().join("p.mrspl"), text).unwrap();
    let out = ok(d.path(), &["spline", "--problem", "p.mrspl", "--out", "s.mrcoef"]);
    assert!(field(&out, "residual") < 1e-9, "{out}");
    assert_eq!(field(&out, "functionals"), 10.0);
    assert!(fs::read_to_string(d.path().join("s.mrcoef")).unwrap().starts_with("MRCOEF v1 manifold=S2"));
}

/// Symmetric lattice, samples of Rf for the even test function.
fn funk_samples(d: &Path) {
    fs::write(d.join("f.mrcoef"), EVEN).unwrap();
    ok(d, &["lattice", "--manifold", "S2", "--rho", "0.45", "--symmetric", "--seed", "5", "--out", "l.mrlat"]);
    ok(d, &["radon", "--direction", "forward", "--transform", "funk", "--input", "f.mrcoef", "--out", "rf.mrcoef"]);
    ok(d, &["sample", "--input", "rf.mrcoef", "--lattice", "l.mrlat", "--out", "rf.mrsmp"]);
}

#[test]
fn discrete_inversion_pipeline() {
    let d = TempDir::new().unwrap();
    funk_samples(d.path());
    ok(d.path(), &["cubature", "--lattice", "l.mrlat", "--omega", "90", "--out", "c.mrcub"]);
    let out = ok(
        d.path(),
        &["invert", "--method", "discrete", "--cubature", "c.mrcub", "--samples", "rf.mrsmp", "--omega", "20", "--truth", "f.mrcoef", "--out", "g.mrcoef"],
    );
    assert!(field(&out, "error_l2") < 1e-8, "{out}");
}

#[test]
fn iterative_and_frame_inversions() {
    let d = TempDir::new().unwrap();
    funk_samples(d.path());
    for method in ["iterative", "frame"] {
        let out = ok(
            d.path(),
            &["invert", "--method", method, "--lattice", "l.mrlat", "--samples", "rf.mrsmp", "--omega", "20", "--tol", "1e-12", "--truth", "f.mrcoef", "--trace", "t.tsv", "--out", "g.mrcoef"],
        );
        assert!(field(&out, "error_l2") < 1e-9, "{method}: {out}");
        let trace = fs::read_to_string(d.path().join("t.tsv")).unwrap();
        assert!(trace.starts_with("step\terror\tupdate\tratio\n"));
    }
}

#[test]
fn spline_inversion_table_decays() {
    let d = TempDir::new().unwrap();
    funk_samples(d.path());
    ok(
        d.path(),
        &["invert", "--method", "spline", "--lattice", "l.mrlat", "--samples", "rf.mrsmp", "--levels", "0,1,2", "--truth", "f.mrcoef", "--table", "e.tsv", "--out", "g.mrcoef"],
    );
    let table = fs::read_to_string(d.path().join("e.tsv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("level\terror_l2\tnorm_l2"));
    let err: Vec<f64> = lines.map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(err.len(), 3);
    assert!(err[1] < err[0] && err[2] < err[1], "{err:?}");
}

#[test]
fn reconstruct_from_point_samples() {
    let d = TempDir::new().unwrap();
    fs::write(d.path().join("f.mrcoef"), EVEN).unwrap();
    ok(d.path(), &["lattice", "--manifold", "S2", "--rho", "0.6", "--seed", "2", "--out", "l.mrlat"]);
    ok(d.path(), &["sample", "--input", "f.mrcoef", "--lattice", "l.mrlat", "--out", "f.mrsmp"]);
    for alg in ["voronoi", "frame"] {
        let out = ok(
            d.path(),
            &["reconstruct", "--algorithm", alg, "--lattice", "l.mrlat", "--samples", "f.mrsmp", "--omega", "20", "--tol", "1e-12", "--truth", "f.mrcoef", "--out", "g.mrcoef"],
        );
        assert!(out.contains("converged=true"), "{out}");
        assert!(field(&out, "error_l2") < 1e-10, "{alg}: {out}");
    }
    // a lattice far too sparse for the bandwidth
    ok(d.path(), &["lattice", "--manifold", "S2", "--rho", "1.5", "--seed", "2", "--out", "s.mrlat"]);
    ok(d.path(), &["sample", "--input", "f.mrcoef", "--lattice", "s.mrlat", "--out", "s.mrsmp"]);
    let o = mradon(d.path(), &["reconstruct", "--lattice", "s.mrlat", "--samples", "s.mrsmp", "--omega", "20", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn frame_build_analyze_synthesize() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["frame", "build", "--jmax", "2", "--seed", "1", "--out", "fr.mrfrm"]);
    assert!(field(&out, "parseval_defect") < 1e-9, "{out}");
    assert!(out.starts_with("level\tatoms\t"));
    assert!(d.path().join("fr.level2.mrcub").exists());
    let f = "MRCOEF v1 manifold=S2 omega=12\n0 1 1.0\n1 3 -0.5\n3 2 0.25\n";
    fs::write(d.path().join("f.mrcoef"), f).unwrap();
    let a = ok(d.path(), &["frame", "analyze", "--frame", "fr.mrfrm", "--input", "f.mrcoef", "--out", "a.tsv"]);
    assert!((field(&a, "energy") - field(&a, "norm_sq")).abs() < 1e-12);
    let s = ok(
        d.path(),
        &["frame", "synthesize", "--frame", "fr.mrfrm", "--input", "a.tsv", "--reference", "f.mrcoef", "--out", "g.mrcoef"],
    );
    assert!(field(&s, "max_abs_diff") < 1e-12, "{s}");
    let l = ok(d.path(), &["frame", "localization", "--frame", "fr.mrfrm", "--level", "2", "--atom", "4", "--out", "loc.tsv"]);
    assert!(field(&l, "atom_norm") <= 1.0 + 1e-12);
    let table = fs::read_to_string(d.path().join("loc.tsv")).unwrap();
    let rows: Vec<(f64, f64)> = table
        .lines()
        .skip(1)
        .map(|r| {
            let mut w = r.split('\t').map(|x| x.parse::<f64>().unwrap());
            (w.next().unwrap(), w.next().unwrap())
        })
        .collect();
    let near = rows.iter().filter(|(d, _)| *d < 0.2).map(|r| r.1).fold(0.0, f64::max);
    let far = rows.iter().filter(|(d, _)| *d > 1.5).map(|r| r.1).fold(0.0, f64::max);
    assert!(far < 0.1 * near);
}

#[test]
fn thread_count_does_not_change_output() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["lattice", "--manifold", "S2", "--rho", "0.3", "--seed", "9", "--threads", "1", "--out", "a.mrlat"]);
    ok(d.path(), &["cubature", "--lattice", "a.mrlat", "--omega", "42", "--threads", "1", "--out", "a.mrcub"]);
    let o = Command::new(env!("CARGO_BIN_EXE_mradon"))
        .args(["cubature", "--lattice", "a.mrlat", "--omega", "42", "--out", "b.mrcub"])
        .current_dir(d.path())
        .env("MR_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(d.path().join("a.mrcub")).unwrap(), fs::read(d.path().join("b.mrcub")).unwrap());
    assert_eq!(mradon(d.path(), &["lattice", "--threads", "0", "--manifold", "S2", "--rho", "1", "--out", "x"]).status.code(), Some(64));
}

#[test]
fn selftest_single_criterion() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["selftest", "--criterion", "2"]);
    assert!(out.starts_with("PASS [2]"));
    assert!(out.contains("selftest: 1/1 passed"));
    assert!(d.path().join("mradon-selftest.manifest").exists());
}
