use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use manifold_radon::discretize::{
    compute_cubature, discrete_invert_funk_radon, discrete_invert_so3, Cubature,
};
use manifold_radon::frames::{self, assemble_frame, build_frame, localization_profile, FrameSystem};
use manifold_radon::geometry::{generate_lattice, Lattice};
use manifold_radon::io::{
    fmt_f64, read_coefficients, read_cubature, read_frame_manifest, read_lattice, read_samples, read_spline_problem,
    write_coefficients, write_cubature, write_frame_manifest, write_lattice, write_samples, FrameManifest,
};
use manifold_radon::reconstruct::{frame_algorithm, iterative_reconstruct, pp_frame_bounds, IterationSettings, IterationTrace};
use manifold_radon::selftest::{run_all, run_criterion, CRITERIA};
use manifold_radon::spaces::{max_degree, synthesize, weyl_dimension, HarmonicCoefficients};
use manifold_radon::splines::{solve_spline, spline_inversion_funk_radon, spline_inversion_so3};
use manifold_radon::transforms::{
    funk_radon_forward, funk_radon_inverse, hemispherical_forward, hemispherical_inverse, so3_radon_forward,
    so3_radon_inverse, xray_crystallographic,
};
use manifold_radon::{Error, Manifold};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::params::Params;
use crate::tables::{read_rows, Table};
use crate::Failure;

type Res = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Lib(Error::InvalidParameter(format!("cannot open {}: {e}", path.display()))))
}

fn create(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> manifold_radon::Result<()>) -> Res {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn manifold(p: &Params, default: Option<&str>) -> Result<Manifold, Failure> {
    let s = p.choice("manifold", &["S2", "S2xS2", "SO3"], default)?;
    Ok(Manifold::parse(&s).expect("checked"))
}

fn load_lattice(p: &Params) -> Result<Lattice, Failure> {
    Ok(read_lattice(open(&p.path("lattice")?)?)?)
}

fn load_coefficients(p: &Params, key: &str) -> Result<HarmonicCoefficients, Failure> {
    Ok(read_coefficients(open(&p.path(key)?)?)?)
}

fn load_optional(p: &Params, key: &str) -> Result<Option<HarmonicCoefficients>, Failure> {
    match p.opt_path(key)? {
        Some(path) => Ok(Some(read_coefficients(open(&path)?)?)),
        None => Ok(None),
    }
}

fn load_samples(p: &Params, n: usize) -> Result<Vec<f64>, Failure> {
    let v = read_samples(open(&p.path("samples")?)?)?;
    if v.len() != n {
        return Err(Error::InvalidParameter(format!("{} samples for {n} points", v.len())).into());
    }
    Ok(v)
}

fn save_coefficients(p: &Params, c: &HarmonicCoefficients) -> Res {
    create(&p.path("out")?, |w| write_coefficients(w, c))
}

pub fn lattice(p: &Params) -> Res {
    let m = manifold(p, None)?;
    let rho: f64 = p.req("rho")?;
    let symmetric = p.flag("symmetric")?;
    let seed: u64 = p.or("seed", 0)?;
    let out = p.path("out")?;
    let l = generate_lattice(m, rho, symmetric, seed)?;
    create(&out, |w| write_lattice(w, &l))?;
    let c = l.certificate();
    println!(
        "points={} min_distance={} covering_radius={} grid_density={} certified={}",
        l.len(),
        fmt_f64(c.min_distance),
        fmt_f64(c.covering_radius),
        c.grid_density,
        l.is_certified()
    );
    Ok(())
}

pub fn cubature(p: &Params) -> Res {
    let l = load_lattice(p)?;
    let omega: f64 = p.req("omega")?;
    let out = p.path("out")?;
    let c = compute_cubature(&l, omega)?;
    create(&out, |w| write_cubature(w, &c))?;
    let w = c.weights();
    println!(
        "points={} omega_exact={} residual={} min_weight={} max_weight={}",
        c.len(),
        c.omega_exact(),
        fmt_f64(c.residual()),
        fmt_f64(w.iter().copied().fold(f64::INFINITY, f64::min)),
        fmt_f64(w.iter().copied().fold(0.0, f64::max))
    );
    Ok(())
}

pub fn sample(p: &Params) -> Res {
    let c = load_coefficients(p, "input")?;
    let l = load_lattice(p)?;
    let out = p.path("out")?;
    let v = synthesize(&c, l.points())?;
    create(&out, |w| write_samples(w, &v))
}

pub fn radon(p: &Params) -> Res {
    let dir = p.choice("direction", &["forward", "inverse"], None)?;
    let t = p.choice("transform", &["funk", "hemi", "so3", "xray"], None)?;
    let c = load_coefficients(p, "input")?;
    let r = match (dir.as_str(), t.as_str()) {
        ("forward", "funk") => funk_radon_forward(&c)?,
        ("forward", "hemi") => hemispherical_forward(&c)?,
        ("forward", "so3") => so3_radon_forward(&c)?,
        ("forward", "xray") => xray_crystallographic(&c)?,
        ("inverse", "funk") => funk_radon_inverse(&c)?,
        ("inverse", "hemi") => hemispherical_inverse(&c)?,
        ("inverse", "so3") => so3_radon_inverse(&c)?,
        _ => return Err(Failure::Usage("the crystallographic transform has no inverse here".into())),
    };
    save_coefficients(p, &r)?;
    println!("manifold={} omega={} max_abs={}", r.manifold(), r.omega(), fmt_f64(r.max_abs()));
    Ok(())
}

pub fn spline(p: &Params) -> Res {
    let prob = read_spline_problem(open(&p.path("problem")?)?)?;
    let t = p.or("t", prob.t)?;
    let s = solve_spline(&prob.functionals, &prob.values, t)?;
    let omega = p.or("omega-out", s.truncation.omega.min(420.0))?;
    let c = s.coefficients(omega)?;
    save_coefficients(p, &c)?;
    println!(
        "functionals={} residual={} solver={:?} condition={} truncation_omega={} tail={} native_norm_sq={}",
        prob.functionals.len(),
        fmt_f64(s.residual),
        s.solver,
        fmt_f64(s.condition),
        s.truncation.omega,
        fmt_f64(s.truncation.tail),
        fmt_f64(s.native_norm_sq())
    );
    Ok(())
}

fn settings<'a>(p: &Params, truth: Option<&'a HarmonicCoefficients>) -> Result<IterationSettings<'a>, Failure> {
    let d = IterationSettings::default();
    Ok(IterationSettings {
        tol: p.or("tol", d.tol)?,
        max_steps: p.or("max-steps", d.max_steps)?,
        truth,
    })
}

fn write_trace(p: &Params, t: &IterationTrace) -> Res {
    let Some(path) = p.opt_path("trace")? else {
        return Ok(());
    };
    let mut table = Table::new(&["step", "error", "update", "ratio"]);
    let ratios = t.step_ratios();
    for (i, (e, u)) in t.errors.iter().zip(&t.updates).enumerate() {
        let r = if i == 0 { f64::NAN } else { ratios[i - 1] };
        table.push(vec![(i + 1).into(), (*e).into(), (*u).into(), r.into()]);
    }
    table.emit(Some(&path))?;
    Ok(())
}

fn report_trace(t: &IterationTrace) {
    println!(
        "steps={} converged={} ratio={} bound={}",
        t.steps,
        t.converged,
        fmt_f64(t.ratio),
        t.bound.map_or("none".to_string(), fmt_f64)
    );
}

/// Recovers the transform from point samples with one of the iterations.
fn iterate_samples(
    p: &Params,
    method: &str,
    l: &Lattice,
    v: &[f64],
    omega: f64,
    truth: Option<&HarmonicCoefficients>,
) -> Result<HarmonicCoefficients, Failure> {
    let s = settings(p, truth)?;
    let (c, trace) = if method == "frame" {
        let (a, b) = pp_frame_bounds(l, omega)?;
        println!("frame_bounds A={} B={}", fmt_f64(a), fmt_f64(b));
        frame_algorithm(v, l, omega, p.opt("gamma")?, &s)?
    } else {
        iterative_reconstruct(v, l, omega, &s)?
    };
    report_trace(&trace);
    write_trace(p, &trace)?;
    if !trace.converged {
        eprintln!("warning: stopped after {} steps without reaching tol", trace.steps);
    }
    Ok(c)
}

pub fn invert(p: &Params) -> Res {
    let method = p.choice("method", &["spline", "discrete", "iterative", "frame"], None)?;
    let transform = p.choice("transform", &["funk", "so3"], Some("funk"))?;
    let truth = load_optional(p, "truth")?;
    let out = match method.as_str() {
        "discrete" => {
            let cub = read_cubature(open(&p.path("cubature")?)?)?;
            let v = load_samples(p, cub.len())?;
            let omega: f64 = p.req("omega")?;
            discrete(&cub, &v, omega, &transform)?
        }
        "spline" => spline_levels(p, &transform, truth.as_ref())?,
        _ => {
            let l = load_lattice(p)?;
            let v = load_samples(p, l.len())?;
            let omega: f64 = p.req("omega")?;
            // the iteration knows only the transform, so errors are on Rf
            let truth_rf = truth.as_ref().map(|t| forward(t, &transform)).transpose()?;
            let rf = iterate_samples(p, &method, &l, &v, omega, truth_rf.as_ref())?;
            inverse_projected(&rf, &transform)?
        }
    };
    if let Some(t) = &truth {
        println!("error_l2={}", fmt_f64(out.sub(&t.clone().with_omega(out.omega())?)?.l2_norm()));
    }
    save_coefficients(p, &out)
}

fn forward(c: &HarmonicCoefficients, transform: &str) -> Result<HarmonicCoefficients, Failure> {
    Ok(if transform == "funk" { funk_radon_forward(c)? } else { so3_radon_forward(c)? })
}

/// Inverse after projecting onto the range: even degrees for the Funk-Radon
/// transform, equal-degree blocks for the SO(3) transform.
fn inverse_projected(rf: &HarmonicCoefficients, transform: &str) -> Result<HarmonicCoefficients, Failure> {
    Ok(if transform == "funk" {
        funk_radon_inverse(&rf.map_blocks(|(k, _), v| if k % 2 == 1 { 0.0 } else { v }))?
    } else {
        so3_radon_inverse(&rf.map_blocks(|(a, b), v| if a == b { v } else { 0.0 }))?
    })
}

fn discrete(cub: &Cubature, v: &[f64], omega: f64, transform: &str) -> Result<HarmonicCoefficients, Failure> {
    if transform == "funk" {
        let r = discrete_invert_funk_radon(v, cub, omega)?;
        if r.kernel_input {
            eprintln!("warning: samples carry no even part; the recovered function is zero");
        }
        Ok(r.coefficients)
    } else {
        Ok(discrete_invert_so3(v, cub, omega)?)
    }
}

fn spline_levels(p: &Params, transform: &str, truth: Option<&HarmonicCoefficients>) -> Result<HarmonicCoefficients, Failure> {
    let l = load_lattice(p)?;
    let v = load_samples(p, l.len())?;
    let levels: Vec<u32> = p.list("levels", "0")?;
    let t: f64 = p.or("t", 0.0)?;
    let omega_out: f64 = if transform == "funk" { p.or("omega-out", 420.0)? } else { 0.0 };
    let mut table = Table::new(&["level", "error_l2", "norm_l2"]);
    let mut last = None;
    for lev in levels {
        let c = if transform == "funk" {
            spline_inversion_funk_radon(&l, &v, lev, t, omega_out)?
        } else {
            spline_inversion_so3(&l, &v, lev, t)?
        };
        let err = match truth {
            Some(f) => {
                let w = c.omega().max(f.omega());
                c.clone().with_omega(w)?.sub(&f.clone().with_omega(w)?)?.l2_norm()
            }
            None => f64::NAN,
        };
        table.push(vec![(lev as usize).into(), err.into(), c.l2_norm().into()]);
        last = Some(c);
    }
    table.emit(p.opt_path("table")?.as_deref())?;
    last.ok_or_else(|| Failure::Usage("--levels is empty".into()))
}

pub fn reconstruct(p: &Params) -> Res {
    let method = p.choice("algorithm", &["voronoi", "frame"], Some("voronoi"))?;
    let l = load_lattice(p)?;
    let v = load_samples(p, l.len())?;
    let omega: f64 = p.req("omega")?;
    let truth = load_optional(p, "truth")?;
    let c = iterate_samples(p, &method, &l, &v, omega, truth.as_ref())?;
    if let Some(t) = &truth {
        println!("error_l2={}", fmt_f64(c.sub(&t.clone().with_omega(omega)?)?.l2_norm()));
    }
    save_coefficients(p, &c)
}

fn level_file(manifest: &Path, j: usize) -> String {
    let stem = manifest.file_stem().map_or("frame".into(), |s| s.to_string_lossy().into_owned());
    format!("{stem}.level{j}.mrcub")
}

fn random_in(m: Manifold, omega: f64, rng: &mut ChaCha8Rng) -> Result<HarmonicCoefficients, Failure> {
    let d = weyl_dimension(m, omega) as usize;
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    Ok(HarmonicCoefficients::from_vector(m, omega, &v)?)
}

pub fn frame_build(p: &Params) -> Res {
    let m = manifold(p, Some("S2"))?;
    let j_max: usize = p.or("jmax", 3)?;
    let c: f64 = p.or("c", 1.0)?;
    let seed: u64 = p.or("seed", 0)?;
    let checks: usize = p.or("checks", 10)?;
    let out = p.path("out")?;
    let fs = build_frame(m, j_max, c, seed)?;
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut manifest = FrameManifest {
        manifold: m,
        j_max,
        lattice_constant: c,
        levels: Vec::new(),
    };
    let mut table = Table::new(&["level", "atoms", "omega_exact", "band_low", "band_high", "weight_min", "weight_max"]);
    for l in &fs.levels {
        let name = level_file(&out, l.j);
        create(&dir.join(&name), |w| write_cubature(w, &l.cubature))?;
        manifest.levels.push((l.j, name));
        let (lo, hi) = fs.bank.band(l.j);
        let (wmin, wmax) = fs.weight_bracket(l.j).expect("level exists");
        table.push(vec![
            l.j.into(),
            l.atoms.len().into(),
            l.cubature.omega_exact().into(),
            lo.into(),
            hi.into(),
            wmin.into(),
            wmax.into(),
        ]);
    }
    create(&out, |w| write_frame_manifest(w, &manifest))?;
    table.emit(None)?;

    let k = max_degree(fs.bank.coverage());
    let omega = (k * (k + 1)) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut defect = 0.0f64;
    for _ in 0..checks {
        let f = random_in(m, omega, &mut rng)?;
        let a = frames::frame_analyze(&f, &fs)?;
        let energy: f64 = a.iter().flatten().map(|x| x * x).sum();
        defect = defect.max((energy - f.l2_norm_sq()).abs() / f.l2_norm_sq());
    }
    println!(
        "atoms={} partition_residual={} parseval_defect={} checked_omega={omega}",
        fs.atom_count(),
        fmt_f64(fs.bank.partition_residual(100_000)),
        fmt_f64(defect)
    );
    if defect > 1e-9 {
        return Err(Failure::Unmet(format!("Parseval defect {defect:e} exceeds 1e-9")));
    }
    Ok(())
}

fn load_frame(p: &Params) -> Result<FrameSystem, Failure> {
    let path = p.path("frame")?;
    let m = read_frame_manifest(open(&path)?)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut levels = m.levels.clone();
    levels.sort_by_key(|(j, _)| *j);
    if levels.iter().enumerate().any(|(i, (j, _))| i != *j) || levels.len() != m.j_max + 1 {
        return Err(Error::InvalidParameter(format!("frame manifest must list levels 0..={}", m.j_max)).into());
    }
    let cubs = levels
        .iter()
        .map(|(_, f)| Ok(read_cubature(open(&dir.join(PathBuf::from(f)))?)?))
        .collect::<Result<Vec<_>, Failure>>()?;
    let fs = assemble_frame(m.lattice_constant, cubs)?;
    if fs.manifold != m.manifold {
        return Err(Error::ManifoldMismatch {
            expected: m.manifold,
            found: fs.manifold,
        }
        .into());
    }
    Ok(fs)
}

pub fn frame_analyze(p: &Params) -> Res {
    let fs = load_frame(p)?;
    let f = load_coefficients(p, "input")?;
    let a = frames::frame_analyze(&f, &fs)?;
    let mut table = Table::new(&["level", "atom", "coefficient"]);
    for (j, level) in a.iter().enumerate() {
        for (k, c) in level.iter().enumerate() {
            table.push(vec![j.into(), k.into(), (*c).into()]);
        }
    }
    table.emit(Some(&p.path("out")?))?;
    let energy: f64 = a.iter().flatten().map(|x| x * x).sum();
    println!("coefficients={} energy={} norm_sq={}", fs.atom_count(), fmt_f64(energy), fmt_f64(f.l2_norm_sq()));
    Ok(())
}

pub fn frame_synthesize(p: &Params) -> Res {
    let fs = load_frame(p)?;
    let text = std::fs::read_to_string(p.path("input")?)?;
    let rows = read_rows(&text, 3).map_err(Error::InvalidParameter)?;
    let mut coeffs: Vec<Vec<f64>> = fs.levels.iter().map(|l| vec![f64::NAN; l.atoms.len()]).collect();
    for r in rows {
        let (j, k) = (r[0] as usize, r[1] as usize);
        let slot = coeffs
            .get_mut(j)
            .and_then(|l| l.get_mut(k))
            .ok_or_else(|| Error::InvalidParameter(format!("no atom ({j}, {k}) in this frame")))?;
        *slot = r[2];
    }
    if coeffs.iter().flatten().any(|c| c.is_nan()) {
        return Err(Error::InvalidParameter("coefficient table does not cover every atom".into()).into());
    }
    let f = frames::frame_synthesize(&coeffs, &fs)?;
    save_coefficients(p, &f)?;
    if let Some(r) = load_optional(p, "reference")? {
        let w = f.omega().max(r.omega());
        let d = f.clone().with_omega(w)?.max_abs_diff(&r.with_omega(w)?);
        println!("max_abs_diff={}", fmt_f64(d));
    }
    Ok(())
}

pub fn frame_localization(p: &Params) -> Res {
    let fs = load_frame(p)?;
    let j: usize = p.req("level")?;
    let k: usize = p.or("atom", 0)?;
    let rep = localization_profile(&fs, j, k)?;
    let mut table = Table::new(&["distance", "max_abs"]);
    for (d, v) in &rep.profile {
        table.push(vec![(*d).into(), (*v).into()]);
    }
    table.emit(Some(&p.path("out")?))?;
    let decay: Vec<String> = rep.decay.iter().map(|(n, c)| format!("decay_N{n}={}", fmt_f64(*c))).collect();
    println!(
        "level={j} atom={k} center_value={} atom_norm={} {}",
        fmt_f64(rep.center_value),
        fmt_f64(rep.atom_norm),
        decay.join(" ")
    );
    Ok(())
}

pub fn selftest(p: &Params) -> Res {
    let results = match p.opt::<usize>("criterion")? {
        Some(id) if (1..=CRITERIA).contains(&id) => vec![run_criterion(id)],
        Some(id) => return Err(Failure::Usage(format!("criterion must be in 1..={CRITERIA}, got {id}"))),
        None => run_all(),
    };
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("selftest: {passed}/{} passed", results.len());
    if passed != results.len() {
        return Err(Failure::Unmet(format!("{} criteria failed", results.len() - passed)));
    }
    Ok(())
}
