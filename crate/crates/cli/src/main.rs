//! `mradon`: command-line driver for lattices, cubature, transforms, splines,
//! frames and reconstruction.
//!
//! Exit codes: 0 success, 2 certification or feasibility failure, 3
//! precondition violation, 64 usage.

mod commands;
mod params;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use manifold_radon::Error;

use params::{explicit_flags, read_config, Params};

pub enum Failure {
    Usage(String),
    Lib(Error),
    /// Ran to completion but a checked property did not hold.
    Unmet(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn lib_code(e: &Error) -> u8 {
    match e {
        Error::LatticeGeneration { .. }
        | Error::CubatureInfeasible { .. }
        | Error::InsufficientExactness { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::RankDeficient { .. }
        | Error::Divergence { .. }
        | Error::CertificateMissing => 2,
        Error::FrameLevel { source, .. } => lib_code(source),
        _ => 3,
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Lib(e) => lib_code(e),
            Failure::Unmet(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Unmet(m) => f.write_str(m),
        }
    }
}

fn opt(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("VALUE").help(help)
}

fn switch(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).action(ArgAction::SetTrue).help(help)
}

fn out(help: &'static str) -> Arg {
    opt("out", help)
}

fn solver_args(c: Command) -> Command {
    c.arg(opt("tol", "stopping tolerance on the predicted error [1e-9]"))
        .arg(opt("max-steps", "iteration cap [200]"))
        .arg(opt("gamma", "frame algorithm step, inside (0, 2/B) [2/(A+B)]"))
        .arg(opt("trace", "TSV file for the per-step trace"))
}

fn cli() -> Command {
    Command::new("mradon")
        .version(manifold_radon::VERSION)
        .about("Sampling, splines, cubature, frames and Radon-type transform inversion on S2, S2xS2 and SO3")
        .subcommand_required(true)
        .arg(opt("threads", "worker threads [MR_THREADS, else all cores]").global(true))
        .arg(opt("config", "key=value file supplying any flag; a run manifest works").global(true))
        .arg(opt("manifest", "where to write the run manifest [<out>.manifest]").global(true))
        .subcommand(
            Command::new("lattice")
                .about("generate a certified lattice")
                .arg(opt("manifold", "S2, S2xS2 or SO3"))
                .arg(opt("rho", "mesh parameter"))
                .arg(switch("symmetric", "antipodally closed (S2 only)"))
                .arg(opt("seed", "random seed [0]"))
                .arg(out("MRLAT output file")),
        )
        .subcommand(
            Command::new("cubature")
                .about("positive-weight cubature on a lattice")
                .arg(opt("lattice", "MRLAT file"))
                .arg(opt("omega", "bandwidth to integrate exactly"))
                .arg(out("MRCUB output file")),
        )
        .subcommand(
            Command::new("sample")
                .about("evaluate coefficients on a lattice")
                .arg(opt("input", "MRCOEF file"))
                .arg(opt("lattice", "MRLAT file"))
                .arg(out("MRSMP output file")),
        )
        .subcommand(
            Command::new("radon")
                .about("spectral forward or inverse transform")
                .arg(opt("direction", "forward or inverse"))
                .arg(opt("transform", "funk, hemi, so3 or xray (forward only)"))
                .arg(opt("input", "MRCOEF file"))
                .arg(out("MRCOEF output file")),
        )
        .subcommand(
            Command::new("spline")
                .about("fit a variational spline to a problem file")
                .arg(opt("problem", "MRSPL file"))
                .arg(opt("t", "smoothness, overriding the file"))
                .arg(opt("omega-out", "bandwidth of the written coefficients [min(truncation, 420)]"))
                .arg(out("MRCOEF output file")),
        )
        .subcommand(solver_args(
            Command::new("invert")
                .about("recover f from samples of its transform")
                .arg(opt("method", "spline, discrete, iterative or frame"))
                .arg(opt("transform", "funk or so3 [funk]"))
                .arg(opt("samples", "MRSMP file"))
                .arg(opt("lattice", "MRLAT file (spline, iterative, frame)"))
                .arg(opt("cubature", "MRCUB file (discrete)"))
                .arg(opt("omega", "bandwidth of the transform (discrete, iterative, frame)"))
                .arg(opt("levels", "spline smoothness levels, comma separated [0]"))
                .arg(opt("t", "extra spline smoothness [0]"))
                .arg(opt("omega-out", "output bandwidth of the spline inversion [420]"))
                .arg(opt("truth", "MRCOEF file to measure errors against"))
                .arg(opt("table", "TSV file for the per-level table [stdout]"))
                .arg(out("MRCOEF output file")),
        ))
        .subcommand(
            Command::new("frame")
                .about("Parseval frames")
                .subcommand_required(true)
                .subcommand(
                    Command::new("build")
                        .about("build per-level cubatures and write a frame manifest")
                        .arg(opt("manifold", "S2 or SO3 [S2]"))
                        .arg(opt("jmax", "finest level [3]"))
                        .arg(opt("c", "lattice constant, rho_j = c 2^-j [1]"))
                        .arg(opt("seed", "random seed [0]"))
                        .arg(opt("checks", "random functions in the Parseval check [10]"))
                        .arg(out("MRFRM output file")),
                )
                .subcommand(
                    Command::new("analyze")
                        .about("frame coefficients of a function")
                        .arg(opt("frame", "MRFRM file"))
                        .arg(opt("input", "MRCOEF file"))
                        .arg(out("TSV output file")),
                )
                .subcommand(
                    Command::new("synthesize")
                        .about("function from frame coefficients")
                        .arg(opt("frame", "MRFRM file"))
                        .arg(opt("input", "TSV file written by analyze"))
                        .arg(opt("reference", "MRCOEF file to compare with"))
                        .arg(out("MRCOEF output file")),
                )
                .subcommand(
                    Command::new("localization")
                        .about("decay profile of one atom")
                        .arg(opt("frame", "MRFRM file"))
                        .arg(opt("level", "frame level"))
                        .arg(opt("atom", "atom index within the level [0]"))
                        .arg(out("TSV output file")),
                ),
        )
        .subcommand(solver_args(
            Command::new("reconstruct")
                .about("recover f in E_omega from point samples")
                .arg(opt("algorithm", "voronoi or frame [voronoi]"))
                .arg(opt("lattice", "MRLAT file"))
                .arg(opt("samples", "MRSMP file"))
                .arg(opt("omega", "bandwidth"))
                .arg(opt("truth", "MRCOEF file to measure errors against"))
                .arg(out("MRCOEF output file")),
        ))
        .subcommand(
            Command::new("selftest")
                .about("run the acceptance criteria")
                .arg(opt("criterion", "run one criterion (1-9)")),
        )
}

/// Deepest subcommand name path and its matches.
fn leaf(m: &ArgMatches) -> (Vec<&str>, &ArgMatches) {
    let mut names = Vec::new();
    let mut cur = m;
    while let Some((name, sub)) = cur.subcommand() {
        names.push(name);
        cur = sub;
    }
    (names, cur)
}

fn setup_threads(p: &Params) -> Result<(), Failure> {
    let n = match p.opt::<usize>("threads")? {
        Some(n) => Some(n),
        None => match std::env::var("MR_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("MR_THREADS must be a positive integer, got '{v}'")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(p: &Params, names: &[&str]) -> Result<(), Failure> {
    setup_threads(p)?;
    match names {
        ["lattice"] => commands::lattice(p),
        ["cubature"] => commands::cubature(p),
        ["sample"] => commands::sample(p),
        ["radon"] => commands::radon(p),
        ["spline"] => commands::spline(p),
        ["invert"] => commands::invert(p),
        ["frame", "build"] => commands::frame_build(p),
        ["frame", "analyze"] => commands::frame_analyze(p),
        ["frame", "synthesize"] => commands::frame_synthesize(p),
        ["frame", "localization"] => commands::frame_localization(p),
        ["reconstruct"] => commands::reconstruct(p),
        ["selftest"] => commands::selftest(p),
        _ => Err(Failure::Usage(format!("unknown command {}", names.join(" ")))),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    let (names, sub) = leaf(&matches);
    let command = names.join(" ");
    let flags = explicit_flags(sub);
    let config = sub.get_one::<String>("config").map(PathBuf::from);
    let manifest = sub.get_one::<String>("manifest").map(PathBuf::from);

    let params = config
        .as_deref()
        .map(read_config)
        .transpose()
        .and_then(|file| Params::new(&command, flags, file.unwrap_or_default()));
    let params = match params {
        Ok(p) => p,
        Err(e) => {
            eprintln!("mradon: {e}");
            return ExitCode::from(e.code());
        }
    };

    let result = run(&params, &names);
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mradon {command}: {e}");
            e.code()
        }
    };
    let manifest = manifest.unwrap_or_else(|| match params.opt::<String>("out").ok().flatten() {
        Some(o) => PathBuf::from(format!("{o}.manifest")),
        None => PathBuf::from(format!("mradon-{}.manifest", names.join("-"))),
    });
    if let Err(e) = std::fs::write(&manifest, params.manifest(code as i32)) {
        eprintln!("mradon: cannot write manifest {}: {e}", manifest.display());
        if code == 0 {
            return ExitCode::from(3);
        }
    }
    ExitCode::from(code)
}
