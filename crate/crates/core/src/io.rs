//! Plain-text file formats. Every file starts with a header line
//! `MAGIC v1 key=value ...`; numbers are written with 17 significant digits so
//! that a write/read round trip is bit-exact.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use crate::discretize::Cubature;
use crate::error::{Error, Manifold, Result};
use crate::geometry::{GreatCircle, Lattice};
use crate::harmonics::{RotationPoint, SpherePoint};
use crate::spaces::{CoefIndex, HarmonicCoefficients, ManifoldPoint};
use crate::splines::{Functional, FunctionalSet};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parsed `key=value` pairs of a header line.
#[derive(Debug, Clone, Default)]
pub struct Header {
    fields: BTreeMap<String, String>,
}

impl Header {
    fn parse(line: &str, magic: &str) -> Result<Header> {
        let mut words = line.split_whitespace();
        if words.next() != Some(magic) {
            return Err(parse_err(1, format!("expected {magic} header")));
        }
        if words.next() != Some("v1") {
            return Err(parse_err(1, "unsupported format version"));
        }
        let mut fields = BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| parse_err(1, format!("header field '{w}' is not key=value")))?;
            if fields.insert(k.to_string(), v.to_string()).is_some() {
                return Err(parse_err(1, format!("header key '{k}' repeated")));
            }
        }
        Ok(Header { fields })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| parse_err(1, format!("header lacks '{key}'")))
    }

    fn manifold(&self) -> Result<Manifold> {
        let s = self.require("manifold")?;
        Manifold::parse(s).ok_or_else(|| parse_err(1, format!("unknown manifold '{s}'")))
    }

    fn number(&self, key: &str) -> Result<f64> {
        let s = self.require(key)?;
        s.parse().map_err(|_| parse_err(1, format!("bad number for {key}: '{s}'")))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.require(key)? {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(parse_err(1, format!("{key} must be 0 or 1, got '{s}'"))),
        }
    }
}

/// Header plus the non-empty body lines with their 1-based line numbers.
fn read_body(r: impl BufRead, magic: &str) -> Result<(Header, Vec<(usize, String)>)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let header = Header::parse(&first, magic)?;
    let mut body = Vec::new();
    for (n, l) in lines.enumerate() {
        let l = l?;
        let t = l.trim();
        if !t.is_empty() && !t.starts_with('#') {
            body.push((n + 2, t.to_string()));
        }
    }
    Ok((header, body))
}

fn numbers(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|w| w.parse::<f64>().map_err(|_| parse_err(line, format!("bad number '{w}'"))))
        .collect()
}

fn indices(line: usize, words: &[&str]) -> Result<Vec<usize>> {
    words
        .iter()
        .map(|w| w.parse::<usize>().map_err(|_| parse_err(line, format!("bad index '{w}'"))))
        .collect()
}

fn sphere(line: usize, v: &[f64]) -> Result<SpherePoint> {
    // validate, but keep unit-length input bit-exact
    SpherePoint::new(v[0], v[1], v[2]).map_err(|e| parse_err(line, e.to_string()))?;
    Ok(SpherePoint::from_unit([v[0], v[1], v[2]]))
}

fn write_sphere(out: &mut String, p: &SpherePoint) {
    for c in [p.x(), p.y(), p.z()] {
        out.push(' ');
        out.push_str(&fmt_f64(c));
    }
}

fn point_fields(manifold: Manifold) -> usize {
    match manifold {
        Manifold::S2 | Manifold::SO3 => 3,
        Manifold::S2xS2 => 6,
    }
}

fn format_point(p: &ManifoldPoint) -> String {
    let mut s = String::new();
    match p {
        ManifoldPoint::S2(x) => write_sphere(&mut s, x),
        ManifoldPoint::S2xS2(x, y) => {
            write_sphere(&mut s, x);
            write_sphere(&mut s, y);
        }
        ManifoldPoint::SO3(g) => {
            let (a, b, c) = g.euler();
            for v in [a, b, c] {
                s.push(' ');
                s.push_str(&fmt_f64(v));
            }
        }
    }
    s.trim_start().to_string()
}

fn parse_point(manifold: Manifold, line: usize, v: &[f64]) -> Result<ManifoldPoint> {
    Ok(match manifold {
        Manifold::S2 => ManifoldPoint::S2(sphere(line, v)?),
        Manifold::S2xS2 => ManifoldPoint::S2xS2(sphere(line, &v[..3])?, sphere(line, &v[3..])?),
        Manifold::SO3 => ManifoldPoint::SO3(RotationPoint::from_euler(v[0], v[1], v[2])),
    })
}

/// Writes a coefficient file; S²×S² entries use `k1 i k2 j value`.
pub fn write_coefficients(w: &mut impl Write, c: &HarmonicCoefficients) -> Result<()> {
    writeln!(w, "MRCOEF v1 manifold={} omega={}", c.manifold(), c.omega())?;
    for (idx, v) in c.entries() {
        match idx {
            CoefIndex::S2 { k, i } => writeln!(w, "{k} {i} {}", fmt_f64(v))?,
            CoefIndex::SO3 { k, i, j } => writeln!(w, "{k} {i} {j} {}", fmt_f64(v))?,
            CoefIndex::S2xS2 { k1, i, k2, j } => writeln!(w, "{k1} {i} {k2} {j} {}", fmt_f64(v))?,
        }
    }
    Ok(())
}

/// Reads a coefficient file. On S²×S², four-field lines `k i j value` denote
/// the diagonal block `(k, k)`. Duplicate indices are rejected.
pub fn read_coefficients(r: impl BufRead) -> Result<HarmonicCoefficients> {
    let (h, body) = read_body(r, "MRCOEF")?;
    let manifold = h.manifold()?;
    let omega = h.number("omega")?;
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(body.len());
    for (n, l) in body {
        let words: Vec<&str> = l.split_whitespace().collect();
        let Some((last, head)) = words.split_last() else {
            continue;
        };
        let v: f64 = last.parse().map_err(|_| parse_err(n, format!("bad value '{last}'")))?;
        let ix = indices(n, head)?;
        let idx = match (manifold, ix.as_slice()) {
            (Manifold::S2, &[k, i]) => CoefIndex::S2 { k, i },
            (Manifold::SO3, &[k, i, j]) => CoefIndex::SO3 { k, i, j },
            (Manifold::S2xS2, &[k, i, j]) => CoefIndex::S2xS2 { k1: k, i, k2: k, j },
            (Manifold::S2xS2, &[k1, i, k2, j]) => CoefIndex::S2xS2 { k1, i, k2, j },
            _ => return Err(parse_err(n, format!("wrong field count for {manifold}"))),
        };
        if !seen.insert(idx) {
            return Err(parse_err(n, format!("duplicate index {idx:?}")));
        }
        entries.push((idx, v));
    }
    HarmonicCoefficients::from_entries(manifold, omega, entries)
}

/// Writes a lattice file: S² points as `x y z`, SO(3) as Euler angles.
pub fn write_lattice(w: &mut impl Write, l: &Lattice) -> Result<()> {
    writeln!(
        w,
        "MRLAT v1 manifold={} rho={} symmetric={}",
        l.manifold(),
        l.rho(),
        u8::from(l.symmetric())
    )?;
    for p in l.points() {
        writeln!(w, "{}", format_point(p))?;
    }
    Ok(())
}

fn read_points(manifold: Manifold, body: &[(usize, String)], extra: usize) -> Result<Vec<(ManifoldPoint, Vec<f64>)>> {
    let want = point_fields(manifold) + extra;
    body.iter()
        .map(|(n, l)| {
            let v = numbers(*n, l)?;
            if v.len() != want {
                return Err(parse_err(*n, format!("expected {want} numbers, found {}", v.len())));
            }
            let p = parse_point(manifold, *n, &v)?;
            Ok((p, v[point_fields(manifold)..].to_vec()))
        })
        .collect()
}

/// Reads a lattice file and re-certifies it.
pub fn read_lattice(r: impl BufRead) -> Result<Lattice> {
    let (h, body) = read_body(r, "MRLAT")?;
    let manifold = h.manifold()?;
    let rho = h.number("rho")?;
    let symmetric = h.flag("symmetric")?;
    let pts = read_points(manifold, &body, 0)?;
    Lattice::new(manifold, pts.into_iter().map(|p| p.0).collect(), rho, symmetric)
}

/// Writes a cubature file: point coordinates then the weight on each line.
/// `rho` and `symmetric` are recorded so the lattice can be restored.
pub fn write_cubature(w: &mut impl Write, c: &Cubature) -> Result<()> {
    let l = c.lattice();
    writeln!(
        w,
        "MRCUB v1 manifold={} omega={} rho={} symmetric={}",
        c.manifold(),
        c.omega_exact(),
        l.rho(),
        u8::from(l.symmetric())
    )?;
    for (p, wt) in c.points().iter().zip(c.weights()) {
        writeln!(w, "{} {}", format_point(p), fmt_f64(*wt))?;
    }
    Ok(())
}

/// Reads a cubature file and re-verifies positivity and exactness.
pub fn read_cubature(r: impl BufRead) -> Result<Cubature> {
    let (h, body) = read_body(r, "MRCUB")?;
    let manifold = h.manifold()?;
    let omega = h.number("omega")?;
    let symmetric = if h.get("symmetric").is_some() { h.flag("symmetric")? } else { false };
    let rows = read_points(manifold, &body, 1)?;
    let (points, weights): (Vec<_>, Vec<_>) = rows.into_iter().map(|(p, w)| (p, w[0])).unzip();
    let lattice = match h.get("rho") {
        Some(_) => Lattice::new(manifold, points, h.number("rho")?, symmetric)?,
        None => {
            // fall back to the certified covering radius
            let probe = Lattice::new(manifold, points.clone(), 1.0, symmetric)?;
            let rho = probe.certificate().covering_radius;
            Lattice::new(manifold, points, rho, symmetric)?
        }
    };
    Cubature::from_weights(lattice, weights, omega)
}

fn functional_line(f: &Functional, v: f64) -> String {
    let (tag, coords) = match f {
        Functional::Point(p) => ("point", format_point(p)),
        Functional::SymPair(x) => ("sympair", format_point(&ManifoldPoint::S2(*x))),
        Functional::Circle(c) => ("circle", format_point(&ManifoldPoint::S2(c.pole))),
        Functional::Hemi(p) => ("hemi", format_point(&ManifoldPoint::S2(*p))),
        Functional::SO3Circle(x, y) => ("so3circ", format_point(&ManifoldPoint::S2xS2(*x, *y))),
    };
    format!("{tag} {coords} {}", fmt_f64(v))
}

/// Writes a spline problem: one functional and its datum per line.
pub fn write_spline_problem(w: &mut impl Write, set: &FunctionalSet, values: &[f64], t: f64) -> Result<()> {
    if values.len() != set.len() {
        return Err(Error::InvalidParameter(format!(
            "{} values for {} functionals",
            values.len(),
            set.len()
        )));
    }
    writeln!(w, "MRSPL v1 manifold={} t={t}", set.manifold())?;
    for (f, v) in set.entries().iter().zip(values) {
        writeln!(w, "{}", functional_line(f, *v))?;
    }
    Ok(())
}

/// A parsed spline problem.
#[derive(Debug, Clone)]
pub struct SplineProblem {
    pub functionals: FunctionalSet,
    pub values: Vec<f64>,
    pub t: f64,
}

pub fn read_spline_problem(r: impl BufRead) -> Result<SplineProblem> {
    let (h, body) = read_body(r, "MRSPL")?;
    let manifold = h.manifold()?;
    let t = h.number("t")?;
    let mut entries = Vec::with_capacity(body.len());
    let mut values = Vec::with_capacity(body.len());
    for (n, l) in body {
        let (tag, rest) = l.split_once(char::is_whitespace).unwrap_or((l.as_str(), ""));
        let v = numbers(n, rest)?;
        let want = match tag {
            "point" => point_fields(manifold) + 1,
            "sympair" | "circle" | "hemi" => 4,
            "so3circ" => 7,
            _ => return Err(parse_err(n, format!("unknown functional '{tag}'"))),
        };
        if v.len() != want {
            return Err(parse_err(n, format!("{tag} needs {want} numbers, found {}", v.len())));
        }
        let f = match tag {
            "point" => Functional::Point(parse_point(manifold, n, &v)?),
            "sympair" => Functional::SymPair(sphere(n, &v)?),
            "circle" => Functional::Circle(GreatCircle::new(sphere(n, &v)?)),
            "hemi" => Functional::Hemi(sphere(n, &v)?),
            _ => Functional::SO3Circle(sphere(n, &v[..3])?, sphere(n, &v[3..6])?),
        };
        entries.push(f);
        values.push(v[want - 1]);
    }
    Ok(SplineProblem {
        functionals: FunctionalSet::new(manifold, entries)?,
        values,
        t,
    })
}

/// Writes sample values, one per line, in lattice order.
pub fn write_samples(w: &mut impl Write, values: &[f64]) -> Result<()> {
    writeln!(w, "MRSMP v1 n={}", values.len())?;
    for v in values {
        writeln!(w, "{}", fmt_f64(*v))?;
    }
    Ok(())
}

pub fn read_samples(r: impl BufRead) -> Result<Vec<f64>> {
    let (h, body) = read_body(r, "MRSMP")?;
    let n = h.number("n")?;
    let mut out = Vec::with_capacity(body.len());
    for (line, text) in body {
        match numbers(line, &text)?.as_slice() {
            [v] => out.push(*v),
            _ => return Err(parse_err(line, "expected one value")),
        }
    }
    if out.len() as f64 != n {
        return Err(parse_err(1, format!("header promises {n} values, found {}", out.len())));
    }
    Ok(out)
}

/// Frame manifest: per-level cubature file references.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameManifest {
    pub manifold: Manifold,
    pub j_max: usize,
    pub lattice_constant: f64,
    /// `(level, cubature file)`.
    pub levels: Vec<(usize, String)>,
}

pub fn write_frame_manifest(w: &mut impl Write, m: &FrameManifest) -> Result<()> {
    writeln!(
        w,
        "MRFRM v1 manifold={} Jmax={} c={}",
        m.manifold, m.j_max, m.lattice_constant
    )?;
    for (j, f) in &m.levels {
        writeln!(w, "level {j} cubature={f}")?;
    }
    Ok(())
}

pub fn read_frame_manifest(r: impl BufRead) -> Result<FrameManifest> {
    let (h, body) = read_body(r, "MRFRM")?;
    let manifold = h.manifold()?;
    let j_max = h
        .require("Jmax")?
        .parse()
        .map_err(|_| parse_err(1, "bad Jmax"))?;
    let lattice_constant = if h.get("c").is_some() { h.number("c")? } else { f64::NAN };
    let mut levels = Vec::new();
    for (n, l) in body {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words.as_slice() {
            ["level", j, file] => {
                let j = j.parse().map_err(|_| parse_err(n, format!("bad level '{j}'")))?;
                let file = file
                    .strip_prefix("cubature=")
                    .ok_or_else(|| parse_err(n, "expected cubature=<file>"))?;
                levels.push((j, file.to_string()));
            }
            _ => return Err(parse_err(n, "expected 'level <j> cubature=<file>'")),
        }
    }
    Ok(FrameManifest {
        manifold,
        j_max,
        lattice_constant,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_rejects_wrong_magic() {
        assert!(Header::parse("MRLAT v1 manifold=S2", "MRCOEF").is_err());
        assert!(Header::parse("MRCOEF v2 manifold=S2", "MRCOEF").is_err());
        let h = Header::parse("MRCOEF v1 manifold=SO3 omega=6", "MRCOEF").unwrap();
        assert_eq!(h.manifold().unwrap(), Manifold::SO3);
        assert_eq!(h.number("omega").unwrap(), 6.0);
    }

    #[test]
    fn samples_round_trip() {
        let v = vec![0.25, -1.0 / 7.0, 3e-200];
        let mut buf = Vec::new();
        write_samples(&mut buf, &v).unwrap();
        assert_eq!(read_samples(&buf[..]).unwrap(), v);
        assert!(read_samples(&b"MRSMP v1 n=2\n1.0\n"[..]).is_err());
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
