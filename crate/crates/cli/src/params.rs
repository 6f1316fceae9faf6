//! Effective parameters: command-line flags over a key=value file over
//! built-in defaults. Every resolved value is remembered for the manifest.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;

use crate::Failure;

/// Keys that describe a run rather than configure it.
const RESERVED: [&str; 4] = ["command", "version", "config", "manifest"];

pub struct Params {
    command: String,
    flags: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
    effective: RefCell<BTreeMap<String, String>>,
}

/// Explicit command-line values of a (sub)command, keyed by long flag name.
pub fn explicit_flags(m: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for id in m.ids() {
        let id = id.as_str();
        if m.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        let value = match m.try_get_one::<bool>(id) {
            Ok(Some(b)) => b.to_string(),
            _ => match m.get_raw(id) {
                Some(raw) => raw.map(|s| s.to_string_lossy().into_owned()).collect::<Vec<_>>().join(","),
                None => continue,
            },
        };
        out.insert(id.to_string(), value);
    }
    out
}

/// Parses a key=value file; blank lines and `#` comments are skipped.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl Params {
    pub fn new(
        command: &str,
        flags: BTreeMap<String, String>,
        file: BTreeMap<String, String>,
    ) -> Result<Params, Failure> {
        if let Some(c) = file.get("command") {
            if c != command {
                return Err(Failure::Usage(format!("config was written for '{c}', not '{command}'")));
            }
        }
        Ok(Params {
            command: command.to_string(),
            flags,
            file,
            effective: RefCell::new(BTreeMap::new()),
        })
    }

    fn raw(&self, key: &str) -> Option<String> {
        if RESERVED.contains(&key) {
            return None;
        }
        self.flags.get(key).or_else(|| self.file.get(key)).cloned()
    }

    fn parse<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, Failure> {
        raw.parse()
            .map_err(|_| Failure::Usage(format!("invalid value '{raw}' for --{key}")))
    }

    fn record(&self, key: &str, value: impl Display) {
        self.effective.borrow_mut().insert(key.to_string(), value.to_string());
    }

    pub fn opt<T: FromStr + Display>(&self, key: &str) -> Result<Option<T>, Failure> {
        match self.raw(key) {
            Some(r) => {
                let v: T = self.parse(key, &r)?;
                self.record(key, &v);
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    pub fn req<T: FromStr + Display>(&self, key: &str) -> Result<T, Failure> {
        self.opt(key)?
            .ok_or_else(|| Failure::Usage(format!("missing required --{key}")))
    }

    pub fn or<T: FromStr + Display>(&self, key: &str, default: T) -> Result<T, Failure> {
        match self.opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default);
                Ok(default)
            }
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, Failure> {
        self.or(key, false)
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, Failure> {
        self.req::<String>(key).map(PathBuf::from)
    }

    pub fn opt_path(&self, key: &str) -> Result<Option<PathBuf>, Failure> {
        Ok(self.opt::<String>(key)?.map(PathBuf::from))
    }

    /// One of a fixed set of words.
    pub fn choice(&self, key: &str, allowed: &[&str], default: Option<&str>) -> Result<String, Failure> {
        let v = match default {
            Some(d) => self.or(key, d.to_string())?,
            None => self.req::<String>(key)?,
        };
        if !allowed.contains(&v.as_str()) {
            return Err(Failure::Usage(format!("--{key} must be one of {}, got '{v}'", allowed.join("|"))));
        }
        Ok(v)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Display>(&self, key: &str, default: &str) -> Result<Vec<T>, Failure> {
        let raw = self.or(key, default.to_string())?;
        raw.split(',').map(|w| self.parse(key, w.trim())).collect()
    }

    /// Manifest text: command, library version, then every effective value.
    pub fn manifest(&self, exit: i32) -> String {
        let mut s = String::from("# mradon run manifest\n");
        s.push_str(&format!("command={}\n", self.command));
        s.push_str(&format!("version={}\n", manifold_radon::VERSION));
        for (k, v) in self.effective.borrow().iter() {
            s.push_str(&format!("{k}={v}\n"));
        }
        s.push_str(&format!("# exit status {exit}\n"));
        s
    }
}
