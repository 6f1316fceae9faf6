//! Tab-separated tables with a one-line header.

use std::io::Write;
use std::path::Path;

use manifold_radon::io::fmt_f64;

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

/// A table cell.
pub enum Cell {
    Int(usize),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Table {
    pub fn new(header: &[&'static str]) -> Table {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(
            row.into_iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Num(v) => fmt_f64(v),
                    Cell::Text(s) => s,
                })
                .collect(),
        );
    }

    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join("\t"))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join("\t"))?;
        }
        Ok(())
    }

    /// Writes to `path`, or to stdout when there is none.
    pub fn emit(&self, path: Option<&Path>) -> std::io::Result<()> {
        match path {
            Some(p) => {
                let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
                self.write(&mut f)?;
                f.flush()
            }
            None => self.write(&mut std::io::stdout().lock()),
        }
    }
}

/// Reads the numeric rows of a table written by [`Table::write`].
pub fn read_rows(text: &str, columns: usize) -> Result<Vec<Vec<f64>>, String> {
    let mut lines = text.lines().enumerate();
    lines.next().ok_or("empty table")?;
    let mut out = Vec::new();
    for (n, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = l
            .split('\t')
            .map(|w| w.trim().parse::<f64>().map_err(|_| format!("line {}: bad number '{w}'", n + 1)))
            .collect::<Result<_, _>>()?;
        if row.len() != columns {
            return Err(format!("line {}: expected {columns} columns, found {}", n + 1, row.len()));
        }
        out.push(row);
    }
    Ok(out)
}
