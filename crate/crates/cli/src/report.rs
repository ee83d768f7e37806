//! CSV tables and the pass/fail summary of an experiment run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One CSV file; every row gets the config fingerprint and seed appended on output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn merge(&mut self, other: Report) {
        self.tables.extend(other.tables);
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes `<name>.csv` per table and `summary.csv`; returns the paths written.
    pub fn write(&self, dir: &Path, fingerprint: &str, seed: u64) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
            writeln!(w, "{},config_fingerprint,seed", t.header.join(","))?;
            for r in &t.rows {
                let cells: Vec<String> = r.iter().map(|c| csv_field(c)).collect();
                writeln!(w, "{},{fingerprint},{seed}", cells.join(","))?;
            }
            w.flush()?;
            written.push(path);
        }
        let path = dir.join("summary.csv");
        let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "check,pass,detail,config_fingerprint,seed")?;
        for c in &self.checks {
            writeln!(
                w,
                "{},{},{},{fingerprint},{seed}",
                csv_field(&c.name),
                c.pass,
                csv_field(&c.detail)
            )?;
        }
        w.flush()?;
        written.push(path);
        Ok(written)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
