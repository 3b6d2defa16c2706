use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Floats are written with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The check could not be run at this resolution; reported as a warning.
    Inconclusive,
    /// Informational row without an assertion.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Info => "info",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    /// Used as the file suffix.
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Column index by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Verdicts found in the `verdict` column.
    pub fn verdicts(&self) -> Vec<Verdict> {
        let Some(c) = self.column("verdict") else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| match r[c].as_str() {
                "pass" => Verdict::Pass,
                "fail" => Verdict::Fail,
                "inconclusive" => Verdict::Inconclusive,
                _ => Verdict::Info,
            })
            .collect()
    }
}

/// Tables and notes produced by one task.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub label: String,
    pub task: String,
    pub config_echo: String,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl RunReport {
    pub fn verdicts(&self) -> Vec<Verdict> {
        self.tables.iter().flat_map(|t| t.verdicts()).collect()
    }

    pub fn passed(&self) -> bool {
        !self.verdicts().contains(&Verdict::Fail)
    }

    pub fn summary(&self) -> String {
        let v = self.verdicts();
        let count = |x: Verdict| v.iter().filter(|y| **y == x).count();
        format!(
            "{} {}: {} pass, {} fail, {} inconclusive",
            self.label,
            self.task,
            count(Verdict::Pass),
            count(Verdict::Fail),
            count(Verdict::Inconclusive)
        )
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} ({})", self.label, self.task);
        if !self.config_echo.is_empty() {
            let _ = writeln!(s, "\n## config\n{}", self.config_echo.trim_end());
        }
        for t in &self.tables {
            let _ = writeln!(s, "\n## {}\n{}", t.name, t.to_csv().trim_end());
        }
        for n in &self.notes {
            let _ = writeln!(s, "\nnote: {n}");
        }
        let _ = writeln!(s, "\n{}\nelapsed: {:.2} s", self.summary(), self.seconds);
        s
    }

    /// Writes `<prefix>-<table>.csv` per table and `<prefix>-report.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidParameter(format!("cannot write to {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for t in &self.tables {
            let path = dir.join(format!("{}-{}.csv", self.label, t.name));
            std::fs::File::create(&path).and_then(|mut f| f.write_all(t.to_csv().as_bytes())).map_err(io)?;
        }
        let path = dir.join(format!("{}-report.txt", self.label));
        std::fs::write(path, self.text()).map_err(io)
    }
}
