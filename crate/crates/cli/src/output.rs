//! CSV tables with a parameter-echo header, and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf".into() } else { "-inf".into() },
            Cell::Num(v) => format!("{v:.12e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric column by name.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn render(&self, header: &[String]) -> String {
        let mut s = String::new();
        for line in header {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `dir/stem.suffix` next to `out`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

/// Header lines: program line followed by the parameter echo.
pub fn header(command: &str, params: &toml::Table) -> Vec<String> {
    let mut lines = vec![format!("spp {} {command}", env!("CARGO_PKG_VERSION"))];
    let text = toml::to_string(params).unwrap_or_default();
    lines.extend(text.lines().filter(|l| !l.is_empty()).map(str::to_string));
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_render_in_scientific_notation() {
        assert_eq!(Cell::from(1500.0).render(), "1.500000000000e3");
        assert_eq!(Cell::from(f64::NAN).render(), "nan");
        assert_eq!(Cell::from(f64::NEG_INFINITY).render(), "-inf");
        assert_eq!(Cell::from(true).render(), "true");
        assert_eq!(Cell::Int(-4).as_f64(), Some(-4.0));
    }

    #[test]
    fn table_renders_header_then_rows() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![1.0.into(), "x".into()]);
        let text = t.render(&["one".into(), "two = 2".into()]);
        assert_eq!(text, "# one\n# two = 2\na,b\n1.000000000000e0,x\n");
        assert_eq!(t.values("a"), Some(vec![1.0]));
        assert!(t.values("b").unwrap()[0].is_nan());
        assert_eq!(t.values("c"), None);
    }

    #[test]
    fn sibling_replaces_extension() {
        assert_eq!(sibling(Path::new("out/run.csv"), "manifest.toml"), PathBuf::from("out/run.manifest.toml"));
        assert_eq!(sibling(Path::new("run"), "orth.csv"), PathBuf::from("run.orth.csv"));
    }

    #[test]
    fn header_echoes_parameters() {
        let mut p = toml::Table::new();
        p.insert("mu_c".into(), 0.5.into());
        let h = header("sigma", &p);
        assert!(h[0].starts_with("spp ") && h[0].ends_with(" sigma"));
        assert_eq!(h[1], "mu_c = 0.5");
    }
}
