//! Output directory: CSV tables and the JSON run manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => format_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Writes into one directory and remembers what it wrote.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        let mut w =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes the manifest, which lists every file including itself.
    pub fn finish(mut self, mut manifest: Map<String, Value>) -> Result<Vec<String>> {
        self.files.push(MANIFEST.to_string());
        manifest.insert("files".into(), json!(self.files));
        let files = self.files.clone();
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&Value::Object(manifest))?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn manifest_lists_itself() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Output::create(dir.path()).unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0.into(), "x".into()]);
        out.csv("t.csv", &t).unwrap();
        let files = out.finish(Map::new()).unwrap();
        assert_eq!(files, vec!["t.csv", MANIFEST]);
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000000e0,x\n");
    }
}
