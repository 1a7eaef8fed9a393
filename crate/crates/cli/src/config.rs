//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sigma2_core::solver::SolveOptions;

pub const KEYS: [&str; 7] = [
    "grid.h",
    "grid.R",
    "solver.newton_tol",
    "solver.max_iters",
    "solver.mu_start",
    "cone.eps",
    "output.dir",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub solve: SolveOptions,
    pub output_dir: PathBuf,
    /// Keys set explicitly, as written.
    pub explicit: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            solve: SolveOptions::default(),
            output_dir: PathBuf::from("out"),
            explicit: BTreeMap::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| anyhow::anyhow!("{key}: cannot parse {v:?}: {e}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "grid.h" => self.solve.h = parse_num(key, v)?,
            "grid.R" => self.solve.radius = parse_num(key, v)?,
            "solver.newton_tol" => self.solve.newton_tol = parse_num(key, v)?,
            "solver.max_iters" => self.solve.max_iters = parse_num(key, v)?,
            "solver.mu_start" => self.solve.mu_start = parse_num(key, v)?,
            "cone.eps" => self.solve.cone_eps = parse_num(key, v)?,
            "output.dir" => {
                if v.is_empty() {
                    bail!("output.dir is empty");
                }
                self.output_dir = PathBuf::from(v);
            }
            _ => bail!(
                "unknown configuration key {key:?}; known keys: {}",
                KEYS.join(", ")
            ),
        }
        self.explicit.insert(key.to_string(), v.to_string());
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected key = value, got {raw:?}", n + 1);
            };
            self.set(k.trim(), v)
                .with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = RunConfig::default();
        cfg.parse_str(&text)
            .with_context(|| format!("in {}", path.display()))?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<()> {
        for s in sets {
            let Some((k, v)) = s.split_once('=') else {
                bail!("--set expects key=value, got {s:?}");
            };
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.solve.validate().context("invalid configuration")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let mut c = RunConfig::default();
        c.parse_str("# comment\ngrid.h = 0.05\ngrid.R=1.3\nsolver.max_iters = 12 # trailing\noutput.dir = results\n")
            .unwrap();
        assert_eq!(c.solve.h, 0.05);
        assert_eq!(c.solve.radius, 1.3);
        assert_eq!(c.solve.max_iters, 12);
        assert_eq!(c.output_dir, PathBuf::from("results"));
        assert_eq!(c.explicit.len(), 4);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut c = RunConfig::default();
        assert!(c.parse_str("grid.n = 4").is_err());
        assert!(c.parse_str("grid.h 0.1").is_err());
        assert!(c.parse_str("solver.max_iters = many").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = RunConfig::default();
        c.set("solver.mu_start", "0").unwrap();
        assert!(c.validate().is_err());
    }
}
