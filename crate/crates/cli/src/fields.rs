//! Conformal factors given on the command line or as CSV, and radial
//! profiles as CSV.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use sigma2_core::families::{mobius_conformal_factor, SphereMobius};
use sigma2_core::radial::RadialProfile;
use sigma2_core::{ChartGrid, ChartId, ScalarField, SphereField};

use crate::output::{Cell, Table};

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| anyhow!("{what}: {e}"))?;
    if v.len() != n {
        bail!(
            "{what}: expected {n} comma-separated numbers, got {}",
            v.len()
        );
    }
    Ok(v)
}

pub fn parse_point(s: &str) -> Result<[f64; 3]> {
    let v = parse_list(s, 3, "point")?;
    Ok([v[0], v[1], v[2]])
}

/// `zero`, `const:C`, `mobius:P1,P2,P3,T`, `two-bump`, or `@field.csv`.
pub fn parse_field_spec(spec: &str, grid: ChartGrid) -> Result<SphereField> {
    let s = spec.trim();
    if let Some(path) = s.strip_prefix('@') {
        return read_field_csv(Path::new(path));
    }
    if s == "zero" {
        return Ok(SphereField::constant(grid, 0.0));
    }
    if s == "two-bump" {
        let bump = |z: &[f64; 3], c: [f64; 3], a: f64| {
            a * (-8.0 * (1.0 - (z[0] * c[0] + z[1] * c[1] + z[2] * c[2]))).exp()
        };
        return Ok(SphereField::from_sphere_fn(grid, |z| {
            bump(z, [0.0, 0.0, 1.0], 2.0) + bump(z, [1.0, 0.0, 0.0], 1.8)
        }));
    }
    if let Some(c) = s.strip_prefix("const:") {
        let c: f64 = c.trim().parse().map_err(|e| anyhow!("const: {e}"))?;
        return Ok(SphereField::constant(grid, c));
    }
    if let Some(rest) = s.strip_prefix("mobius:") {
        let v = parse_list(rest, 4, "mobius")?;
        let m = SphereMobius::new([v[0], v[1], v[2]], v[3])?;
        return Ok(mobius_conformal_factor(grid, m));
    }
    bail!("unknown field specification {s:?}; expected zero, const:C, mobius:P1,P2,P3,T, two-bump or @file.csv")
}

pub const FIELD_HEADER: [&str; 9] = ["chart", "i", "j", "x1", "x2", "z1", "z2", "z3", "u"];

pub fn field_table(u: &SphereField) -> Table {
    let mut t = Table::new(&FIELD_HEADER);
    for c in ChartId::BOTH {
        let f = u.chart(c);
        let g = f.grid;
        for k in 0..g.node_count() {
            let (i, j) = g.ij(k);
            let x = g.node(k);
            let z = g.sphere_point(k).0;
            t.push(vec![
                c.label().into(),
                i.into(),
                j.into(),
                x[0].into(),
                x[1].into(),
                z[0].into(),
                z[1].into(),
                z[2].into(),
                f.values[k].into(),
            ]);
        }
    }
    t
}

/// Reads a field written by [`field_table`].
pub fn read_field_csv(path: &Path) -> Result<SphereField> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{}: missing column {name:?}", path.display()))
    };
    let (ci, ii, ji, xi, ui) = (col("chart")?, col("i")?, col("j")?, col("x1")?, col("u")?);
    let mut charts: BTreeMap<usize, Vec<(usize, usize, f64, f64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let chart =
            ChartId::from_label(&rec[ci]).ok_or_else(|| anyhow!("unknown chart {:?}", &rec[ci]))?;
        let i: usize = rec[ii].parse()?;
        let j: usize = rec[ji].parse()?;
        let x1: f64 = rec[xi].parse()?;
        let u: f64 = rec[ui].parse()?;
        charts.entry(chart.index()).or_default().push((i, j, x1, u));
    }
    let mut fields = Vec::new();
    for c in ChartId::BOTH {
        let rows = charts
            .get(&c.index())
            .ok_or_else(|| anyhow!("{}: no rows for chart {}", path.display(), c.label()))?;
        let n = rows.iter().map(|r| r.0.max(r.1)).max().unwrap_or(0) + 1;
        let radius = rows
            .iter()
            .find(|r| r.0 == 0)
            .map(|r| -r.2)
            .ok_or_else(|| anyhow!("chart {}: no boundary column", c.label()))?;
        let g = ChartGrid::with_intervals(c, radius, n - 1)?;
        if rows.len() != g.node_count() {
            bail!(
                "chart {}: {} rows for a {}x{} grid",
                c.label(),
                rows.len(),
                n,
                n
            );
        }
        let mut vals = vec![f64::NAN; g.node_count()];
        for &(i, j, _, u) in rows {
            vals[g.index(i, j)] = u;
        }
        fields.push(ScalarField::new(g, vals)?);
    }
    let south = fields.pop().expect("two charts");
    let north = fields.pop().expect("two charts");
    Ok(SphereField::new(north, south)?)
}

/// Reads `r,u` columns.
pub fn read_profile_csv(path: &Path) -> Result<RadialProfile> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let ri = headers
        .iter()
        .position(|h| h == "r")
        .ok_or_else(|| anyhow!("missing column \"r\""))?;
    let ui = headers
        .iter()
        .position(|h| h == "u")
        .ok_or_else(|| anyhow!("missing column \"u\""))?;
    let (mut r, mut u) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        r.push(rec[ri].parse::<f64>()?);
        u.push(rec[ui].parse::<f64>()?);
    }
    Ok(RadialProfile::new(r, u)?)
}

pub fn profile_rows(r: &[f64], vals: &[(f64, f64, f64)]) -> Table {
    let mut t = Table::new(&["r", "u", "du", "d2u"]);
    for (x, v) in r.iter().zip(vals) {
        t.push(vec![Cell::F(*x), v.0.into(), v.1.into(), v.2.into()]);
    }
    t
}
