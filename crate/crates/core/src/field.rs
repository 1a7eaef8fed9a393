//! Sampled scalar fields on chart grids and on the two-chart sphere.

use serde::{Deserialize, Serialize};

use crate::chart::{
    chart_inversion, preferred_chart, sphere_to_stereo, ChartGrid, ChartId, SpherePoint,
};
use crate::error::{Error, Result};

/// Samples of a function on one chart grid, row-major with `x1` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: ChartGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: ChartGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: ChartGrid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: ChartGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|k| f(grid.node(k))).collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Bicubic (tensor cubic Lagrange) interpolation at chart point `x`.
    pub fn interpolate(&self, x: [f64; 2]) -> Result<f64> {
        let st = InterpStencil::new(&self.grid, x)?;
        Ok(st.apply(&self.values, &self.grid))
    }
}

/// Tensor cubic Lagrange weights on a 4 x 4 block of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpStencil {
    pub i0: usize,
    pub j0: usize,
    pub wx: [f64; 4],
    pub wy: [f64; 4],
}

fn lagrange4(t: f64) -> [f64; 4] {
    // nodes at 0, 1, 2, 3
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

impl InterpStencil {
    pub fn new(grid: &ChartGrid, x: [f64; 2]) -> Result<Self> {
        let n = grid.n();
        if n < 4 {
            return Err(Error::GridTooSmall(
                "cubic interpolation needs 4 nodes per side".into(),
            ));
        }
        let f = grid
            .locate(x)
            .ok_or(Error::OutsideOverlap { x1: x[0], x2: x[1] })?;
        let base = |fi: f64| -> usize {
            let b = fi.floor() as isize - 1;
            b.clamp(0, n as isize - 4) as usize
        };
        let i0 = base(f[0]);
        let j0 = base(f[1]);
        Ok(InterpStencil {
            i0,
            j0,
            wx: lagrange4(f[0] - i0 as f64),
            wy: lagrange4(f[1] - j0 as f64),
        })
    }

    /// Node indices and weights of the 16 contributing samples.
    pub fn entries(&self, grid: &ChartGrid) -> [(usize, f64); 16] {
        let mut out = [(0usize, 0.0f64); 16];
        for b in 0..4 {
            for a in 0..4 {
                out[4 * b + a] = (
                    grid.index(self.i0 + a, self.j0 + b),
                    self.wx[a] * self.wy[b],
                );
            }
        }
        out
    }

    pub fn apply(&self, values: &[f64], grid: &ChartGrid) -> f64 {
        let mut s = 0.0;
        for b in 0..4 {
            let mut row = 0.0;
            for a in 0..4 {
                row += self.wx[a] * values[grid.index(self.i0 + a, self.j0 + b)];
            }
            s += self.wy[b] * row;
        }
        s
    }
}

/// How a field transforms between the two charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionKind {
    /// A function on the sphere (`u`, `K`, residuals).
    Scalar,
    /// A flat metric exponent `w` with metric `e^w |dx|^2` (for example
    /// `u + phi`); picks up `-4 ln|x'|` under the inversion.
    MetricExponent,
}

/// Value at target-chart point `x` of a field given on the other chart.
/// The source is trusted only inside its cutoff disk `|x'| <= R`.
pub fn transition_point(source: &ScalarField, x: [f64; 2], kind: TransitionKind) -> Result<f64> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let rsrc = source.grid.radius;
    if r2 * rsrc * rsrc < 1.0 - 1e-12 {
        return Err(Error::OutsideOverlap { x1: x[0], x2: x[1] });
    }
    let xs = chart_inversion(x);
    let v = source.interpolate(xs)?;
    Ok(match kind {
        TransitionKind::Scalar => v,
        TransitionKind::MetricExponent => v - 2.0 * r2.ln(),
    })
}

/// Field values transferred onto the target chart.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapField {
    pub target: ChartGrid,
    /// Target node indices that receive a value.
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

/// Transfers `source` onto every node of `target` whose image lies inside
/// the source cutoff disk.
pub fn chart_transition(
    source: &ScalarField,
    target: &ChartGrid,
    kind: TransitionKind,
) -> Result<OverlapField> {
    source.grid.compatible(target)?;
    if source.grid.chart == target.chart {
        return Err(Error::InconsistentGrids(
            "source and target are the same chart".into(),
        ));
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    let r = target.radius;
    for k in 0..target.node_count() {
        let x = target.node(k);
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 * r * r < 1.0 {
            continue;
        }
        nodes.push(k);
        values.push(transition_point(source, x, kind)?);
    }
    Ok(OverlapField {
        target: *target,
        nodes,
        values,
    })
}

/// A function on the sphere stored on both charts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereField {
    pub north: ScalarField,
    pub south: ScalarField,
}

impl SphereField {
    pub fn new(north: ScalarField, south: ScalarField) -> Result<Self> {
        if north.grid.chart != ChartId::NorthProjected
            || south.grid.chart != ChartId::SouthProjected
        {
            return Err(Error::InconsistentGrids("chart labels do not match".into()));
        }
        north.grid.compatible(&south.grid)?;
        Ok(SphereField { north, south })
    }

    /// Grid pair with `intervals` cells across `[-R, R]` on each chart.
    pub fn grids(radius: f64, intervals: usize) -> Result<(ChartGrid, ChartGrid)> {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, radius, intervals)?;
        Ok((g, g.mirrored()))
    }

    /// Samples a function of the sphere point on both charts.
    pub fn from_sphere_fn(grid: ChartGrid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        Self::from_chart_fn(grid, |chart, x| {
            f(&crate::chart::stereo_to_sphere(chart, x).0)
        })
    }

    /// Samples a chart-aware function on both charts.
    pub fn from_chart_fn(grid: ChartGrid, f: impl Fn(ChartId, [f64; 2]) -> f64) -> Self {
        let gn = grid.on_chart(ChartId::NorthProjected);
        let gs = gn.mirrored();
        SphereField {
            north: ScalarField::from_fn(gn, |x| f(ChartId::NorthProjected, x)),
            south: ScalarField::from_fn(gs, |x| f(ChartId::SouthProjected, x)),
        }
    }

    pub fn constant(grid: ChartGrid, c: f64) -> Self {
        Self::from_chart_fn(grid, |_, _| c)
    }

    pub fn grid(&self) -> ChartGrid {
        self.north.grid
    }

    pub fn chart(&self, id: ChartId) -> &ScalarField {
        match id {
            ChartId::NorthProjected => &self.north,
            ChartId::SouthProjected => &self.south,
        }
    }

    pub fn chart_mut(&mut self, id: ChartId) -> &mut ScalarField {
        match id {
            ChartId::NorthProjected => &mut self.north,
            ChartId::SouthProjected => &mut self.south,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SphereField {
            north: self.north.map(&f),
            south: self.south.map(&f),
        }
    }

    /// Interpolated value at a sphere point, using the chart in which the
    /// point is closest to the origin.
    pub fn eval(&self, z: &[f64; 3]) -> Result<f64> {
        let c = preferred_chart(z);
        self.chart(c).interpolate(sphere_to_stereo(c, z))
    }

    /// Largest sample over nodes inside the cutoff disks.
    pub fn max_in_disk(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for f in [&self.north, &self.south] {
            for k in 0..f.grid.node_count() {
                if f.grid.node_radius(k) <= f.grid.radius {
                    m = m.max(f.values[k]);
                }
            }
        }
        m
    }

    /// Largest absolute sample over nodes inside the cutoff disks.
    pub fn sup_in_disk(&self) -> f64 {
        let mut m = 0.0f64;
        for f in [&self.north, &self.south] {
            for k in 0..f.grid.node_count() {
                if f.grid.node_radius(k) <= f.grid.radius {
                    m = m.max(f.values[k].abs());
                }
            }
        }
        m
    }

    /// Location and value of the largest sample inside the cutoff disks.
    pub fn argmax(&self) -> (SpherePoint, f64) {
        let mut best = (ChartId::NorthProjected, 0usize, f64::NEG_INFINITY);
        for c in ChartId::BOTH {
            let f = self.chart(c);
            for k in 0..f.grid.node_count() {
                if f.grid.node_radius(k) <= 1.0 && f.values[k] > best.2 {
                    best = (c, k, f.values[k]);
                }
            }
        }
        (self.chart(best.0).grid.sphere_point(best.1), best.2)
    }

    /// Sup over the overlap band `1 <= |x| <= R` of the difference between
    /// each chart and the interpolant of the other.
    pub fn overlap_mismatch(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for c in ChartId::BOTH {
            let target = self.chart(c);
            let source = self.chart(c.other());
            let g = target.grid;
            for k in 0..g.node_count() {
                let r = g.node_radius(k);
                if r < 1.0 || r > g.radius {
                    continue;
                }
                let v = transition_point(source, g.node(k), TransitionKind::Scalar)?;
                worst = worst.max((v - target.values[k]).abs());
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{conformal_factor_phi, ChartGrid};
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> ChartGrid {
        ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, n).unwrap()
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, |x| {
            1.0 + x[0] - 2.0 * x[1] * x[1] * x[0] + x[0].powi(3) * x[1].powi(3)
        });
        for x in [[0.13f64, -0.41], [1.19, 1.19], [-1.2, 0.77], [0.0, 0.0]] {
            let e = 1.0 + x[0] - 2.0 * x[1] * x[1] * x[0] + x[0].powi(3) * x[1].powi(3);
            assert_abs_diff_eq!(f.interpolate(x).unwrap(), e, epsilon = 1e-12);
        }
        assert!(f.interpolate([1.3, 0.0]).is_err());
    }

    #[test]
    fn transition_of_constant() {
        let g = grid(32);
        let u = ScalarField::constant(g, 2.5);
        let t = chart_transition(&u, &g.mirrored(), TransitionKind::Scalar).unwrap();
        assert!(t.values.iter().all(|v| (v - 2.5).abs() < 1e-13));
    }

    #[test]
    fn transition_of_phi_as_metric_exponent() {
        let mut errs = Vec::new();
        for n in [32, 64] {
            let g = grid(n);
            let src = ScalarField::from_fn(g, conformal_factor_phi);
            let t = chart_transition(&src, &g.mirrored(), TransitionKind::MetricExponent).unwrap();
            let err = t
                .nodes
                .iter()
                .zip(&t.values)
                .map(|(&k, v)| (v - conformal_factor_phi(g.node(k))).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 1e-4 && errs[0] / errs[1] > 10.0, "{errs:?}");
    }

    #[test]
    fn transition_rejects_points_near_origin() {
        let g = grid(32);
        let u = ScalarField::constant(g, 0.0);
        assert!(transition_point(&u, [0.5, 0.0], TransitionKind::Scalar).is_err());
        assert!(transition_point(&u, [0.9, 0.0], TransitionKind::Scalar).is_ok());
    }

    #[test]
    fn overlap_mismatch_small_for_smooth_fields() {
        let f = SphereField::from_sphere_fn(grid(64), |z| z[0] * z[2] + z[1].powi(2));
        assert!(f.overlap_mismatch().unwrap() < 1e-5);
    }
}
