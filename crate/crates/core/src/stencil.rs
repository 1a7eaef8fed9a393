//! Second-order finite-difference stencils on a chart grid. Interior nodes
//! use centered differences, edge nodes shifted three-point (first
//! derivative) and four-point (second derivative) one-sided formulas.

use crate::chart::ChartGrid;

/// One-dimensional stencil: offsets and coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil1 {
    pub offsets: [isize; 4],
    pub coeffs: [f64; 4],
    pub len: usize,
}

impl Stencil1 {
    fn new(offsets: &[isize], coeffs: &[f64], scale: f64) -> Self {
        let mut s = Stencil1 {
            offsets: [0; 4],
            coeffs: [0.0; 4],
            len: offsets.len(),
        };
        for (m, (&o, &c)) in offsets.iter().zip(coeffs).enumerate() {
            s.offsets[m] = o;
            s.coeffs[m] = c * scale;
        }
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        (0..self.len).map(move |m| (self.offsets[m], self.coeffs[m]))
    }
}

/// First-derivative stencil at index `i` of `n` nodes.
pub fn d1(i: usize, n: usize, h: f64) -> Stencil1 {
    let s = 0.5 / h;
    if i == 0 {
        Stencil1::new(&[0, 1, 2], &[-3.0, 4.0, -1.0], s)
    } else if i + 1 == n {
        Stencil1::new(&[0, -1, -2], &[3.0, -4.0, 1.0], s)
    } else {
        Stencil1::new(&[-1, 1], &[-1.0, 1.0], s)
    }
}

/// Second-derivative stencil at index `i` of `n` nodes.
pub fn d2(i: usize, n: usize, h: f64) -> Stencil1 {
    let s = 1.0 / (h * h);
    if i == 0 {
        Stencil1::new(&[0, 1, 2, 3], &[2.0, -5.0, 4.0, -1.0], s)
    } else if i + 1 == n {
        Stencil1::new(&[0, -1, -2, -3], &[2.0, -5.0, 4.0, -1.0], s)
    } else {
        Stencil1::new(&[-1, 0, 1], &[1.0, -2.0, 1.0], s)
    }
}

/// First and second derivatives at a node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub u: f64,
    pub d1: [f64; 2],
    /// `(u_11, u_12, u_22)`
    pub d2: [f64; 3],
}

/// Derivatives of grid samples at node `(i, j)`. Requires at least four
/// nodes per side.
pub fn node_derivs(grid: &ChartGrid, values: &[f64], i: usize, j: usize) -> Derivs {
    let n = grid.n();
    let h = grid.h;
    let at = |a: isize, b: isize| {
        values[grid.index((i as isize + a) as usize, (j as isize + b) as usize)]
    };
    let sx = d1(i, n, h);
    let sy = d1(j, n, h);
    let sxx = d2(i, n, h);
    let syy = d2(j, n, h);
    let mut out = Derivs {
        u: at(0, 0),
        ..Derivs::default()
    };
    for (o, c) in sx.iter() {
        out.d1[0] += c * at(o, 0);
    }
    for (o, c) in sy.iter() {
        out.d1[1] += c * at(0, o);
    }
    for (o, c) in sxx.iter() {
        out.d2[0] += c * at(o, 0);
    }
    for (o, c) in syy.iter() {
        out.d2[2] += c * at(0, o);
    }
    for (ox, cx) in sx.iter() {
        for (oy, cy) in sy.iter() {
            out.d2[1] += cx * cy * at(ox, oy);
        }
    }
    out
}

/// Derivatives at every node.
pub fn all_derivs(grid: &ChartGrid, values: &[f64]) -> Vec<Derivs> {
    (0..grid.node_count())
        .map(|k| {
            let (i, j) = grid.ij(k);
            node_derivs(grid, values, i, j)
        })
        .collect()
}

/// Gradient of grid samples at every node.
pub fn gradient(grid: &ChartGrid, values: &[f64]) -> Vec<[f64; 2]> {
    let n = grid.n();
    let h = grid.h;
    (0..grid.node_count())
        .map(|k| {
            let (i, j) = grid.ij(k);
            let mut g = [0.0; 2];
            for (o, c) in d1(i, n, h).iter() {
                g[0] += c * values[grid.index((i as isize + o) as usize, j)];
            }
            for (o, c) in d1(j, n, h).iter() {
                g[1] += c * values[grid.index(i, (j as isize + o) as usize)];
            }
            g
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartId;

    #[test]
    fn exact_on_quadratics_everywhere() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 10).unwrap();
        let f = |x: [f64; 2]| {
            1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[0] - x[0] * x[1] + 0.5 * x[1] * x[1]
        };
        let v: Vec<f64> = (0..g.node_count()).map(|k| f(g.node(k))).collect();
        for k in 0..g.node_count() {
            let x = g.node(k);
            let (i, j) = g.ij(k);
            let d = node_derivs(&g, &v, i, j);
            assert!((d.d1[0] - (2.0 + 6.0 * x[0] - x[1])).abs() < 1e-11);
            assert!((d.d1[1] - (-1.0 - x[0] + x[1])).abs() < 1e-11);
            assert!((d.d2[0] - 6.0).abs() < 1e-9);
            assert!((d.d2[1] + 1.0).abs() < 1e-9);
            assert!((d.d2[2] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn second_order_at_edges() {
        let mut errs = Vec::new();
        for n in [16, 32] {
            let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, n).unwrap();
            let v: Vec<f64> = (0..g.node_count())
                .map(|k| (g.node(k)[0] * 1.3).sin())
                .collect();
            let d = node_derivs(&g, &v, 0, 3);
            let x = g.node(g.index(0, 3));
            errs.push((d.d2[0] + 1.69 * (1.3 * x[0]).sin()).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "{errs:?}");
    }
}
