//! Two-chart overset discretization.
//!
//! Nodes strictly inside the cutoff disk `|x| < R` and off the square's edge
//! carry unknowns. Every other node is slaved to the opposite chart through
//! bicubic interpolation at its image `x / |x|^2`, which lies well inside the
//! opposite disk. The interpolation weights are chained into the Jacobian so
//! the coupled system is solved in one Newton step.

use faer::sparse::{SparseColMat, Triplet};

use crate::chart::{chart_inversion, christoffel, conformal_factor_phi, ChartGrid, ChartId};
use crate::error::{Error, Result};
use crate::field::{InterpStencil, SphereField};
use crate::stencil::{d1, d2, node_derivs, Derivs};
use crate::tensor::{schouten_sphere_with, Sym2};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Overset {
    pub grid: ChartGrid,
    /// Unknown index of each node, `usize::MAX` for slaved nodes.
    unknown: [Vec<usize>; 2],
    /// Unknown index -> (chart, node).
    nodes: Vec<(ChartId, usize)>,
    /// Slaved node -> interpolation weights on unknowns of the other chart.
    slaves: [Vec<(usize, [(usize, f64); 16])>; 2],
    /// Cached `phi`, `e^phi` per node.
    phi: Vec<f64>,
}

/// Per-node data of the discrete operator at an unknown.
#[derive(Debug, Clone, Copy)]
pub struct NodeState {
    pub derivs: Derivs,
    pub a: Sym2,
    /// `u + phi`
    pub w: f64,
}

impl Overset {
    pub fn new(grid: ChartGrid) -> Result<Self> {
        let grid = grid.on_chart(ChartId::NorthProjected);
        let n = grid.node_count();
        let r = grid.radius;
        let mut unknown = [vec![NONE; n], vec![NONE; n]];
        let mut nodes = Vec::new();
        for c in ChartId::BOTH {
            for k in 0..n {
                if grid.node_radius(k) < r && !grid.on_edge(k) {
                    unknown[c.index()][k] = nodes.len();
                    nodes.push((c, k));
                }
            }
        }
        let mut slaves = [Vec::new(), Vec::new()];
        for c in ChartId::BOTH {
            let src = c.other().index();
            for k in 0..n {
                if unknown[c.index()][k] != NONE {
                    continue;
                }
                let x = grid.node(k);
                let st = InterpStencil::new(&grid, chart_inversion(x))?;
                let mut w = [(0usize, 0.0f64); 16];
                for (m, (node, wt)) in st.entries(&grid).into_iter().enumerate() {
                    let u = unknown[src][node];
                    if u == NONE {
                        return Err(Error::GridTooSmall(format!(
                            "interpolation stencil for chart node {k} reaches a slaved node; refine h"
                        )));
                    }
                    w[m] = (u, wt);
                }
                slaves[c.index()].push((k, w));
            }
        }
        let phi = (0..n).map(|k| conformal_factor_phi(grid.node(k))).collect();
        Ok(Overset {
            grid,
            unknown,
            nodes,
            slaves,
            phi,
        })
    }

    pub fn unknown_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_of(&self, unknown: usize) -> (ChartId, usize) {
        self.nodes[unknown]
    }

    pub fn unknown_of(&self, chart: ChartId, node: usize) -> Option<usize> {
        let u = self.unknown[chart.index()][node];
        (u != NONE).then_some(u)
    }

    pub fn phi(&self, node: usize) -> f64 {
        self.phi[node]
    }

    /// Values of `field` at the unknowns.
    pub fn restrict(&self, field: &SphereField) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&(c, k)| field.chart(c).values[k])
            .collect()
    }

    /// Full two-chart field from the unknowns.
    pub fn extend(&self, x: &[f64]) -> SphereField {
        let mut f = SphereField::constant(self.grid, 0.0);
        self.extend_into(x, &mut f);
        f
    }

    pub fn extend_into(&self, x: &[f64], f: &mut SphereField) {
        for (m, &(c, k)) in self.nodes.iter().enumerate() {
            f.chart_mut(c).values[k] = x[m];
        }
        for c in ChartId::BOTH {
            let vals = &mut f.chart_mut(c).values;
            for (k, w) in &self.slaves[c.index()] {
                vals[*k] = w.iter().map(|&(u, wt)| wt * x[u]).sum();
            }
        }
    }

    /// Derivatives and tensor at every unknown.
    pub fn node_states(&self, u: &SphereField) -> Vec<NodeState> {
        self.nodes
            .iter()
            .map(|&(c, k)| {
                let g = &self.grid;
                let (i, j) = g.ij(k);
                let d = node_derivs(g, &u.chart(c).values, i, j);
                let x = g.node(k);
                let a = schouten_sphere_with(&d, &christoffel(x), self.phi[k].exp());
                NodeState {
                    derivs: d,
                    a,
                    w: d.u + self.phi[k],
                }
            })
            .collect()
    }

    /// Residual `det A - K e^{2(u + phi)}` at every unknown; `k` holds the
    /// curvature samples at the unknowns.
    pub fn residual(&self, states: &[NodeState], k: &[f64]) -> Vec<f64> {
        states
            .iter()
            .zip(k)
            .map(|(s, kv)| s.a.det() - kv * (2.0 * s.w).exp())
            .collect()
    }

    /// Sparse Jacobian of [`Overset::residual`] with respect to the unknowns.
    pub fn jacobian(&self, states: &[NodeState], k: &[f64]) -> Result<SparseColMat<usize, f64>> {
        let g = &self.grid;
        let n = g.n();
        let h = g.h;
        let mut triplets: Vec<Triplet<usize, usize, f64>> =
            Vec::with_capacity(self.nodes.len() * 60);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(200);
        for (r, (&(c, node), st)) in self.nodes.iter().zip(states).enumerate() {
            let coeffs = pointwise_coefficients(st, g.node(node), k[r]);
            let (i, j) = g.ij(node);
            row.clear();
            let mut push = |a: isize, b: isize, v: f64| {
                if v == 0.0 {
                    return;
                }
                let kk = g.index((i as isize + a) as usize, (j as isize + b) as usize);
                let ui = self.unknown[c.index()][kk];
                if ui != NONE {
                    row.push((ui, v));
                } else {
                    let pos = self.slaves[c.index()]
                        .binary_search_by_key(&kk, |s| s.0)
                        .expect("slaved node registered");
                    for &(m, wt) in &self.slaves[c.index()][pos].1 {
                        row.push((m, v * wt));
                    }
                }
            };
            push(0, 0, coeffs.c0);
            for (o, cf) in d1(i, n, h).iter() {
                push(o, 0, coeffs.c1[0] * cf);
            }
            for (o, cf) in d1(j, n, h).iter() {
                push(0, o, coeffs.c1[1] * cf);
            }
            for (o, cf) in d2(i, n, h).iter() {
                push(o, 0, coeffs.c2[0] * cf);
            }
            for (o, cf) in d2(j, n, h).iter() {
                push(0, o, coeffs.c2[2] * cf);
            }
            for (ox, cx) in d1(i, n, h).iter() {
                for (oy, cy) in d1(j, n, h).iter() {
                    push(ox, oy, coeffs.c2[1] * cx * cy);
                }
            }
            row.sort_unstable_by_key(|e| e.0);
            let mut m = 0;
            while m < row.len() {
                let col = row[m].0;
                let mut v = 0.0;
                while m < row.len() && row[m].0 == col {
                    v += row[m].1;
                    m += 1;
                }
                triplets.push(Triplet::new(r, col, v));
            }
        }
        let nu = self.nodes.len();
        SparseColMat::try_new_from_triplets(nu, nu, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Coefficients of the linearized operator at a node, acting on
/// `(du, du_1, du_2, du_11, du_12, du_22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub c0: f64,
    pub c1: [f64; 2],
    pub c2: [f64; 3],
}

/// `delta det A = T_1(A) : delta A` with `T_1(A) = tr(A) I - A`.
pub fn pointwise_coefficients(st: &NodeState, x: [f64; 2], k: f64) -> PointCoefficients {
    let a = &st.a;
    // cofactor matrix
    let (t11, t12, t22) = (a.a22, -a.a12, a.a11);
    let gam = christoffel(x);
    let (u1, u2) = (st.derivs.d1[0], st.derivs.d1[1]);
    // d A_ij / d u_m
    let da11 = [gam.get(0, 0, 0) + 0.5 * u1, gam.get(1, 0, 0) - 0.5 * u2];
    let da22 = [gam.get(0, 1, 1) - 0.5 * u1, gam.get(1, 1, 1) + 0.5 * u2];
    let da12 = [gam.get(0, 0, 1) + 0.5 * u2, gam.get(1, 0, 1) + 0.5 * u1];
    let b = |m: usize| t11 * da11[m] + t22 * da22[m] + 2.0 * t12 * da12[m];
    PointCoefficients {
        c0: -2.0 * k * (2.0 * st.w).exp(),
        c1: [b(0), b(1)],
        c2: [-t11, -2.0 * t12, -t22],
    }
}

/// Smallest eigenvalue of `g_u^-1 A` at each unknown.
pub fn cone_margins(states: &[NodeState]) -> Vec<f64> {
    states
        .iter()
        .map(|s| s.a.eigen().l1 * (-s.w).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_counts_and_consistency() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 64).unwrap();
        let o = Overset::new(g).unwrap();
        assert!(o.unknown_count() > 2 * 3000);
        // a smooth sphere function survives restrict/extend up to interpolation error
        let f = SphereField::from_sphere_fn(g, |z| z[0] + z[1] * z[2]);
        let e = o.extend(&o.restrict(&f));
        let mut worst = 0.0f64;
        for c in ChartId::BOTH {
            for (a, b) in e.chart(c).values.iter().zip(&f.chart(c).values) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 8).unwrap();
        assert!(matches!(Overset::new(g), Err(Error::GridTooSmall(_))));
    }
}
