//! Critical points of a curvature function, the nondegeneracy condition and
//! the Morse degree sum over the critical points with negative Laplacian.

use serde::{Deserialize, Serialize};

use crate::chart::{
    conformal_factor_phi, geodesic_distance, preferred_chart, sphere_to_stereo, stereo_to_sphere,
    ChartGrid, ChartId,
};
use crate::error::{Error, Result};
use crate::field::SphereField;
use crate::kfield::SphereFunction;
use crate::stencil::node_derivs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalClass {
    /// `Delta_g K > 0`
    Plus,
    /// `Delta_g K < 0`
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub z: [f64; 3],
    /// `|grad K|_g` at the converged point.
    pub grad_residual: f64,
    /// Eigenvalues of the Hessian with respect to `g`, ascending.
    pub hessian_eigs: [f64; 2],
    #[serde(rename = "lapK")]
    pub laplacian: f64,
    pub class: CriticalClass,
    pub index: u8,
    pub morse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalOptions {
    /// Convergence threshold on `|grad K|_g`.
    pub newton_tol: f64,
    pub max_iters: usize,
    /// `|det Hess_g K| >= morse_rel * ||K||_{C^2}` declares a point Morse.
    pub morse_rel: f64,
    /// Hard error on non-Morse points in [`degree_report`].
    pub require_morse: bool,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            newton_tol: 1e-9,
            max_iters: 50,
            morse_rel: 1e-6,
            require_morse: true,
        }
    }
}

const FD_STEP: f64 = 1e-3;

/// Chart value, gradient and Hessian `(K_11, K_12, K_22)` by fourth-order
/// central differences of the ambient formula.
fn chart_jet(k: &dyn SphereFunction, chart: ChartId, x: [f64; 2]) -> (f64, [f64; 2], [f64; 3]) {
    let f = |a: f64, b: f64| k.chart_value(chart, [x[0] + a, x[1] + b]);
    let d = FD_STEP;
    let w1 = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
    let f0 = f(0.0, 0.0);
    let mut g = [0.0; 2];
    for &(o, c) in &w1 {
        g[0] += c * f(o * d, 0.0);
        g[1] += c * f(0.0, o * d);
    }
    g[0] /= 12.0 * d;
    g[1] /= 12.0 * d;
    let w2 = [(2.0, -1.0), (1.0, 16.0), (-1.0, 16.0), (-2.0, -1.0)];
    let mut hxx = -30.0 * f0;
    let mut hyy = -30.0 * f0;
    for &(o, c) in &w2 {
        hxx += c * f(o * d, 0.0);
        hyy += c * f(0.0, o * d);
    }
    hxx /= 12.0 * d * d;
    hyy /= 12.0 * d * d;
    let mut hxy = 0.0;
    for &(ox, cx) in &w1 {
        for &(oy, cy) in &w1 {
            hxy += cx * cy * f(ox * d, oy * d);
        }
    }
    hxy /= 144.0 * d * d;
    (f0, g, [hxx, hxy, hyy])
}

fn sym_eigs(h: [f64; 3]) -> [f64; 2] {
    let m = 0.5 * (h[0] + h[2]);
    let r = (0.5 * (h[0] - h[2])).hypot(h[1]);
    [m - r, m + r]
}

/// Newton iteration on the chart gradient from `x0`.
fn polish(
    k: &dyn SphereFunction,
    chart: ChartId,
    x0: [f64; 2],
    opts: &CriticalOptions,
) -> Option<[f64; 3]> {
    let mut c = chart;
    let mut x = x0;
    for _ in 0..opts.max_iters {
        let (_, g, h) = chart_jet(k, c, x);
        let gnorm = (-0.5 * conformal_factor_phi(x)).exp() * g[0].hypot(g[1]);
        if gnorm < opts.newton_tol {
            return Some(stereo_to_sphere(c, x).0);
        }
        let det = h[0] * h[2] - h[1] * h[1];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [
            -(h[2] * g[0] - h[1] * g[1]) / det,
            -(-h[1] * g[0] + h[0] * g[1]) / det,
        ];
        x = [x[0] + dx[0], x[1] + dx[1]];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return None;
        }
        // stay in the better-conditioned chart
        let z = stereo_to_sphere(c, x).0;
        let pc = preferred_chart(&z);
        if pc != c {
            c = pc;
            x = sphere_to_stereo(c, &z);
        }
    }
    None
}

fn classify(
    k: &dyn SphereFunction,
    z: &[f64; 3],
    c2_norm: f64,
    opts: &CriticalOptions,
) -> CriticalPoint {
    let c = preferred_chart(z);
    let x = sphere_to_stereo(c, z);
    let (_, g, h) = chart_jet(k, c, x);
    let e = (-conformal_factor_phi(x)).exp();
    // Christoffel terms drop out at a critical point
    let eigs = sym_eigs(h).map(|v| v * e);
    let lap = e * (h[0] + h[2]);
    let det = eigs[0] * eigs[1];
    CriticalPoint {
        z: *z,
        grad_residual: e.sqrt() * g[0].hypot(g[1]),
        hessian_eigs: eigs,
        laplacian: lap,
        class: if lap < 0.0 {
            CriticalClass::Minus
        } else {
            CriticalClass::Plus
        },
        index: eigs.iter().filter(|v| **v < 0.0).count() as u8,
        morse: det.abs() >= opts.morse_rel * c2_norm,
    }
}

/// Per-node `(|grad K|_g, Delta_g K)` from grid differences of a sampled
/// field, for nodes in the unit disk of each chart.
fn grid_invariants(k: &SphereField) -> Vec<(ChartId, usize, f64, f64)> {
    let mut out = Vec::new();
    for c in ChartId::BOTH {
        let f = k.chart(c);
        let g = f.grid;
        for node in 0..g.node_count() {
            if g.node_radius(node) > 1.0 {
                continue;
            }
            let (i, j) = g.ij(node);
            let d = node_derivs(&g, &f.values, i, j);
            let phi = conformal_factor_phi(g.node(node));
            let grad = (-0.5 * phi).exp() * d.d1[0].hypot(d.d1[1]);
            let lap = (-phi).exp() * (d.d2[0] + d.d2[2]);
            out.push((c, node, grad, lap));
        }
    }
    out
}

/// Discrete `||K||_{C^2}`: `max |K| + max |grad K|_g + max |Delta_g K|`.
fn c2_norm(k: &SphereField) -> f64 {
    let inv = grid_invariants(k);
    let gmax = inv.iter().fold(0.0f64, |m, v| m.max(v.2));
    let lmax = inv.iter().fold(0.0f64, |m, v| m.max(v.3.abs()));
    k.sup_in_disk() + gmax + lmax
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub pass: bool,
    /// `min (|grad K|_g + |Delta_g K|)` over the nodes.
    pub min_value: f64,
    pub worst_z: [f64; 3],
    pub threshold: f64,
}

/// Checks `|grad K| + |Delta K| > 0` against the threshold `10 h^2`.
pub fn nondegeneracy_check(k: &SphereField) -> NondegeneracyReport {
    let g = k.grid();
    let mut best = (f64::INFINITY, [0.0; 3]);
    for (c, node, grad, lap) in grid_invariants(k) {
        let v = grad + lap.abs();
        if v < best.0 {
            best = (v, g.on_chart(c).sphere_point(node).0);
        }
    }
    let threshold = 10.0 * g.h * g.h;
    NondegeneracyReport {
        pass: best.0 > threshold,
        min_value: best.0,
        worst_z: best.1,
        threshold,
    }
}

/// Critical points of `k`, seeded from the grid-local minima of `|grad K|^2`
/// and refined by Newton's method on the exact function.
pub fn find_critical_points(
    k: &dyn SphereFunction,
    grid: ChartGrid,
    opts: &CriticalOptions,
) -> Result<Vec<CriticalPoint>> {
    let sampled = k.sample(grid);
    let norm = c2_norm(&sampled);
    let mut seeds = Vec::new();
    let mut hess_max = 0.0f64;
    for c in ChartId::BOTH {
        let f = sampled.chart(c);
        let g = f.grid;
        let n = g.n();
        let mut g2 = vec![f64::INFINITY; g.node_count()];
        for node in 0..g.node_count() {
            if g.node_radius(node) > 1.05 || g.on_edge(node) {
                continue;
            }
            let (i, j) = g.ij(node);
            let d = node_derivs(&g, &f.values, i, j);
            g2[node] = d.d1[0] * d.d1[0] + d.d1[1] * d.d1[1];
            hess_max = hess_max.max(d.d2[0].abs() + d.d2[1].abs() + d.d2[2].abs());
        }
        for node in 0..g.node_count() {
            if !g2[node].is_finite() {
                continue;
            }
            let (i, j) = g.ij(node);
            let mut is_min = true;
            'nb: for a in -1isize..=1 {
                for b in -1isize..=1 {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as isize + a, j as isize + b);
                    if ii < 0 || jj < 0 || ii >= n as isize || jj >= n as isize {
                        continue;
                    }
                    if g2[g.index(ii as usize, jj as usize)] < g2[node] {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                seeds.push((c, node, g2[node].sqrt()));
            }
        }
    }
    let limit = 4 * grid.node_count() / 100;
    if seeds.len() > limit.max(64) {
        return Err(Error::Degenerate {
            value: 0.0,
            z: sampled.argmax().0 .0,
        });
    }
    let dedup = 3.0 * grid.h;
    let mut found: Vec<[f64; 3]> = Vec::new();
    let mut failed: Vec<([f64; 3], f64)> = Vec::new();
    for &(c, node, gnorm) in &seeds {
        let g = grid.on_chart(c);
        match polish(k, c, g.node(node), opts) {
            Some(z) => {
                if !found.iter().any(|p| geodesic_distance(p, &z) < dedup) {
                    found.push(z);
                }
            }
            None => failed.push((g.sphere_point(node).0, gnorm)),
        }
    }
    // a failed seed whose cell may contain a zero of the gradient
    for (z, gnorm) in failed {
        let near = found.iter().any(|p| geodesic_distance(p, &z) < 4.0 * dedup);
        if !near && gnorm <= 4.0 * grid.h * hess_max {
            return Err(Error::UnresolvedCritical { z });
        }
    }
    let mut pts: Vec<CriticalPoint> = found.iter().map(|z| classify(k, z, norm, opts)).collect();
    pts.sort_by(|a, b| {
        b.z[2]
            .partial_cmp(&a.z[2])
            .unwrap()
            .then(b.z[0].partial_cmp(&a.z[0]).unwrap())
            .then(b.z[1].partial_cmp(&a.z[1]).unwrap())
    });
    Ok(pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub points: Vec<CriticalPoint>,
    pub deg_minus: i64,
    /// `-1 + deg_minus`
    pub indicator: i64,
    pub ph_total: i64,
    pub nondegeneracy: NondegeneracyReport,
}

/// Morse degree data of `k`; errors when the nondegeneracy condition fails
/// or, with `require_morse`, when a critical point is degenerate.
pub fn degree_report(
    k: &dyn SphereFunction,
    grid: ChartGrid,
    opts: &CriticalOptions,
) -> Result<DegreeReport> {
    let nd = nondegeneracy_check(&k.sample(grid));
    if !nd.pass {
        return Err(Error::Degenerate {
            value: nd.min_value,
            z: nd.worst_z,
        });
    }
    let points = find_critical_points(k, grid, opts)?;
    if opts.require_morse {
        if let Some(p) = points.iter().find(|p| !p.morse) {
            return Err(Error::NonMorse {
                z: p.z,
                det: p.hessian_eigs[0] * p.hessian_eigs[1],
            });
        }
    }
    let sign = |p: &CriticalPoint| if p.index % 2 == 0 { 1 } else { -1 };
    let deg_minus = points
        .iter()
        .filter(|p| p.class == CriticalClass::Minus)
        .map(sign)
        .sum();
    let ph_total = points.iter().map(sign).sum();
    Ok(DegreeReport {
        points,
        deg_minus,
        indicator: deg_minus - 1,
        ph_total,
        nondegeneracy: nd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kfield::{preset, FnSphere};

    fn grid() -> ChartGrid {
        ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 64).unwrap()
    }

    #[test]
    fn linear_height_function() {
        let k = preset("2+z3").unwrap();
        let r = degree_report(&k, grid(), &CriticalOptions::default()).unwrap();
        assert_eq!(r.points.len(), 2);
        let n = &r.points[0];
        assert!((n.z[2] - 1.0).abs() < 1e-9);
        assert_eq!((n.class, n.index), (CriticalClass::Minus, 2));
        assert!((n.laplacian + 2.0).abs() < 1e-6);
        let s = &r.points[1];
        assert_eq!((s.class, s.index), (CriticalClass::Plus, 0));
        assert_eq!((r.deg_minus, r.indicator, r.ph_total), (1, 0, 2));
        assert!((r.nondegeneracy.min_value - 1.0).abs() < 1e-2);
    }

    #[test]
    fn constant_is_degenerate() {
        let k = FnSphere(|_: &[f64; 3]| 1.0);
        assert!(!nondegeneracy_check(&k.sample(grid())).pass);
        assert!(matches!(
            degree_report(&k, grid(), &CriticalOptions::default()),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn quadratic_presets() {
        let r = degree_report(
            &preset("1+0.1q(0,0.3,1)").unwrap(),
            grid(),
            &CriticalOptions::default(),
        )
        .unwrap();
        assert_eq!(r.points.len(), 6);
        assert_eq!((r.deg_minus, r.indicator, r.ph_total), (2, 1, 2));
        let r = degree_report(
            &preset("1+0.1q(0,0.7,1)").unwrap(),
            grid(),
            &CriticalOptions::default(),
        )
        .unwrap();
        assert_eq!((r.deg_minus, r.indicator, r.ph_total), (0, -1, 2));
        let r = degree_report(
            &preset("3+z3+0.75z1^2").unwrap(),
            grid(),
            &CriticalOptions::default(),
        )
        .unwrap();
        assert_eq!(r.points.len(), 4);
        assert_eq!((r.deg_minus, r.indicator, r.ph_total), (1, 0, 2));
        let r = degree_report(
            &preset("3+z3+1.5z1^2").unwrap(),
            grid(),
            &CriticalOptions::default(),
        )
        .unwrap();
        assert_eq!((r.deg_minus, r.indicator, r.ph_total), (2, 1, 2));
    }

    #[test]
    fn critical_circle_is_not_morse() {
        let k = preset("2+z3^2").unwrap();
        let r = degree_report(&k, grid(), &CriticalOptions::default());
        assert!(
            matches!(
                r,
                Err(Error::NonMorse { .. }) | Err(Error::Degenerate { .. })
            ),
            "{r:?}"
        );
    }
}
