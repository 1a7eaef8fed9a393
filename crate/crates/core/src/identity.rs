//! Kazdan-Warner integrals on the sphere, the single-sign obstruction test
//! and planar moment identities.

use serde::{Deserialize, Serialize};

use crate::chart::{chart_tangents, conformal_factor_phi, cross3, dot3, ChartGrid, ChartId};
use crate::error::{Error, Result};
use crate::field::{ScalarField, SphereField};
use crate::quadrature::{CompensatedSum, SphereQuadrature};
use crate::stencil::{gradient, node_derivs};
use crate::tensor::schouten_sphere_with;

/// Basis of the conformal vector fields of the round sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConformalKillingField {
    Rot1,
    Rot2,
    Rot3,
    Conf1,
    Conf2,
    Conf3,
}

impl ConformalKillingField {
    pub const ALL: [ConformalKillingField; 6] = [
        ConformalKillingField::Rot1,
        ConformalKillingField::Rot2,
        ConformalKillingField::Rot3,
        ConformalKillingField::Conf1,
        ConformalKillingField::Conf2,
        ConformalKillingField::Conf3,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ConformalKillingField::Rot1 => "rot1",
            ConformalKillingField::Rot2 => "rot2",
            ConformalKillingField::Rot3 => "rot3",
            ConformalKillingField::Conf1 => "conf1",
            ConformalKillingField::Conf2 => "conf2",
            ConformalKillingField::Conf3 => "conf3",
        }
    }

    fn axis(self) -> usize {
        match self {
            ConformalKillingField::Rot1 | ConformalKillingField::Conf1 => 0,
            ConformalKillingField::Rot2 | ConformalKillingField::Conf2 => 1,
            ConformalKillingField::Rot3 | ConformalKillingField::Conf3 => 2,
        }
    }

    /// `e_i x z` for rotations, `e_i - (e_i . z) z` for conformal gradients.
    pub fn eval(self, z: &[f64; 3]) -> [f64; 3] {
        let mut e = [0.0; 3];
        e[self.axis()] = 1.0;
        match self {
            ConformalKillingField::Rot1
            | ConformalKillingField::Rot2
            | ConformalKillingField::Rot3 => cross3(&e, z),
            _ => {
                let c = z[self.axis()];
                [e[0] - c * z[0], e[1] - c * z[1], e[2] - c * z[2]]
            }
        }
    }

    /// Chart components `X^j` of the field at chart point `x`.
    pub fn chart_components(self, chart: ChartId, x: [f64; 2]) -> [f64; 2] {
        let z = crate::chart::stereo_to_sphere(chart, x).0;
        let v = self.eval(&z);
        let t = chart_tangents(chart, x);
        let e = (-conformal_factor_phi(x)).exp();
        [dot3(&v, &t[0]) * e, dot3(&v, &t[1]) * e]
    }
}

/// The six integrals `int X(f) e^u dV_g`, keyed by basis tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwIntegrals {
    pub rot1: f64,
    pub rot2: f64,
    pub rot3: f64,
    pub conf1: f64,
    pub conf2: f64,
    pub conf3: f64,
}

impl KwIntegrals {
    pub fn from_array(v: [f64; 6]) -> Self {
        KwIntegrals {
            rot1: v[0],
            rot2: v[1],
            rot3: v[2],
            conf1: v[3],
            conf2: v[4],
            conf3: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.rot1, self.rot2, self.rot3, self.conf1, self.conf2, self.conf3,
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwReport {
    pub h: f64,
    pub integrals: KwIntegrals,
    pub predicted_order: f64,
    /// Set when `sigma_1` of `g_u^-1 A` is negative somewhere.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cone_warning: Option<String>,
}

/// `sigma_2(g_u^-1 A_{g_u})` and `sigma_1` at every node of one chart.
fn sigma_fields(u: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = u.grid;
    let mut s2 = vec![0.0; g.node_count()];
    let mut s1 = vec![0.0; g.node_count()];
    for k in 0..g.node_count() {
        let (i, j) = g.ij(k);
        let x = g.node(k);
        let d = node_derivs(&g, &u.values, i, j);
        let phi = conformal_factor_phi(x);
        let a = schouten_sphere_with(&d, &crate::chart::christoffel(x), phi.exp());
        let e = (-(d.u + phi)).exp();
        s2[k] = a.det() * e * e;
        s1[k] = a.trace() * e;
    }
    (s2, s1)
}

/// Integrals `int X(h) e^w dV_g` over the six basis fields, where `h` and
/// `w` are nodal values on both charts.
fn directional_integrals(quad: &SphereQuadrature, h: [&[f64]; 2], w: [&[f64]; 2]) -> [f64; 6] {
    let g = quad.grid;
    let mut out = [0.0; 6];
    let mut integrand = [vec![0.0; g.node_count()], vec![0.0; g.node_count()]];
    for (n, x_field) in ConformalKillingField::ALL.iter().enumerate() {
        for c in ChartId::BOTH {
            let grid = g.on_chart(c);
            let dh = gradient(&grid, h[c.index()]);
            let q = quad.chart_weights(c);
            let dst = &mut integrand[c.index()];
            for k in 0..grid.node_count() {
                dst[k] = if q[k] == 0.0 {
                    0.0
                } else {
                    let xc = x_field.chart_components(c, grid.node(k));
                    (xc[0] * dh[k][0] + xc[1] * dh[k][1]) * w[c.index()][k].exp()
                };
            }
        }
        out[n] = quad.integrate_values(&integrand[0], &integrand[1]);
    }
    out
}

/// Kazdan-Warner integrals `int X(sigma_2(g_u^-1 A_{g_u})) e^u dV_g`.
pub fn kw_check(u: &SphereField) -> Result<KwReport> {
    let quad = SphereQuadrature::new(u.grid())?;
    kw_check_with(&quad, u)
}

pub fn kw_check_with(quad: &SphereQuadrature, u: &SphereField) -> Result<KwReport> {
    u.grid().compatible(&quad.grid)?;
    let (s2n, s1n) = sigma_fields(&u.north);
    let (s2s, s1s) = sigma_fields(&u.south);
    let mut worst = f64::INFINITY;
    for (s1, c) in [
        (&s1n, ChartId::NorthProjected),
        (&s1s, ChartId::SouthProjected),
    ] {
        let q = quad.chart_weights(c);
        for k in 0..s1.len() {
            if q[k] > 0.0 {
                worst = worst.min(s1[k]);
            }
        }
    }
    if !s2n.iter().chain(&s2s).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("sigma_2 of the conformal factor".into()));
    }
    let cone_warning = (worst < -crate::tensor::CONE_TOL)
        .then(|| format!("sigma_1 reaches {worst:.3e}; outside the closed half-plane cone"));
    let v = directional_integrals(quad, [&s2n, &s2s], [&u.north.values, &u.south.values]);
    Ok(KwReport {
        h: u.grid().h,
        integrals: KwIntegrals::from_array(v),
        predicted_order: 2.0,
        cone_warning,
    })
}

/// Outcome of the single-sign obstruction search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum KwObstruction {
    Violated {
        /// Coefficients of the witness in the basis order of
        /// [`ConformalKillingField::ALL`].
        coefficients: [f64; 6],
        /// Basis tag when the witness is a single basis field.
        #[serde(skip_serializing_if = "Option::is_none")]
        basis: Option<String>,
        min_xk: f64,
        /// Area of `{X(K) > delta}`.
        positive_area: f64,
    },
    Inconclusive {
        /// Best `min X(K) / max |X(K)|` found.
        best_ratio: f64,
    },
}

impl KwObstruction {
    pub fn is_violated(&self) -> bool {
        matches!(self, KwObstruction::Violated { .. })
    }
}

/// Thresholds of the obstruction test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstructionOptions {
    pub delta: f64,
    /// Fraction of the sphere area on which `X(K) > delta` is required.
    pub area_fraction: f64,
}

impl Default for ObstructionOptions {
    fn default() -> Self {
        ObstructionOptions {
            delta: 1e-8,
            area_fraction: 0.01,
        }
    }
}

struct Samples {
    /// `X_i(K)` per basis field, over quadrature nodes.
    cols: [Vec<f64>; 6],
    weights: Vec<f64>,
}

fn directional_samples(k: &SphereField) -> Result<Samples> {
    let quad = SphereQuadrature::new(k.grid())?;
    let g = k.grid();
    let mut cols: [Vec<f64>; 6] = Default::default();
    let mut weights = Vec::new();
    for c in ChartId::BOTH {
        let grid = g.on_chart(c);
        let dk = gradient(&grid, &k.chart(c).values);
        let q = quad.chart_weights(c);
        for node in 0..grid.node_count() {
            // every sphere point is covered by some chart disk |x| <= 1
            if grid.node_radius(node) > 1.0 {
                continue;
            }
            weights.push(q[node]);
            for (n, xf) in ConformalKillingField::ALL.iter().enumerate() {
                let xc = xf.chart_components(c, grid.node(node));
                cols[n].push(xc[0] * dk[node][0] + xc[1] * dk[node][1]);
            }
        }
    }
    Ok(Samples { cols, weights })
}

fn combine(s: &Samples, c: &[f64; 6], m: usize) -> f64 {
    (0..6).map(|i| c[i] * s.cols[i][m]).sum()
}

/// `(min, max |.|)` of `sum c_i X_i(K)` over the samples.
fn extremes(s: &Samples, c: &[f64; 6]) -> (f64, f64, usize) {
    let mut lo = f64::INFINITY;
    let mut arg = 0;
    let mut hi = 0.0f64;
    for m in 0..s.weights.len() {
        let v = combine(s, c, m);
        if v < lo {
            lo = v;
            arg = m;
        }
        hi = hi.max(v.abs());
    }
    (lo, hi, arg)
}

fn ratio(s: &Samples, c: &[f64; 6]) -> f64 {
    let (lo, hi, _) = extremes(s, c);
    if hi == 0.0 {
        f64::NEG_INFINITY
    } else {
        lo / hi
    }
}

/// Searches the span of the six basis fields for `X` with `X(K) >= 0`
/// everywhere and `X(K) > delta` on a set of positive area. A witness rules
/// out solutions; the test is sufficient only.
pub fn kw_obstruction(k: &SphereField, opts: &ObstructionOptions) -> Result<KwObstruction> {
    let s = directional_samples(k)?;
    let mut candidates: Vec<[f64; 6]> = Vec::new();
    for i in 0..6 {
        for sign in [1.0, -1.0] {
            let mut c = [0.0; 6];
            c[i] = sign;
            candidates.push(c);
        }
    }
    // weighted mean of X_i(K): the direction along which X(K) is largest on average
    let mut mean = [0.0; 6];
    for i in 0..6 {
        mean[i] = s.cols[i].iter().zip(&s.weights).map(|(v, w)| v * w).sum();
    }
    let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        candidates.push(mean.map(|v| v / norm));
    }
    let mut best = (f64::NEG_INFINITY, [0.0; 6]);
    // unrefined candidates first; ties keep the earlier, simpler one
    let refined: Vec<[f64; 6]> = candidates.iter().map(|&c0| refine_min(&s, c0)).collect();
    for c in candidates.into_iter().chain(refined) {
        let r = ratio(&s, &c);
        if r > best.0 + 1e-12 {
            best = (r, c);
        }
    }
    let (ratio_best, c) = best;
    let (lo, hi, _) = extremes(&s, &c);
    let area: f64 = s.weights.iter().sum();
    let pos: f64 = (0..s.weights.len())
        .filter(|&m| combine(&s, &c, m) > opts.delta)
        .map(|m| s.weights[m])
        .sum();
    if hi > 0.0 && lo >= -1e-12 * hi && pos >= opts.area_fraction * area {
        let basis = ConformalKillingField::ALL
            .iter()
            .enumerate()
            .find(|(i, _)| c[*i] > 1.0 - 1e-9)
            .map(|(_, f)| f.tag().to_string());
        Ok(KwObstruction::Violated {
            coefficients: c,
            basis,
            min_xk: lo,
            positive_area: pos,
        })
    } else {
        Ok(KwObstruction::Inconclusive {
            best_ratio: ratio_best,
        })
    }
}

/// Projected subgradient ascent on `min_m (c . X(K)_m) / max |.|` over the
/// unit sphere of coefficients.
fn refine_min(s: &Samples, c0: [f64; 6]) -> [f64; 6] {
    let mut c = c0;
    let mut r = ratio(s, &c);
    let mut step = 0.25;
    for _ in 0..200 {
        if r >= 0.0 || step < 1e-6 {
            break;
        }
        let (_, _, arg) = extremes(s, &c);
        let mut trial = c;
        for i in 0..6 {
            trial[i] += step * s.cols[i][arg];
        }
        let n = trial.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            break;
        }
        let trial = trial.map(|v| v / n);
        let rt = ratio(s, &trial);
        if rt > r {
            c = trial;
            r = rt;
        } else {
            step *= 0.5;
        }
    }
    c
}

/// Moment quantities of a planar conformal factor on `|y| <= r0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarMoments {
    pub r0: f64,
    /// `int d_l K e^u`, `l = 1, 2`
    pub i_l: [f64; 2],
    /// `int y . grad K e^u`
    pub j: f64,
    /// `int e^u`
    pub m: f64,
    /// `M^-1 int y_p e^u`
    pub mu_p: [f64; 2],
    /// `M^-1 int y_l y_p e^u`
    pub mu_lp: [[f64; 2]; 2],
}

/// Planar identities and moments over the disk `|y| <= r0` (trapezoid
/// weights restricted to the disk).
pub fn planar_kw_moments(u: &ScalarField, k: &ScalarField, r0: f64) -> Result<PlanarMoments> {
    u.grid.compatible(&k.grid)?;
    let g: ChartGrid = u.grid;
    if !(r0 > 0.0) || r0 > g.radius {
        return Err(Error::InvalidParameter(format!(
            "cutoff r0 = {r0} must lie in (0, {}]",
            g.radius
        )));
    }
    let dk = gradient(&g, &k.values);
    let h2 = g.h * g.h;
    let mut sums: [CompensatedSum; 9] = Default::default();
    for node in 0..g.node_count() {
        let y = g.node(node);
        if y[0].hypot(y[1]) > r0 {
            continue;
        }
        let e = u.values[node].exp() * h2;
        let vals = [
            dk[node][0] * e,
            dk[node][1] * e,
            (y[0] * dk[node][0] + y[1] * dk[node][1]) * e,
            e,
            y[0] * e,
            y[1] * e,
            y[0] * y[0] * e,
            y[0] * y[1] * e,
            y[1] * y[1] * e,
        ];
        for (s, v) in sums.iter_mut().zip(vals) {
            s.add(v);
        }
    }
    let v: Vec<f64> = sums.iter().map(|s| s.value()).collect();
    let m = v[3];
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::NonFinite("total mass of e^u".into()));
    }
    Ok(PlanarMoments {
        r0,
        i_l: [v[0], v[1]],
        j: v[2],
        m,
        mu_p: [v[4] / m, v[5] / m],
        mu_lp: [[v[6] / m, v[7] / m], [v[7] / m, v[8] / m]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::stereo_to_sphere;
    use crate::families::Bubble;

    #[test]
    fn basis_is_tangent() {
        for c in ChartId::BOTH {
            for &x in &[[0.3, -0.2], [1.1, 0.4], [0.0, 0.0]] {
                let z = stereo_to_sphere(c, x).0;
                for f in ConformalKillingField::ALL {
                    assert!(dot3(&f.eval(&z), &z).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn chart_components_reconstruct_field() {
        let c = ChartId::SouthProjected;
        let x = [0.4, 0.7];
        let t = chart_tangents(c, x);
        let z = stereo_to_sphere(c, x).0;
        for f in ConformalKillingField::ALL {
            let xc = f.chart_components(c, x);
            let v = f.eval(&z);
            for i in 0..3 {
                assert!((xc[0] * t[0][i] + xc[1] * t[1][i] - v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_field_integrals_vanish() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 48).unwrap();
        let r = kw_check(&SphereField::constant(g, 0.0)).unwrap();
        assert!(r.integrals.max_abs() < 1e-12, "{:?}", r.integrals);
        assert!(r.cone_warning.is_none());
    }

    #[test]
    fn obstruction_examples() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 48).unwrap();
        let k = SphereField::from_sphere_fn(g, |z| 2.0 + z[2]);
        match kw_obstruction(&k, &ObstructionOptions::default()).unwrap() {
            KwObstruction::Violated { basis, min_xk, .. } => {
                assert_eq!(basis.as_deref(), Some("conf3"));
                assert!(min_xk >= -1e-12);
            }
            other => panic!("{other:?}"),
        }
        let one = SphereField::constant(g, 1.0);
        assert!(!kw_obstruction(&one, &ObstructionOptions::default())
            .unwrap()
            .is_violated());
        let quad = SphereField::from_sphere_fn(g, |z| 2.0 + z[2] * z[2]);
        assert!(!kw_obstruction(&quad, &ObstructionOptions::default())
            .unwrap()
            .is_violated());
    }

    #[test]
    fn bubble_mass_and_constant_k() {
        let g = ChartGrid::planar(8.0, 400).unwrap();
        let u = ScalarField::from_fn(g, |x| Bubble::standard().eval(x));
        let k = ScalarField::constant(g, 3.0);
        let m = planar_kw_moments(&u, &k, 8.0).unwrap();
        assert_eq!(m.i_l, [0.0, 0.0]);
        assert_eq!(m.j, 0.0);
        let full = 4.0 * std::f64::consts::PI;
        assert!((m.m - full).abs() <= full / 65.0 + 1e-2, "{}", m.m);
        assert_eq!(m.mu_lp[0][1], m.mu_lp[1][0]);
    }
}
