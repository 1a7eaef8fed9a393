use faer::linalg::solvers::Solve;
use faer::prelude::*;
use faer::sparse::SparseColMat;
use log::debug;
use serde::{Deserialize, Serialize};

use super::overset::{cone_margins, NodeState, Overset};
use super::{k_mu, ContinuationState, SolveOptions};
use crate::chart::ChartId;
use crate::error::{Error, Result};
use crate::field::SphereField;

/// Per-node residual on both charts plus a cone census.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `det A - K_mu e^{2(u + phi)}` at unknowns, zero at slaved nodes.
    pub field: SphereField,
    pub sup: f64,
    /// Scale used by the relative convergence test, `sup |K_mu e^{2(u+phi)}|`.
    pub scale: f64,
    pub cone_fraction: f64,
    pub min_margin: f64,
}

fn k_at_unknowns(layout: &Overset, k: &SphereField, mu: f64) -> Vec<f64> {
    layout
        .restrict(k)
        .into_iter()
        .map(|v| k_mu(v, mu))
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Residual of the chart equation on the unknowns of `u`.
pub fn residual(
    u: &SphereField,
    k: &SphereField,
    mu: f64,
    cone_eps: f64,
) -> Result<ResidualReport> {
    let layout = Overset::new(u.grid())?;
    residual_on(&layout, u, k, mu, cone_eps)
}

pub(crate) fn residual_on(
    layout: &Overset,
    u: &SphereField,
    k: &SphereField,
    mu: f64,
    cone_eps: f64,
) -> Result<ResidualReport> {
    u.grid().compatible(&k.grid())?;
    let states = layout.node_states(u);
    let kv = k_at_unknowns(layout, k, mu);
    let f = layout.residual(&states, &kv);
    check_finite(&f, "residual")?;
    let scale = states
        .iter()
        .zip(&kv)
        .map(|(s, kk)| (kk * (2.0 * s.w).exp()).abs())
        .fold(0.0, f64::max);
    let margins = cone_margins(&states);
    let good = margins.iter().filter(|&&m| m > cone_eps).count();
    let mut field = SphereField::constant(u.grid(), 0.0);
    for (m, v) in f.iter().enumerate() {
        let (c, node) = layout.node_of(m);
        field.chart_mut(c).values[node] = *v;
    }
    Ok(ResidualReport {
        field,
        sup: sup(&f),
        scale,
        cone_fraction: good as f64 / margins.len() as f64,
        min_margin: margins.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}

/// Linearized operator `delta u -> T_1(A) : delta A - 2 K_mu e^{2(u+phi)} delta u`
/// on the unknowns, with slaved nodes eliminated.
pub struct Linearization {
    pub layout: Overset,
    pub matrix: SparseColMat<usize, f64>,
}

impl Linearization {
    /// Action on a two-chart field; only the unknowns of `delta` are used.
    pub fn apply(&self, delta: &SphereField) -> SphereField {
        let x = self.layout.restrict(delta);
        let xm = Mat::<f64>::from_fn(x.len(), 1, |i, _| x[i]);
        let y = &self.matrix * &xm;
        let mut out = SphereField::constant(delta.grid(), 0.0);
        for m in 0..x.len() {
            let (c, node) = self.layout.node_of(m);
            out.chart_mut(c).values[node] = y[(m, 0)];
        }
        out
    }
}

pub fn linearize(
    u: &SphereField,
    k: &SphereField,
    mu: f64,
    cone_eps: f64,
) -> Result<Linearization> {
    let layout = Overset::new(u.grid())?;
    let states = layout.node_states(u);
    let margins = cone_margins(&states);
    let bad: Vec<f64> = margins
        .iter()
        .cloned()
        .filter(|&m| !(m > cone_eps))
        .collect();
    if !bad.is_empty() {
        return Err(Error::ConeViolation {
            nodes: bad.len(),
            min_margin: bad.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    let kv = k_at_unknowns(&layout, k, mu);
    let matrix = layout.jacobian(&states, &kv)?;
    Ok(Linearization { layout, matrix })
}

/// One accepted Newton iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub residual: f64,
    pub step_length: f64,
    pub min_margin: f64,
    pub max_u: f64,
}

/// Outcome of a Newton run; the last accepted iterate is kept even when the
/// run fails.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonRun {
    pub state: ContinuationState,
    pub history: Vec<IterRecord>,
    pub failure: Option<String>,
}

impl NewtonRun {
    pub fn into_result(self) -> Result<ContinuationState> {
        match self.failure {
            None => Ok(self.state),
            Some(reason) => Err(Error::NonConvergence {
                reason,
                iterations: self.state.iterations,
                residual: self.state.residual_norm,
            }),
        }
    }
}

struct Eval {
    states: Vec<NodeState>,
    f: Vec<f64>,
    sup: f64,
    scale: f64,
    min_margin: f64,
}

fn evaluate(layout: &Overset, field: &SphereField, kv: &[f64]) -> Eval {
    let states = layout.node_states(field);
    let f = layout.residual(&states, kv);
    let scale = states
        .iter()
        .zip(kv)
        .map(|(s, kk)| (kk * (2.0 * s.w).exp()).abs())
        .fold(0.0, f64::max);
    let min_margin = cone_margins(&states)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let s = if f.iter().all(|v| v.is_finite()) {
        sup(&f)
    } else {
        f64::INFINITY
    };
    Eval {
        states,
        f,
        sup: s,
        scale,
        min_margin,
    }
}

/// Damped Newton iteration on the coupled two-chart system.
pub fn newton_run(
    layout: &Overset,
    k: &SphereField,
    mu: f64,
    u0: &SphereField,
    opts: &SolveOptions,
) -> Result<NewtonRun> {
    opts.validate()?;
    u0.grid().compatible(&layout.grid)?;
    let kv = k_at_unknowns(layout, k, mu);
    let mut x = layout.restrict(u0);
    let mut field = layout.extend(&x);
    let mut ev = evaluate(layout, &field, &kv);
    if !(ev.min_margin > opts.cone_eps) {
        let margins = cone_margins(&ev.states);
        let nodes = margins.iter().filter(|&&m| !(m > opts.cone_eps)).count();
        return Err(Error::ConeViolation {
            nodes,
            min_margin: ev.min_margin,
        });
    }
    let mut history = Vec::new();
    let mut failure = None;
    let mut iterations = 0;
    loop {
        let converged = ev.sup < opts.newton_tol * (1.0 + ev.scale);
        if converged {
            break;
        }
        if iterations >= opts.max_iters {
            failure = Some(format!("iteration cap {} reached", opts.max_iters));
            break;
        }
        let jac = layout.jacobian(&ev.states, &kv)?;
        let lu = match jac.sp_lu() {
            Ok(lu) => lu,
            Err(e) => {
                failure = Some(format!("singular Jacobian: {e:?}"));
                break;
            }
        };
        let rhs = Mat::<f64>::from_fn(x.len(), 1, |i, _| -ev.f[i]);
        let dx = lu.solve(&rhs);
        if !(0..x.len()).all(|i| dx[(i, 0)].is_finite()) {
            failure = Some("non-finite Newton step".into());
            break;
        }
        let mut alpha = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, v)| v + alpha * dx[(i, 0)])
                .collect();
            let tf = layout.extend(&trial);
            let te = evaluate(layout, &tf, &kv);
            if te.min_margin > opts.cone_eps && te.sup < ev.sup {
                break Some((trial, tf, te));
            }
            alpha *= opts.damping_factor;
            if alpha < opts.min_damping {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((trial, tf, te)) => {
                x = trial;
                field = tf;
                ev = te;
                let max_u = field.max_in_disk();
                debug!(
                    "newton {iterations}: residual {:.3e} step {alpha:.3e} margin {:.3e}",
                    ev.sup, ev.min_margin
                );
                history.push(IterRecord {
                    iteration: iterations,
                    residual: ev.sup,
                    step_length: alpha,
                    min_margin: ev.min_margin,
                    max_u,
                });
            }
            None => {
                failure = Some("damping underflow".into());
                break;
            }
        }
    }
    let margins = cone_margins(&ev.states);
    let good = margins.iter().filter(|&&m| m > opts.cone_eps).count();
    let state = ContinuationState {
        mu,
        residual_norm: ev.sup,
        min_cone_margin: ev.min_margin,
        cone_fraction: good as f64 / margins.len() as f64,
        max_u: field.max_in_disk(),
        u: Some(field),
        iterations,
        converged: failure.is_none(),
        kw_max: None,
        diagnostics: None,
    };
    Ok(NewtonRun {
        state,
        history,
        failure,
    })
}

/// Solves `det A = K_mu e^{2(u + phi)}` from `u0`; errors if the iteration
/// does not converge.
pub fn newton_solve(
    k: &SphereField,
    mu: f64,
    u0: &SphereField,
    opts: &SolveOptions,
) -> Result<ContinuationState> {
    let layout = Overset::new(u0.grid())?;
    newton_run(&layout, k, mu, u0, opts)?.into_result()
}

/// `sup |u - c|` over the unknowns of both charts.
pub fn distance_to_constant(u: &SphereField, c: f64) -> f64 {
    let mut m = 0.0f64;
    for ch in ChartId::BOTH {
        let f = u.chart(ch);
        for k in 0..f.grid.node_count() {
            if f.grid.node_radius(k) <= f.grid.radius {
                m = m.max((f.values[k] - c).abs());
            }
        }
    }
    m
}
