//! Continuation in `mu` from the constant problem `K_0 = 1/4` to `K_1 = K`.

use log::info;
use serde::{Deserialize, Serialize};

use super::blowup::{blowup_diagnose, BlowupDiagnostics};
use super::newton::{newton_run, IterRecord};
use super::overset::Overset;
use super::reduced::{
    bubble_initial_guess, reduced_degree, reduced_map_g, reduced_mean, DegreeOptions,
};
use super::{k_mu, ContinuationState, SolveOptions};
use crate::chart::norm3;
use crate::error::Result;
use crate::field::SphereField;
use crate::identity::kw_check_with;
use crate::kfield::{FnSphere, SphereFunction};
use crate::quadrature::SphereQuadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopyOptions {
    pub initial_step: f64,
    /// Continuation stalls once the step would fall below this.
    pub min_step: f64,
    pub grow: f64,
    /// Steps are grown after a Newton solve this fast.
    pub fast_iters: usize,
    pub record_kw: bool,
    /// Converged states whose largest Kazdan-Warner integral exceeds
    /// `kw_factor * h^2` are rejected as grid artifacts.
    pub kw_factor: Option<f64>,
    /// Skip the reduced map and start from `xi = 0`.
    pub skip_reduction: bool,
    /// Seeds tried at `mu_start` before the run is declared stalled.
    pub seed_attempts: usize,
    pub degree: DegreeOptions,
}

impl Default for HomotopyOptions {
    fn default() -> Self {
        HomotopyOptions {
            initial_step: 0.05,
            min_step: 1e-3,
            grow: 1.5,
            fast_iters: 3,
            record_kw: true,
            kw_factor: Some(20.0),
            skip_reduction: false,
            seed_attempts: 6,
            degree: DegreeOptions::default(),
        }
    }
}

/// Where the continuation was started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSeed {
    pub xi: [f64; 3],
    /// `|G(xi)|`; zero up to Newton tolerance when `xi` is a zero of `G`.
    pub g_norm: f64,
    pub is_zero: bool,
    /// Constant added to the Möbius factor so that `e^{-2c}` matches the
    /// mean of `K_mu` in the bubble metric.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRun {
    pub seed: ContinuationSeed,
    /// Converged states with nondecreasing `mu`.
    pub states: Vec<ContinuationState>,
    pub reached_end: bool,
    /// Last Newton iterate of the failed attempt that ended the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_attempt: Option<ContinuationState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stall_mu: Option<f64>,
    /// Diagnostics of the last attempt when the run stalls.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<BlowupDiagnostics>,
    /// Newton history of every attempt, accepted or not.
    pub log: Vec<AttemptRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub mu: f64,
    pub accepted: bool,
    pub iterations: usize,
    pub residual: f64,
    pub max_u: f64,
    pub min_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kw_max: Option<f64>,
    /// Newton converged but the state failed the Kazdan-Warner guard.
    pub kw_rejected: bool,
    #[serde(skip)]
    pub history: Vec<IterRecord>,
}

impl ContinuationRun {
    /// The run's final state: the last attempt after a stall, otherwise the
    /// last converged state.
    pub fn final_state(&self) -> Option<&ContinuationState> {
        self.last_attempt.as_ref().or(self.states.last())
    }
}

/// Candidate seeds: the zeros of `G` by distance from the origin, or, when
/// `G` has no zero, the lattice points of smallest `|G|`.
fn seed_candidates(
    k: &dyn SphereFunction,
    opts: &HomotopyOptions,
) -> Result<Vec<ContinuationSeed>> {
    let q = &opts.degree.quadrature;
    let deg = reduced_degree(k, &opts.degree)?;
    if !deg.zeros.is_empty() {
        let mut zeros = deg.zeros.clone();
        zeros.sort_by(|a, b| norm3(&a.xi).total_cmp(&norm3(&b.xi)));
        return Ok(zeros
            .iter()
            .take(opts.seed_attempts.max(1))
            .map(|z| ContinuationSeed {
                xi: z.xi,
                g_norm: z.residual,
                is_zero: true,
                shift: 0.0,
            })
            .collect());
    }
    let s = opts.degree.radius;
    let h = opts.degree.seed_spacing;
    let m = (s / h).ceil() as i64;
    let mut lattice = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            for l in -m..=m {
                let xi = [i as f64 * h, j as f64 * h, l as f64 * h];
                if norm3(&xi) < s {
                    lattice.push((xi, norm3(&reduced_map_g(k, &xi, q)?)));
                }
            }
        }
    }
    lattice.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(lattice
        .into_iter()
        .take(opts.seed_attempts.max(1))
        .map(|(xi, g)| ContinuationSeed {
            xi,
            g_norm: g,
            is_zero: false,
            shift: 0.0,
        })
        .collect())
}

/// Continues solutions of `det A = K_mu e^{2(u + phi)}` from `mu_start` to
/// 1 with adaptive steps, starting from the Möbius factor at the chosen
/// zero of the reduced map.
pub fn homotopy_continue(
    k: &dyn SphereFunction,
    opts: &SolveOptions,
    hopts: &HomotopyOptions,
) -> Result<ContinuationRun> {
    opts.validate()?;
    let grid = opts.grid()?;
    let layout = Overset::new(grid)?;
    let quad = SphereQuadrature::new(grid)?;
    let ks = k.sample(grid);
    let candidates = if hopts.skip_reduction {
        vec![ContinuationSeed {
            xi: [0.0; 3],
            g_norm: 0.0,
            is_zero: true,
            shift: 0.0,
        }]
    } else {
        seed_candidates(k, hopts)?
    };
    let mu0 = opts.mu_start;
    let kmu0 = FnSphere(|z: &[f64; 3]| k_mu(k.value(z), mu0));
    let ctx = Context {
        layout: &layout,
        quad: &quad,
        ks: &ks,
        opts,
        hopts,
    };

    let mut states: Vec<ContinuationState> = Vec::new();
    let mut log = Vec::new();
    let mut last_attempt = None;
    let mut stall_mu = None;
    let mut current = None;
    let mut seed = candidates[0];
    for cand in &candidates {
        let mut cand = *cand;
        cand.shift = -0.5 * reduced_mean(&kmu0, &cand.xi, &hopts.degree.quadrature)?.ln();
        let shift = cand.shift;
        let u0 = bubble_initial_guess(grid, &cand.xi)?.map(|v| v + shift);
        info!("seed xi = {:?}, |G| = {:.3e}", cand.xi, cand.g_norm);
        match attempt(&ctx, mu0, &u0, &mut log) {
            Ok(st) => {
                seed = cand;
                current = Some(st);
                break;
            }
            Err(failed) => {
                if last_attempt.is_none() {
                    seed = cand;
                    last_attempt = failed;
                }
            }
        }
    }
    match current {
        None => stall_mu = Some(mu0),
        Some(st) => {
            last_attempt = None;
            let mut step = hopts.initial_step;
            let mut mu_done = mu0;
            let mut st = st;
            loop {
                if !hopts.record_kw {
                    st.kw_max = None;
                }
                info!(
                    "mu = {mu_done:.4}: {} iterations, max u {:.3}",
                    st.iterations, st.max_u
                );
                let fast = st.iterations <= hopts.fast_iters;
                let u = st.field().clone();
                states.push(st);
                if mu_done >= 1.0 {
                    break;
                }
                if fast {
                    step *= hopts.grow;
                }
                let next = loop {
                    let target = (mu_done + step).min(1.0);
                    match attempt(&ctx, target, &u, &mut log) {
                        Ok(s) => break Some((target, s)),
                        Err(failed) => {
                            step *= 0.5;
                            info!("mu = {target:.4} failed; step -> {step:.3e}");
                            if step < hopts.min_step {
                                stall_mu = Some(target);
                                last_attempt = failed;
                                break None;
                            }
                        }
                    }
                };
                match next {
                    Some((m, s)) => {
                        mu_done = m;
                        st = s;
                    }
                    None => break,
                }
            }
        }
    }
    let reached_end = stall_mu.is_none();
    let diagnostics = if reached_end {
        None
    } else {
        let probe = last_attempt.as_ref().or(states.last());
        match probe.and_then(|s| s.u.as_ref()) {
            Some(u) => Some(blowup_diagnose(u)?),
            None => None,
        }
    };
    Ok(ContinuationRun {
        seed,
        states,
        reached_end,
        last_attempt,
        stall_mu,
        diagnostics,
        log,
    })
}

/// One Newton solve at `mu`, logged. A failed solve returns its last iterate.
fn attempt(
    ctx: &Context,
    mu: f64,
    u0: &SphereField,
    log: &mut Vec<AttemptRecord>,
) -> std::result::Result<ContinuationState, Option<ContinuationState>> {
    let mut run = match newton_run(ctx.layout, ctx.ks, mu, u0, ctx.opts) {
        Ok(r) => r,
        Err(_) => return Err(None),
    };
    let converged = run.failure.is_none();
    if converged && (ctx.hopts.record_kw || ctx.hopts.kw_factor.is_some()) {
        run.state.kw_max = kw_check_with(ctx.quad, run.state.field())
            .ok()
            .map(|r| r.integrals.max_abs());
    }
    let h = ctx.opts.h;
    let kw_rejected = match (converged, ctx.hopts.kw_factor, run.state.kw_max) {
        (true, Some(f), Some(kw)) => kw > f * h * h,
        _ => false,
    };
    let ok = converged && !kw_rejected;
    if kw_rejected {
        info!(
            "mu = {mu:.4}: converged state rejected, KW integral {:.3e}",
            run.state.kw_max.unwrap_or(f64::NAN)
        );
        run.state.converged = false;
    }
    log.push(AttemptRecord {
        mu,
        accepted: ok,
        iterations: run.state.iterations,
        residual: run.state.residual_norm,
        max_u: run.state.max_u,
        min_margin: run.state.min_cone_margin,
        kw_max: run.state.kw_max,
        kw_rejected,
        history: run.history,
    });
    if ok {
        Ok(run.state)
    } else {
        Err(Some(run.state))
    }
}

struct Context<'a> {
    layout: &'a Overset,
    quad: &'a SphereQuadrature,
    ks: &'a SphereField,
    opts: &'a SolveOptions,
    hopts: &'a HomotopyOptions,
}
