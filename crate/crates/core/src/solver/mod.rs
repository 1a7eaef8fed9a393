//! Cone-safeguarded Newton solver for `sigma_2(g_u^-1 A_{g_u}) = K` on the
//! sphere, the reduced map and degree, homotopy continuation and blow-up
//! diagnostics.

pub mod blowup;
pub mod homotopy;
pub mod newton;
pub mod overset;
pub mod reduced;

use serde::{Deserialize, Serialize};

use crate::chart::{ChartGrid, ChartId, DEFAULT_INTERVALS, DEFAULT_RADIUS};
use crate::error::{Error, Result};
use crate::field::SphereField;

pub use blowup::{blowup_diagnose, BlowupDiagnostics, BubbleFit};
pub use homotopy::{homotopy_continue, ContinuationRun, HomotopyOptions};
pub use newton::{linearize, newton_solve, residual, Linearization, NewtonRun, ResidualReport};
pub use reduced::{
    bubble_initial_guess, reduced_degree, reduced_map_g, ReducedDegree, ReducedMapSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative sup-norm residual tolerance.
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Backtracking factor applied to the step on rejection.
    pub damping_factor: f64,
    /// Smallest step length tried before giving up.
    pub min_damping: f64,
    /// Floor on the smallest eigenvalue of `g_u^-1 A`.
    pub cone_eps: f64,
    pub h: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub mu_start: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            newton_tol: 1e-11,
            max_iters: 30,
            damping_factor: 0.5,
            min_damping: 1e-12,
            cone_eps: 1e-8,
            h: 2.0 * DEFAULT_RADIUS / DEFAULT_INTERVALS as f64,
            radius: DEFAULT_RADIUS,
            mu_start: 0.05,
        }
    }
}

impl SolveOptions {
    pub fn with_intervals(intervals: usize) -> Self {
        SolveOptions {
            h: 2.0 * DEFAULT_RADIUS / intervals as f64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "newton_tol must be positive".into(),
            ));
        }
        if !(self.cone_eps > 0.0) {
            return Err(Error::InvalidParameter("cone eps must be positive".into()));
        }
        if !(self.damping_factor > 0.0 && self.damping_factor < 1.0) {
            return Err(Error::InvalidParameter(
                "damping factor must lie in (0, 1)".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.mu_start > 0.0 && self.mu_start <= 1.0) {
            return Err(Error::InvalidParameter(
                "mu_start must lie in (0, 1]".into(),
            ));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<ChartGrid> {
        ChartGrid::new(ChartId::NorthProjected, self.h, self.radius)
    }
}

/// `K_mu = mu K + (1 - mu) / 4`.
pub fn k_mu(k: f64, mu: f64) -> f64 {
    mu * k + (1.0 - mu) * 0.25
}

pub fn k_mu_field(k: &SphereField, mu: f64) -> SphereField {
    k.map(|v| k_mu(v, mu))
}

/// One point of a solution path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationState {
    pub mu: f64,
    #[serde(skip)]
    pub u: Option<SphereField>,
    pub residual_norm: f64,
    /// Smallest eigenvalue of `g_u^-1 A` over the unknowns.
    pub min_cone_margin: f64,
    /// Fraction of unknowns with `A > cone_eps e^{u + phi}`.
    pub cone_fraction: f64,
    pub max_u: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest Kazdan-Warner integral, when recorded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kw_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<BlowupDiagnostics>,
}

impl ContinuationState {
    pub fn field(&self) -> &SphereField {
        self.u.as_ref().expect("state carries its field")
    }
}
