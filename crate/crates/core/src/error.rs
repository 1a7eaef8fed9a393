use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("chart grids are inconsistent: {0}")]
    InconsistentGrids(String),

    #[error("point ({x1}, {x2}) lies outside the overlap covered by the source chart")]
    OutsideOverlap { x1: f64, x2: f64 },

    #[error("grid too small for the requested stencil: {0}")]
    GridTooSmall(String),

    #[error("non-positive metric factor {value} at node {node}")]
    NonPositiveMetric { node: usize, value: f64 },

    #[error("cone parameter p = {0} outside (1, 2]")]
    InvalidCone(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radius {r} outside the validity interval [{rmin}, {rmax}]")]
    OutsideValidity { r: f64, rmin: f64, rmax: f64 },

    #[error("evaluation at the inversion center")]
    InversionCenter,

    #[error("boundary data not attainable: {0}")]
    Unsolvable(String),

    #[error("closed form failed to reproduce the boundary data: {0}")]
    Inconsistent(String),

    #[error("not a radial solution on the cone boundary (best deviation {deviation:.3e})")]
    NoFamilyFits { deviation: f64 },

    #[error("profile does not reach small radii (r_min = {0})")]
    ProfileTooCoarse(f64),

    #[error("asymptotics undetermined: {0}")]
    Undetermined(String),

    #[error("nondegeneracy condition fails: min(|grad K| + |lap K|) = {value:.3e} at z = {z:?}")]
    Degenerate { value: f64, z: [f64; 3] },

    #[error("critical point at z = {z:?} is not Morse (|det Hess| = {det:.3e})")]
    NonMorse { z: [f64; 3], det: f64 },

    #[error("unresolved critical region near z = {z:?}")]
    UnresolvedCritical { z: [f64; 3] },

    #[error("overlap mismatch {mismatch:.3e} exceeds {limit:.3e}")]
    OverlapMismatch { mismatch: f64, limit: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("cone violated at {nodes} node(s); minimum margin {min_margin:.3e}")]
    ConeViolation { nodes: usize, min_margin: f64 },

    #[error("Newton iteration did not converge after {iterations} iteration(s): {reason} (residual {residual:.3e})")]
    NonConvergence {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("reduced map degenerates for |xi| = {0}")]
    DegenerateReduction(f64),

    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
