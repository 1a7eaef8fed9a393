//! Numerical toolkit for the sigma_2 Nirenberg problem on the round
//! two-sphere: chart geometry, conformal tensors, exact solution families,
//! radial analysis, integral identities, critical-point degree theory and a
//! cone-safeguarded Newton solver with homotopy continuation.

pub mod chart;
pub mod critical;
pub mod error;
pub mod families;
pub mod field;
pub mod identity;
pub mod kfield;
pub mod quadrature;
pub mod radial;
pub mod solver;
pub mod stencil;
pub mod tensor;

pub use chart::{ChartGrid, ChartId, PartitionOfUnity, SpherePoint};
pub use error::{Error, Result};
pub use field::{ScalarField, SphereField};
pub use tensor::{ConeSpec, EigenPair, Sym2, SymmetricTensorField};
