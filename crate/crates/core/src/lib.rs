//! Sparse, smoothly time-varying partial-correlation networks.
//!
//! Observations arrive as `T` centered `n × p` panels observed at equidistant
//! time points. Each panel is rewritten as a joint regression of every
//! variable on all others with symmetric partial-correlation coefficients,
//! and the stacked problem is penalized with an `l1` sparsity term plus a
//! temporal smoothness term on adjacent time points:
//!
//! * **GEN** (generalized elastic net): squared differences, solved by ADMM
//!   with a block-tridiagonal quadratic step ([`solver::gen`]);
//! * **GFL** (generalized fused lasso): absolute differences, solved by ADMM
//!   with a per-pair fused-lasso proximal step ([`solver::gfl`]).
//!
//! Precision diagonals and partial correlations are estimated by alternating
//! between the two ([`fit`]); `(λ1, λ2)` are chosen by BIC using closed-form
//! degree-of-freedom estimates ([`select`]). Synthetic benchmarks live in
//! [`simulate`] and evaluation metrics in [`metrics`].
//!
//! All numerical code is generic over the scalar type through [`Real`];
//! `f64` aliases are exported for the common case.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod fit;
pub mod flsa;
pub mod kkt;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod select;
pub mod simulate;
pub mod solver;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::Real;

pub use design::{PartialCorrField, PrecisionDiagonals, StackedDesign, TemporalDataset};
pub use fit::{FitConfig, FitResult, Method, OuterConfig};
pub use select::{BicSurface, DfConfig};
pub use solver::{AdmmConfig, AdmmDiagnostics};

/// Double-precision dataset.
pub type Dataset = TemporalDataset<f64>;
/// Double-precision partial-correlation field.
pub type Field = PartialCorrField<f64>;
/// Double-precision precision diagonals.
pub type Sigma = PrecisionDiagonals<f64>;
/// Double-precision fit.
pub type Fit = FitResult<f64>;
/// Double-precision solver configuration bundle.
pub type Config = FitConfig<f64>;
/// Double-precision BIC surface.
pub type Surface = BicSurface<f64>;
