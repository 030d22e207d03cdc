//! Kernel dimension reduction for regression.
//!
//! The estimator searches the Stiefel manifold of `m x d` orthonormal
//! matrices `B` for the subspace minimising the regularized kernel contrast
//!
//! ```text
//! Tr[ G_Y (G_X^B + n eps I)^-1 ]
//! ```
//!
//! where `G_X^B` is the centered Gaussian Gram matrix of the projected
//! covariates `B^T x_i` and `G_Y` the centered Gram matrix of the responses.
//! The contrast is the trace of an empirical conditional covariance operator,
//! so small values mean that `B^T X` explains `Y` well.
//!
//! Modules:
//!
//! | module        | contents                                                  |
//! |---------------|-----------------------------------------------------------|
//! | [`kernelgram`] | RBF kernel, projected Gram matrices, double centering    |
//! | [`objective`]  | contrast value and its analytic Euclidean gradient       |
//! | [`stiefel`]    | manifold points, tangent projection, QR retraction       |
//! | [`optim`]      | steepest descent with Armijo backtracking, continuation  |
//! | [`baselines`]  | SIR, SAVE and pHd                                        |
//! | [`synthdata`]  | benchmark regressions (A), (B), (C) and standardization  |
//! | [`evalbench`]  | projection distance, Monte Carlo harness, ordering probe |
//! | [`csvio`]      | CSV ingestion and emission                               |

// NaN inputs must fall into the rejecting branch of these comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod csvio;
pub mod error;
pub mod evalbench;
pub mod kernelgram;
pub mod linalg;
pub mod objective;
pub mod optim;
pub mod stiefel;
pub mod synthdata;

pub use error::{KdrError, Result};
pub use evalbench::projection_distance;
pub use kernelgram::{GramMatrix, KernelConfig};
pub use objective::{KdrObjective, RegCoeff};
pub use optim::{fit_kdr, FitResult, OptimConfig};
pub use stiefel::StiefelPoint;
pub use synthdata::{Dataset, GenSpec, Regression};

pub use nalgebra::DMatrix;
