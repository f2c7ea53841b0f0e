//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands have incompatible shapes for the requested operation.
    #[error("{op}: dimension mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A matrix or vector was constructed with the wrong number of entries.
    #[error("{op}: expected {expected} entries for a {rows}x{cols} matrix, got {actual}")]
    BadLength {
        op: &'static str,
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },

    /// A non-finite value (NaN or infinity) where finite data is required.
    #[error("{op}: non-finite value at index {index}")]
    NonFinite { op: &'static str, index: usize },

    /// An invalid scalar or structural parameter.
    #[error("{op}: invalid parameter {name}: {reason}")]
    InvalidParam {
        op: &'static str,
        name: &'static str,
        reason: String,
    },

    /// A matrix decomposition did not converge.
    #[error("{op}: decomposition failed: {detail}")]
    DecompositionFailed { op: &'static str, detail: String },

    /// Symmetric-only operation on a matrix that is not symmetric.
    #[error("eigendecomp_sym: input not symmetric, relative asymmetry {asymmetry:.3e} exceeds {tolerance:.1e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    /// Operation requires a non-empty dataset.
    #[error("{op}: empty dataset")]
    EmptyDataset { op: &'static str },

    /// Prediction requested from a model whose output weights are unsolved.
    #[error("predict: model has not been fitted")]
    Unfitted,

    /// A hidden-layer feature overflowed or was otherwise non-finite.
    #[error("fit: non-finite feature at sample {sample}, hidden node {node}")]
    NonFiniteFeature { sample: usize, node: usize },

    /// Training diverged.
    #[error("train_full_batch: diverged at iteration {iter}, mse {mse:.3e}")]
    Diverged { iter: usize, mse: f64 },

    /// A kernel computation would exceed the configured memory budget.
    #[error("ntk_matrix: {samples} samples x {params} parameters = {required} elements exceeds budget {budget}")]
    BudgetExceeded {
        samples: usize,
        params: usize,
        required: usize,
        budget: usize,
    },

    /// Projection grid does not satisfy the uniform-over-2pi precondition.
    #[error("project_sines: {reason}")]
    BadProjectionGrid { reason: String },

    /// Relative error against a zero-norm target is undefined.
    #[error("relative_l2_error: target has zero norm")]
    ZeroNormTarget,
}
