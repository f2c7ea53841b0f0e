//! Extreme learning machines with tunable random embeddings, plus the
//! analysis tooling needed to study how frequency content is (or is not)
//! learned: a gradient-descent MLP baseline, empirical neural-tangent-kernel
//! spectra, and sine-basis projections that turn "does the fit capture the
//! target" into a number.
//!
//! The crate is organized as five layers, each usable on its own:
//!
//! - [`linops`]: dense row-major matrices, thin SVD, Moore-Penrose
//!   pseudoinverse, minimum-norm least squares.
//! - [`datagen`]: sinusoidal benchmark targets sampled on uniform grids,
//!   with deterministic train/test splits.
//! - [`elm`]: single-hidden-layer networks whose random first layer is
//!   frozen and whose linear readout is solved in one shot.
//! - [`gdnet`]: a small full-batch gradient-descent MLP and the empirical
//!   NTK machinery (kernel, eigenmodes, per-mode error decay).
//! - [`spectral`]: sine/cosine projections, relative L2 errors, and capture
//!   verdicts.
//!
//! Everything is deterministic given a seed; no global state, no threads.

use serde::{Deserialize, Serialize};

pub mod datagen;
pub mod elm;
pub mod error;
pub mod gdnet;
pub mod linops;
pub mod spectral;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Hidden-layer activation. Only tanh is implemented; the enum keeps configs
/// self-describing in serialized form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    #[default]
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output value
    /// (for tanh: 1 - y^2), which is what backpropagation has in hand.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
        }
    }
}
