//! Extreme learning machines: a single hidden layer whose weights and biases
//! are drawn once from a configurable distribution and frozen, plus a linear
//! readout solved in one shot by minimum-norm least squares.
//!
//! The embedding distribution is the whole story here. The hidden layer is a
//! random feature map; choosing its scale (the `sd` of a normal init) decides
//! which frequencies the features can carry, and therefore what the readout
//! can fit. Nothing iterates: `fit` builds the feature matrix and solves.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::linops::{self, DenseMatrix, PinvOptions};
use crate::{Activation, Error, Result};

/// Distribution for the random first-layer weights and biases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightInit {
    /// Uniform on [low, high).
    Uniform { low: f64, high: f64 },
    /// Normal with the given mean and standard deviation.
    Normal { mean: f64, sd: f64 },
}

impl WeightInit {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightInit::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(Error::InvalidParam {
                        op: "WeightInit",
                        name: "range",
                        reason: format!("[{low}, {high}) is not a valid range"),
                    });
                }
            }
            WeightInit::Normal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && *sd > 0.0) {
                    return Err(Error::InvalidParam {
                        op: "WeightInit",
                        name: "sd",
                        reason: format!("sd {sd} must be positive and finite"),
                    });
                }
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha12Rng, count: usize) -> Vec<f64> {
        match self {
            WeightInit::Uniform { low, high } => {
                let d = Uniform::new(*low, *high);
                (0..count).map(|_| d.sample(rng)).collect()
            }
            WeightInit::Normal { mean, sd } => {
                let d = Normal::new(*mean, *sd).expect("validated");
                (0..count).map(|_| d.sample(rng)).collect()
            }
        }
    }
}

/// Everything needed to build and solve one model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ELMConfig {
    pub n_in: usize,
    pub n_out: usize,
    /// Hidden-layer width L.
    pub hidden: usize,
    pub activation: Activation,
    pub init: WeightInit,
    pub seed: u64,
    /// Truncation policy for the readout solve.
    pub rcond: PinvOptions,
}

impl ELMConfig {
    /// Scalar-in, scalar-out config with the default pseudoinverse cutoff.
    pub fn scalar(hidden: usize, init: WeightInit, seed: u64) -> Self {
        Self {
            n_in: 1,
            n_out: 1,
            hidden,
            activation: Activation::Tanh,
            init,
            seed,
            rcond: PinvOptions::auto(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_in", self.n_in),
            ("n_out", self.n_out),
            ("hidden", self.hidden),
        ] {
            if v == 0 {
                return Err(Error::InvalidParam {
                    op: "ELMConfig",
                    name,
                    reason: "must be >= 1".into(),
                });
            }
        }
        self.init.validate()
    }
}

/// A (possibly fitted) model: frozen random first layer, solved readout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ELMModel {
    /// First-layer weights, hidden x n_in.
    pub w: DenseMatrix,
    /// First-layer biases, length hidden.
    pub b: Vec<f64>,
    /// Readout weights, hidden x n_out. Present only after `fit`.
    pub beta: Option<DenseMatrix>,
    pub config: ELMConfig,
}

impl ELMModel {
    /// Draws the random layer without solving the readout.
    pub fn unfitted(config: ELMConfig) -> Result<Self> {
        let (w, b) = init_random(&config)?;
        Ok(Self {
            w,
            b,
            beta: None,
            config,
        })
    }
}

/// What the one-shot solve produced.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitReport {
    /// Root mean squared training error.
    pub train_rmse: f64,
    /// ||H beta - T|| / ||T|| on the training set.
    pub train_rel_l2: f64,
    /// Numerical rank of the feature matrix under the solve's cutoff.
    pub rank_h: usize,
    /// Wall time of feature construction plus solve, milliseconds.
    pub fit_wall_time_ms: f64,
}

/// Draws the random first layer: all of `w` row-major, then `b`, from one
/// seeded stream. Identical config gives bit-identical output.
pub fn init_random(config: &ELMConfig) -> Result<(DenseMatrix, Vec<f64>)> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let w_data = config.init.draw(&mut rng, config.hidden * config.n_in);
    let b = config.init.draw(&mut rng, config.hidden);
    let w = DenseMatrix::new(config.hidden, config.n_in, w_data)?;
    Ok((w, b))
}

/// Feature matrix: entry (j, l) = `tanh(sum_i w[l,i] x[j,i] + b[l])`.
pub fn hidden_matrix(w: &DenseMatrix, b: &[f64], x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.cols() != w.cols() || b.len() != w.rows() {
        return Err(Error::DimensionMismatch {
            op: "hidden_matrix",
            left_rows: w.rows(),
            left_cols: w.cols(),
            right_rows: x.rows(),
            right_cols: x.cols(),
        });
    }
    let pre = linops::matmul(x, &w.transpose())?;
    let hidden = w.rows();
    DenseMatrix::from_fn(x.rows(), hidden, |j, l| (pre.get(j, l) + b[l]).tanh())
}

/// Builds the feature matrix for the training inputs and solves the readout.
pub fn fit(config: &ELMConfig, train: &Dataset) -> Result<(ELMModel, FitReport)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset { op: "fit" });
    }
    if config.n_in != 1 || config.n_out != 1 {
        return Err(Error::InvalidParam {
            op: "fit",
            name: "n_in/n_out",
            reason: "datasets are scalar-valued; use n_in = n_out = 1".into(),
        });
    }
    let n = train.len();
    let x = DenseMatrix::new(n, 1, train.x.clone())?;
    let t = DenseMatrix::new(n, 1, train.y.clone())?;

    let started = Instant::now();
    let (w, b) = init_random(config)?;
    let h = hidden_matrix(&w, &b, &x)?;
    if let Some(index) = h.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature {
            sample: index / config.hidden,
            node: index % config.hidden,
        });
    }
    let (beta, rank_h) = linops::lstsq_detailed(&h, &t, config.rcond)?;
    let fit_wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let pred = linops::matmul(&h, &beta)?;
    let sq_sum: f64 = pred
        .as_slice()
        .iter()
        .zip(t.as_slice())
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    let t_norm = t.frobenius_norm();
    let report = FitReport {
        train_rmse: (sq_sum / n as f64).sqrt(),
        train_rel_l2: if t_norm > 0.0 {
            sq_sum.sqrt() / t_norm
        } else {
            sq_sum.sqrt()
        },
        rank_h,
        fit_wall_time_ms,
    };
    let model = ELMModel {
        w,
        b,
        beta: Some(beta),
        config: *config,
    };
    Ok((model, report))
}

/// Applies the model: feature matrix times readout. Linear in the readout,
/// no output bias, no output activation.
pub fn predict(model: &ELMModel, x: &DenseMatrix) -> Result<DenseMatrix> {
    let beta = model.beta.as_ref().ok_or(Error::Unfitted)?;
    let h = hidden_matrix(&model.w, &model.b, x)?;
    linops::matmul(&h, beta)
}
