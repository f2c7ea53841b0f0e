//! Full-batch gradient-descent MLP baseline and empirical NTK analysis.
//!
//! The training loop is deliberately plain: tanh MLP, mean-squared-error
//! loss, fixed learning rate, full batch. What matters is the analysis
//! around it: the empirical neural tangent kernel `K = J Jt` of per-sample
//! output gradients, its eigenmodes, and how the training residual decays
//! along each eigenvector. Large eigenvalues pair with low-frequency
//! eigenvectors and fast residual decay; that coupling is what makes plain
//! gradient descent slow on high-frequency targets.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::linops::{self, DenseMatrix};
use crate::spectral;
use crate::{Activation, Error, Result};

/// Test-set relative L2 below which a training run counts as converged.
/// Checked every [`CONVERGENCE_CHECK_EVERY`] iterations.
pub const CONVERGENCE_REL_L2: f64 = 0.05;

/// Convergence check cadence, in iterations.
pub const CONVERGENCE_CHECK_EVERY: usize = 10;

/// Training aborts when the train MSE exceeds this (or goes non-finite).
pub const DIVERGENCE_MSE: f64 = 1e6;

/// Default element budget for Jacobian assembly (`samples * params`).
/// 2^26 f64 elements is 512 MiB.
pub const DEFAULT_NTK_BUDGET: usize = 1 << 26;

/// Gradient-descent MLP configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MLPConfig {
    /// Layer widths from input to output, e.g. [1, 100, 100, 1].
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Residual snapshots are stored at every multiple of this iteration count.
    pub snapshot_every: usize,
    pub seed: u64,
}

impl Default for MLPConfig {
    fn default() -> Self {
        Self {
            layer_sizes: vec![1, 100, 100, 1],
            activation: Activation::Tanh,
            learning_rate: 1e-3,
            max_iters: 50_000,
            snapshot_every: 1000,
            seed: 0,
        }
    }
}

impl MLPConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(Error::InvalidParam {
                op: "MLPConfig",
                name: "layer_sizes",
                reason: format!("{:?}: need >= 2 positive layer widths", self.layer_sizes),
            });
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidParam {
                op: "MLPConfig",
                name: "learning_rate",
                reason: format!("{} must be finite and >= 0", self.learning_rate),
            });
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParam {
                op: "MLPConfig",
                name: "snapshot_every",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Per-layer weights (out x in) and biases. Also serves as the gradient
/// carrier: `grad_mse` returns one of these with the same shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MLPParams {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MLPParams {
    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn check_consistent(&self, op: &'static str) -> Result<()> {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            if w.rows() != b.len() {
                return Err(Error::InvalidParam {
                    op,
                    name: "params",
                    reason: format!("weight rows {} != bias length {}", w.rows(), b.len()),
                });
            }
        }
        Ok(())
    }
}

/// History of one training run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Train MSE at the start of each iteration (index 0 is the initial loss).
    pub mse_per_iter: Vec<f64>,
    /// (iteration, train residual `pred - y`) at multiples of `snapshot_every`,
    /// including iteration 0.
    pub residual_snapshots: Vec<(usize, Vec<f64>)>,
    /// First iteration at which the test verdict passed, if it ever did.
    pub converged_at: Option<usize>,
}

impl TrainTrace {
    /// Writes `iter,mse` CSV.
    pub fn to_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "iter,mse")?;
        for (i, mse) in self.mse_per_iter.iter().enumerate() {
            writeln!(out, "{i},{mse}")?;
        }
        Ok(())
    }
}

/// Empirical NTK analysis bundle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NTKReport {
    /// The kernel itself, N x N.
    pub k: DenseMatrix,
    /// Sorted non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, ordered like `eigenvalues`.
    pub eigenvectors: DenseMatrix,
    /// Dominant integer frequency of each eigenvector.
    pub dominant_freq: Vec<u32>,
    /// Fitted exponential decay rate of each projected residual mode
    /// (empty when no training trace was supplied).
    pub decay_rates: Vec<f64>,
}

impl NTKReport {
    /// Writes `mode,eigenvalue,dominant_freq,decay_rate` CSV. Modes without a
    /// fitted decay rate get an empty last field.
    pub fn to_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "mode,eigenvalue,dominant_freq,decay_rate")?;
        for i in 0..self.eigenvalues.len() {
            let rate = self
                .decay_rates
                .get(i)
                .map(|r| r.to_string())
                .unwrap_or_default();
            writeln!(
                out,
                "{i},{},{},{rate}",
                self.eigenvalues[i], self.dominant_freq[i]
            )?;
        }
        Ok(())
    }
}

/// Draws initial parameters: weights `Normal(0, sqrt(1/fan_in))`, biases zero.
/// Deterministic per seed; layers are drawn in order, row-major.
pub fn init_params(config: &MLPConfig) -> Result<MLPParams> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for pair in config.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let dist = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("positive sd");
        let data: Vec<f64> = (0..fan_out * fan_in)
            .map(|_| dist.sample(&mut rng))
            .collect();
        weights.push(DenseMatrix::new(fan_out, fan_in, data)?);
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MLPParams { weights, biases })
}

/// Forward pass: tanh on every hidden layer, linear output layer.
/// `x_batch` is N x [input width]; the result is N x [output width].
pub fn forward(params: &MLPParams, x_batch: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(forward_cached(params, x_batch, Activation::Tanh)?
        .pop()
        .expect("at least the input activation exists"))
}

/// Forward pass that keeps every layer's post-activation output.
/// Index 0 is the input batch itself; the last entry is the network output.
fn forward_cached(
    params: &MLPParams,
    x_batch: &DenseMatrix,
    act: Activation,
) -> Result<Vec<DenseMatrix>> {
    params.check_consistent("forward")?;
    if x_batch.cols() != params.weights[0].cols() {
        return Err(Error::DimensionMismatch {
            op: "forward",
            left_rows: x_batch.rows(),
            left_cols: x_batch.cols(),
            right_rows: params.weights[0].rows(),
            right_cols: params.weights[0].cols(),
        });
    }
    let n_layers = params.weights.len();
    let mut activations = Vec::with_capacity(n_layers + 1);
    activations.push(x_batch.clone());
    for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let prev = activations.last().expect("non-empty");
        let z = linops::matmul(prev, &w.transpose())?;
        let last = l == n_layers - 1;
        let a = DenseMatrix::from_fn(z.rows(), z.cols(), |i, j| {
            let v = z.get(i, j) + b[j];
            if last {
                v
            } else {
                act.apply(v)
            }
        })?;
        activations.push(a);
    }
    Ok(activations)
}

/// Mean-squared-error over the batch: `(1/N) sum_j ||pred_j - y_j||^2`.
pub fn mse(pred: &DenseMatrix, y: &DenseMatrix) -> f64 {
    let n = pred.rows() as f64;
    pred.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n
}

/// Analytic gradient of the batch MSE with respect to every parameter,
/// by reverse-mode accumulation. Same shapes as `params`.
pub fn grad_mse(
    params: &MLPParams,
    x_batch: &DenseMatrix,
    y_batch: &DenseMatrix,
) -> Result<MLPParams> {
    if y_batch.rows() != x_batch.rows() {
        return Err(Error::DimensionMismatch {
            op: "grad_mse",
            left_rows: x_batch.rows(),
            left_cols: x_batch.cols(),
            right_rows: y_batch.rows(),
            right_cols: y_batch.cols(),
        });
    }
    let acts = forward_cached(params, x_batch, Activation::Tanh)?;
    backward_from_acts(params, &acts, y_batch)
}

/// Reverse-mode accumulation given the forward activations, so the training
/// loop shares one forward pass between the loss and the gradient.
fn backward_from_acts(
    params: &MLPParams,
    acts: &[DenseMatrix],
    y_batch: &DenseMatrix,
) -> Result<MLPParams> {
    let n_layers = params.weights.len();
    let n = y_batch.rows() as f64;
    let pred = &acts[n_layers];

    // dL/dz for the output layer; MSE differentiates to (2/N) residual.
    let mut delta = DenseMatrix::from_fn(pred.rows(), pred.cols(), |i, j| {
        2.0 / n * (pred.get(i, j) - y_batch.get(i, j))
    })?;

    let mut grad_w = vec![DenseMatrix::zeros(1, 1); n_layers];
    let mut grad_b = vec![Vec::new(); n_layers];
    for l in (0..n_layers).rev() {
        // grad_W[l] = delta_l^T . a_l ; grad_b[l] = column sums of delta_l.
        grad_w[l] = linops::matmul(&delta.transpose(), &acts[l])?;
        grad_b[l] = (0..delta.cols())
            .map(|j| (0..delta.rows()).map(|i| delta.get(i, j)).sum())
            .collect();
        if l > 0 {
            // Propagate through the linear map, then through tanh at a_l.
            let back = linops::matmul(&delta, &params.weights[l])?;
            delta = DenseMatrix::from_fn(back.rows(), back.cols(), |i, j| {
                let a = acts[l].get(i, j);
                back.get(i, j) * (1.0 - a * a)
            })?;
        }
    }
    Ok(MLPParams {
        weights: grad_w,
        biases: grad_b,
    })
}

/// Plain full-batch gradient descent. Records the loss every iteration and
/// the train residual at snapshot iterations (including iteration 0).
///
/// Convergence is a test-set verdict: relative L2 below
/// [`CONVERGENCE_REL_L2`], checked every [`CONVERGENCE_CHECK_EVERY`]
/// iterations before the parameter update. The loop stops at the first pass
/// (that is `converged_at`) or at `max_iters`. A non-finite or > 1e6 train
/// MSE aborts with a divergence error naming the iteration.
pub fn train_full_batch(
    config: &MLPConfig,
    train: &Dataset,
    test: &Dataset,
) -> Result<(MLPParams, TrainTrace)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset {
            op: "train_full_batch",
        });
    }
    if test.is_empty() {
        return Err(Error::EmptyDataset {
            op: "train_full_batch (test)",
        });
    }
    let x = DenseMatrix::new(train.len(), 1, train.x.clone())?;
    let y = DenseMatrix::new(train.len(), 1, train.y.clone())?;
    let x_test = DenseMatrix::new(test.len(), 1, test.x.clone())?;

    let mut params = init_params(config)?;
    let mut trace = TrainTrace {
        mse_per_iter: Vec::with_capacity(config.max_iters.min(1 << 20)),
        residual_snapshots: Vec::new(),
        converged_at: None,
    };

    for iter in 0..config.max_iters {
        let acts = forward_cached(&params, &x, Activation::Tanh)?;
        let pred = acts.last().expect("output activation");
        let loss = mse(pred, &y);
        if !loss.is_finite() || loss > DIVERGENCE_MSE {
            return Err(Error::Diverged { iter, mse: loss });
        }
        trace.mse_per_iter.push(loss);
        if iter % config.snapshot_every == 0 {
            let residual: Vec<f64> = pred
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(p, t)| p - t)
                .collect();
            trace.residual_snapshots.push((iter, residual));
        }
        if iter % CONVERGENCE_CHECK_EVERY == 0 {
            let test_pred = forward(&params, &x_test)?;
            let rel = spectral::relative_l2_error(test_pred.col_vec(0).as_slice(), &test.y)?;
            if rel < CONVERGENCE_REL_L2 {
                trace.converged_at = Some(iter);
                break;
            }
        }
        let grads = backward_from_acts(&params, &acts, &y)?;
        for (w, gw) in params.weights.iter_mut().zip(&grads.weights) {
            let updated = DenseMatrix::from_fn(w.rows(), w.cols(), |i, j| {
                w.get(i, j) - config.learning_rate * gw.get(i, j)
            })?;
            *w = updated;
        }
        for (b, gb) in params.biases.iter_mut().zip(&grads.biases) {
            for (bv, gv) in b.iter_mut().zip(gb) {
                *bv -= config.learning_rate * gv;
            }
        }
    }
    Ok((params, trace))
}

/// Per-sample gradient of the scalar network output with respect to every
/// parameter, flattened in layer order (weights row-major, then biases).
fn output_gradient_row(params: &MLPParams, x: &[f64], out: &mut [f64]) {
    let n_layers = params.weights.len();
    // Forward with cached activations, on vectors.
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
    acts.push(x.to_vec());
    for l in 0..n_layers {
        let w = &params.weights[l];
        let prev = &acts[l];
        let last = l == n_layers - 1;
        let mut a = vec![0.0; w.rows()];
        for (r, av) in a.iter_mut().enumerate() {
            let row = w.row(r);
            let mut z = params.biases[l][r];
            for (wv, pv) in row.iter().zip(prev) {
                z += wv * pv;
            }
            *av = if last { z } else { z.tanh() };
        }
        acts.push(a);
    }
    // Backward from d(output)/d(output) = 1; scalar output required.
    let mut delta = vec![1.0];
    let mut cursor = out.len();
    for l in (0..n_layers).rev() {
        let w = &params.weights[l];
        let (rows, cols) = (w.rows(), w.cols());
        let bias_len = rows;
        let w_len = rows * cols;
        // Biases for this layer sit after its weights in the flat layout.
        let b_slice_start = cursor - bias_len;
        out[b_slice_start..cursor].copy_from_slice(&delta);
        cursor = b_slice_start - w_len;
        for r in 0..rows {
            for c in 0..cols {
                out[cursor + r * cols + c] = delta[r] * acts[l][c];
            }
        }
        if l > 0 {
            let mut prev_delta = vec![0.0; cols];
            for (c, pd) in prev_delta.iter_mut().enumerate() {
                let mut s = 0.0;
                for (r, dv) in delta.iter().enumerate() {
                    s += dv * w.get(r, c);
                }
                let a = acts[l][c];
                *pd = s * (1.0 - a * a);
            }
            delta = prev_delta;
        }
    }
    debug_assert_eq!(cursor, 0);
}

/// Empirical NTK with the default memory budget. See [`ntk_matrix_with_budget`].
pub fn ntk_matrix(params: &MLPParams, x_batch: &DenseMatrix) -> Result<DenseMatrix> {
    ntk_matrix_with_budget(params, x_batch, DEFAULT_NTK_BUDGET)
}

/// Empirical NTK: `K[i, j] = < df(x_i)/dtheta, df(x_j)/dtheta >`, assembled
/// as `J Jt` from the N x P Jacobian of per-sample outputs. Requires a
/// scalar-output network. Errors when `N * P` exceeds `budget` elements.
pub fn ntk_matrix_with_budget(
    params: &MLPParams,
    x_batch: &DenseMatrix,
    budget: usize,
) -> Result<DenseMatrix> {
    params.check_consistent("ntk_matrix")?;
    let out_width = params.weights.last().expect("non-empty").rows();
    if out_width != 1 {
        return Err(Error::InvalidParam {
            op: "ntk_matrix",
            name: "output width",
            reason: format!("{out_width} outputs; the kernel is defined for scalar outputs"),
        });
    }
    let n = x_batch.rows();
    let p = params.param_count();
    if n.saturating_mul(p) > budget {
        return Err(Error::BudgetExceeded {
            samples: n,
            params: p,
            required: n * p,
            budget,
        });
    }
    let mut jac = DenseMatrix::zeros(n, p);
    for i in 0..n {
        let row_start = i * p;
        output_gradient_row(
            params,
            x_batch.row(i),
            &mut jac.data_mut()[row_start..row_start + p],
        );
    }
    linops::matmul(&jac, &jac.transpose())
}

/// Eigendecomposition of a symmetric matrix: returns (Q, eigenvalues) with
/// eigenvalues sorted non-increasing and matching eigenvector columns.
pub fn eigendecomp_sym(k: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    if k.rows() != k.cols() {
        return Err(Error::DimensionMismatch {
            op: "eigendecomp_sym",
            left_rows: k.rows(),
            left_cols: k.cols(),
            right_rows: k.cols(),
            right_cols: k.rows(),
        });
    }
    let norm = k.frobenius_norm();
    if norm > 0.0 {
        let mut asym = 0.0f64;
        for i in 0..k.rows() {
            for j in (i + 1)..k.cols() {
                asym += (k.get(i, j) - k.get(j, i)).powi(2);
            }
        }
        let asymmetry = (2.0 * asym).sqrt() / norm;
        if asymmetry > 1e-8 {
            return Err(Error::NotSymmetric {
                asymmetry,
                tolerance: 1e-8,
            });
        }
    }
    let eig = k
        .as_faer()
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::DecompositionFailed {
            op: "eigendecomp_sym",
            detail: format!("{e:?}"),
        })?;
    // faer returns eigenvalues in nondecreasing order; flip to non-increasing.
    let n = k.rows();
    let u = eig.U();
    let s = eig.S();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[n - 1 - i]).collect();
    let q = DenseMatrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)])?;
    Ok((q, eigenvalues))
}

/// For each eigenvector (column of `q`), the absolute projections
/// `|q_i . residual(t)|` across the stored snapshots, mode-major.
pub fn projected_error_trace(q: &DenseMatrix, trace: &TrainTrace) -> Result<Vec<Vec<f64>>> {
    if trace.residual_snapshots.is_empty() {
        return Err(Error::EmptyDataset {
            op: "projected_error_trace",
        });
    }
    for (_, r) in &trace.residual_snapshots {
        if r.len() != q.rows() {
            return Err(Error::DimensionMismatch {
                op: "projected_error_trace",
                left_rows: q.rows(),
                left_cols: q.cols(),
                right_rows: r.len(),
                right_cols: 1,
            });
        }
    }
    let mut curves = Vec::with_capacity(q.cols());
    for mode in 0..q.cols() {
        let curve = trace
            .residual_snapshots
            .iter()
            .map(|(_, r)| {
                r.iter()
                    .enumerate()
                    .map(|(row, v)| q.get(row, mode) * v)
                    .sum::<f64>()
                    .abs()
            })
            .collect();
        curves.push(curve);
    }
    Ok(curves)
}

/// Fits one exponential decay rate per projected-mode curve: the negated
/// slope of a least-squares line through `ln |projection|` versus iteration,
/// using the prefix of snapshots that stays above a noise floor. Curves with
/// fewer than two usable points get rate 0.
pub fn fit_decay_rates(curves: &[Vec<f64>], snapshot_iters: &[usize]) -> Vec<f64> {
    const FLOOR: f64 = 1e-13;
    curves
        .iter()
        .map(|curve| {
            let usable = curve
                .iter()
                .take_while(|&&v| v > FLOOR)
                .count()
                .min(snapshot_iters.len());
            if usable < 2 {
                return 0.0;
            }
            let ts: Vec<f64> = snapshot_iters[..usable].iter().map(|&t| t as f64).collect();
            let ys: Vec<f64> = curve[..usable].iter().map(|v| v.ln()).collect();
            let n = usable as f64;
            let tm = ts.iter().sum::<f64>() / n;
            let ym = ys.iter().sum::<f64>() / n;
            let cov: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
            let var: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
            if var == 0.0 {
                0.0
            } else {
                -(cov / var)
            }
        })
        .collect()
}

/// The integer frequency whose sine-plus-cosine projection energy dominates
/// the signal. Searches k = 0 ..= (n-1)/2, capped at 100.
pub fn dominant_frequency(q_i: &[f64], grid: &[f64]) -> Result<u32> {
    let k_max = ((grid.len() - 1) / 2).min(100);
    let sp = spectral::project_sines(q_i, grid, k_max)?;
    let mut best_k = 0usize;
    let mut best_amp = -1.0;
    for k in 0..=k_max {
        let amp = sp.amplitude(k);
        if amp > best_amp {
            best_amp = amp;
            best_k = k;
        }
    }
    Ok(best_k as u32)
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman needs equal-length inputs");
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}
