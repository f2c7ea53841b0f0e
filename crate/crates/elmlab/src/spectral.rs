//! Sine/cosine projections and capture verdicts.
//!
//! This module turns "does the prediction visually overlap the target" into
//! numbers: per-frequency signed coefficients on a uniform 2pi grid, plain
//! relative L2 errors, and a thresholded boolean verdict.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for grid-uniformity and interval-length checks.
const GRID_TOL: f64 = 1e-9;

/// Coefficient magnitude below which a frequency is treated as absent.
const COEFF_FLOOR: f64 = 1e-9;

/// Signed projection coefficients: `signal(x) ~ a_0 + sum_k a_k cos(kx) + b_k sin(kx)`.
///
/// Normalized so a pure unit-amplitude tone projects to coefficient 1.
/// `sin_coeffs[0]` is always 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub k_max: usize,
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
}

impl SpectrumReport {
    /// Amplitude of the frequency-k component, `sqrt(a_k^2 + b_k^2)`.
    pub fn amplitude(&self, k: usize) -> f64 {
        self.cos_coeffs[k].hypot(self.sin_coeffs[k])
    }

    /// Writes `k,a_k,b_k` CSV.
    pub fn to_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "k,a_k,b_k")?;
        for k in 0..=self.k_max {
            writeln!(out, "{k},{},{}", self.cos_coeffs[k], self.sin_coeffs[k])?;
        }
        Ok(())
    }
}

/// Quantitative replacement for an eyeball judgment of fit quality.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaptureReport {
    /// `||pred - target||_2 / ||target||_2` over the evaluation points.
    pub rel_l2: f64,
    /// Relative coefficient error per target frequency. Populated only when
    /// the evaluation grid supports exact projections (uniform over 2pi).
    pub per_freq_rel_error: BTreeMap<u32, f64>,
    pub captured: bool,
    pub threshold: f64,
}

impl CaptureReport {
    /// Writes `k,rel_err` CSV of the per-frequency map.
    pub fn to_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "k,rel_err")?;
        for (k, err) in &self.per_freq_rel_error {
            writeln!(out, "{k},{err}")?;
        }
        Ok(())
    }
}

fn check_projection_grid(values: &[f64], grid: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::BadProjectionGrid {
            reason: format!(
                "values length {} != grid length {}",
                values.len(),
                grid.len()
            ),
        });
    }
    let n = grid.len();
    if n < 3 {
        return Err(Error::BadProjectionGrid {
            reason: format!("{n} points is too few to project"),
        });
    }
    let span = grid[n - 1] - grid[0];
    let two_pi = 2.0 * std::f64::consts::PI;
    if (span - two_pi).abs() > GRID_TOL {
        return Err(Error::BadProjectionGrid {
            reason: format!("interval length {span:.12} is not 2pi"),
        });
    }
    let h = span / (n - 1) as f64;
    for (i, w) in grid.windows(2).enumerate() {
        if (w[1] - w[0] - h).abs() > GRID_TOL {
            return Err(Error::BadProjectionGrid {
                reason: format!("non-uniform spacing at index {i}"),
            });
        }
    }
    Ok(())
}

/// Projects a sampled signal onto cos(kx), sin(kx) for k = 0..=k_max.
///
/// The grid must be uniform and span exactly 2pi (both endpoints present).
/// Inner products use trapezoid weights, so the duplicated periodic endpoint
/// carries half weight and integer tones up to (n-1)/2 are recovered exactly.
pub fn project_sines(values: &[f64], grid: &[f64], k_max: usize) -> Result<SpectrumReport> {
    check_projection_grid(values, grid)?;
    let n = grid.len();
    let norm = 2.0 / (n - 1) as f64;
    let weight = |j: usize| if j == 0 || j == n - 1 { 0.5 } else { 1.0 };

    let mut cos_coeffs = Vec::with_capacity(k_max + 1);
    let mut sin_coeffs = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let kf = k as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..n {
            let w = weight(j) * values[j];
            a += w * (kf * grid[j]).cos();
            b += w * (kf * grid[j]).sin();
        }
        if k == 0 {
            cos_coeffs.push(a * norm / 2.0); // mean: the k=0 basis has energy 1, not 1/2
            sin_coeffs.push(0.0);
        } else {
            cos_coeffs.push(a * norm);
            sin_coeffs.push(b * norm);
        }
    }
    Ok(SpectrumReport {
        k_max,
        cos_coeffs,
        sin_coeffs,
    })
}

/// Plain relative L2 error `||pred - target|| / ||target||`.
pub fn relative_l2_error(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::InvalidParam {
            op: "relative_l2_error",
            name: "lengths",
            reason: format!("{} vs {}", pred.len(), target.len()),
        });
    }
    let target_norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if target_norm == 0.0 {
        return Err(Error::ZeroNormTarget);
    }
    let diff_norm = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt();
    Ok(diff_norm / target_norm)
}

/// Trapezoid-weighted mean square of a signal over its grid. On a closed
/// periodic grid this equals the continuous mean square for band-limited
/// signals, which a plain average does not (the duplicated endpoint would be
/// double-counted).
pub fn mean_square(values: &[f64], grid: &[f64]) -> Result<f64> {
    check_projection_grid(values, grid)?;
    let n = grid.len();
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            w * v * v
        })
        .sum();
    Ok(sum / (n - 1) as f64)
}

/// Builds a [`CaptureReport`] for a prediction against its target.
///
/// `rel_l2` and the verdict are always computed. The per-frequency error map
/// additionally needs projections, so it is filled only when `grid` satisfies
/// the uniform-2pi precondition; on subsampled evaluation grids (e.g. a test
/// split) it stays empty. Frequencies with target coefficient magnitude below
/// 1e-9 are skipped.
pub fn capture_verdict(
    pred: &[f64],
    target: &[f64],
    grid: &[f64],
    threshold: f64,
) -> Result<CaptureReport> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidParam {
            op: "capture_verdict",
            name: "threshold",
            reason: format!("{threshold} must be positive and finite"),
        });
    }
    let rel_l2 = relative_l2_error(pred, target)?;
    let mut per_freq_rel_error = BTreeMap::new();
    if check_projection_grid(target, grid).is_ok() {
        let k_max = ((grid.len() - 1) / 2).min(100);
        let sp = project_sines(pred, grid, k_max)?;
        let st = project_sines(target, grid, k_max)?;
        for k in 0..=k_max {
            let target_amp = st.amplitude(k);
            if target_amp > COEFF_FLOOR {
                let da = sp.cos_coeffs[k] - st.cos_coeffs[k];
                let db = sp.sin_coeffs[k] - st.sin_coeffs[k];
                per_freq_rel_error.insert(k as u32, da.hypot(db) / target_amp);
            }
        }
    }
    Ok(CaptureReport {
        rel_l2,
        per_freq_rel_error,
        captured: rel_l2 < threshold,
        threshold,
    })
}
