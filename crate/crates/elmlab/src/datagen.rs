//! Benchmark targets and their sampled datasets.
//!
//! Two target families, both odd functions on [-pi, pi]:
//!
//! - `MultiSine`: sum of five tones, `f(x) = sum_{k=1..5} sin(2kx) / (2k)`,
//!   frequencies 2, 4, 6, 8, 10 with amplitudes shrinking as 1/(2k).
//! - `SingleSine { k }`: one tone, `f(x) = -(1/k^2) sin(kx)`, so amplitude
//!   shrinks quadratically with frequency and every target has f(+-pi) = 0.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform closed sampling grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    /// 1000 points on [-pi, pi], both endpoints included.
    fn default() -> Self {
        Self {
            x_min: -std::f64::consts::PI,
            x_max: std::f64::consts::PI,
            n_points: 1000,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::InvalidParam {
                op: "GridSpec",
                name: "range",
                reason: format!("[{}, {}] is not a valid interval", self.x_min, self.x_max),
            });
        }
        if self.n_points < 2 {
            return Err(Error::InvalidParam {
                op: "GridSpec",
                name: "n_points",
                reason: format!("{} < 2", self.n_points),
            });
        }
        Ok(())
    }
}

/// Which target function to synthesize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetSpec {
    /// Five-tone sum with frequencies 2, 4, 6, 8, 10.
    MultiSine,
    /// Single tone of integer frequency `k`, amplitude 1/k^2.
    SingleSine { k: u32 },
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::MultiSine => Ok(()),
            TargetSpec::SingleSine { k } if *k >= 1 => Ok(()),
            TargetSpec::SingleSine { .. } => Err(Error::InvalidParam {
                op: "TargetSpec",
                name: "k",
                reason: "frequency must be >= 1".into(),
            }),
        }
    }

    /// Highest frequency present in the target.
    pub fn max_frequency(&self) -> u32 {
        match self {
            TargetSpec::MultiSine => 10,
            TargetSpec::SingleSine { k } => *k,
        }
    }

    /// Frequencies present in the target with their signed sine coefficients.
    pub fn components(&self) -> Vec<(u32, f64)> {
        match self {
            TargetSpec::MultiSine => (1..=5).map(|k| (2 * k, 1.0 / f64::from(2 * k))).collect(),
            TargetSpec::SingleSine { k } => {
                vec![(*k, -1.0 / (f64::from(*k) * f64::from(*k)))]
            }
        }
    }

    /// Short stable identifier used in file names and reports.
    pub fn label(&self) -> String {
        match self {
            TargetSpec::MultiSine => "multisine".into(),
            TargetSpec::SingleSine { k } => format!("sine-k{k}"),
        }
    }
}

/// A target sampled on a grid. `x` is strictly increasing and `y[i]` is the
/// target evaluated at `x[i]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub spec: TargetSpec,
    pub grid: GridSpec,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Writes `x,y` CSV, one row per sample, full f64 round-trip precision.
    pub fn to_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in self.x.iter().zip(&self.y) {
            writeln!(out, "{x},{y}")?;
        }
        Ok(())
    }
}

/// Deterministic train/test interleave: within every block of `test_stride`
/// consecutive samples, the last one is test, the rest train.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_stride: usize,
}

impl Default for SplitSpec {
    /// Every 5th point is test: 1000 samples split 800/200.
    fn default() -> Self {
        Self { test_stride: 5 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.test_stride < 2 {
            return Err(Error::InvalidParam {
                op: "SplitSpec",
                name: "test_stride",
                reason: format!("{} < 2", self.test_stride),
            });
        }
        Ok(())
    }
}

/// Evenly spaced grid values including both endpoints.
pub fn make_grid(spec: &GridSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n_points;
    let h = (spec.x_max - spec.x_min) / (n - 1) as f64;
    let mut xs: Vec<f64> = (0..n).map(|j| spec.x_min + h * j as f64).collect();
    // Pin the last point exactly; accumulated rounding must not move the endpoint.
    xs[n - 1] = spec.x_max;
    Ok(xs)
}

/// Evaluates the target at one point.
pub fn eval_target(spec: &TargetSpec, x: f64) -> f64 {
    match spec {
        TargetSpec::MultiSine => (1..=5)
            .map(|k| {
                let f = f64::from(2 * k);
                (f * x).sin() / f
            })
            .sum(),
        TargetSpec::SingleSine { k } => {
            let kf = f64::from(*k);
            -(kf * x).sin() / (kf * kf)
        }
    }
}

/// Samples the target on the grid.
pub fn sample(spec: &TargetSpec, grid: &GridSpec) -> Result<Dataset> {
    spec.validate()?;
    let x = make_grid(grid)?;
    let y = x.iter().map(|&xi| eval_target(spec, xi)).collect();
    Ok(Dataset {
        x,
        y,
        spec: *spec,
        grid: *grid,
    })
}

/// Splits a dataset into (train, test) by the stride rule. The two parts
/// partition the input: every index lands in exactly one side.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    if ds.len() < spec.test_stride {
        return Err(Error::InvalidParam {
            op: "split",
            name: "dataset",
            reason: format!(
                "{} samples is smaller than test_stride {}",
                ds.len(),
                spec.test_stride
            ),
        });
    }
    let stride = spec.test_stride;
    let mut train = Dataset {
        x: Vec::with_capacity(ds.len()),
        y: Vec::with_capacity(ds.len()),
        spec: ds.spec,
        grid: ds.grid,
    };
    let mut test = Dataset {
        x: Vec::with_capacity(ds.len() / stride + 1),
        y: Vec::with_capacity(ds.len() / stride + 1),
        spec: ds.spec,
        grid: ds.grid,
    };
    for i in 0..ds.len() {
        let side = if i % stride == stride - 1 {
            &mut test
        } else {
            &mut train
        };
        side.x.push(ds.x[i]);
        side.y.push(ds.y[i]);
    }
    Ok((train, test))
}
