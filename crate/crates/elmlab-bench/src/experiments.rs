//! Experiment execution: seeded runs, sweeps, the gradient-descent
//! convergence table, and NTK reports.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use elmlab::datagen::{make_grid, sample, split, Dataset, GridSpec, SplitSpec, TargetSpec};
use elmlab::elm::{self, ELMConfig, WeightInit};
use elmlab::gdnet::{self, MLPConfig, NTKReport};
use elmlab::linops::{DenseMatrix, PinvOptions};
use elmlab::spectral;
use elmlab::Activation;
use serde::{Deserialize, Serialize};

use crate::manifest::{self, RunManifest, SeedReport};
use crate::{plot, DEFAULT_SEEDS, DEFAULT_THRESHOLD, EXPERIMENT_RCOND};

/// How the readout is obtained: one-shot least squares on random features,
/// or full-batch gradient descent on all parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Elm,
    GdAnn,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Elm => "elm",
            Method::GdAnn => "gd-ann",
        })
    }
}

/// Declarative description of one experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub target: TargetSpec,
    pub method: Method,
    pub init: WeightInit,
    /// ELM: hidden width L. GD: width of each of the two hidden layers.
    pub hidden: usize,
    pub seeds: Vec<u64>,
    pub threshold: f64,
    pub grid: GridSpec,
    pub split: SplitSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            id: "run".into(),
            target: TargetSpec::MultiSine,
            method: Method::Elm,
            init: WeightInit::Normal { mean: 0.0, sd: 1.0 },
            hidden: crate::DEFAULT_HIDDEN,
            seeds: DEFAULT_SEEDS.to_vec(),
            threshold: DEFAULT_THRESHOLD,
            grid: GridSpec::default(),
            split: SplitSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("spec `{}`: seeds must be non-empty", self.id);
        }
        self.target.validate()?;
        self.grid.validate()?;
        self.split.validate()?;
        self.init.validate()?;
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            bail!(
                "spec `{}`: threshold {} must be positive",
                self.id,
                self.threshold
            );
        }
        Ok(())
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_target(mut self, target: TargetSpec) -> Self {
        self.target = target;
        self
    }

    pub fn with_sd(mut self, sd: f64) -> Self {
        self.init = WeightInit::Normal { mean: 0.0, sd };
        self
    }

    pub fn with_hidden(mut self, hidden: usize) -> Self {
        self.hidden = hidden;
        self
    }
}

/// Sweep over one axis; points keep the axis order handed in.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    /// "sd" | "L" | "k"
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub median_rel_l2: f64,
    pub verdict: bool,
    /// Median wall time of the fit/train call at this point, milliseconds.
    pub median_fit_ms: f64,
}

/// Convergence table for gradient descent across target frequencies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Table1Report {
    pub sweep: SweepResult,
    pub rows: Vec<Table1Row>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Table1Row {
    pub k: u32,
    /// Aligned with `seeds`; None = did not converge within max_iters.
    pub converged_at: Vec<Option<usize>>,
    /// None when a majority of seeds never converged (an open point).
    pub median_converged_at: Option<usize>,
    pub median_rel_l2: f64,
}

/// Per-seed outcome of one NTK analysis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NtkSeedSummary {
    pub seed: u64,
    /// ||K - K^T||_F / ||K||_F as assembled.
    pub symmetry_residual: f64,
    /// min eigenvalue >= -1e-8 * max eigenvalue.
    pub psd_ok: bool,
    /// Spearman between descending eigenvalue rank and eigenvector dominant
    /// frequency, top 20 modes.
    pub eigenfreq_spearman: f64,
    /// Spearman between fitted decay rates and eigenvalues, top 20 modes.
    pub decay_spearman: f64,
    pub top_mode_freq: u32,
    pub bottom_modes_median_freq: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NtkRunSummary {
    pub width: usize,
    pub n_samples: usize,
    pub per_seed: Vec<NtkSeedSummary>,
    pub median_eigenfreq_spearman: f64,
    pub median_decay_spearman: f64,
}

fn median_f64(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn column(values: &[f64]) -> Result<DenseMatrix> {
    DenseMatrix::column(values).context("assembling column matrix")
}

struct SeedOutcome {
    report: SeedReport,
    /// Predictions over the full grid, for artifacts.
    full_pred: Vec<f64>,
}

fn run_one_seed(
    spec: &ExperimentSpec,
    seed: u64,
    train: &Dataset,
    test: &Dataset,
    full_x: &[f64],
) -> Result<SeedOutcome> {
    match spec.method {
        Method::Elm => {
            let config = ELMConfig {
                n_in: 1,
                n_out: 1,
                hidden: spec.hidden,
                activation: Activation::Tanh,
                init: spec.init,
                seed,
                rcond: PinvOptions::new(EXPERIMENT_RCOND)
                    .context("experiment-level pseudoinverse cutoff")?,
            };
            let (model, fit_report) =
                elm::fit(&config, train).with_context(|| format!("seed {seed}, stage fit"))?;
            let test_pred = elm::predict(&model, &column(&test.x)?)
                .with_context(|| format!("seed {seed}, stage predict"))?;
            let capture =
                spectral::capture_verdict(&test_pred.col_vec(0), &test.y, &test.x, spec.threshold)
                    .with_context(|| format!("seed {seed}, stage verdict"))?;
            let full_pred = elm::predict(&model, &column(full_x)?)
                .with_context(|| format!("seed {seed}, stage predict"))?
                .col_vec(0);
            Ok(SeedOutcome {
                report: SeedReport {
                    seed,
                    capture,
                    fit_wall_ms: fit_report.fit_wall_time_ms,
                    rank: Some(fit_report.rank_h),
                    converged_at: None,
                    iterations_run: None,
                },
                full_pred,
            })
        }
        Method::GdAnn => {
            let config = MLPConfig {
                layer_sizes: vec![1, spec.hidden, spec.hidden, 1],
                seed,
                ..MLPConfig::default()
            };
            let started = Instant::now();
            let (params, trace) = gdnet::train_full_batch(&config, train, test)
                .with_context(|| format!("seed {seed}, stage train"))?;
            let fit_wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let test_pred = gdnet::forward(&params, &column(&test.x)?)
                .with_context(|| format!("seed {seed}, stage predict"))?;
            let capture =
                spectral::capture_verdict(&test_pred.col_vec(0), &test.y, &test.x, spec.threshold)
                    .with_context(|| format!("seed {seed}, stage verdict"))?;
            let full_pred = gdnet::forward(&params, &column(full_x)?)
                .with_context(|| format!("seed {seed}, stage predict"))?
                .col_vec(0);
            Ok(SeedOutcome {
                report: SeedReport {
                    seed,
                    capture,
                    fit_wall_ms,
                    rank: None,
                    converged_at: trace.converged_at,
                    iterations_run: Some(trace.mse_per_iter.len()),
                },
                full_pred,
            })
        }
    }
}

/// Runs one experiment across its seed battery. With an output directory,
/// writes `predictions.csv`, `spectrum.csv`, `manifest.json`, `plot.svg`
/// (all atomically); the prediction artifacts come from the median seed.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<RunManifest> {
    spec.validate()?;
    let started = Instant::now();
    let ds = sample(&spec.target, &spec.grid).context("building dataset")?;
    let (train, test) = split(&ds, &spec.split).context("splitting dataset")?;

    let mut outcomes = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        outcomes.push(run_one_seed(spec, seed, &train, &test, &ds.x)?);
    }

    // Median by (rel_l2, seed); the lower seed breaks ties deterministically.
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (
            outcomes[a].report.capture.rel_l2,
            outcomes[b].report.capture.rel_l2,
        );
        ra.total_cmp(&rb)
            .then(outcomes[a].report.seed.cmp(&outcomes[b].report.seed))
    });
    let median_idx = order[(order.len() - 1) / 2];
    let rels: Vec<f64> = outcomes.iter().map(|o| o.report.capture.rel_l2).collect();
    let captured_count = outcomes
        .iter()
        .filter(|o| o.report.capture.captured)
        .count();

    let mut manifest = RunManifest {
        spec: spec.clone(),
        seed_reports: outcomes.iter().map(|o| o.report.clone()).collect(),
        median_rel_l2: median_f64(&rels),
        verdict: 2 * captured_count > outcomes.len(),
        median_seed: outcomes[median_idx].report.seed,
        total_wall_ms: started.elapsed().as_secs_f64() * 1e3,
        artifact_dir: String::new(),
        artifacts: Vec::new(),
        tool_version: manifest::tool_version(),
        timestamp_unix_s: manifest::unix_timestamp(),
    };

    if let Some(dir) = out_dir {
        manifest.artifact_dir = dir.display().to_string();
        manifest.artifacts = vec![
            "predictions.csv".into(),
            "spectrum.csv".into(),
            "manifest.json".into(),
            "plot.svg".into(),
        ];

        let mut csv = String::from("x,f_true,f_pred\n");
        for ((x, t), p) in ds.x.iter().zip(&ds.y).zip(&outcomes[median_idx].full_pred) {
            csv.push_str(&format!("{x},{t},{p}\n"));
        }
        manifest::write_atomic(&dir.join("predictions.csv"), csv.as_bytes())?;

        let k_max = ((ds.x.len() - 1) / 2).min(100);
        let spectrum = spectral::project_sines(&outcomes[median_idx].full_pred, &ds.x, k_max)
            .context("projecting median-seed prediction")?;
        let mut buf = Vec::new();
        spectrum.to_csv(&mut buf)?;
        manifest::write_atomic(&dir.join("spectrum.csv"), &buf)?;

        manifest::write_json(&dir.join("manifest.json"), &manifest)?;
        plot::emit_plot(&manifest)?;
    }
    Ok(manifest)
}

/// One experiment per embedding scale, at a fixed target frequency.
/// `sds` must be strictly increasing (that is the axis order of the result).
pub fn run_sd_sweep(
    k: u32,
    sds: &[f64],
    base: &ExperimentSpec,
    out_dir: Option<&Path>,
) -> Result<SweepResult> {
    if sds.is_empty() {
        bail!("sd sweep needs at least one scale");
    }
    if sds.windows(2).any(|w| w[0] >= w[1]) {
        bail!("sd sweep values must be strictly increasing, got {sds:?}");
    }
    let mut points = Vec::with_capacity(sds.len());
    for &sd in sds {
        let spec = base
            .clone()
            .with_target(TargetSpec::SingleSine { k })
            .with_sd(sd)
            .with_id(format!("{}-sd{sd}", base.id));
        let sub = out_dir.map(|d| d.join(format!("sd{sd}")));
        let run = run_experiment(&spec, sub.as_deref())?;
        let fit_times: Vec<f64> = run.seed_reports.iter().map(|r| r.fit_wall_ms).collect();
        points.push(SweepPoint {
            value: sd,
            median_rel_l2: run.median_rel_l2,
            verdict: run.verdict,
            median_fit_ms: median_f64(&fit_times),
        });
    }
    Ok(SweepResult {
        axis: "sd".into(),
        points,
    })
}

/// One experiment per hidden width L, same target and scale throughout.
pub fn run_l_sweep(
    ls: &[usize],
    base: &ExperimentSpec,
    out_dir: Option<&Path>,
) -> Result<SweepResult> {
    if ls.is_empty() {
        bail!("L sweep needs at least one width");
    }
    if ls.windows(2).any(|w| w[0] >= w[1]) {
        bail!("L sweep values must be strictly increasing, got {ls:?}");
    }
    let mut points = Vec::with_capacity(ls.len());
    for &l in ls {
        let spec = base
            .clone()
            .with_hidden(l)
            .with_id(format!("{}-L{l}", base.id));
        let sub = out_dir.map(|d| d.join(format!("L{l}")));
        let run = run_experiment(&spec, sub.as_deref())?;
        let fit_times: Vec<f64> = run.seed_reports.iter().map(|r| r.fit_wall_ms).collect();
        points.push(SweepPoint {
            value: l as f64,
            median_rel_l2: run.median_rel_l2,
            verdict: run.verdict,
            median_fit_ms: median_f64(&fit_times),
        });
    }
    Ok(SweepResult {
        axis: "L".into(),
        points,
    })
}

/// Gradient-descent convergence table: per target frequency, the iteration
/// at which the test verdict first passed. A frequency where a majority of
/// seeds never converged is an open point (None), not an error.
pub fn run_table1(ks: &[u32], mlp: &MLPConfig, base: &ExperimentSpec) -> Result<Table1Report> {
    if ks.is_empty() {
        bail!("table needs at least one frequency");
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        bail!("table frequencies must be strictly increasing, got {ks:?}");
    }
    let mut rows = Vec::with_capacity(ks.len());
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let ds = sample(&TargetSpec::SingleSine { k }, &base.grid)?;
        let (train, test) = split(&ds, &base.split)?;
        let mut converged = Vec::with_capacity(base.seeds.len());
        let mut rels = Vec::with_capacity(base.seeds.len());
        let mut times = Vec::with_capacity(base.seeds.len());
        for &seed in &base.seeds {
            let config = MLPConfig {
                seed,
                ..mlp.clone()
            };
            let started = Instant::now();
            let (params, trace) = gdnet::train_full_batch(&config, &train, &test)
                .with_context(|| format!("k {k}, seed {seed}, stage train"))?;
            times.push(started.elapsed().as_secs_f64() * 1e3);
            let pred = gdnet::forward(&params, &column(&test.x)?)?;
            rels.push(spectral::relative_l2_error(&pred.col_vec(0), &test.y)?);
            converged.push(trace.converged_at);
        }
        let mut hits: Vec<f64> = converged.iter().flatten().map(|&c| c as f64).collect();
        hits.sort_by(f64::total_cmp);
        let median_converged_at = if 2 * hits.len() > converged.len() {
            Some(hits[(hits.len() - 1) / 2] as usize)
        } else {
            None
        };
        let median_rel_l2 = median_f64(&rels);
        points.push(SweepPoint {
            value: k as f64,
            median_rel_l2,
            verdict: median_converged_at.is_some(),
            median_fit_ms: median_f64(&times),
        });
        rows.push(Table1Row {
            k,
            converged_at: converged,
            median_converged_at,
            median_rel_l2,
        });
    }
    Ok(Table1Report {
        sweep: SweepResult {
            axis: "k".into(),
            points,
        },
        rows,
        seeds: base.seeds.clone(),
    })
}

/// NTK analysis at initialization plus a small-learning-rate training run
/// per seed: eigenstructure, dominant frequencies, and per-mode residual
/// decay rates. Writes `eigenvalues.csv`, `modes.csv` (first seed) and
/// `ntk_summary.json` when given an output directory.
pub fn run_ntk_report(
    mlp: &MLPConfig,
    n_samples: usize,
    seeds: &[u64],
    out_dir: Option<&Path>,
) -> Result<NtkRunSummary> {
    if seeds.is_empty() {
        bail!("ntk report needs at least one seed");
    }
    let grid_spec = GridSpec {
        n_points: n_samples,
        ..GridSpec::default()
    };
    let grid = make_grid(&grid_spec)?;
    let ds = sample(&TargetSpec::MultiSine, &grid_spec)?;
    let x = column(&grid)?;
    let top = 20.min(n_samples);

    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut first_report: Option<NTKReport> = None;
    for &seed in seeds {
        let config = MLPConfig {
            seed,
            ..mlp.clone()
        };
        let params =
            gdnet::init_params(&config).with_context(|| format!("seed {seed}, stage init"))?;
        let k =
            gdnet::ntk_matrix(&params, &x).with_context(|| format!("seed {seed}, stage kernel"))?;

        let mut asym = 0.0f64;
        for i in 0..n_samples {
            for j in (i + 1)..n_samples {
                asym += (k.get(i, j) - k.get(j, i)).powi(2);
            }
        }
        let symmetry_residual = (2.0 * asym).sqrt() / k.frobenius_norm().max(f64::MIN_POSITIVE);

        let (q, eigenvalues) = gdnet::eigendecomp_sym(&k)
            .with_context(|| format!("seed {seed}, stage eigendecomp"))?;
        let psd_ok = eigenvalues[n_samples - 1] >= -1e-8 * eigenvalues[0];

        let freqs: Vec<u32> = (0..n_samples)
            .map(|mode| gdnet::dominant_frequency(&q.col_vec(mode), &grid))
            .collect::<elmlab::Result<_>>()?;
        let ranks: Vec<f64> = (0..top).map(|i| i as f64).collect();
        let top_freqs: Vec<f64> = freqs[..top].iter().map(|&f| f as f64).collect();
        let eigenfreq_spearman = gdnet::spearman(&ranks, &top_freqs);

        let (_, trace) = gdnet::train_full_batch(&config, &ds, &ds)
            .with_context(|| format!("seed {seed}, stage train"))?;
        let curves = gdnet::projected_error_trace(&q, &trace)?;
        let iters: Vec<usize> = trace.residual_snapshots.iter().map(|(i, _)| *i).collect();
        let decay_rates = gdnet::fit_decay_rates(&curves, &iters);
        let decay_spearman = gdnet::spearman(&decay_rates[..top], &eigenvalues[..top]);

        let bottom = &freqs[n_samples.saturating_sub(10)..];
        let bottom_median = median_f64(&bottom.iter().map(|&f| f as f64).collect::<Vec<_>>());
        per_seed.push(NtkSeedSummary {
            seed,
            symmetry_residual,
            psd_ok,
            eigenfreq_spearman,
            decay_spearman,
            top_mode_freq: freqs[0],
            bottom_modes_median_freq: bottom_median,
        });
        if first_report.is_none() {
            first_report = Some(NTKReport {
                k,
                eigenvalues,
                eigenvectors: q,
                dominant_freq: freqs,
                decay_rates,
            });
        }
    }

    let summary = NtkRunSummary {
        width: mlp.layer_sizes.get(1).copied().unwrap_or(0),
        n_samples,
        median_eigenfreq_spearman: median_f64(
            &per_seed
                .iter()
                .map(|s| s.eigenfreq_spearman)
                .collect::<Vec<_>>(),
        ),
        median_decay_spearman: median_f64(
            &per_seed
                .iter()
                .map(|s| s.decay_spearman)
                .collect::<Vec<_>>(),
        ),
        per_seed,
    };

    if let Some(dir) = out_dir {
        let report = first_report.expect("at least one seed ran");
        let mut eig_csv = String::from("mode,eigenvalue\n");
        for (i, v) in report.eigenvalues.iter().enumerate() {
            eig_csv.push_str(&format!("{i},{v}\n"));
        }
        manifest::write_atomic(&dir.join("eigenvalues.csv"), eig_csv.as_bytes())?;
        let mut buf = Vec::new();
        report.to_csv(&mut buf)?;
        manifest::write_atomic(&dir.join("modes.csv"), &buf)?;
        manifest::write_json(&dir.join("ntk_summary.json"), &summary)?;
    }
    Ok(summary)
}

/// Median wall time of repeated fits at one width, milliseconds. Measures
/// the fit call alone (feature build + solve), not data generation.
pub fn median_fit_ms(spec: &ExperimentSpec, repeats: usize) -> Result<f64> {
    let ds = sample(&spec.target, &spec.grid)?;
    let (train, _) = split(&ds, &spec.split)?;
    let config = ELMConfig {
        n_in: 1,
        n_out: 1,
        hidden: spec.hidden,
        activation: Activation::Tanh,
        init: spec.init,
        seed: spec.seeds[0],
        rcond: PinvOptions::new(EXPERIMENT_RCOND)?,
    };
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let (_, report) = elm::fit(&config, &train)?;
        times.push(report.fit_wall_time_ms);
    }
    Ok(median_f64(&times))
}

/// Per-seed ratio of high-frequency to low-frequency relative error after a
/// fixed short training budget: `per_freq_rel_error[high] / [low]`, evaluated
/// on the full grid. Quantifies how much slower the top frequency trains.
pub fn early_training_frequency_bias(
    mlp: &MLPConfig,
    seeds: &[u64],
    low: u32,
    high: u32,
) -> Result<Vec<f64>> {
    let spec = ExperimentSpec::default();
    let ds = sample(&spec.target, &spec.grid)?;
    let (train, test) = split(&ds, &spec.split)?;
    let mut ratios = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let config = MLPConfig {
            seed,
            ..mlp.clone()
        };
        let (params, _) = gdnet::train_full_batch(&config, &train, &test)
            .with_context(|| format!("seed {seed}, stage train"))?;
        let pred = gdnet::forward(&params, &column(&ds.x)?)?;
        let capture = spectral::capture_verdict(&pred.col_vec(0), &ds.y, &ds.x, spec.threshold)?;
        let low_err = capture
            .per_freq_rel_error
            .get(&low)
            .copied()
            .with_context(|| format!("no frequency {low} in target"))?;
        let high_err = capture
            .per_freq_rel_error
            .get(&high)
            .copied()
            .with_context(|| format!("no frequency {high} in target"))?;
        ratios.push(if low_err == 0.0 {
            f64::INFINITY
        } else {
            high_err / low_err
        });
    }
    Ok(ratios)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> ExperimentSpec {
        ExperimentSpec {
            id: "tiny".into(),
            target: TargetSpec::SingleSine { k: 1 },
            hidden: 40,
            grid: GridSpec {
                n_points: 120,
                ..GridSpec::default()
            },
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn run_experiment_is_deterministic_and_consistent() {
        let spec = tiny_spec();
        let a = run_experiment(&spec, None).unwrap();
        let b = run_experiment(&spec, None).unwrap();
        assert_eq!(a.seed_reports.len(), 5);
        assert_eq!(a.median_rel_l2.to_bits(), b.median_rel_l2.to_bits());
        for (ra, rb) in a.seed_reports.iter().zip(&b.seed_reports) {
            assert_eq!(ra.capture.rel_l2.to_bits(), rb.capture.rel_l2.to_bits());
        }
        // Verdict must agree with the majority of per-seed captures.
        let captured = a.seed_reports.iter().filter(|r| r.capture.captured).count();
        assert_eq!(a.verdict, 2 * captured > a.seed_reports.len());
        assert!(a.spec.seeds.contains(&a.median_seed));
    }

    #[test]
    fn artifacts_exist_and_are_nonempty() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny_spec();
        let run = run_experiment(&spec, Some(dir.path())).unwrap();
        assert_eq!(run.artifact_dir, dir.path().display().to_string());
        for name in &run.artifacts {
            let path = run.artifact_path(name);
            let meta = std::fs::metadata(&path).unwrap_or_else(|_| panic!("{name} missing"));
            assert!(meta.len() > 0, "{name} is empty");
        }
        let csv = std::fs::read_to_string(run.artifact_path("predictions.csv")).unwrap();
        assert!(csv.starts_with("x,f_true,f_pred\n"));
        assert_eq!(csv.lines().count(), 121);
    }

    #[test]
    fn sweeps_reject_unsorted_axes() {
        let base = tiny_spec();
        assert!(run_sd_sweep(5, &[2.0, 1.0], &base, None).is_err());
        assert!(run_sd_sweep(5, &[], &base, None).is_err());
        assert!(run_l_sweep(&[100, 100], &base, None).is_err());
    }

    #[test]
    fn l_sweep_records_times_and_axis_order() {
        let base = tiny_spec();
        let sweep = run_l_sweep(&[20, 40], &base, None).unwrap();
        assert_eq!(sweep.axis, "L");
        let values: Vec<f64> = sweep.points.iter().map(|p| p.value).collect();
        assert_eq!(values, vec![20.0, 40.0]);
        assert!(sweep.points.iter().all(|p| p.median_fit_ms >= 0.0));
    }

    #[test]
    fn table_reports_open_points_without_error() {
        // k = 1 with a workable rate converges; k = 9 within 40 iterations
        // cannot, and must come back as an open point rather than an error.
        let base = ExperimentSpec {
            seeds: vec![101, 202, 303],
            grid: GridSpec {
                n_points: 120,
                ..GridSpec::default()
            },
            ..ExperimentSpec::default()
        };
        let mlp = MLPConfig {
            layer_sizes: vec![1, 32, 1],
            learning_rate: 0.05,
            max_iters: 40,
            snapshot_every: 10,
            ..MLPConfig::default()
        };
        let table = run_table1(&[1, 9], &mlp, &base).unwrap();
        assert_eq!(table.sweep.axis, "k");
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[1].median_converged_at, None);
        assert!(!table.sweep.points[1].verdict);
    }

    #[test]
    fn median_is_stable_under_permutation() {
        assert_eq!(median_f64(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_f64(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
