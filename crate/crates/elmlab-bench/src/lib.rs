//! Experiment orchestration for the `elmlab` crate: declarative experiment
//! specs, seeded multi-run verdicts, sweeps over embedding scale and width,
//! gradient-descent convergence tables, NTK reports, and file artifacts
//! (CSV, JSON manifests, SVG plots) written atomically.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod plot;

/// Default seed battery. Verdicts are majority votes over these; errors are
/// medians. Single-seed results are brittle near capture transitions.
pub const DEFAULT_SEEDS: [u64; 5] = [101, 202, 303, 404, 505];

/// Capture threshold: relative L2 on the held-out split.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Relative singular-value cutoff used for every experiment-level readout
/// solve. tanh feature matrices have exponentially decaying spectra; the
/// machine-precision default cutoff keeps noise-dominated directions whose
/// huge amplification wrecks test error on wide-embedding fits, while 1e-9
/// keeps every direction that carries signal. Chosen by a cutoff sweep;
/// results are flat for anything in 1e-12..1e-7.
pub const EXPERIMENT_RCOND: f64 = 1e-9;

/// Default hidden width L for ELM experiments.
pub const DEFAULT_HIDDEN: usize = 800;

/// Suggested embedding scale for a target: its highest frequency. Exposed
/// as an explicit helper (and CLI hint), never applied silently.
pub fn suggested_sd(target: &elmlab::datagen::TargetSpec) -> f64 {
    target.max_frequency() as f64
}
