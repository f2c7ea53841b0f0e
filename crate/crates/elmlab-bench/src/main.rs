use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use elmlab::datagen::TargetSpec;
use serde::Serialize;

use elmlab_bench::config::ConfigFile;
use elmlab_bench::experiments::{
    median_fit_ms, run_experiment, run_l_sweep, run_ntk_report, run_sd_sweep, run_table1,
    ExperimentSpec, SweepResult,
};
use elmlab_bench::manifest::{self, RunManifest};
use elmlab_bench::{plot, DEFAULT_SEEDS};

#[derive(Parser)]
#[command(
    name = "elmlab",
    version,
    about = "Random-feature and gradient-descent function-fitting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and/or flags, writing artifacts
    Fit(FitArgs),
    /// Sweep the first-layer weight scale at a fixed target frequency
    SweepSd(SweepSdArgs),
    /// Sweep the hidden width at a fixed target
    SweepL(SweepLArgs),
    /// Gradient-descent convergence table across target frequencies
    Table1(Table1Args),
    /// Kernel eigenstructure and per-mode residual decay analysis
    Ntk(NtkArgs),
    /// Run the whole experiment battery against its expected verdicts
    PaperSuite(PaperSuiteArgs),
    /// Re-render plot.svg inside an existing run directory
    Plot(PlotArgs),
}

#[derive(Args)]
struct Common {
    /// key=value config file (later keys win; flags override the file)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Replace the seed battery (repeat the flag for several seeds)
    #[arg(long = "seed", value_name = "U64")]
    seeds: Vec<u64>,
    /// Directory for artifacts
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Capture threshold on test relative L2
    #[arg(long)]
    threshold: Option<f64>,
    /// Machine-readable JSON on stdout instead of the human summary
    #[arg(long)]
    json: bool,
}

impl Common {
    fn load_config(&self) -> Result<ConfigFile> {
        match &self.config {
            None => Ok(ConfigFile::empty()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                ConfigFile::from_text(&text)
                    .with_context(|| format!("parsing config {}", path.display()))
            }
        }
    }

    fn base_spec(&self, cfg: &ConfigFile) -> Result<ExperimentSpec> {
        let mut spec = cfg.experiment_spec()?;
        if !self.seeds.is_empty() {
            spec.seeds = self.seeds.clone();
        }
        if let Some(t) = self.threshold {
            spec.threshold = t;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Hidden width L
    #[arg(long)]
    hidden: Option<usize>,
    /// First-layer scale: Normal{0, sd}
    #[arg(long)]
    sd: Option<f64>,
    /// Fit the single tone -sin(kx)/k^2 instead of the config target
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct SweepSdArgs {
    #[command(flatten)]
    common: Common,
    /// Target frequency for the sweep
    #[arg(long)]
    k: Option<u32>,
    /// Scale values, strictly increasing (repeat the flag)
    #[arg(long = "sd", value_name = "REAL")]
    sds: Vec<f64>,
    /// Hidden width L
    #[arg(long)]
    hidden: Option<usize>,
}

#[derive(Args)]
struct SweepLArgs {
    #[command(flatten)]
    common: Common,
    /// Width values, strictly increasing (repeat the flag)
    #[arg(long = "hidden", value_name = "COUNT")]
    ls: Vec<usize>,
    /// Sweep over the single tone -sin(kx)/k^2 instead of the config target
    #[arg(long)]
    k: Option<u32>,
    /// First-layer scale: Normal{0, sd}
    #[arg(long)]
    sd: Option<f64>,
}

#[derive(Args)]
struct Table1Args {
    #[command(flatten)]
    common: Common,
    /// Target frequencies, strictly increasing (repeat the flag)
    #[arg(long = "k", value_name = "INT")]
    ks: Vec<u32>,
}

#[derive(Args)]
struct NtkArgs {
    #[command(flatten)]
    common: Common,
    /// Hidden width of the single-hidden-layer analysis network
    #[arg(long, default_value_t = 256)]
    hidden: usize,
}

#[derive(Args)]
struct PaperSuiteArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PlotArgs {
    /// Run directory containing manifest.json and predictions.csv
    dir: PathBuf,
}

fn fmt_rel(v: f64) -> String {
    format!("{v:.3e}")
}

fn verdict_word(captured: bool) -> &'static str {
    if captured {
        "captured"
    } else {
        "not-captured"
    }
}

fn print_run(run: &RunManifest) {
    println!(
        "run {}: {} (median rel L2 {}, threshold {}, {} seeds, {:.1} ms total)",
        run.spec.id,
        verdict_word(run.verdict),
        fmt_rel(run.median_rel_l2),
        run.spec.threshold,
        run.seed_reports.len(),
        run.total_wall_ms,
    );
    for r in &run.seed_reports {
        let mut extras = format!("fit {:.1} ms", r.fit_wall_ms);
        if let Some(rank) = r.rank {
            extras.push_str(&format!(", rank {rank}"));
        }
        if let Some(iters) = r.iterations_run {
            match r.converged_at {
                Some(at) => extras.push_str(&format!(", converged at {at}")),
                None => extras.push_str(&format!(", no convergence in {iters} iters")),
            }
        }
        println!(
            "  seed {}: rel L2 {}, {}, {}",
            r.seed,
            fmt_rel(r.capture.rel_l2),
            verdict_word(r.capture.captured),
            extras
        );
    }
    if !run.artifact_dir.is_empty() {
        println!("  artifacts: {}", run.artifact_dir);
    }
}

fn print_sweep(sweep: &SweepResult) {
    println!("sweep over {}:", sweep.axis);
    for p in &sweep.points {
        println!(
            "  {} = {}: {} (median rel L2 {}, median fit {:.1} ms)",
            sweep.axis,
            p.value,
            verdict_word(p.verdict),
            fmt_rel(p.median_rel_l2),
            p.median_fit_ms
        );
    }
}

fn cmd_fit(args: &FitArgs) -> Result<u8> {
    let cfg = args.common.load_config()?;
    let mut spec = args.common.base_spec(&cfg)?;
    if let Some(h) = args.hidden {
        spec.hidden = h;
    }
    if let Some(sd) = args.sd {
        spec = spec.with_sd(sd);
    }
    if let Some(k) = args.k {
        spec.target = TargetSpec::SingleSine { k };
    }
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&spec.id));
    let run = run_experiment(&spec, Some(&out))?;
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&run)?);
    } else {
        print_run(&run);
    }
    Ok(match cfg.expect()? {
        Some(expected) if expected != run.verdict => 1,
        _ => 0,
    })
}

fn cmd_sweep_sd(args: &SweepSdArgs) -> Result<u8> {
    let cfg = args.common.load_config()?;
    let mut base = args.common.base_spec(&cfg)?;
    if let Some(h) = args.hidden {
        base.hidden = h;
    }
    let k = args.k.unwrap_or(match base.target {
        TargetSpec::SingleSine { k } => k,
        _ => 50,
    });
    let sds = if args.sds.is_empty() {
        cfg.list_f64("sds")?
            .unwrap_or_else(|| vec![1.0, 5.0, 7.0, 20.0, 50.0])
    } else {
        args.sds.clone()
    };
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(format!("sweep-sd-k{k}")));
    let sweep = run_sd_sweep(k, &sds, &base, Some(&out))?;
    manifest::write_json(&out.join("sweep.json"), &sweep)?;
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&sweep)?);
    } else {
        println!("target sin({k}x)/{k}^2, L = {}", base.hidden);
        print_sweep(&sweep);
        println!("  sweep.json: {}", out.display());
    }
    Ok(0)
}

fn cmd_sweep_l(args: &SweepLArgs) -> Result<u8> {
    let cfg = args.common.load_config()?;
    let mut base = args.common.base_spec(&cfg)?;
    if let Some(sd) = args.sd {
        base = base.with_sd(sd);
    }
    if let Some(k) = args.k {
        base.target = TargetSpec::SingleSine { k };
    }
    let ls = if args.ls.is_empty() {
        cfg.list_usize("ls")?
            .unwrap_or_else(|| vec![400, 800, 1600])
    } else {
        args.ls.clone()
    };
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join("sweep-l"));
    let sweep = run_l_sweep(&ls, &base, Some(&out))?;
    manifest::write_json(&out.join("sweep.json"), &sweep)?;
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&sweep)?);
    } else {
        println!("target {}, init {:?}", base.target.label(), base.init);
        print_sweep(&sweep);
        println!("  sweep.json: {}", out.display());
    }
    Ok(0)
}

fn cmd_table1(args: &Table1Args) -> Result<u8> {
    let cfg = args.common.load_config()?;
    let base = args.common.base_spec(&cfg)?;
    let mlp = cfg.mlp_config()?;
    let ks = if args.ks.is_empty() {
        cfg.list_u32("ks")?.unwrap_or_else(|| vec![2, 6, 10])
    } else {
        args.ks.clone()
    };
    let table = run_table1(&ks, &mlp, &base)?;
    if let Some(out) = &args.common.out {
        manifest::write_json(&out.join("table1.json"), &table)?;
    }
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&table)?);
    } else {
        println!(
            "gd convergence table (layers {:?}, lr {}, max {} iters, {} seeds)",
            mlp.layer_sizes,
            mlp.learning_rate,
            mlp.max_iters,
            table.seeds.len()
        );
        for row in &table.rows {
            let per_seed: Vec<String> = row
                .converged_at
                .iter()
                .map(|c| c.map_or("open".into(), |v| v.to_string()))
                .collect();
            println!(
                "  k = {}: converged_at [{}], median {}, median rel L2 {}",
                row.k,
                per_seed.join(", "),
                row.median_converged_at
                    .map_or("open".into(), |v| v.to_string()),
                fmt_rel(row.median_rel_l2)
            );
        }
    }
    Ok(0)
}

fn cmd_ntk(args: &NtkArgs) -> Result<u8> {
    let cfg = args.common.load_config()?;
    let mut mlp = cfg.mlp_config()?;
    if !cfg.map.contains_key("layers") {
        mlp.layer_sizes = vec![1, args.hidden, 1];
    }
    if !cfg.map.contains_key("max_iters") {
        mlp.max_iters = 3000;
    }
    if !cfg.map.contains_key("snapshot_every") {
        mlp.snapshot_every = 10;
    }
    let n_samples = match cfg.map.get("n_samples") {
        Some(raw) => raw.parse().with_context(|| format!("n_samples `{raw}`"))?,
        None => 128,
    };
    let seeds = if args.common.seeds.is_empty() {
        DEFAULT_SEEDS.to_vec()
    } else {
        args.common.seeds.clone()
    };
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join("ntk"));
    let summary = run_ntk_report(&mlp, n_samples, &seeds, Some(&out))?;
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!(
            "kernel analysis: layers {:?}, {} samples, {} seeds",
            mlp.layer_sizes,
            summary.n_samples,
            summary.per_seed.len()
        );
        for s in &summary.per_seed {
            println!(
                "  seed {}: eig-freq rho {:.3}, decay rho {:.3}, psd {}, symmetry residual {:.2e}, top-mode freq {} (bottom-10 median {:.1})",
                s.seed,
                s.eigenfreq_spearman,
                s.decay_spearman,
                if s.psd_ok { "ok" } else { "VIOLATED" },
                s.symmetry_residual,
                s.top_mode_freq,
                s.bottom_modes_median_freq
            );
        }
        println!(
            "  medians: eig-freq rho {:.3}, decay rho {:.3}",
            summary.median_eigenfreq_spearman, summary.median_decay_spearman
        );
        println!("  artifacts: {}", out.display());
    }
    Ok(0)
}

#[derive(Serialize)]
struct ScenarioOutcome {
    id: String,
    expected: String,
    observed: String,
    pass: bool,
    detail: String,
}

impl ScenarioOutcome {
    fn verdicts(id: &str, expected: bool, observed: bool, detail: String) -> Self {
        Self {
            id: id.into(),
            expected: verdict_word(expected).into(),
            observed: verdict_word(observed).into(),
            pass: expected == observed,
            detail,
        }
    }

    fn check(id: &str, what: &str, pass: bool, detail: String) -> Self {
        Self {
            id: id.into(),
            expected: what.into(),
            observed: if pass {
                what.into()
            } else {
                format!("NOT {what}")
            },
            pass,
            detail,
        }
    }
}

fn print_outcome(o: &ScenarioOutcome) {
    if o.pass {
        println!("[ok]       {:<24} {} ({})", o.id, o.observed, o.detail);
    } else {
        println!(
            "[MISMATCH] {:<24} expected {}, got {} ({})",
            o.id, o.expected, o.observed, o.detail
        );
    }
}

fn cmd_paper_suite(args: &PaperSuiteArgs) -> Result<u8> {
    let started = Instant::now();
    let cfg = args.common.load_config()?;
    let base = args.common.base_spec(&cfg)?;
    let out = args
        .common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join("paper-suite"));
    let mut outcomes: Vec<ScenarioOutcome> = Vec::new();

    let scenarios: [(&str, TargetSpec, f64, bool); 10] = [
        ("multisine", TargetSpec::MultiSine, 1.0, true),
        ("k2", TargetSpec::SingleSine { k: 2 }, 1.0, true),
        ("k6", TargetSpec::SingleSine { k: 6 }, 1.0, true),
        ("k10", TargetSpec::SingleSine { k: 10 }, 1.0, true),
        ("k20", TargetSpec::SingleSine { k: 20 }, 1.0, false),
        ("k20-sd20", TargetSpec::SingleSine { k: 20 }, 20.0, true),
        ("k50-sd1", TargetSpec::SingleSine { k: 50 }, 1.0, false),
        ("k50-sd50", TargetSpec::SingleSine { k: 50 }, 50.0, true),
        ("k50-sd20", TargetSpec::SingleSine { k: 50 }, 20.0, true),
        ("k6-sd50", TargetSpec::SingleSine { k: 6 }, 50.0, true),
    ];
    for (id, target, sd, expected) in scenarios {
        let spec = base.clone().with_target(target).with_sd(sd).with_id(id);
        let run = run_experiment(&spec, Some(&out.join(id)))?;
        outcomes.push(ScenarioOutcome::verdicts(
            id,
            expected,
            run.verdict,
            format!("median rel L2 {}", fmt_rel(run.median_rel_l2)),
        ));
    }

    // Scale sweep at k = 50: failure at sd 1, capture by sd 20 and 50,
    // with median error non-increasing left to right.
    let sds = [1.0, 5.0, 7.0, 20.0, 50.0];
    let sweep50 = run_sd_sweep(50, &sds, &base, Some(&out.join("sweep-sd-k50")))?;
    manifest::write_json(&out.join("sweep-sd-k50").join("sweep.json"), &sweep50)?;
    let endpoints_ok =
        !sweep50.points[0].verdict && sweep50.points[3].verdict && sweep50.points[4].verdict;
    let sweep_verdicts: Vec<String> = sweep50
        .points
        .iter()
        .map(|p| format!("sd {} {}", p.value, verdict_word(p.verdict)))
        .collect();
    outcomes.push(ScenarioOutcome::check(
        "sweep-sd-k50-endpoints",
        "fails at sd 1, captured at sd 20 and 50",
        endpoints_ok,
        sweep_verdicts.join("; "),
    ));
    let medians: Vec<f64> = sweep50.points.iter().map(|p| p.median_rel_l2).collect();
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    outcomes.push(ScenarioOutcome::check(
        "sweep-sd-k50-monotone",
        "median error non-increasing in sd",
        monotone,
        medians
            .iter()
            .map(|m| fmt_rel(*m))
            .collect::<Vec<_>>()
            .join(" -> "),
    ));

    // k = 20 flips from failure to capture when the scale matches k.
    let sweep20 = run_sd_sweep(20, &[1.0, 20.0], &base, Some(&out.join("sweep-sd-k20")))?;
    manifest::write_json(&out.join("sweep-sd-k20").join("sweep.json"), &sweep20)?;
    outcomes.push(ScenarioOutcome::check(
        "sweep-sd-k20-flip",
        "not captured at sd 1, captured at sd 20",
        !sweep20.points[0].verdict && sweep20.points[1].verdict,
        format!(
            "{} -> {}",
            fmt_rel(sweep20.points[0].median_rel_l2),
            fmt_rel(sweep20.points[1].median_rel_l2)
        ),
    ));

    // Width insensitivity on the mixed-tone target.
    let lsweep = run_l_sweep(
        &[400, 800, 1600],
        &base,
        Some(&out.join("sweep-l-multisine")),
    )?;
    manifest::write_json(&out.join("sweep-l-multisine").join("sweep.json"), &lsweep)?;
    let all_captured = lsweep.points.iter().all(|p| p.verdict);
    outcomes.push(ScenarioOutcome::check(
        "sweep-l-multisine-stable",
        "captured at every width",
        all_captured,
        lsweep
            .points
            .iter()
            .map(|p| format!("L {} {}", p.value, verdict_word(p.verdict)))
            .collect::<Vec<_>>()
            .join("; "),
    ));

    // Timing: a single wide fit stays interactive.
    let timing_spec = base.clone().with_hidden(1600).with_id("timing-L1600");
    let ms = median_fit_ms(&timing_spec, 5)?;
    outcomes.push(ScenarioOutcome::check(
        "timing-L1600",
        "median fit < 5 s",
        ms < 5000.0,
        format!("{ms:.0} ms"),
    ));

    let mismatches = outcomes.iter().filter(|o| !o.pass).count();
    if args.common.json {
        println!("{}", serde_json::to_string_pretty(&outcomes)?);
    } else {
        for o in &outcomes {
            print_outcome(o);
        }
        println!(
            "paper-suite: {}/{} scenarios as expected, {} mismatch(es), wall {:.1} s",
            outcomes.len() - mismatches,
            outcomes.len(),
            mismatches,
            started.elapsed().as_secs_f64()
        );
    }
    manifest::write_json(&out.join("suite.json"), &outcomes)?;
    Ok(if mismatches == 0 { 0 } else { 1 })
}

fn cmd_plot(args: &PlotArgs) -> Result<u8> {
    let mut run = RunManifest::load(&args.dir.join("manifest.json"))?;
    // Re-render in place even if the directory has moved since the run.
    run.artifact_dir = args.dir.display().to_string();
    let path = plot::emit_plot(&run)?;
    println!("wrote {}", path.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::SweepSd(args) => cmd_sweep_sd(args),
        Command::SweepL(args) => cmd_sweep_l(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Ntk(args) => cmd_ntk(args),
        Command::PaperSuite(args) => cmd_paper_suite(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
