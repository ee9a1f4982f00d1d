//! Command-line surface: scenario validation, closed-form analytics, single
//! simulated scans and estimates, figure reproduction, and custom sweeps.
//!
//! Diagnostics go to stderr, data to files or stdout; exit status is zero
//! exactly when no error occurred. `ISAC_SIM_THREADS` caps the worker pool.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use isac_core::analytics::analytics_report;
use isac_core::channel::{assemble_channels, path_gains};
use isac_core::estimate::{mle_phase1, mle_whole, EstimatorConfig};
use isac_core::rng::stream_rng;
use isac_core::scan::{simulate_phase1, undetectable_region, Codebook, SnrFeedback};
use isac_core::scenario::{wrap_direction, Scenario};
use isac_core::strategy::{decide_strategy, simulate_phase2, Phase2Options, StrategyKind};
use isac_sim::config::{load_config, ConfigFile};
use isac_sim::harness::{
    emit_results, emit_results_to_path, run_monte_carlo, ExperimentSpec, FigureId, OutputFormat,
    Pipeline,
};
use isac_sim::report::{AnalyticsJson, DecisionJson, EstimateJson, ScanRecordJson};

#[derive(Parser)]
#[command(
    name = "isac-sim",
    about = "Link-level simulator and analytics for an IRS-aided mmWave sensing/communication system",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigOpt {
    /// Scenario configuration file (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration against every scenario invariant.
    Validate {
        /// Scenario configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit the closed-form analytics report as JSON.
    Analyze {
        #[command(flatten)]
        config: ConfigOpt,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one beam-scanning phase and report the best beam, fed-back SNR,
    /// and direction estimate.
    Scan {
        #[command(flatten)]
        config: ConfigOpt,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the full scan record (JSON) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one full two-phase trial: scan, strategy decision, data phase,
    /// combined estimate.
    Estimate {
        #[command(flatten)]
        config: ConfigOpt,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Reproduce a standard figure table at desk scale.
    Reproduce {
        /// Figure id: fig4, fig5, fig6, fig8, fig9, fig10, fig11, fig12,
        /// fig13, fig14.
        figure: String,
        #[command(flatten)]
        config: ConfigOpt,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Use 1000 trials per point.
        #[arg(long, default_value_t = false)]
        full_scale: bool,
    },
    /// Run the custom sweep described by the config's [experiment] table.
    Sweep {
        /// Configuration file with an [experiment] table.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "csv")]
        format: String,
    },
}

fn scenario_from(config: &Option<PathBuf>) -> Result<(Scenario, ConfigFile)> {
    let cfg = match config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let params = cfg.scenario_params()?;
    let sc = params
        .validate()
        .map_err(|e| anyhow!("invalid scenario:\n{e}"))?;
    Ok((sc, cfg))
}

fn write_json(value: &impl serde::Serialize, out: &Option<PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_validate(config: &PathBuf) -> Result<()> {
    let cfg = load_config(config)?;
    let params = cfg.scenario_params()?;
    let report = params.report();
    if report == "valid" {
        println!("valid");
        Ok(())
    } else {
        bail!("invalid scenario:\n{report}")
    }
}

fn cmd_analyze(config: &Option<PathBuf>, out: &Option<PathBuf>) -> Result<()> {
    let (sc, _) = scenario_from(config)?;
    let report = analytics_report(&sc);
    write_json(&AnalyticsJson::from(&report), out)
}

fn cmd_scan(config: &Option<PathBuf>, seed: u64, out: &Option<PathBuf>) -> Result<()> {
    let (sc, _) = scenario_from(config)?;
    let ch = assemble_channels(&sc, path_gains(&sc));
    let mut rng = stream_rng(seed, &[1]);
    let rec =
        simulate_phase1(&sc, &ch, &mut rng, SnrFeedback::Measured).map_err(|e| anyhow!("{e}"))?;
    let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).map_err(|e| anyhow!("{e}"))?;
    let est = mle_phase1(&rec.se_echo, &cb, &sc, &EstimatorConfig::default())
        .map_err(|e| anyhow!("{e}"))?;

    #[derive(serde::Serialize)]
    struct ScanSummary {
        best_index: usize,
        best_beam_direction: f64,
        best_snr: f64,
        sensing_valid: bool,
        undetectable_region_deg: Vec<(f64, f64)>,
        estimate: EstimateJson,
    }
    let summary = ScanSummary {
        best_index: rec.best_index,
        best_beam_direction: cb.directions[rec.best_index],
        best_snr: rec.best_snr,
        sensing_valid: rec.sensing_valid,
        undetectable_region_deg: undetectable_region(&sc),
        estimate: EstimateJson::from(&est),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(path) = out {
        let record = ScanRecordJson::from(&rec);
        std::fs::write(path, serde_json::to_string_pretty(&record)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_estimate(config: &Option<PathBuf>, seed: u64) -> Result<()> {
    let (sc, _) = scenario_from(config)?;
    let ch = assemble_channels(&sc, path_gains(&sc));
    let cfg = EstimatorConfig::default();
    let mut rng = stream_rng(seed, &[2]);
    let rec =
        simulate_phase1(&sc, &ch, &mut rng, SnrFeedback::Measured).map_err(|e| anyhow!("{e}"))?;
    let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).map_err(|e| anyhow!("{e}"))?;
    let first = mle_phase1(&rec.se_echo, &cb, &sc, &cfg).map_err(|e| anyhow!("{e}"))?;
    let decision = decide_strategy(
        first.theta_hat,
        cb.directions[rec.best_index],
        rec.best_snr,
        &sc,
    );
    let p2 = simulate_phase2(&sc, &ch, &decision, &mut rng, Phase2Options::default())
        .map_err(|e| anyhow!("{e}"))?;
    let combined = if decision.kind == StrategyKind::CommunicationOnly {
        first.clone()
    } else {
        mle_whole(
            &rec.se_echo,
            &cb,
            &p2.echoes,
            &p2.transmitted,
            &decision.reflection.phi,
            &sc,
            &cfg,
        )
        .map_err(|e| anyhow!("{e}"))?
    };

    #[derive(serde::Serialize)]
    struct EstimateSummary {
        true_direction: f64,
        scan_estimate: EstimateJson,
        decision: DecisionJson,
        user_rate_bps_hz: f64,
        combined_estimate: EstimateJson,
        combined_error: f64,
    }
    let summary = EstimateSummary {
        true_direction: sc.theta_it().value,
        scan_estimate: EstimateJson::from(&first),
        decision: DecisionJson::from(&decision),
        user_rate_bps_hz: p2.user_rate,
        combined_estimate: EstimateJson::from(&combined),
        combined_error: wrap_direction(combined.theta_hat - sc.theta_it().value),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_reproduce(
    figure: &str,
    config: &Option<PathBuf>,
    trials: usize,
    seed: u64,
    out: &Option<PathBuf>,
    format: &str,
    full_scale: bool,
) -> Result<()> {
    let figure: FigureId = figure.parse()?;
    if figure == FigureId::Custom {
        bail!("use the sweep command for custom experiments");
    }
    let format: OutputFormat = format.parse()?;
    let cfg = match config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let base = cfg.scenario_params()?;
    let trials = if full_scale { 1000 } else { trials };
    let spec = ExperimentSpec::for_figure(figure, base, trials, seed);
    let rows = run_monte_carlo(&spec)?;
    match out {
        Some(path) => emit_results_to_path(&rows, format, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_results(&rows, format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn cmd_sweep(
    config: &PathBuf,
    out: &Option<PathBuf>,
    trials: Option<usize>,
    seed: Option<u64>,
    format: &str,
) -> Result<()> {
    let format: OutputFormat = format.parse()?;
    let cfg = load_config(config)?;
    let base = cfg.scenario_params()?;
    let exp = cfg
        .experiment
        .clone()
        .ok_or_else(|| anyhow!("config has no [experiment] table"))?;
    let sweep_param = exp
        .sweep_param
        .ok_or_else(|| anyhow!("[experiment] needs sweep_param"))?;
    let sweep_values = exp
        .sweep_values
        .ok_or_else(|| anyhow!("[experiment] needs sweep_values"))?;
    let pipeline = match &exp.pipeline {
        Some(name) => name.parse::<Pipeline>()?,
        None => Pipeline::ScanOnly,
    };
    let spec = ExperimentSpec {
        figure: FigureId::Custom,
        pipeline,
        sweep_param,
        sweep_values,
        outer: None,
        trials: trials.or(exp.trials).unwrap_or(200),
        seed: seed.or(exp.seed).unwrap_or(42),
        base,
        sensing_elements: exp.sensing_elements.unwrap_or(0),
        interference_free: exp.interference_free.unwrap_or(false),
        worst_case_allocation: exp.worst_case_allocation.unwrap_or(true),
    };
    let rows = run_monte_carlo(&spec)?;
    match out {
        Some(path) => emit_results_to_path(&rows, format, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_results(&rows, format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run() -> Result<()> {
    if let Ok(threads) = std::env::var("ISAC_SIM_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| anyhow!("ISAC_SIM_THREADS must be a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let cli = Cli::parse();
    match &cli.command {
        Command::Validate { config } => cmd_validate(config),
        Command::Analyze { config, out } => cmd_analyze(&config.config, out),
        Command::Scan { config, seed, out } => cmd_scan(&config.config, *seed, out),
        Command::Estimate { config, seed } => cmd_estimate(&config.config, *seed),
        Command::Reproduce {
            figure,
            config,
            trials,
            seed,
            out,
            format,
            full_scale,
        } => cmd_reproduce(
            figure,
            &config.config,
            *trials,
            *seed,
            out,
            format,
            *full_scale,
        ),
        Command::Sweep {
            config,
            out,
            trials,
            seed,
            format,
        } => cmd_sweep(config, out, *trials, *seed, format),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
