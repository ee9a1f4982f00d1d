//! Seeded Monte-Carlo campaigns over scenario sweeps.
//!
//! Each trial owns an RNG stream keyed by `(master seed, figure, sweep index,
//! trial index)`, so campaigns reproduce bit-identically regardless of thread
//! count or execution order. Trials within a sweep point run in parallel;
//! reductions use compensated summation in trial order.

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use isac_core::analytics::{crb_phase1_closed, crb_whole, mse_predict, no_outlier_prob};
use isac_core::channel::{assemble_channels, path_gains, ChannelSet, PathGains};
use isac_core::estimate::{mle_phase1, mle_whole, EstimatorConfig};
use isac_core::linalg::C64;
use isac_core::rng::{stream_rng, ChaCha8Rng};
use isac_core::scan::{achievable_rate, simulate_phase1, Codebook, SnrFeedback};
use isac_core::scenario::{wrap_abs, wrap_direction, Scenario, ScenarioParams};
use isac_core::strategy::{
    decide_strategy_with, simulate_phase2_with_reflection, split_reflection, AllocationPolicy,
    Phase2Options, StrategyKind,
};

use crate::config::apply_sweep;

/// Standard figure campaigns plus free-form sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureId {
    Fig4,
    Fig5,
    Fig6,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
    Fig14,
    Custom,
}

impl FigureId {
    fn stream_id(self) -> u64 {
        match self {
            Self::Fig4 => 4,
            Self::Fig5 => 5,
            Self::Fig6 => 6,
            Self::Fig8 => 8,
            Self::Fig9 => 9,
            Self::Fig10 => 10,
            Self::Fig11 => 11,
            Self::Fig12 => 12,
            Self::Fig13 => 13,
            Self::Fig14 => 14,
            Self::Custom => 0,
        }
    }

    pub fn all_names() -> &'static str {
        "fig4, fig5, fig6, fig8, fig9, fig10, fig11, fig12, fig13, fig14"
    }
}

impl FromStr for FigureId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "fig4" => Self::Fig4,
            "fig5" => Self::Fig5,
            "fig6" => Self::Fig6,
            "fig8" => Self::Fig8,
            "fig9" => Self::Fig9,
            "fig10" => Self::Fig10,
            "fig11" => Self::Fig11,
            "fig12" => Self::Fig12,
            "fig13" => Self::Fig13,
            "fig14" => Self::Fig14,
            "custom" => Self::Custom,
            other => bail!("unknown figure '{other}' (expected {})", Self::all_names()),
        })
    }
}

/// What one trial does after the beam scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Scanning phase only: estimate from scan echoes.
    ScanOnly,
    /// Keep the measured best beam through the data phase and estimate from
    /// both phases.
    WholeSingleBeam,
    /// Split a fixed number of elements toward the scan estimate.
    ForcedSplit,
    /// Full decision logic: single beam, split, or communication-only.
    Protocol,
}

impl FromStr for Pipeline {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "scan" => Self::ScanOnly,
            "whole" => Self::WholeSingleBeam,
            "split" => Self::ForcedSplit,
            "protocol" => Self::Protocol,
            other => bail!("unknown pipeline '{other}' (expected scan|whole|split|protocol)"),
        })
    }
}

/// One Monte-Carlo campaign: a parameter sweep with a trial pipeline.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub figure: FigureId,
    pub pipeline: Pipeline,
    pub sweep_param: String,
    pub sweep_values: Vec<f64>,
    /// Optional outer sweep (grid campaigns); rows come outer-major with the
    /// inner value in the `sweep` column.
    pub outer: Option<(String, Vec<f64>)>,
    pub trials: usize,
    pub seed: u64,
    pub base: ScenarioParams,
    /// Sensing elements for [`Pipeline::ForcedSplit`] (unless swept via the
    /// pseudo-parameter `sensing_elements`).
    pub sensing_elements: usize,
    /// Zero cross-group coupling (interference-free reference runs).
    pub interference_free: bool,
    /// False switches the protocol pipeline to the genie-offset allocation.
    pub worst_case_allocation: bool,
}

fn dbm_range(lo: i32, hi: i32, step: i32) -> Vec<f64> {
    (lo..=hi).step_by(step as usize).map(f64::from).collect()
}

impl ExperimentSpec {
    /// Desk-scale campaign for a standard figure.
    pub fn for_figure(figure: FigureId, base: ScenarioParams, trials: usize, seed: u64) -> Self {
        let mut spec = Self {
            figure,
            pipeline: Pipeline::ScanOnly,
            sweep_param: "tx_power_dbm".to_string(),
            sweep_values: dbm_range(-30, 30, 5),
            outer: None,
            trials,
            seed,
            base,
            sensing_elements: 0,
            interference_free: false,
            worst_case_allocation: true,
        };
        match figure {
            FigureId::Fig4 | FigureId::Custom => {}
            FigureId::Fig5 => {
                spec.sweep_param = "scan_symbols".to_string();
                spec.sweep_values = vec![64.0, 128.0, 192.0, 256.0, 384.0, 512.0];
            }
            FigureId::Fig6 => {
                spec.pipeline = Pipeline::WholeSingleBeam;
                spec.base.zeta_iu = 0.0;
                spec.base.zeta_it = 0.0;
            }
            FigureId::Fig8 => {
                spec.pipeline = Pipeline::ForcedSplit;
                spec.sensing_elements = 36;
                spec.sweep_param = "zeta_it".to_string();
                spec.sweep_values = (-8..=8).map(|i| 10.0 * i as f64 + 5.0).collect();
            }
            FigureId::Fig9 | FigureId::Fig10 => {
                spec.pipeline = Pipeline::ForcedSplit;
                spec.sweep_param = "sensing_elements".to_string();
                spec.sweep_values = (0..=10).map(|i| 6.0 * i as f64).collect();
                spec.base.zeta_iu = 0.0;
                spec.base.zeta_it = if figure == FigureId::Fig9 { 30.0 } else { 3.0 };
            }
            FigureId::Fig11 | FigureId::Fig12 => {
                spec.pipeline = Pipeline::Protocol;
                spec.sweep_param = "zeta_it".to_string();
                spec.sweep_values = (-4..=7).map(|i| 10.0 * i as f64).collect();
            }
            FigureId::Fig13 | FigureId::Fig14 => {
                spec.pipeline = Pipeline::Protocol;
                spec.sweep_param = "zeta_it".to_string();
                spec.sweep_values = (-4..=7).map(|i| 10.0 * i as f64).collect();
                spec.outer = Some((
                    "tx_power_dbm".to_string(),
                    vec![10.0, 14.0, 18.0, 22.0, 26.0, 30.0],
                ));
            }
        }
        spec
    }
}

/// One sweep point of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep: f64,
    pub empirical_mse: f64,
    pub mse_stderr: f64,
    pub predicted_mse: f64,
    pub crb_phase1: f64,
    pub crb_whole: f64,
    pub rate_mean: f64,
    pub rate_reference: f64,
    pub p_no_outlier: f64,
    pub trials: usize,
}

struct TrialOut {
    sq_err: f64,
    rate: f64,
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Squared estimation error on the wrapped direction circle (the direction
/// space is 2-periodic, matching the uniform outlier floor of 1/3).
fn squared_direction_error(theta_hat: f64, theta_true: f64) -> f64 {
    let e = wrap_direction(theta_hat - theta_true);
    e * e
}

fn run_trial(
    sc: &Scenario,
    ch: &ChannelSet,
    cb: &Codebook,
    pipeline: Pipeline,
    m_e: usize,
    interference_free: bool,
    worst_case_allocation: bool,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOut> {
    let cfg = EstimatorConfig::default();
    let opts = Phase2Options { interference_free };
    let rec = simulate_phase1(sc, ch, rng, SnrFeedback::Measured).map_err(|e| anyhow!("{e}"))?;
    let eta = cb.directions[rec.best_index];
    let truth = sc.theta_it().value;
    let theta_bi = sc.theta_bi().value;

    let (theta_hat, rate) = match pipeline {
        Pipeline::ScanOnly => {
            let est = mle_phase1(&rec.se_echo, cb, sc, &cfg).map_err(|e| anyhow!("{e}"))?;
            let delta = wrap_abs(sc.theta_iu_bar().value - eta);
            (est.theta_hat, achievable_rate(sc, ch.gains, delta))
        }
        Pipeline::WholeSingleBeam => {
            let refl = split_reflection(0, eta, 0.0, sc.m_re());
            let p2 = simulate_phase2_with_reflection(sc, ch, &refl, rng, opts)
                .map_err(|e| anyhow!("{e}"))?;
            let est = mle_whole(
                &rec.se_echo,
                cb,
                &p2.echoes,
                &p2.transmitted,
                &refl.phi,
                sc,
                &cfg,
            )
            .map_err(|e| anyhow!("{e}"))?;
            (est.theta_hat, p2.user_rate)
        }
        Pipeline::ForcedSplit => {
            let est1 = mle_phase1(&rec.se_echo, cb, sc, &cfg).map_err(|e| anyhow!("{e}"))?;
            let refl = split_reflection(
                m_e,
                eta,
                wrap_direction(est1.theta_hat - theta_bi),
                sc.m_re(),
            );
            let p2 = simulate_phase2_with_reflection(sc, ch, &refl, rng, opts)
                .map_err(|e| anyhow!("{e}"))?;
            let est = mle_whole(
                &rec.se_echo,
                cb,
                &p2.echoes,
                &p2.transmitted,
                &refl.phi,
                sc,
                &cfg,
            )
            .map_err(|e| anyhow!("{e}"))?;
            (est.theta_hat, p2.user_rate)
        }
        Pipeline::Protocol => {
            let est1 = mle_phase1(&rec.se_echo, cb, sc, &cfg).map_err(|e| anyhow!("{e}"))?;
            let policy = if worst_case_allocation {
                AllocationPolicy::WorstCase
            } else {
                AllocationPolicy::GenieOffset {
                    delta_u: wrap_abs(sc.theta_iu_bar().value - eta),
                }
            };
            let decision = decide_strategy_with(est1.theta_hat, eta, rec.best_snr, sc, policy);
            let p2 = simulate_phase2_with_reflection(sc, ch, &decision.reflection, rng, opts)
                .map_err(|e| anyhow!("{e}"))?;
            let theta = if decision.kind == StrategyKind::CommunicationOnly {
                est1.theta_hat
            } else {
                mle_whole(
                    &rec.se_echo,
                    cb,
                    &p2.echoes,
                    &p2.transmitted,
                    &decision.reflection.phi,
                    sc,
                    &cfg,
                )
                .map_err(|e| anyhow!("{e}"))?
                .theta_hat
            };
            (theta, p2.user_rate)
        }
    };
    Ok(TrialOut {
        sq_err: squared_direction_error(theta_hat, truth),
        rate,
    })
}

/// Mean post-scan rate with the beam offset uniform over one codebook cell
/// (Simpson's rule).
fn mean_rate_over_offset(sc: &Scenario, gains: PathGains) -> f64 {
    let l = sc.codebook_size() as f64;
    let n = 200; // even
    let h = 1.0 / (l * n as f64);
    let mut acc = achievable_rate(sc, gains, 0.0) + achievable_rate(sc, gains, 1.0 / l);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * achievable_rate(sc, gains, i as f64 * h);
    }
    acc * h / 3.0 * l
}

/// Scenario-only reflection used for the row's combined-phase bound: the
/// ideal data-phase configuration of the pipeline at the true geometry.
fn ideal_reflection(sc: &Scenario, cb: &Codebook, pipeline: Pipeline, m_e: usize) -> Vec<C64> {
    let nearest = cb.nearest_beam(sc.theta_iu_bar().value);
    let eta = cb.directions[nearest];
    match pipeline {
        Pipeline::ForcedSplit => {
            split_reflection(m_e, eta, wrap_direction(sc.theta_it_bar().value), sc.m_re()).phi
        }
        _ => cb.beam(nearest).to_vec(),
    }
}

fn run_point(
    spec: &ExperimentSpec,
    sc: &Scenario,
    flat_idx: usize,
    sweep_value: f64,
    m_e: usize,
) -> Result<SummaryRow> {
    let gains = path_gains(sc);
    let ch = assemble_channels(sc, gains);
    let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).map_err(|e| anyhow!("{e}"))?;

    let outs: Vec<TrialOut> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(
                spec.seed,
                &[spec.figure.stream_id(), flat_idx as u64, trial as u64],
            );
            run_trial(
                sc,
                &ch,
                &cb,
                spec.pipeline,
                m_e,
                spec.interference_free,
                spec.worst_case_allocation,
                &mut rng,
            )
        })
        .collect::<Result<_>>()?;

    let n = outs.len() as f64;
    let empirical_mse = neumaier_sum(outs.iter().map(|o| o.sq_err)) / n;
    let var = if outs.len() > 1 {
        neumaier_sum(outs.iter().map(|o| {
            let d = o.sq_err - empirical_mse;
            d * d
        })) / (n - 1.0)
    } else {
        0.0
    };
    let rate_mean = neumaier_sum(outs.iter().map(|o| o.rate)) / n;

    let (crb_w, _) = crb_whole(
        sc,
        &ideal_reflection(sc, &cb, spec.pipeline, m_e),
        sc.data_symbols(),
    );
    let rate_reference = match spec.figure {
        FigureId::Fig5 => mean_rate_over_offset(sc, gains),
        _ if spec.pipeline == Pipeline::ForcedSplit => {
            // interference-free share of the user beam
            let nearest = cb.nearest_beam(sc.theta_iu_bar().value);
            let delta = wrap_abs(sc.theta_iu_bar().value - cb.directions[nearest]);
            let gain = isac_core::array::beam_kernel(sc.m_re() - m_e, delta);
            let snr = sc.n_bs() as f64
                * sc.tx_power_w()
                * gains.alpha_g.norm_sqr()
                * gains.alpha_h.norm_sqr()
                * gain
                * gain
                / sc.noise_power_w();
            isac_core::scan::rate_after_overhead(sc.coherence_symbols(), sc.scan_symbols(), snr)
        }
        _ => achievable_rate(sc, gains, 0.0),
    };

    Ok(SummaryRow {
        sweep: sweep_value,
        empirical_mse,
        mse_stderr: (var / n).sqrt(),
        predicted_mse: mse_predict(sc),
        crb_phase1: crb_phase1_closed(sc),
        crb_whole: crb_w,
        rate_mean,
        rate_reference,
        p_no_outlier: no_outlier_prob(sc),
        trials: outs.len(),
    })
}

/// Runs a campaign: one row per sweep value (outer-major for grid sweeps).
/// Deterministic for a given spec; rows do not depend on execution order.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>> {
    if spec.trials == 0 {
        bail!("trials must be at least 1");
    }
    if spec.sweep_values.is_empty() {
        bail!("sweep has no values");
    }
    let outer: Vec<Option<(&str, f64)>> = match &spec.outer {
        Some((name, values)) => values.iter().map(|&v| Some((name.as_str(), v))).collect(),
        None => vec![None],
    };
    let mut rows = Vec::with_capacity(outer.len() * spec.sweep_values.len());
    for (oi, outer_val) in outer.iter().enumerate() {
        for (ii, &value) in spec.sweep_values.iter().enumerate() {
            let mut params = spec.base.clone();
            if let Some((name, v)) = outer_val {
                apply_sweep(&mut params, name, *v)?;
            }
            apply_sweep(&mut params, &spec.sweep_param, value)?;
            let m_e = if spec.sweep_param == "sensing_elements" {
                value as usize
            } else {
                spec.sensing_elements
            };
            let sc = params
                .validate()
                .map_err(|e| anyhow!("sweep value {value}: {e}"))?;
            let flat_idx = oi * spec.sweep_values.len() + ii;
            rows.push(run_point(spec, &sc, flat_idx, value, m_e)?);
        }
    }
    Ok(rows)
}

/// Table format for [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "csv" => Self::Csv,
            "json" => Self::Json,
            other => bail!("unknown format '{other}' (expected csv|json)"),
        })
    }
}

pub const CSV_HEADER: &str = "sweep,empirical_mse,mse_stderr,predicted_mse,crb_phase1,crb_whole,rate_mean,rate_reference,p_no_outlier,trials";

/// Writes rows as CSV (9 significant digits) or JSON.
pub fn emit_results(rows: &[SummaryRow], format: OutputFormat, out: &mut impl Write) -> Result<()> {
    if rows.is_empty() {
        bail!("nothing to emit");
    }
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in rows {
                writeln!(
                    out,
                    "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{}",
                    r.sweep,
                    r.empirical_mse,
                    r.mse_stderr,
                    r.predicted_mse,
                    r.crb_phase1,
                    r.crb_whole,
                    r.rate_mean,
                    r.rate_reference,
                    r.p_no_outlier,
                    r.trials
                )?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes rows to a file path.
pub fn emit_results_to_path(rows: &[SummaryRow], format: OutputFormat, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating output {}", path.display()))?;
    emit_results(rows, format, &mut file)
}

/// One paired trial across two campaign arms sharing random numbers.
#[derive(Debug, Clone, Serialize)]
pub struct TrialDelta {
    pub sweep: f64,
    pub trial: usize,
    pub sq_err_a: f64,
    pub sq_err_b: f64,
    /// `sq_err_a - sq_err_b`.
    pub delta: f64,
}

/// Runs two specs that differ only in pipeline/strategy settings with common
/// random numbers and returns per-trial squared-error deltas.
pub fn paired_compare(
    a: &ExperimentSpec,
    b: &ExperimentSpec,
    shared_seed: u64,
) -> Result<Vec<TrialDelta>> {
    if a.sweep_param != b.sweep_param
        || a.sweep_values != b.sweep_values
        || a.outer.is_some()
        || b.outer.is_some()
        || a.trials != b.trials
        || a.base != b.base
    {
        bail!("incompatible sweeps: paired arms must differ only in pipeline settings");
    }
    let mut deltas = Vec::with_capacity(a.sweep_values.len() * a.trials);
    for (idx, &value) in a.sweep_values.iter().enumerate() {
        let mut params = a.base.clone();
        apply_sweep(&mut params, &a.sweep_param, value)?;
        let m_e_of = |spec: &ExperimentSpec| {
            if spec.sweep_param == "sensing_elements" {
                value as usize
            } else {
                spec.sensing_elements
            }
        };
        let sc = params
            .validate()
            .map_err(|e| anyhow!("sweep value {value}: {e}"))?;
        let gains = path_gains(&sc);
        let ch = assemble_channels(&sc, gains);
        let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).map_err(|e| anyhow!("{e}"))?;
        let point: Vec<TrialDelta> = (0..a.trials)
            .into_par_iter()
            .map(|trial| {
                // the shared key ignores each arm's own figure and seed so
                // both consume identical noise
                let mut rng_a = stream_rng(shared_seed, &[u64::MAX, idx as u64, trial as u64]);
                let mut rng_b = stream_rng(shared_seed, &[u64::MAX, idx as u64, trial as u64]);
                let out_a = run_trial(
                    &sc,
                    &ch,
                    &cb,
                    a.pipeline,
                    m_e_of(a),
                    a.interference_free,
                    a.worst_case_allocation,
                    &mut rng_a,
                )?;
                let out_b = run_trial(
                    &sc,
                    &ch,
                    &cb,
                    b.pipeline,
                    m_e_of(b),
                    b.interference_free,
                    b.worst_case_allocation,
                    &mut rng_b,
                )?;
                Ok(TrialDelta {
                    sweep: value,
                    trial,
                    sq_err_a: out_a.sq_err,
                    sq_err_b: out_b.sq_err,
                    delta: out_a.sq_err - out_b.sq_err,
                })
            })
            .collect::<Result<_>>()?;
        deltas.extend(point);
    }
    Ok(deltas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(figure: FigureId) -> ExperimentSpec {
        let mut spec = ExperimentSpec::for_figure(figure, ScenarioParams::default(), 3, 7);
        spec.sweep_values.truncate(2);
        if let Some((_, vals)) = &mut spec.outer {
            vals.truncate(2);
        }
        spec
    }

    #[test]
    fn campaign_is_deterministic() {
        let spec = tiny_spec(FigureId::Fig4);
        let a = run_monte_carlo(&spec).unwrap();
        let b = run_monte_carlo(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn analytic_columns_recompute_from_scenario() {
        let spec = tiny_spec(FigureId::Fig4);
        let rows = run_monte_carlo(&spec).unwrap();
        for (row, &dbm) in rows.iter().zip(spec.sweep_values.iter()) {
            let mut p = spec.base.clone();
            apply_sweep(&mut p, "tx_power_dbm", dbm).unwrap();
            let sc = p.validate().unwrap();
            assert_eq!(row.crb_phase1.to_bits(), crb_phase1_closed(&sc).to_bits());
            assert_eq!(row.predicted_mse.to_bits(), mse_predict(&sc).to_bits());
            assert_eq!(row.p_no_outlier.to_bits(), no_outlier_prob(&sc).to_bits());
        }
    }

    #[test]
    fn grid_campaign_row_count_and_order() {
        let spec = tiny_spec(FigureId::Fig13);
        let rows = run_monte_carlo(&spec).unwrap();
        assert_eq!(rows.len(), 4); // 2 powers x 2 angles, outer-major
        assert_eq!(rows[0].sweep, rows[2].sweep);
        assert_eq!(rows[1].sweep, rows[3].sweep);
    }

    #[test]
    fn csv_shape_and_header() {
        let spec = tiny_spec(FigureId::Fig4);
        let rows = run_monte_carlo(&spec).unwrap();
        let mut buf = Vec::new();
        emit_results(&rows, OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), rows.len() + 1);
        assert_eq!(lines[0], CSV_HEADER);
    }

    #[test]
    fn json_round_trips() {
        let spec = tiny_spec(FigureId::Fig4);
        let rows = run_monte_carlo(&spec).unwrap();
        let mut buf = Vec::new();
        emit_results(&rows, OutputFormat::Json, &mut buf).unwrap();
        let back: Vec<SummaryRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn empty_rows_is_an_error() {
        let mut buf = Vec::new();
        let err = emit_results(&[], OutputFormat::Csv, &mut buf).unwrap_err();
        assert!(err.to_string().contains("nothing to emit"));
    }

    #[test]
    fn paired_identical_specs_give_zero_deltas() {
        let mut spec = tiny_spec(FigureId::Fig4);
        spec.sweep_values = vec![30.0];
        let deltas = paired_compare(&spec, &spec, 5).unwrap();
        assert_eq!(deltas.len(), spec.trials);
        for d in &deltas {
            assert_eq!(d.delta, 0.0);
            assert_eq!(d.sq_err_a.to_bits(), d.sq_err_b.to_bits());
        }
    }

    #[test]
    fn paired_seeds_matter_and_arms_share_noise() {
        let mut a = tiny_spec(FigureId::Fig4);
        a.sweep_values = vec![30.0];
        let mut b = a.clone();
        b.pipeline = Pipeline::WholeSingleBeam;
        let d1 = paired_compare(&a, &b, 5).unwrap();
        let d2 = paired_compare(&a, &b, 6).unwrap();
        assert_ne!(
            d1.iter().map(|d| d.sq_err_a.to_bits()).collect::<Vec<_>>(),
            d2.iter().map(|d| d.sq_err_a.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn incompatible_pairing_rejected() {
        let a = tiny_spec(FigureId::Fig4);
        let mut b = a.clone();
        b.sweep_values = vec![0.0];
        assert!(paired_compare(&a, &b, 1).is_err());
    }

    #[test]
    fn scan_duration_sweep_improves_sensing() {
        let mut spec = ExperimentSpec::for_figure(FigureId::Fig5, ScenarioParams::default(), 60, 6);
        spec.sweep_values = vec![64.0, 192.0, 512.0];
        let rows = run_monte_carlo(&spec).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].empirical_mse < pair[0].empirical_mse);
            assert!(pair[1].crb_phase1 < pair[0].crb_phase1);
        }
        // longer scans trade data time away
        assert!(rows.last().unwrap().rate_reference < rows[0].rate_reference);
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let spec = tiny_spec(FigureId::Fig4);
        let rows = run_monte_carlo(&spec).unwrap();
        let err = emit_results_to_path(
            &rows,
            OutputFormat::Csv,
            Path::new("/nonexistent-dir/out.csv"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("creating output"));
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        // threshold-region point where the error spread is wide
        let mut small =
            ExperimentSpec::for_figure(FigureId::Fig4, ScenarioParams::default(), 50, 3);
        small.sweep_values = vec![10.0];
        let mut large = small.clone();
        large.trials = 200;
        let rs = run_monte_carlo(&small).unwrap();
        let rl = run_monte_carlo(&large).unwrap();
        let ratio = rs[0].mse_stderr / rl[0].mse_stderr;
        // 4x the trials predicts a factor-2 drop, within x1.5
        assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "ratio {ratio}");
    }
}
