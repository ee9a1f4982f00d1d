//! TOML configuration files.
//!
//! Scenario keys sit at the top level and mirror the parameter names used
//! throughout the crate. Powers may be given linearly (`*_w`) or in dBm
//! (`*_dbm`), the cross section linearly (`rcs_sqm`) or in dBsm
//! (`rcs_dbsm`); giving both forms of one quantity is an error. An optional
//! `[experiment]` table configures the `sweep` command.

use anyhow::{bail, Context, Result};
use isac_core::scenario::{dbm_to_watts, dbsm_to_sqm, ScenarioParams};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n_bs: Option<usize>,
    pub m_re: Option<usize>,
    pub m_se: Option<usize>,
    pub codebook_size: Option<usize>,
    pub coherence_symbols: Option<usize>,
    pub scan_symbols: Option<usize>,
    pub carrier_hz: Option<f64>,
    pub tx_power_w: Option<f64>,
    pub tx_power_dbm: Option<f64>,
    pub noise_power_w: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub d_bi: Option<f64>,
    pub d_iu: Option<f64>,
    pub d_it: Option<f64>,
    pub zeta_bi: Option<f64>,
    pub zeta_iu: Option<f64>,
    pub zeta_it: Option<f64>,
    pub rcs_sqm: Option<f64>,
    pub rcs_dbsm: Option<f64>,
    pub rate_threshold_bps_hz: Option<f64>,
    pub beta_ni: Option<f64>,
    pub bs_aod: Option<f64>,
    pub experiment: Option<ExperimentConfig>,
}

/// `[experiment]` table for custom sweeps.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Sweep parameter name (any scenario key accepted by `apply_sweep`).
    pub sweep_param: Option<String>,
    pub sweep_values: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    /// Trial pipeline: "scan", "whole", "split", or "protocol".
    pub pipeline: Option<String>,
    /// Sensing elements forced for the "split" pipeline.
    pub sensing_elements: Option<usize>,
    /// Zero cross-group coupling (reference mode).
    pub interference_free: Option<bool>,
    /// False switches the protocol to the genie-offset allocation
    /// (diagnostic; default true).
    pub worst_case_allocation: Option<bool>,
}

impl ConfigFile {
    /// Overlays the file onto the reference parameters.
    pub fn scenario_params(&self) -> Result<ScenarioParams> {
        let mut p = ScenarioParams::default();
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    p.$field = v;
                }
            };
        }
        set!(n_bs);
        set!(m_re);
        set!(m_se);
        set!(codebook_size);
        set!(coherence_symbols);
        set!(scan_symbols);
        set!(carrier_hz);
        set!(d_bi);
        set!(d_iu);
        set!(d_it);
        set!(zeta_bi);
        set!(zeta_iu);
        set!(zeta_it);
        set!(rate_threshold_bps_hz);
        set!(beta_ni);
        set!(bs_aod);
        match (self.tx_power_w, self.tx_power_dbm) {
            (Some(_), Some(_)) => bail!("give tx_power_w or tx_power_dbm, not both"),
            (Some(w), None) => p.tx_power_w = w,
            (None, Some(dbm)) => p.tx_power_w = dbm_to_watts(dbm),
            (None, None) => {}
        }
        match (self.noise_power_w, self.noise_power_dbm) {
            (Some(_), Some(_)) => bail!("give noise_power_w or noise_power_dbm, not both"),
            (Some(w), None) => p.noise_power_w = w,
            (None, Some(dbm)) => p.noise_power_w = dbm_to_watts(dbm),
            (None, None) => {}
        }
        match (self.rcs_sqm, self.rcs_dbsm) {
            (Some(_), Some(_)) => bail!("give rcs_sqm or rcs_dbsm, not both"),
            (Some(v), None) => p.rcs_sqm = v,
            (None, Some(dbsm)) => p.rcs_sqm = dbsm_to_sqm(dbsm),
            (None, None) => {}
        }
        Ok(p)
    }
}

/// Parses a configuration file.
pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ConfigFile =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(cfg)
}

/// Applies one sweep value to the parameters. `scan_symbols` (and
/// `codebook_size`) move together: the sweep keeps one symbol per beam.
pub fn apply_sweep(p: &mut ScenarioParams, name: &str, value: f64) -> Result<()> {
    match name {
        "tx_power_dbm" => p.tx_power_w = dbm_to_watts(value),
        "tx_power_w" => p.tx_power_w = value,
        "noise_power_dbm" => p.noise_power_w = dbm_to_watts(value),
        "noise_power_w" => p.noise_power_w = value,
        "zeta_it" => p.zeta_it = value,
        "zeta_iu" => p.zeta_iu = value,
        "zeta_bi" => p.zeta_bi = value,
        "d_bi" => p.d_bi = value,
        "d_iu" => p.d_iu = value,
        "d_it" => p.d_it = value,
        "rcs_sqm" => p.rcs_sqm = value,
        "rcs_dbsm" => p.rcs_sqm = dbsm_to_sqm(value),
        "rate_threshold_bps_hz" => p.rate_threshold_bps_hz = value,
        "beta_ni" => p.beta_ni = value,
        "m_se" => p.m_se = as_count(name, value)?,
        "n_bs" => p.n_bs = as_count(name, value)?,
        "m_re" => p.m_re = as_count(name, value)?,
        "coherence_symbols" => p.coherence_symbols = as_count(name, value)?,
        "scan_symbols" | "codebook_size" => {
            let v = as_count(name, value)?;
            p.scan_symbols = v;
            p.codebook_size = v;
        }
        // consumed by the trial pipeline, not the scenario
        "sensing_elements" => {}
        other => bail!("unknown sweep parameter '{other}'"),
    }
    Ok(())
}

fn as_count(name: &str, value: f64) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 {
        bail!("sweep parameter '{name}' needs a non-negative integer (got {value})");
    }
    Ok(value as usize)
}
