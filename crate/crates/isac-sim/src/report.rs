//! JSON views of the core records.
//!
//! Complex numbers serialize as `[re, im]` pairs; complex matrices as arrays
//! of columns, each column an array of `[re, im]` pairs.

use isac_core::analytics::AnalyticsReport;
use isac_core::estimate::EstimationResult;
use isac_core::linalg::{CMat, C64};
use isac_core::scan::ScanRecord;
use isac_core::strategy::{StrategyDecision, StrategyKind};
use serde::{Deserialize, Serialize};

pub fn complex_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Columns-of-pairs view of a complex matrix.
pub fn matrix_columns(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.cols())
        .map(|j| m.col(j).iter().map(|&z| complex_pair(z)).collect())
        .collect()
}

/// Flat JSON form of [`AnalyticsReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticsJson {
    pub crb_phase1: f64,
    pub crb_whole: f64,
    pub crb_up: f64,
    pub p_no_outlier: f64,
    pub mse_predicted: f64,
    pub rho_ni: f64,
    pub rho_th: f64,
    pub rho_t: f64,
    pub rho_ni_dbm: f64,
    pub rho_th_dbm: f64,
    pub outlier_floor_caveat: bool,
}

impl From<&AnalyticsReport> for AnalyticsJson {
    fn from(r: &AnalyticsReport) -> Self {
        Self {
            crb_phase1: r.crb_phase1,
            crb_whole: r.crb_whole,
            crb_up: r.crb_up,
            p_no_outlier: r.p_no_outlier,
            mse_predicted: r.mse_predicted,
            rho_ni: r.rho_ni,
            rho_th: r.rho_th,
            rho_t: r.rho_t,
            rho_ni_dbm: r.rho_ni_dbm,
            rho_th_dbm: r.rho_th_dbm,
            outlier_floor_caveat: r.outlier_floor_caveat,
        }
    }
}

/// Full scan record with complex blocks as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRecordJson {
    pub user_powers: Vec<f64>,
    pub se_raw: Vec<Vec<[f64; 2]>>,
    pub se_echo: Vec<Vec<[f64; 2]>>,
    pub best_index: usize,
    pub nearest_index: usize,
    pub best_snr: f64,
    pub sensing_valid: bool,
}

impl From<&ScanRecord> for ScanRecordJson {
    fn from(r: &ScanRecord) -> Self {
        Self {
            user_powers: r.user_powers.clone(),
            se_raw: matrix_columns(&r.se_raw),
            se_echo: matrix_columns(&r.se_echo),
            best_index: r.best_index,
            nearest_index: r.nearest_index,
            best_snr: r.best_snr,
            sensing_valid: r.sensing_valid,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateJson {
    pub theta_hat: f64,
    pub zeta_hat_deg: f64,
    pub alpha_hat: [f64; 2],
    pub objective_peak: f64,
    pub grid_step: f64,
    pub refined: bool,
}

impl From<&EstimationResult> for EstimateJson {
    fn from(e: &EstimationResult) -> Self {
        Self {
            theta_hat: e.theta_hat,
            zeta_hat_deg: e.zeta_hat_deg,
            alpha_hat: complex_pair(e.alpha_hat),
            objective_peak: e.objective_peak,
            grid_step: e.grid_step,
            refined: e.refined,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecisionJson {
    pub kind: String,
    pub m_e: usize,
    pub delta_ut: f64,
    pub eta_ell: f64,
    pub snr_threshold: f64,
    pub omega_u_deg: Vec<(f64, f64)>,
    pub omega_t_deg: Vec<(f64, f64)>,
    pub omega_e_deg: Vec<(f64, f64)>,
}

pub fn kind_name(kind: StrategyKind) -> &'static str {
    match kind {
        StrategyKind::SingleBeam => "single-beam",
        StrategyKind::BeamSplit => "beam-split",
        StrategyKind::CommunicationOnly => "communication-only",
    }
}

impl From<&StrategyDecision> for DecisionJson {
    fn from(d: &StrategyDecision) -> Self {
        Self {
            kind: kind_name(d.kind).to_string(),
            m_e: d.m_e,
            delta_ut: d.delta_ut,
            eta_ell: d.eta_ell,
            snr_threshold: d.snr_threshold,
            omega_u_deg: d.regions.omega_u_deg.clone(),
            omega_t_deg: d.regions.omega_t_deg.clone(),
            omega_e_deg: d.regions.omega_e_deg.clone(),
        }
    }
}
