//! Closed-form estimation-performance predictions: Fisher information and
//! the direction CRB (general and specialized), outlier probability, interval
//! -error MSE prediction, SNR thresholds, and the combined-phase CRB bounds.
//!
//! The general CRB routine builds the full 3x3 Fisher matrix over
//! `[theta, Re(alpha), Im(alpha)]` and takes the Schur complement, so tests
//! can cross-check its blocks; the specialized closed forms must agree with
//! it to high precision on their own signal models.

use alloc::vec::Vec;
use core::fmt;
use libm::{exp, log, pow, sqrt};

use crate::array::{steering, steering_derivative, steering_derivative_norm2};
use crate::channel::{path_gains, target_snr};
use crate::linalg::{frob_inner, inner, CMat, C64};
use crate::scan::Codebook;
use crate::scenario::{watts_to_dbm, wrap_abs, Scenario, SpatialDirection};

const PI: f64 = core::f64::consts::PI;

/// Fisher-information blocks and the resulting direction CRB.
#[derive(Debug, Clone, Copy)]
pub struct FimBreakdown {
    /// Direction-direction information.
    pub f_theta_theta: f64,
    /// Direction/gain cross information `[Re, Im]`.
    pub f_theta_alpha: [f64; 2],
    /// Diagonal of the gain-gain block (a scaled identity).
    pub f_alpha_alpha: f64,
    /// Schur-complement CRB for the direction.
    pub crb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticsError {
    /// Signal matrix has no energy, the information matrix is singular.
    ZeroEnergyModel,
}

impl fmt::Display for AnalyticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroEnergyModel => write!(f, "signal model has zero energy"),
        }
    }
}

/// Direction CRB from an arbitrary signal matrix `u` (the noise-free model
/// without the complex gain) and its direction derivative `u_dot`, under
/// white complex noise of power `sigma2`.
pub fn fim_crb_general(
    u: &CMat,
    u_dot: &CMat,
    alpha_s: C64,
    sigma2: f64,
) -> Result<FimBreakdown, AnalyticsError> {
    let tuu = frob_inner(u, u).re;
    if !(tuu > 0.0) {
        return Err(AnalyticsError::ZeroEnergyModel);
    }
    let tdd = frob_inner(u_dot, u_dot).re;
    let tud = frob_inner(u, u_dot); // tr(U U_dot^H)
    let a2 = alpha_s.norm_sqr();
    let two_over_s2 = 2.0 / sigma2;
    let z = alpha_s.conj() * tud.conj(); // alpha^* tr(U_dot^H U)
    let f_theta_theta = two_over_s2 * a2 * tdd;
    let f_theta_alpha = [two_over_s2 * z.re, -two_over_s2 * z.im];
    let f_alpha_alpha = two_over_s2 * tuu;
    let schur = f_theta_theta
        - (f_theta_alpha[0] * f_theta_alpha[0] + f_theta_alpha[1] * f_theta_alpha[1])
            / f_alpha_alpha;
    Ok(FimBreakdown {
        f_theta_theta,
        f_theta_alpha,
        f_alpha_alpha,
        crb: 1.0 / schur,
    })
}

/// Noise-free scanning-phase signal model (without the echo gain) and its
/// direction derivative, evaluated at direction `theta`:
/// `U = sqrt(N P_t) alpha_g a_s(theta) q^H(theta) X`.
pub fn phase1_signal_model(sc: &Scenario, theta: f64) -> (CMat, CMat) {
    let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).expect("validated scenario");
    let gains = path_gains(sc);
    let amp = sqrt(sc.n_bs() as f64 * sc.tx_power_w()) * gains.alpha_g;
    build_model(sc, theta, amp, &cb.columns)
}

/// Combined-phase signal model: scanning block followed by `tau2` data
/// symbols reflected with `phi` (unit symbols; only `X2 X2^H` matters).
pub fn whole_signal_model(sc: &Scenario, theta: f64, phi: &[C64], tau2: usize) -> (CMat, CMat) {
    let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).expect("validated scenario");
    let gains = path_gains(sc);
    let amp = sqrt(sc.n_bs() as f64 * sc.tx_power_w()) * gains.alpha_g;
    let mut cols: Vec<Vec<C64>> = (0..cb.len()).map(|t| cb.beam(t).to_vec()).collect();
    for _ in 0..tau2 {
        cols.push(phi.to_vec());
    }
    let x = CMat::from_columns(&cols);
    build_model(sc, theta, amp, &x)
}

fn build_model(sc: &Scenario, theta: f64, amp: C64, x: &CMat) -> (CMat, CMat) {
    let dir = SpatialDirection::from_value(theta);
    let rel = SpatialDirection::from_value(theta - sc.theta_bi().value);
    let a_s = steering(sc.m_se(), dir);
    let a_s_dot = steering_derivative(sc.m_se(), dir);
    let q = steering(sc.m_re(), rel);
    let q_dot = steering_derivative(sc.m_re(), rel);
    let l = x.cols();
    let mut u = CMat::zeros(sc.m_se(), l);
    let mut u_dot = CMat::zeros(sc.m_se(), l);
    for t in 0..l {
        let phi = x.col(t);
        let g = amp * inner(&q, phi);
        let g_dot = amp * inner(&q_dot, phi);
        let cu = u.col_mut(t);
        let cd = u_dot.col_mut(t);
        for i in 0..sc.m_se() {
            cu[i] = g * a_s[i];
            cd[i] = a_s_dot[i] * g + a_s[i] * g_dot;
        }
    }
    (u, u_dot)
}

/// Closed-form scanning-phase CRB:
/// `6 / (rho_t pi^2 N L M M_s (M^2 + M_s^2 - 2))`.
pub fn crb_phase1_closed(sc: &Scenario) -> f64 {
    crb_phase1_at(
        target_snr(sc, path_gains(sc)),
        sc.n_bs(),
        sc.m_re(),
        sc.m_se(),
        sc.codebook_size(),
    )
}

/// Same closed form parameterized directly by the target SNR.
pub fn crb_phase1_at(rho_t: f64, n: usize, m: usize, m_s: usize, l: usize) -> f64 {
    let (m, m_s) = (m as f64, m_s as f64);
    6.0 / (rho_t * PI * PI * (n * l) as f64 * m * m_s * (m * m + m_s * m_s - 2.0))
}

/// Probability that the ML peak stays inside the mainlobe of the objective.
pub fn no_outlier_prob(sc: &Scenario) -> f64 {
    no_outlier_prob_at(
        target_snr(sc, path_gains(sc)),
        sc.n_bs(),
        sc.m_re(),
        sc.m_se(),
        sc.codebook_size(),
    )
}

/// `(1 - exp(-L rho_t N M M_s / 2) / 2) ^ (M + M_s - 2)`.
pub fn no_outlier_prob_at(rho_t: f64, n: usize, m: usize, m_s: usize, l: usize) -> f64 {
    let exponent = (l * n * m * m_s) as f64 * rho_t / 2.0;
    let base = 1.0 - 0.5 * exp(-exponent);
    pow(base, (m + m_s - 2) as f64)
}

/// Interval-error MSE prediction: uniform outlier floor mixed with the CRB.
pub fn mse_predict(sc: &Scenario) -> f64 {
    mse_predict_at(
        target_snr(sc, path_gains(sc)),
        sc.n_bs(),
        sc.m_re(),
        sc.m_se(),
        sc.codebook_size(),
    )
}

/// `(1 - p)/3 + p * CRB` at an explicit target SNR.
pub fn mse_predict_at(rho_t: f64, n: usize, m: usize, m_s: usize, l: usize) -> f64 {
    let p = no_outlier_prob_at(rho_t, n, m, m_s, l);
    (1.0 - p) / 3.0 + p * crb_phase1_at(rho_t, n, m, m_s, l)
}

/// No-information and breakdown SNR thresholds of the MSE curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Below this target SNR the estimate carries no information.
    pub rho_ni: f64,
    /// Above this target SNR the MSE tracks the CRB.
    pub rho_th: f64,
}

/// Threshold pair for a scenario (uses its `beta_ni`).
pub fn thresholds(sc: &Scenario) -> Thresholds {
    thresholds_at(
        sc.n_bs(),
        sc.m_re(),
        sc.m_se(),
        sc.codebook_size(),
        sc.beta_ni(),
    )
}

/// Threshold pair from the array dimensions alone.
pub fn thresholds_at(n: usize, m: usize, m_s: usize, l: usize, beta_ni: f64) -> Thresholds {
    let lnmms = (l * n * m * m_s) as f64;
    let dof = (m_s + m - 2) as f64;
    let rho_ni = -2.0 / lnmms * log(2.0 * (1.0 - pow(1.0 - beta_ni, 1.0 / dof)));
    let rho_0 = PI * PI * ((m * m) as f64) * ((m_s * m_s) as f64) * dof / 2.0;
    let rho_th = 2.0 / lnmms * (log(rho_0) + log(log(rho_0)));
    Thresholds { rho_ni, rho_th }
}

/// Transmit power (dBm) at which the scenario's geometry reaches a given
/// target SNR.
pub fn rho_to_tx_dbm(sc: &Scenario, rho: f64) -> f64 {
    let gains = path_gains(sc);
    let per_watt = gains.alpha_g.norm_sqr() * gains.alpha_s.norm_sqr() / sc.noise_power_w();
    watts_to_dbm(rho / per_watt)
}

/// Combined-phase CRB (exact) and its concise upper bound, for a data phase
/// of `tau2` symbols reflected with `phi`.
///
/// The exact value evaluates the full information expression including the
/// cross term between the direction and the gain; the bound drops the
/// scanning-phase share of the gain information, which cancels the data-phase
/// cross term and leaves `6 / (rho_t pi^2 N (L M M_s (M^2 + M_s^2 - 2) +
/// tau2 |q^H phi|^2 M_s (M_s^2 - 1)))`.
pub fn crb_whole(sc: &Scenario, phi: &[C64], tau2: usize) -> (f64, f64) {
    assert_eq!(phi.len(), sc.m_re(), "reflection length");
    let gains = path_gains(sc);
    let rho_t = target_snr(sc, gains);
    let (n, m, m_s, l) = (sc.n_bs(), sc.m_re(), sc.m_se(), sc.codebook_size());
    let rel = SpatialDirection::from_value(sc.theta_it().value - sc.theta_bi().value);
    let q = steering(m, rel);
    let q_dot = steering_derivative(m, rel);
    let qphi2 = inner(&q, phi).norm_sqr();
    let qdphi2 = inner(&q_dot, phi).norm_sqr();
    let cross = inner(&q, phi) * inner(phi, &q_dot); // q^H phi phi^H q_dot
    let a_dot2 = steering_derivative_norm2(m_s);
    let q_dot2 = steering_derivative_norm2(m);

    let scale = sc.n_bs() as f64 * sc.tx_power_w() * gains.alpha_g.norm_sqr();
    let beta1 = scale * l as f64;
    let beta2 = scale * tau2 as f64;
    let mf = m as f64;
    let msf = m_s as f64;
    let info =
        beta1 * mf * a_dot2 + beta2 * qphi2 * a_dot2 + beta1 * msf * q_dot2 + beta2 * msf * qdphi2
            - (beta2 * beta2 * msf * msf * cross.norm_sqr())
                / (beta1 * msf * mf + beta2 * msf * qphi2);
    let crb_w = sc.noise_power_w() / (2.0 * gains.alpha_s.norm_sqr() * info);

    let denom = (l * m * m_s) as f64 * (mf * mf + msf * msf - 2.0)
        + tau2 as f64 * qphi2 * msf * (msf * msf - 1.0);
    let crb_up = 6.0 / (rho_t * PI * PI * n as f64 * denom);
    (crb_w, crb_up)
}

/// Full analytics bundle for one scenario.
///
/// The combined-phase figures assume the ideal single-beam data phase: the
/// codebook beam nearest the true user direction, held for all remaining
/// symbols. All fields are functions of the scenario alone.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticsReport {
    pub crb_phase1: f64,
    pub crb_whole: f64,
    pub crb_up: f64,
    pub p_no_outlier: f64,
    pub mse_predicted: f64,
    pub rho_ni: f64,
    pub rho_th: f64,
    pub rho_t: f64,
    /// Threshold equivalents on the transmit-power axis.
    pub rho_ni_dbm: f64,
    pub rho_th_dbm: f64,
    /// The uniform outlier floor assumes the error is measured on the wrapped
    /// direction circle; set when the relative target direction is extreme
    /// enough (|wrapped| > 0.8) that an unwrapped reading would deviate.
    pub outlier_floor_caveat: bool,
}

/// Computes the report for a validated scenario.
pub fn analytics_report(sc: &Scenario) -> AnalyticsReport {
    let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).expect("validated scenario");
    let best = cb.nearest_beam(sc.theta_iu_bar().value);
    let phi = cb.beam(best);
    let (crb_w, crb_up) = crb_whole(sc, phi, sc.data_symbols());
    let th = thresholds(sc);
    AnalyticsReport {
        crb_phase1: crb_phase1_closed(sc),
        crb_whole: crb_w,
        crb_up,
        p_no_outlier: no_outlier_prob(sc),
        mse_predicted: mse_predict(sc),
        rho_ni: th.rho_ni,
        rho_th: th.rho_th,
        rho_t: target_snr(sc, path_gains(sc)),
        rho_ni_dbm: rho_to_tx_dbm(sc, th.rho_ni),
        rho_th_dbm: rho_to_tx_dbm(sc, th.rho_th),
        outlier_floor_caveat: wrap_abs(sc.theta_it_bar().value) > 0.8,
    }
}
