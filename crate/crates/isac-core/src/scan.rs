//! Beam-scanning phase: DFT codebook sweep, user power measurement and
//! best-beam feedback, echo collection with direct-path cancellation, and the
//! post-scan achievable rate.
//!
//! The sweep uses one symbol per beam with a unit reference symbol. User and
//! sensing-element signals are synthesized on the reduced (matched-beam) path;
//! [`crate::channel::user_signal_full`] / [`crate::channel::se_signal_full`]
//! provide the full-matrix oracle the tests compare against.

use alloc::vec::Vec;
use core::fmt;
use libm::{asin, log2, sqrt};
use rand_core::RngCore;

use crate::array::{beam_kernel, steering, CancellationProjector};
use crate::channel::ChannelSet;
use crate::linalg::{inner, CMat, C64};
use crate::rng::cscg;
use crate::scenario::{wrap_abs, Scenario, SpatialDirection};

const DEG: f64 = core::f64::consts::PI / 180.0;

/// DFT beam set swept during the scanning phase.
#[derive(Debug, Clone)]
pub struct Codebook {
    /// `m_re x l` matrix whose columns are the beams.
    pub columns: CMat,
    /// Beam directions `eta_i = -1 + (2i - 1) / l`.
    pub directions: Vec<f64>,
}

/// Requested codebook smaller than the array it drives.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookTooSmall {
    pub l: usize,
    pub m: usize,
}

impl fmt::Display for CodebookTooSmall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "codebook size {} below element count {}", self.l, self.m)
    }
}

impl Codebook {
    /// Builds the `l`-beam DFT codebook for an `m`-element array (`l >= m`).
    pub fn dft(m: usize, l: usize) -> Result<Self, CodebookTooSmall> {
        if l < m {
            return Err(CodebookTooSmall { l, m });
        }
        let directions: Vec<f64> = (1..=l)
            .map(|i| -1.0 + (2.0 * i as f64 - 1.0) / l as f64)
            .collect();
        let cols: Vec<Vec<C64>> = directions
            .iter()
            .map(|&eta| steering(m, SpatialDirection::from_value(eta)).elements)
            .collect();
        Ok(Self {
            columns: CMat::from_columns(&cols),
            directions,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn beam(&self, i: usize) -> &[C64] {
        self.columns.col(i)
    }

    /// Index of the beam closest (wrapped) to a relative direction.
    pub fn nearest_beam(&self, theta_bar: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &eta) in self.directions.iter().enumerate() {
            let d = wrap_abs(theta_bar - eta);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// How the fed-back user SNR is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrFeedback {
    /// Unbiased-style estimate from the measured power: `max(p/sigma^2 - 1, 0)`.
    #[default]
    Measured,
    /// Exact SNR of the chosen beam (diagnostic cross-check mode).
    Genie,
}

/// Everything the scanning phase produces.
#[derive(Debug, Clone)]
pub struct ScanRecord {
    /// Received user power per beam.
    pub user_powers: Vec<f64>,
    /// Sensing-element snapshots before cancellation, `m_se x l`.
    pub se_raw: CMat,
    /// Snapshots after direct-path cancellation, `m_se x l`; every column is
    /// orthogonal to the BS steering vector.
    pub se_echo: CMat,
    /// Beam with the maximum measured user power (ties to the lowest index).
    pub best_index: usize,
    /// Beam truly nearest to the user direction (analysis aid).
    pub nearest_index: usize,
    /// User SNR fed back to the controller.
    pub best_snr: f64,
    /// False when the target direction falls inside the undetectable band
    /// around the BS direction; the scan itself still completes.
    pub sensing_valid: bool,
}

/// Scanning-phase precondition failures.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanError {
    /// The protocol assigns one symbol per beam, so `tau` must equal `l`.
    ScanLengthMismatch {
        tau: usize,
        l: usize,
    },
    Codebook(CodebookTooSmall),
}

impl fmt::Display for ScanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ScanLengthMismatch { tau, l } => {
                write!(f, "scan symbols {tau} must equal codebook size {l}")
            }
            Self::Codebook(e) => write!(f, "{e}"),
        }
    }
}

/// Runs one beam-scanning phase. Deterministic for a given RNG stream: each
/// beam consumes one user-noise draw followed by `m_se` element-noise draws.
pub fn simulate_phase1(
    sc: &Scenario,
    ch: &ChannelSet,
    rng: &mut impl RngCore,
    feedback: SnrFeedback,
) -> Result<ScanRecord, ScanError> {
    let l = sc.codebook_size();
    if sc.scan_symbols() != l {
        return Err(ScanError::ScanLengthMismatch {
            tau: sc.scan_symbols(),
            l,
        });
    }
    let codebook = Codebook::dft(sc.m_re(), l).map_err(ScanError::Codebook)?;
    let (m, m_s) = (sc.m_re(), sc.m_se());
    let sigma2 = sc.noise_power_w();
    let amp = sqrt(sc.n_bs() as f64 * sc.tx_power_w());

    // reduced-path coefficients after the matched transmit beam collapses
    // the BS dimension; the user term carries conj(alpha_h) from h_u^H
    let c_user = amp * ch.gains.alpha_g * ch.gains.alpha_h.conj();
    let c_echo = amp * ch.gains.alpha_g * ch.gains.alpha_s;
    let c_direct = amp * ch.gains.alpha_g;

    let a_user = steering(m, sc.theta_iu_bar());
    let a_target = steering(m, sc.theta_it_bar());
    let a_se_target = steering(m_s, sc.theta_it());
    let a_se_bs = steering(m_s, sc.theta_bi());
    let projector = CancellationProjector::new(m_s, sc.theta_bi());

    let mut user_powers = Vec::with_capacity(l);
    let mut se_raw = CMat::zeros(m_s, l);
    let mut se_echo = CMat::zeros(m_s, l);
    for t in 0..l {
        let phi = codebook.beam(t);
        let y_u = c_user * inner(&a_user, phi) + cscg(rng, sigma2);
        user_powers.push(y_u.norm_sqr());

        let g_t = c_echo * inner(&a_target, phi);
        let col = se_raw.col_mut(t);
        for i in 0..m_s {
            col[i] = g_t * a_se_target[i] + c_direct * a_se_bs[i] + cscg(rng, sigma2);
        }
        let echo = se_echo.col_mut(t);
        echo.copy_from_slice(col);
        projector.apply_in_place(echo);
    }

    let mut best_index = 0;
    for (i, &p) in user_powers.iter().enumerate() {
        if p > user_powers[best_index] {
            best_index = i;
        }
    }
    let nearest_index = codebook.nearest_beam(sc.theta_iu_bar().value);
    let best_snr = match feedback {
        SnrFeedback::Measured => {
            if sigma2 > 0.0 {
                (user_powers[best_index] / sigma2 - 1.0).max(0.0)
            } else {
                f64::INFINITY
            }
        }
        SnrFeedback::Genie => {
            let delta = wrap_abs(sc.theta_iu_bar().value - codebook.directions[best_index]);
            let gain = beam_kernel(m, delta);
            sc.n_bs() as f64
                * sc.tx_power_w()
                * ch.gains.alpha_g.norm_sqr()
                * ch.gains.alpha_h.norm_sqr()
                * gain
                * gain
                / sigma2
        }
    };
    let sensing_valid = wrap_abs(sc.theta_it().value - sc.theta_bi().value) >= 2.0 / m_s as f64;

    Ok(ScanRecord {
        user_powers,
        se_raw,
        se_echo,
        best_index,
        nearest_index,
        best_snr,
        sensing_valid,
    })
}

/// Post-scan rate for a given data-phase SNR, with the scanning overhead
/// `(T - tau) / T` applied. Zero when no data symbols remain.
pub fn rate_after_overhead(coherence: usize, scan: usize, snr: f64) -> f64 {
    if scan >= coherence {
        return 0.0;
    }
    (coherence - scan) as f64 / coherence as f64 * log2(1.0 + snr)
}

/// Achievable user rate in bps/Hz when the chosen beam misses the user
/// direction by `delta_u` (in `[0, 1/L]`).
pub fn achievable_rate(sc: &Scenario, gains: crate::channel::PathGains, delta_u: f64) -> f64 {
    let gain = beam_kernel(sc.m_re(), delta_u);
    let snr = sc.n_bs() as f64
        * sc.tx_power_w()
        * gains.alpha_g.norm_sqr()
        * gains.alpha_h.norm_sqr()
        * gain
        * gain
        / sc.noise_power_w();
    rate_after_overhead(sc.coherence_symbols(), sc.scan_symbols(), snr)
}

/// SNR threshold equivalent to the scenario's rate threshold:
/// the data-phase SNR at which the post-overhead rate equals it.
pub fn snr_threshold_for_rate(sc: &Scenario) -> f64 {
    let frac = sc.data_symbols() as f64 / sc.coherence_symbols() as f64;
    libm::pow(2.0, sc.rate_threshold_bps_hz() / frac) - 1.0
}

/// Sorted, disjoint subset of `[-1, 1]` (spatial-direction space) where the
/// wrapped distance to `center` is below `halfwidth`.
pub(crate) fn direction_band(center: f64, halfwidth: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in [-2.0f64, -1.0, 0.0, 1.0, 2.0] {
        let lo = (center - halfwidth + 2.0 * k).max(-1.0);
        let hi = (center + halfwidth + 2.0 * k).min(1.0);
        if lo < hi {
            out.push((lo, hi));
        }
    }
    merge_intervals(&mut out);
    out
}

/// Complement of a sorted disjoint interval set within `[-1, 1]`.
pub(crate) fn complement(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut cursor = -1.0;
    for &(lo, hi) in intervals {
        if lo > cursor {
            out.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor < 1.0 {
        out.push((cursor, 1.0));
    }
    out
}

/// Set difference `a \ b` of sorted disjoint interval sets.
pub(crate) fn subtract(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(lo0, hi) in a {
        let mut lo = lo0;
        for &(blo, bhi) in b {
            if bhi <= lo || blo >= hi {
                continue;
            }
            if blo > lo {
                out.push((lo, blo));
            }
            lo = lo.max(bhi);
            if lo >= hi {
                break;
            }
        }
        if lo < hi {
            out.push((lo, hi));
        }
    }
    out
}

fn merge_intervals(v: &mut Vec<(f64, f64)>) {
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for &(lo, hi) in v.iter() {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    *v = merged;
}

/// Maps direction-space intervals to physical-angle intervals in degrees.
pub(crate) fn intervals_to_degrees(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    intervals
        .iter()
        .map(|&(lo, hi)| {
            (
                asin(lo.clamp(-1.0, 1.0)) / DEG,
                asin(hi.clamp(-1.0, 1.0)) / DEG,
            )
        })
        .collect()
}

/// Physical-angle intervals (degrees) where a target cannot be separated from
/// the direct BS path: wrapped direction distance to the BS below `2 / m_se`.
pub fn undetectable_region(sc: &Scenario) -> Vec<(f64, f64)> {
    let band = direction_band(sc.theta_bi().value, 2.0 / sc.m_se() as f64);
    intervals_to_degrees(&band)
}
