//! Data-phase reflection design: decide between serving the user with the
//! full best beam (which may also illuminate a nearby target) and splitting
//! the reflecting elements between the user beam and a sensing beam, with a
//! worst-case element allocation that protects the user's rate threshold.

use alloc::vec::Vec;
use core::fmt;
use libm::{asin, cos, floor, sin, sqrt};
use num_complex::Complex;
use rand_core::RngCore;

use crate::array::{steering, CancellationProjector};
use crate::channel::ChannelSet;
use crate::linalg::{inner, CMat, C64};
use crate::rng::{cscg, unit_symbol};
use crate::scan::{
    complement, direction_band, intervals_to_degrees, rate_after_overhead, snr_threshold_for_rate,
    subtract,
};
use crate::scenario::{wrap_abs, wrap_direction, Scenario};

const PI: f64 = core::f64::consts::PI;

/// Data-phase sensing strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Full best beam toward the user; the target sits inside it.
    SingleBeam,
    /// Element split: a sensing prefix steered at the estimate, the rest on
    /// the user beam.
    BeamSplit,
    /// Full best beam toward the user with no data-phase sensing benefit.
    CommunicationOnly,
}

/// Angle regions (degrees) attached to a decision for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct Regions {
    /// Target indistinguishable from the direct BS path.
    pub omega_u_deg: Vec<(f64, f64)>,
    /// Target inside the served beam's mainlobe.
    pub omega_t_deg: Vec<(f64, f64)>,
    /// Target far enough from the served beam for low-interference splitting.
    pub omega_e_deg: Vec<(f64, f64)>,
}

/// Reflection vector with a sensing prefix of `m_e` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitReflection {
    /// Unit-modulus reflection coefficients, length M.
    pub phi: Vec<C64>,
    /// Leading elements steered at the sensing direction (0 = pure user beam).
    pub m_e: usize,
}

/// Outcome of the data-phase decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyDecision {
    pub kind: StrategyKind,
    /// Elements allocated to sensing (0 unless beam splitting).
    pub m_e: usize,
    pub regions: Regions,
    /// Controller-side estimate of the user/target direction separation.
    pub delta_ut: f64,
    /// Direction of the served beam.
    pub eta_ell: f64,
    /// SNR threshold equivalent to the scenario's rate threshold.
    pub snr_threshold: f64,
    /// Reflection the data phase will apply.
    pub reflection: SplitReflection,
}

/// Element-allocation failures.
#[derive(Debug, Clone, PartialEq)]
pub enum AllocationError {
    /// Measured SNR below the target: no margin to trade away.
    InsufficientMargin {
        gamma_ell: f64,
        gamma: f64,
    },
    NonPositiveTarget {
        gamma: f64,
    },
}

impl fmt::Display for AllocationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InsufficientMargin { gamma_ell, gamma } => {
                write!(
                    f,
                    "insufficient margin: measured {gamma_ell} below target {gamma}"
                )
            }
            Self::NonPositiveTarget { gamma } => {
                write!(f, "SNR target must be positive (got {gamma})")
            }
        }
    }
}

/// Reflection with the first `m_e` elements phase-aligned to the sensing
/// direction and the remainder continuing the user beam's progression.
pub fn split_reflection(
    m_e: usize,
    theta_iu_bar: f64,
    theta_it_bar: f64,
    m: usize,
) -> SplitReflection {
    assert!(m_e <= m, "sensing prefix exceeds element count");
    let global = -PI * (m as f64 - 1.0) * theta_iu_bar / 2.0;
    let phi = (0..m)
        .map(|k| {
            let theta = if k < m_e { theta_it_bar } else { theta_iu_bar };
            let phase = global + PI * k as f64 * theta;
            Complex::new(cos(phase), sin(phase))
        })
        .collect();
    SplitReflection { phi, m_e }
}

/// Beamforming gain toward the user under an `m_e`-element split, as a
/// function of the user/target direction separation:
/// `|M - M_e + rho * sin(pi M_e d / 2) / sin(pi d / 2)|` with
/// `rho = exp(j pi d (M_e - 1) / 2)`.
pub fn split_gain(m: usize, m_e: usize, delta_ut: f64) -> f64 {
    let d = wrap_direction(delta_ut);
    let den = sin(PI * d / 2.0);
    let ratio = if den.abs() < 1e-9 {
        m_e as f64
    } else {
        sin(PI * m_e as f64 * d / 2.0) / den
    };
    let rho = Complex::new(0.0, PI * d * (m_e as f64 - 1.0) / 2.0).exp();
    ((m - m_e) as f64 + rho * ratio).norm()
}

/// Worst-case user SNR after splitting `m_e` elements away: the channel gain
/// inferred at zero beam offset combined with the largest in-mainlobe offset
/// `1/L` for the remaining elements (interference between the groups is not
/// part of this bound).
pub fn worst_case_user_snr(gamma_ell: f64, m_e: usize, m: usize, l: usize) -> f64 {
    let remaining = sin(PI * (m - m_e) as f64 / (2.0 * l as f64)) / sin(PI / (2.0 * l as f64));
    gamma_ell * remaining * remaining / ((m * m) as f64)
}

/// Largest sensing allocation whose worst-case user SNR still meets the
/// target. Returns 0 when the margin is too thin for any guaranteed split
/// (including the boundary `gamma = gamma_ell`).
pub fn element_allocation(
    gamma_ell: f64,
    gamma: f64,
    m: usize,
    l: usize,
) -> Result<usize, AllocationError> {
    if !(gamma > 0.0) {
        return Err(AllocationError::NonPositiveTarget { gamma });
    }
    if gamma > gamma_ell {
        return Err(AllocationError::InsufficientMargin { gamma_ell, gamma });
    }
    let ratio = sqrt(gamma / gamma_ell);
    let arg = m as f64 * ratio * sin(PI / (2.0 * l as f64));
    // beyond this even a zero split cannot guarantee the worst case
    if arg > sin(PI * m as f64 / (2.0 * l as f64)) {
        return Ok(0);
    }
    let me = floor(m as f64 - 2.0 * l as f64 / PI * asin(arg));
    Ok((me.max(0.0) as usize).min(m - 1))
}

/// Largest allocation whose worst case still meets the target after
/// charging the cross-group sidelobe against the user beam.
///
/// [`element_allocation`] bounds only the remaining elements' own gain; the
/// sensing group adds a coherent term of magnitude up to
/// `1 / sin(pi (11/M - 1/L) / 2)` toward a user anywhere inside the served
/// beam once the separation rule holds. Reserving that amplitude keeps the
/// realized rate at or above the threshold for any sidelobe phase, at the
/// cost of a few sensing elements; this is what [`decide_strategy`] applies.
pub fn element_allocation_interference_guarded(
    gamma_ell: f64,
    gamma: f64,
    m: usize,
    l: usize,
) -> Result<usize, AllocationError> {
    if !(gamma > 0.0) {
        return Err(AllocationError::NonPositiveTarget { gamma });
    }
    if gamma > gamma_ell {
        return Err(AllocationError::InsufficientMargin { gamma_ell, gamma });
    }
    let separation = (11.0 / m as f64 - 1.0 / l as f64).max(1.0 / m as f64);
    let sidelobe = 1.0 / sin(PI * separation / 2.0);
    let needed = m as f64 * sqrt(gamma / gamma_ell) + sidelobe;
    let arg = needed * sin(PI / (2.0 * l as f64));
    if arg > sin(PI * m as f64 / (2.0 * l as f64)) {
        return Ok(0);
    }
    let me = floor(m as f64 - 2.0 * l as f64 / PI * asin(arg));
    Ok((me.max(0.0) as usize).min(m - 1))
}

/// Diagnostic allocation that uses the true beam offset instead of the
/// worst-case `1/L`: the channel gain is inferred at the actual offset and
/// the remaining elements are credited with their actual gain. Collapses to
/// `floor(M (1 - sqrt(gamma/gamma_ell)))` as the offset vanishes.
pub fn element_allocation_genie(
    gamma_ell: f64,
    gamma: f64,
    m: usize,
    delta_u: f64,
) -> Result<usize, AllocationError> {
    if !(gamma > 0.0) {
        return Err(AllocationError::NonPositiveTarget { gamma });
    }
    if gamma > gamma_ell {
        return Err(AllocationError::InsufficientMargin { gamma_ell, gamma });
    }
    let ratio = sqrt(gamma / gamma_ell);
    let d = crate::scenario::wrap_abs(delta_u);
    if d < 1e-9 {
        let me = floor(m as f64 * (1.0 - ratio));
        return Ok((me.max(0.0) as usize).min(m - 1));
    }
    // need sin(pi n d / 2) >= sin(pi M d / 2) * ratio for the remaining n
    let target = sin(PI * m as f64 * d / 2.0).abs() * ratio;
    if target > 1.0 {
        return Ok(0);
    }
    let needed = 2.0 / (PI * d) * asin(target);
    if needed > m as f64 {
        return Ok(0);
    }
    let me = floor(m as f64 - needed);
    Ok((me.max(0.0) as usize).min(m - 1))
}

/// Small-argument approximation of [`element_allocation`]:
/// `floor(M (1 - sqrt(gamma / gamma_ell)))`.
pub fn element_allocation_approx(
    gamma_ell: f64,
    gamma: f64,
    m: usize,
) -> Result<usize, AllocationError> {
    if !(gamma > 0.0) {
        return Err(AllocationError::NonPositiveTarget { gamma });
    }
    if gamma > gamma_ell {
        return Err(AllocationError::InsufficientMargin { gamma_ell, gamma });
    }
    let me = floor(m as f64 * (1.0 - sqrt(gamma / gamma_ell)));
    Ok((me.max(0.0) as usize).min(m - 1))
}

/// Allocation policy for [`decide_strategy_with`].
#[derive(Debug, Clone, Copy)]
pub enum AllocationPolicy {
    /// Worst-case beam offset plus the cross-group sidelobe reserve
    /// (the default; keeps the realized rate at the threshold).
    WorstCase,
    /// Diagnostic: credit the true beam offset (simulator-side knowledge).
    GenieOffset { delta_u: f64 },
}

impl Default for AllocationPolicy {
    fn default() -> Self {
        Self::WorstCase
    }
}

/// Chooses the data-phase strategy from controller-visible quantities only:
/// the direction estimate, the served beam, and the fed-back SNR.
pub fn decide_strategy(
    theta_hat: f64,
    eta_ell: f64,
    gamma_ell: f64,
    sc: &Scenario,
) -> StrategyDecision {
    decide_strategy_with(
        theta_hat,
        eta_ell,
        gamma_ell,
        sc,
        AllocationPolicy::WorstCase,
    )
}

/// [`decide_strategy`] with an explicit allocation policy.
pub fn decide_strategy_with(
    theta_hat: f64,
    eta_ell: f64,
    gamma_ell: f64,
    sc: &Scenario,
    policy: AllocationPolicy,
) -> StrategyDecision {
    let (m, m_s) = (sc.m_re(), sc.m_se());
    let theta_bi = sc.theta_bi().value;
    let beam_center = theta_bi + eta_ell;

    let omega_u = direction_band(theta_bi, 2.0 / m_s as f64);
    let omega_t = subtract(&direction_band(beam_center, 2.0 / m as f64), &omega_u);
    let omega_e = subtract(
        &complement(&direction_band(beam_center, 11.0 / m as f64)),
        &omega_u,
    );
    let regions = Regions {
        omega_u_deg: intervals_to_degrees(&omega_u),
        omega_t_deg: intervals_to_degrees(&omega_t),
        omega_e_deg: intervals_to_degrees(&omega_e),
    };

    let snr_threshold = snr_threshold_for_rate(sc);
    let inside_undetectable = wrap_abs(theta_hat - theta_bi) < 2.0 / m_s as f64;
    let delta_ut = wrap_abs(theta_hat - beam_center);
    let theta_it_bar_hat = wrap_direction(theta_hat - theta_bi);

    let (kind, m_e) = if inside_undetectable {
        (StrategyKind::CommunicationOnly, 0)
    } else if delta_ut < 2.0 / m as f64 {
        (StrategyKind::SingleBeam, 0)
    } else if delta_ut > 11.0 / m as f64 && gamma_ell > snr_threshold {
        let allocation = match policy {
            AllocationPolicy::WorstCase => element_allocation_interference_guarded(
                gamma_ell,
                snr_threshold,
                m,
                sc.codebook_size(),
            ),
            AllocationPolicy::GenieOffset { delta_u } => {
                element_allocation_genie(gamma_ell, snr_threshold, m, delta_u)
            }
        };
        match allocation {
            Ok(me) if me >= 1 => (StrategyKind::BeamSplit, me),
            _ => (StrategyKind::CommunicationOnly, 0),
        }
    } else {
        (StrategyKind::CommunicationOnly, 0)
    };

    let reflection = split_reflection(m_e, eta_ell, theta_it_bar_hat, m);
    StrategyDecision {
        kind,
        m_e,
        regions,
        delta_ut,
        eta_ell,
        snr_threshold,
        reflection,
    }
}

/// Controls for the data-phase simulation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Phase2Options {
    /// Zero the cross-group coupling: the target echo is driven only by the
    /// sensing prefix and the user rate only by the remaining elements.
    /// Reference mode for interference-free comparisons.
    pub interference_free: bool,
}

/// Data-phase products: cancelled echoes, the transmitted block, and the
/// realized user rate.
#[derive(Debug, Clone)]
pub struct Phase2Record {
    /// Cancelled sensing-element echoes, `m_se x tau2`.
    pub echoes: CMat,
    /// Transmitted block `phi * s^T`, `m_re x tau2`.
    pub transmitted: CMat,
    /// Realized user rate in bps/Hz under the applied reflection.
    pub user_rate: f64,
    /// Beamforming gain magnitude toward the true user direction.
    pub user_gain: f64,
}

/// No data symbols remain after scanning.
#[derive(Debug, Clone, PartialEq)]
pub struct NoDataSymbols;

impl fmt::Display for NoDataSymbols {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no data-transmission symbols")
    }
}

/// Simulates the data phase under a decision. Unit-power random-phase data
/// symbols, echoes cancelled exactly like the scanning phase; deterministic
/// per RNG stream (per symbol: one symbol draw, then `m_se` noise draws).
pub fn simulate_phase2(
    sc: &Scenario,
    ch: &ChannelSet,
    decision: &StrategyDecision,
    rng: &mut impl RngCore,
    options: Phase2Options,
) -> Result<Phase2Record, NoDataSymbols> {
    simulate_phase2_with_reflection(sc, ch, &decision.reflection, rng, options)
}

/// Data-phase simulation for an explicit reflection vector (the decision
/// wrapper above forwards here).
pub fn simulate_phase2_with_reflection(
    sc: &Scenario,
    ch: &ChannelSet,
    reflection: &SplitReflection,
    rng: &mut impl RngCore,
    options: Phase2Options,
) -> Result<Phase2Record, NoDataSymbols> {
    let tau2 = sc.data_symbols();
    if tau2 == 0 {
        return Err(NoDataSymbols);
    }
    let (m, m_s) = (sc.m_re(), sc.m_se());
    let phi = &reflection.phi;
    let m_e = reflection.m_e;
    let sigma2 = sc.noise_power_w();
    let amp = sqrt(sc.n_bs() as f64 * sc.tx_power_w());
    let c_echo = amp * ch.gains.alpha_g * ch.gains.alpha_s;
    let c_direct = amp * ch.gains.alpha_g;

    let a_target = steering(m, sc.theta_it_bar());
    let a_user = steering(m, sc.theta_iu_bar());
    let a_se_target = steering(m_s, sc.theta_it());
    let a_se_bs = steering(m_s, sc.theta_bi());
    let projector = CancellationProjector::new(m_s, sc.theta_bi());

    // group-restricted gains for the interference-free reference
    let echo_gain = if options.interference_free {
        inner(&a_target[..m_e], &phi[..m_e])
    } else {
        inner(&a_target, phi)
    };
    let user_gain = if options.interference_free {
        inner(&a_user[m_e..], &phi[m_e..]).norm()
    } else {
        inner(&a_user, phi).norm()
    };

    let mut echoes = CMat::zeros(m_s, tau2);
    let mut transmitted = CMat::zeros(m, tau2);
    for t in 0..tau2 {
        let s = unit_symbol(rng);
        let tx = transmitted.col_mut(t);
        for (x, &p) in tx.iter_mut().zip(phi.iter()) {
            *x = p * s;
        }
        let g = c_echo * echo_gain * s;
        let d = c_direct * s;
        let col = echoes.col_mut(t);
        for i in 0..m_s {
            col[i] = g * a_se_target[i] + d * a_se_bs[i] + cscg(rng, sigma2);
        }
        projector.apply_in_place(col);
    }

    let snr = sc.n_bs() as f64
        * sc.tx_power_w()
        * ch.gains.alpha_g.norm_sqr()
        * ch.gains.alpha_h.norm_sqr()
        * user_gain
        * user_gain
        / sigma2;
    let user_rate = rate_after_overhead(sc.coherence_symbols(), sc.scan_symbols(), snr);

    Ok(Phase2Record {
        echoes,
        transmitted,
        user_rate,
        user_gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{crb_phase1_closed, crb_whole};
    use crate::channel::{assemble_channels, path_gains};
    use crate::rng::{stream_rng, uniform};
    use crate::scan::Codebook;
    use crate::scenario::{ScenarioParams, SpatialDirection};

    fn defaults() -> Scenario {
        ScenarioParams::default().validate().unwrap()
    }

    #[test]
    fn split_with_no_sensing_prefix_is_the_user_beam() {
        let m = 64;
        let eta = -1.0 + 39.0 / 64.0;
        let r = split_reflection(0, eta, 0.3, m);
        let beam = steering(m, SpatialDirection::from_value(eta));
        for (a, b) in r.phi.iter().zip(beam.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn full_split_steers_everything_at_the_estimate() {
        let m = 64;
        let theta_hat = 0.41;
        let r = split_reflection(m, 0.1, theta_hat, m);
        let a = steering(m, SpatialDirection::from_value(theta_hat));
        let g = inner(&a, &r.phi).norm();
        assert!((g - m as f64).abs() < 1e-9);
        for &z in &r.phi {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_gain_closed_form_matches_inner_product() {
        let m = 64;
        let theta_iu_bar = 0.866;
        for m_e in [0usize, 1, 17, 36, 63] {
            for delta in [0.01, 0.17, 0.5, 1.3] {
                let r = split_reflection(m_e, theta_iu_bar, theta_iu_bar + delta, m);
                let a = steering(m, SpatialDirection::from_value(theta_iu_bar));
                let g = inner(&a, &r.phi).norm();
                let want = split_gain(m, m_e, delta);
                assert!(
                    (g - want).abs() < 1e-9 * want.max(1.0),
                    "m_e={m_e} delta={delta}: {g} vs {want}"
                );
            }
        }
    }

    #[test]
    fn split_gain_limits_and_bound() {
        let m = 60;
        assert!((split_gain(m, 25, 0.0) - m as f64).abs() < 1e-9);
        let mut rng = stream_rng(17, &[]);
        for _ in 0..200 {
            let m_e = (rng.next_u64() % 61) as usize;
            let d = 2.0 * uniform(&mut rng);
            let g = split_gain(m, m_e, d);
            assert!(g <= m as f64 + 1e-9);
            let kernel = crate::array::beam_kernel(m_e.max(1), d);
            let dev = (g - (m - m_e) as f64).abs();
            if m_e > 0 {
                assert!(dev <= kernel + 1e-9, "m_e={m_e} d={d}");
            }
        }
    }

    #[test]
    fn split_group_roles_are_interchangeable_within_cross_kernel() {
        // leading with either group leaves each direction's gain inside the
        // same envelope: its own group size plus/minus the other group's
        // coherent-sum magnitude (the exact value shifts phase with ordering)
        let m = 48;
        let theta_iu_bar = 0.2;
        let theta_it_bar = 0.62;
        let delta = theta_it_bar - theta_iu_bar;
        for m_e in [12usize, 30] {
            let lead_sense = split_reflection(m_e, theta_iu_bar, theta_it_bar, m);
            let lead_user = split_reflection(m - m_e, theta_it_bar, theta_iu_bar, m);
            let a_u = steering(m, SpatialDirection::from_value(theta_iu_bar));
            let a_t = steering(m, SpatialDirection::from_value(theta_it_bar));
            for phi in [&lead_sense.phi, &lead_user.phi] {
                let g_t = inner(&a_t, phi).norm();
                let g_u = inner(&a_u, phi).norm();
                let cross_t = crate::array::beam_kernel(m - m_e, delta);
                let cross_u = crate::array::beam_kernel(m_e, delta);
                assert!((g_t - m_e as f64).abs() <= cross_t + 1e-9);
                assert!((g_u - (m - m_e) as f64).abs() <= cross_u + 1e-9);
            }
        }
    }

    #[test]
    fn allocation_edge_cases() {
        // no margin at all: nothing can be guaranteed, split degenerates
        assert_eq!(element_allocation(10.0, 10.0, 64, 64).unwrap(), 0);
        assert!(matches!(
            element_allocation(5.0, 10.0, 64, 64),
            Err(AllocationError::InsufficientMargin { .. })
        ));
        assert!(element_allocation(5.0, 0.0, 64, 64).is_err());
    }

    #[test]
    fn allocation_exact_vs_approximate() {
        // frozen from independent evaluation at gamma/gamma_ell = 1/4,
        // M = L = 64: the exact form gives 27, the approximation 32, and
        // only the exact form keeps the worst-case guarantee
        let exact = element_allocation(4.0, 1.0, 64, 64).unwrap();
        let approx = element_allocation_approx(4.0, 1.0, 64).unwrap();
        assert_eq!(exact, 27);
        assert_eq!(approx, 32);
        assert!(worst_case_user_snr(4.0, exact, 64, 64) >= 1.0);
        assert!(worst_case_user_snr(4.0, exact + 1, 64, 64) < 1.0);
        assert!(worst_case_user_snr(4.0, approx, 64, 64) < 1.0);
    }

    #[test]
    fn guarded_allocation_reserves_sidelobe_margin() {
        let (m, l) = (64usize, 64usize);
        let gamma = 39.557036737057352;
        let separation = 11.0 / m as f64 - 1.0 / l as f64;
        let sidelobe = 1.0 / libm::sin(PI * separation / 2.0);
        let mut rng = stream_rng(57, &[]);
        for _ in 0..200 {
            let gamma_ell = gamma * libm::pow(10.0, uniform(&mut rng) * 1.6);
            let plain = element_allocation(gamma_ell, gamma, m, l).unwrap();
            let guarded = element_allocation_interference_guarded(gamma_ell, gamma, m, l).unwrap();
            assert!(guarded <= plain);
            if guarded >= 1 {
                // even a fully destructive sidelobe keeps the worst case at
                // or above the target
                let remaining = crate::array::beam_kernel(m - guarded, 1.0 / l as f64);
                let worst = (remaining - sidelobe).max(0.0);
                assert!(
                    gamma_ell * worst * worst / ((m * m) as f64) >= gamma * (1.0 - 1e-12),
                    "gamma_ell={gamma_ell} guarded={guarded}"
                );
            }
        }
    }

    #[test]
    fn genie_allocation_limits_and_ordering() {
        // zero offset collapses to the small-argument form
        assert_eq!(
            element_allocation_genie(4.0, 1.0, 64, 0.0).unwrap(),
            element_allocation_approx(4.0, 1.0, 64).unwrap()
        );
        // the genie is never more pessimistic than the worst-case forms
        let mut rng = stream_rng(61, &[]);
        for _ in 0..100 {
            let gamma_ell = 40.0 * libm::pow(10.0, uniform(&mut rng) * 1.5);
            let delta = uniform(&mut rng) / 64.0;
            let genie = element_allocation_genie(gamma_ell, 40.0, 64, delta).unwrap();
            let plain = element_allocation(gamma_ell, 40.0, 64, 64).unwrap();
            let guarded = element_allocation_interference_guarded(gamma_ell, 40.0, 64, 64).unwrap();
            assert!(genie >= plain, "delta={delta}");
            assert!(plain >= guarded);
        }
        assert!(element_allocation_genie(1.0, 2.0, 64, 0.0).is_err());
    }

    #[test]
    fn decision_policies_share_everything_but_allocation() {
        let sc = defaults();
        let gamma = snr_threshold_for_rate(&sc);
        let theta_hat = sc.theta_bi().value + 0.866 + 0.5;
        let worst = decide_strategy(theta_hat, 0.866, 10.0 * gamma, &sc);
        let genie = decide_strategy_with(
            theta_hat,
            0.866,
            10.0 * gamma,
            &sc,
            AllocationPolicy::GenieOffset { delta_u: 0.0 },
        );
        assert_eq!(worst.kind, StrategyKind::BeamSplit);
        assert_eq!(genie.kind, StrategyKind::BeamSplit);
        assert!(genie.m_e >= worst.m_e);
        assert_eq!(worst.eta_ell, genie.eta_ell);
        assert_eq!(worst.delta_ut, genie.delta_ut);
    }

    #[test]
    fn allocation_monotone_in_target() {
        let mut prev = usize::MAX;
        let mut g = 0.05;
        while g <= 1.0 {
            let me = element_allocation(100.0, 100.0 * g, 64, 64).unwrap();
            assert!(me <= prev);
            prev = me;
            g += 0.05;
        }
    }

    #[test]
    fn allocation_guarantee_over_random_margins() {
        let mut rng = stream_rng(23, &[]);
        for _ in 0..200 {
            let gamma = 39.557036737057352;
            let gamma_ell = gamma * (1.01 + 37.0 * uniform(&mut rng));
            let me = element_allocation(gamma_ell, gamma, 64, 64).unwrap();
            if me >= 1 {
                assert!(
                    worst_case_user_snr(gamma_ell, me, 64, 64) >= gamma,
                    "me={me} gamma_ell={gamma_ell}"
                );
            }
        }
    }

    #[test]
    fn decision_regions_and_kinds() {
        let sc = defaults();
        let gamma = snr_threshold_for_rate(&sc);
        let theta_bi = sc.theta_bi().value;
        let eta = 0.866; // beam almost at the user
                         // estimate inside the served beam
        let d = decide_strategy(theta_bi + eta + 0.5 / 64.0, eta, 10.0 * gamma, &sc);
        assert_eq!(d.kind, StrategyKind::SingleBeam);
        assert_eq!(d.m_e, 0);
        // far target with margin
        let d = decide_strategy(theta_bi + eta + 0.5, eta, 10.0 * gamma, &sc);
        assert_eq!(d.kind, StrategyKind::BeamSplit);
        assert!(d.m_e >= 1 && d.m_e < sc.m_re());
        assert!(d.delta_ut > 11.0 / sc.m_re() as f64);
        // no margin at the boundary
        let d = decide_strategy(theta_bi + eta + 0.5, eta, gamma, &sc);
        assert_eq!(d.kind, StrategyKind::CommunicationOnly);
        assert_eq!(d.m_e, 0);
        // estimate indistinguishable from the BS direction
        let d = decide_strategy(theta_bi + 0.5 / sc.m_se() as f64, eta, 10.0 * gamma, &sc);
        assert_eq!(d.kind, StrategyKind::CommunicationOnly);
        // region sets are populated and inside (-90, 90)
        for (lo, hi) in d
            .regions
            .omega_u_deg
            .iter()
            .chain(d.regions.omega_t_deg.iter())
            .chain(d.regions.omega_e_deg.iter())
        {
            assert!(*lo >= -90.0 - 1e-9 && *hi <= 90.0 + 1e-9 && lo <= hi);
        }
    }

    #[test]
    fn decision_is_total_over_random_inputs() {
        let sc = defaults();
        let gamma = snr_threshold_for_rate(&sc);
        let mut rng = stream_rng(29, &[]);
        for _ in 0..200 {
            let theta_hat = 2.0 * uniform(&mut rng) - 1.0;
            let eta = -1.0 + (2.0 * ((rng.next_u64() % 64) as f64) + 1.0) / 64.0;
            let gamma_ell = gamma * libm::pow(10.0, 2.0 * uniform(&mut rng) - 1.0);
            let d = decide_strategy(theta_hat, eta, gamma_ell, &sc);
            if d.kind == StrategyKind::BeamSplit {
                assert!(d.delta_ut > 11.0 / sc.m_re() as f64);
                assert!(gamma_ell > gamma);
                assert!(d.m_e >= 1 && d.m_e < sc.m_re());
            } else {
                assert_eq!(d.m_e, 0);
            }
            assert_eq!(d.reflection.phi.len(), sc.m_re());
        }
    }

    #[test]
    fn data_phase_echo_matches_model_noiselessly() {
        let mut p = ScenarioParams::default();
        p.noise_power_w = 0.0;
        p.zeta_iu = 30.0; // beam on the target direction too
        p.zeta_it = 30.0;
        let sc = p.validate().unwrap();
        let ch = assemble_channels(&sc, path_gains(&sc));
        let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).unwrap();
        let ell = cb.nearest_beam(sc.theta_iu_bar().value);
        let d = decide_strategy(sc.theta_it().value, cb.directions[ell], f64::INFINITY, &sc);
        assert_eq!(d.kind, StrategyKind::SingleBeam);
        let rec = simulate_phase2(
            &sc,
            &ch,
            &d,
            &mut stream_rng(5, &[]),
            Phase2Options::default(),
        )
        .unwrap();
        // per-symbol echo energy: |c|^2 ||P a_s(theta_it)||^2 |q^H phi|^2
        let amp2 = sc.n_bs() as f64
            * sc.tx_power_w()
            * ch.gains.alpha_g.norm_sqr()
            * ch.gains.alpha_s.norm_sqr();
        let proj = CancellationProjector::new(sc.m_se(), sc.theta_bi());
        let a_se = steering(sc.m_se(), sc.theta_it());
        let residual = crate::linalg::norm2(&proj.apply(&a_se).unwrap());
        let a_t = steering(sc.m_re(), sc.theta_it_bar());
        let qphi2 = inner(&a_t, &d.reflection.phi).norm_sqr();
        let want = amp2 * residual * qphi2;
        for t in [0usize, 100, 935] {
            let got = crate::linalg::norm2(rec.echoes.col(t));
            assert!((got - want).abs() / want < 1e-9, "symbol {t}");
        }
        // on-beam target: |q^H phi|^2 is within the mainlobe peak window
        let m2 = (sc.m_re() * sc.m_re()) as f64;
        assert!(qphi2 > 0.4 * m2);
    }

    #[test]
    fn communication_only_echo_bounded_by_sidelobes() {
        let mut p = ScenarioParams::default();
        p.noise_power_w = 0.0;
        p.zeta_it = -20.0; // well outside the user beam
        let sc = p.validate().unwrap();
        let ch = assemble_channels(&sc, path_gains(&sc));
        let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).unwrap();
        let ell = cb.nearest_beam(sc.theta_iu_bar().value);
        let d = decide_strategy(sc.theta_it().value, cb.directions[ell], 1.0, &sc);
        assert_eq!(d.kind, StrategyKind::CommunicationOnly);
        let rec = simulate_phase2(
            &sc,
            &ch,
            &d,
            &mut stream_rng(6, &[]),
            Phase2Options::default(),
        )
        .unwrap();
        // sidelobe bound on the echo gain far from the beam
        let delta = wrap_abs(sc.theta_it_bar().value - d.eta_ell);
        let bound = 1.0 / sin(PI * delta / 2.0).abs();
        let amp2 = sc.n_bs() as f64
            * sc.tx_power_w()
            * ch.gains.alpha_g.norm_sqr()
            * ch.gains.alpha_s.norm_sqr();
        let cap = amp2 * sc.m_se() as f64 * bound * bound;
        let got = crate::linalg::norm2(rec.echoes.col(0));
        assert!(got <= cap);
    }

    #[test]
    fn data_phase_is_deterministic_and_unit_power() {
        let sc = defaults();
        let ch = assemble_channels(&sc, path_gains(&sc));
        let d = decide_strategy(sc.theta_it().value, 0.866, 1e4, &sc);
        let a = simulate_phase2(
            &sc,
            &ch,
            &d,
            &mut stream_rng(9, &[3]),
            Phase2Options::default(),
        )
        .unwrap();
        let b = simulate_phase2(
            &sc,
            &ch,
            &d,
            &mut stream_rng(9, &[3]),
            Phase2Options::default(),
        )
        .unwrap();
        assert_eq!(a.echoes, b.echoes);
        assert_eq!(a.transmitted, b.transmitted);
        // X2 X2^H = tau2 phi phi^H exactly for unit-modulus symbols
        let g = a.transmitted.mul_bh(&a.transmitted);
        let tau2 = sc.data_symbols() as f64;
        for i in 0..sc.m_re() {
            for j in 0..sc.m_re() {
                let want = d.reflection.phi[i] * d.reflection.phi[j].conj() * tau2;
                assert!((g.get(i, j) - want).norm() < 1e-6 * tau2);
            }
        }
    }

    #[test]
    fn any_decision_never_worsens_the_bound() {
        let sc = defaults();
        let crb1 = crb_phase1_closed(&sc);
        let gamma = snr_threshold_for_rate(&sc);
        let mut rng = stream_rng(41, &[]);
        for _ in 0..50 {
            let theta_hat = 2.0 * uniform(&mut rng) - 1.0;
            let eta = -1.0 + (2.0 * ((rng.next_u64() % 64) as f64) + 1.0) / 64.0;
            let d = decide_strategy(theta_hat, eta, gamma * 50.0, &sc);
            let (w, up) = crb_whole(&sc, &d.reflection.phi, sc.data_symbols());
            assert!(w <= up * (1.0 + 1e-12));
            assert!(up <= crb1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn beam_split_keeps_realized_rate_above_threshold() {
        let sc = defaults();
        let ch = assemble_channels(&sc, path_gains(&sc));
        let cb = Codebook::dft(sc.m_re(), sc.codebook_size()).unwrap();
        let ell = cb.nearest_beam(sc.theta_iu_bar().value);
        // a genuinely separated target with plenty of margin
        let d = decide_strategy(sc.theta_it().value, cb.directions[ell], 1535.0, &sc);
        assert_eq!(d.kind, StrategyKind::BeamSplit);
        let rec = simulate_phase2(
            &sc,
            &ch,
            &d,
            &mut stream_rng(13, &[]),
            Phase2Options::default(),
        )
        .unwrap();
        assert!(rec.user_rate >= sc.rate_threshold_bps_hz());
    }
}
