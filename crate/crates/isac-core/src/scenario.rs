//! System parameters, unit conversions, and scenario validation.
//!
//! All internal computation runs in linear units (watts, square meters);
//! decibel forms are accepted and produced only at the configuration/report
//! boundary. A [`Scenario`] is immutable once validated and safe to share
//! across parallel trials.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use libm::{asin, floor, log10, pow, sin};

/// Propagation speed used for wavelength and path-gain computation (m/s).
/// Pinned so that path gains are bit-reproducible across builds.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

const DEG: f64 = core::f64::consts::PI / 180.0;

/// Converts a power in dBm to linear watts.
pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    pow(10.0, (x_dbm - 30.0) / 10.0)
}

/// Converts a power in linear watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    30.0 + 10.0 * log10(w)
}

/// Converts a radar cross section in dBsm to square meters.
pub fn dbsm_to_sqm(x_dbsm: f64) -> f64 {
    pow(10.0, x_dbsm / 10.0)
}

/// Wraps a spatial direction onto the principal interval `[-1, 1)`.
///
/// Steering vectors are 2-periodic in the direction, so offsets such as
/// `theta_a - theta_b` are always reduced with this before kernel evaluation.
pub fn wrap_direction(x: f64) -> f64 {
    x - 2.0 * floor((x + 1.0) / 2.0)
}

/// Absolute wrapped direction offset, in `[0, 1]`.
pub fn wrap_abs(x: f64) -> f64 {
    let w = wrap_direction(x);
    w.abs()
}

/// Sine-of-angle coordinate used by all array expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialDirection {
    /// Dimensionless sine of a physical angle.
    pub value: f64,
    /// False for derived offsets that left `[-1, 1]` before wrapping.
    pub in_principal_range: bool,
}

impl SpatialDirection {
    /// Direction from a raw sine value; flags values outside `[-1, 1]`.
    pub fn from_value(value: f64) -> Self {
        Self {
            value,
            in_principal_range: value.abs() <= 1.0,
        }
    }

    /// Difference of two directions, kept unclamped.
    pub fn offset_from(self, reference: SpatialDirection) -> SpatialDirection {
        SpatialDirection::from_value(self.value - reference.value)
    }

    /// The physical angle in degrees of the wrapped direction.
    pub fn angle_deg(self) -> f64 {
        asin(wrap_direction(self.value)) / DEG
    }
}

/// Sine of a physical angle given in degrees; errors outside `(-90, 90)`.
pub fn spatial_direction(zeta_deg: f64) -> Result<SpatialDirection, ScenarioViolation> {
    if !zeta_deg.is_finite() || zeta_deg.abs() >= 90.0 {
        return Err(ScenarioViolation::AngleOutOfRange {
            name: "zeta",
            value_deg: zeta_deg,
        });
    }
    Ok(SpatialDirection {
        value: sin(zeta_deg * DEG),
        in_principal_range: true,
    })
}

/// One named invariant violation found during scenario validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioViolation {
    /// L < M: the sweep cannot excite every reflecting element orthogonally.
    CodebookSmallerThanReCount {
        l: usize,
        m: usize,
    },
    ZeroElements {
        name: &'static str,
    },
    /// tau >= T leaves no data-transmission symbols.
    NoDataSymbols {
        tau: usize,
        t: usize,
    },
    NoScanSymbols,
    NonPositive {
        name: &'static str,
        value: f64,
    },
    NegativeNoise {
        value: f64,
    },
    AngleOutOfRange {
        name: &'static str,
        value_deg: f64,
    },
    BetaOutOfRange {
        value: f64,
    },
    BsAodOutOfRange {
        value: f64,
    },
}

impl fmt::Display for ScenarioViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CodebookSmallerThanReCount { l, m } => {
                write!(f, "codebook smaller than RE count (L = {l} < M = {m})")
            }
            Self::ZeroElements { name } => write!(f, "{name} must be at least 1"),
            Self::NoDataSymbols { tau, t } => {
                write!(f, "no data-transmission symbols (tau = {tau} >= T = {t})")
            }
            Self::NoScanSymbols => write!(f, "no beam-scanning symbols (tau = 0)"),
            Self::NonPositive { name, value } => {
                write!(f, "{name} must be positive (got {value})")
            }
            Self::NegativeNoise { value } => {
                write!(f, "noise power must be non-negative (got {value})")
            }
            Self::AngleOutOfRange { name, value_deg } => {
                write!(f, "{name} must lie in (-90, 90) degrees (got {value_deg})")
            }
            Self::BetaOutOfRange { value } => {
                write!(f, "beta_ni must lie in (0, 1) (got {value})")
            }
            Self::BsAodOutOfRange { value } => {
                write!(
                    f,
                    "bs_aod must be a spatial direction in [-1, 1] (got {value})"
                )
            }
        }
    }
}

/// All violations found in one validation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioErrors(pub Vec<ScenarioViolation>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Raw, unchecked scenario parameters.
///
/// Field names follow the configuration-file schema. Powers are linear watts
/// and the cross section is linear square meters here; decibel conversion
/// happens in the config layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    /// BS antenna count N.
    pub n_bs: usize,
    /// Reflecting-element count M.
    pub m_re: usize,
    /// Sensing-element count M_s.
    pub m_se: usize,
    /// Codebook size L (>= M).
    pub codebook_size: usize,
    /// Coherence time T in symbol durations.
    pub coherence_symbols: usize,
    /// Beam-scanning duration tau in symbols (one symbol per beam).
    pub scan_symbols: usize,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// Transmit power in watts.
    pub tx_power_w: f64,
    /// Noise power in watts. Zero is allowed as a noiseless diagnostic mode.
    pub noise_power_w: f64,
    /// BS-surface distance in meters.
    pub d_bi: f64,
    /// Surface-user distance in meters.
    pub d_iu: f64,
    /// Surface-target distance in meters.
    pub d_it: f64,
    /// Physical BS angle at the surface, degrees.
    pub zeta_bi: f64,
    /// Physical user angle at the surface, degrees.
    pub zeta_iu: f64,
    /// Physical target angle at the surface, degrees.
    pub zeta_it: f64,
    /// Target radar cross section in square meters.
    pub rcs_sqm: f64,
    /// User rate threshold for data-phase decisions, bps/Hz.
    pub rate_threshold_bps_hz: f64,
    /// Empirical parameter of the no-information threshold.
    pub beta_ni: f64,
    /// Spatial departure direction at the BS. It cancels under matched
    /// transmit beamforming, so any value in [-1, 1] gives identical signals;
    /// kept configurable for the full-matrix sanity path.
    pub bs_aod: f64,
}

impl Default for ScenarioParams {
    /// Reference configuration: 28 GHz carrier, 64-antenna BS, 64 REs,
    /// 12 SEs, 64-beam codebook, 1000-symbol coherence block, 30 dBm transmit
    /// power, -120 dBm noise, 30/10/5 m geometry and -60/0/30 degree angles,
    /// 7 dBsm target cross section.
    fn default() -> Self {
        Self {
            n_bs: 64,
            m_re: 64,
            m_se: 12,
            codebook_size: 64,
            coherence_symbols: 1000,
            scan_symbols: 64,
            carrier_hz: 28.0e9,
            tx_power_w: dbm_to_watts(30.0),
            noise_power_w: dbm_to_watts(-120.0),
            d_bi: 30.0,
            d_iu: 10.0,
            d_it: 5.0,
            zeta_bi: -60.0,
            zeta_iu: 0.0,
            zeta_it: 30.0,
            rcs_sqm: dbsm_to_sqm(7.0),
            rate_threshold_bps_hz: 5.0,
            beta_ni: 8.0 / 9.0,
            bs_aod: 0.2,
        }
    }
}

impl ScenarioParams {
    /// Checks every invariant and returns the validated scenario, or the
    /// complete list of violations.
    pub fn validate(self) -> Result<Scenario, ScenarioErrors> {
        let mut errs = Vec::new();
        if self.n_bs < 1 {
            errs.push(ScenarioViolation::ZeroElements { name: "n_bs" });
        }
        if self.m_re < 1 {
            errs.push(ScenarioViolation::ZeroElements { name: "m_re" });
        }
        if self.m_se < 1 {
            errs.push(ScenarioViolation::ZeroElements { name: "m_se" });
        }
        if self.codebook_size < self.m_re {
            errs.push(ScenarioViolation::CodebookSmallerThanReCount {
                l: self.codebook_size,
                m: self.m_re,
            });
        }
        if self.scan_symbols == 0 {
            errs.push(ScenarioViolation::NoScanSymbols);
        } else if self.scan_symbols >= self.coherence_symbols {
            errs.push(ScenarioViolation::NoDataSymbols {
                tau: self.scan_symbols,
                t: self.coherence_symbols,
            });
        }
        for (name, value) in [
            ("carrier_hz", self.carrier_hz),
            ("tx_power_w", self.tx_power_w),
            ("d_bi", self.d_bi),
            ("d_iu", self.d_iu),
            ("d_it", self.d_it),
            ("rcs_sqm", self.rcs_sqm),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                errs.push(ScenarioViolation::NonPositive { name, value });
            }
        }
        if !(self.noise_power_w >= 0.0) || !self.noise_power_w.is_finite() {
            errs.push(ScenarioViolation::NegativeNoise {
                value: self.noise_power_w,
            });
        }
        for (name, deg) in [
            ("zeta_bi", self.zeta_bi),
            ("zeta_iu", self.zeta_iu),
            ("zeta_it", self.zeta_it),
        ] {
            if !deg.is_finite() || deg.abs() >= 90.0 {
                errs.push(ScenarioViolation::AngleOutOfRange {
                    name,
                    value_deg: deg,
                });
            }
        }
        if !(self.rate_threshold_bps_hz >= 0.0) {
            errs.push(ScenarioViolation::NonPositive {
                name: "rate_threshold_bps_hz",
                value: self.rate_threshold_bps_hz,
            });
        }
        if !(self.beta_ni > 0.0 && self.beta_ni < 1.0) {
            errs.push(ScenarioViolation::BetaOutOfRange {
                value: self.beta_ni,
            });
        }
        if !(self.bs_aod.abs() <= 1.0) {
            errs.push(ScenarioViolation::BsAodOutOfRange { value: self.bs_aod });
        }
        if errs.is_empty() {
            Ok(Scenario { p: self })
        } else {
            Err(ScenarioErrors(errs))
        }
    }

    /// Human-readable invariant report (one line per violation, or "valid").
    pub fn report(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        match self.clone().validate() {
            Ok(_) => out.push_str("valid"),
            Err(errs) => {
                let _ = write!(out, "{errs}");
            }
        }
        out
    }
}

/// A validated, immutable scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    p: ScenarioParams,
}

impl Scenario {
    pub fn params(&self) -> &ScenarioParams {
        &self.p
    }

    pub fn n_bs(&self) -> usize {
        self.p.n_bs
    }

    pub fn m_re(&self) -> usize {
        self.p.m_re
    }

    pub fn m_se(&self) -> usize {
        self.p.m_se
    }

    pub fn codebook_size(&self) -> usize {
        self.p.codebook_size
    }

    pub fn coherence_symbols(&self) -> usize {
        self.p.coherence_symbols
    }

    pub fn scan_symbols(&self) -> usize {
        self.p.scan_symbols
    }

    /// Data-transmission symbols T - tau.
    pub fn data_symbols(&self) -> usize {
        self.p.coherence_symbols - self.p.scan_symbols
    }

    pub fn tx_power_w(&self) -> f64 {
        self.p.tx_power_w
    }

    pub fn noise_power_w(&self) -> f64 {
        self.p.noise_power_w
    }

    pub fn rcs_sqm(&self) -> f64 {
        self.p.rcs_sqm
    }

    pub fn rate_threshold_bps_hz(&self) -> f64 {
        self.p.rate_threshold_bps_hz
    }

    pub fn beta_ni(&self) -> f64 {
        self.p.beta_ni
    }

    pub fn d_bi(&self) -> f64 {
        self.p.d_bi
    }

    pub fn d_iu(&self) -> f64 {
        self.p.d_iu
    }

    pub fn d_it(&self) -> f64 {
        self.p.d_it
    }

    pub fn bs_aod(&self) -> SpatialDirection {
        SpatialDirection::from_value(self.p.bs_aod)
    }

    /// Carrier wavelength in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.p.carrier_hz
    }

    /// Spatial direction of the BS as seen from the surface.
    pub fn theta_bi(&self) -> SpatialDirection {
        SpatialDirection::from_value(sin(self.p.zeta_bi * DEG))
    }

    /// Spatial direction of the user as seen from the surface.
    pub fn theta_iu(&self) -> SpatialDirection {
        SpatialDirection::from_value(sin(self.p.zeta_iu * DEG))
    }

    /// Spatial direction of the target as seen from the surface.
    pub fn theta_it(&self) -> SpatialDirection {
        SpatialDirection::from_value(sin(self.p.zeta_it * DEG))
    }

    /// User direction relative to the BS direction (may leave `[-1, 1]`).
    pub fn theta_iu_bar(&self) -> SpatialDirection {
        self.theta_iu().offset_from(self.theta_bi())
    }

    /// Target direction relative to the BS direction (may leave `[-1, 1]`).
    pub fn theta_it_bar(&self) -> SpatialDirection {
        self.theta_it().offset_from(self.theta_bi())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn dbm_conversions_by_definition() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < TOL);
        assert!((dbm_to_watts(0.0) - 1e-3).abs() / 1e-3 < TOL);
        assert!((dbm_to_watts(-120.0) - 1e-15).abs() / 1e-15 < TOL);
    }

    #[test]
    fn dbm_round_trip() {
        for x in [-174.0, -120.0, -30.5, 0.0, 12.345, 30.0, 46.0] {
            let back = watts_to_dbm(dbm_to_watts(x));
            assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
        for w in [1e-18, 1e-15, 2.5e-3, 1.0, 99.0] {
            let back = dbm_to_watts(watts_to_dbm(w));
            assert!((back - w).abs() / w < 1e-12);
        }
    }

    #[test]
    fn spatial_direction_values() {
        assert!((spatial_direction(0.0).unwrap().value - 0.0).abs() < TOL);
        assert!((spatial_direction(30.0).unwrap().value - 0.5).abs() < TOL);
        // sin(-60 deg) = -sqrt(3)/2, checked against an independent route
        let want = -(3.0f64.sqrt()) / 2.0;
        assert!((spatial_direction(-60.0).unwrap().value - want).abs() < 1e-12);
        assert!(spatial_direction(90.0).is_err());
        assert!(spatial_direction(-95.0).is_err());
    }

    #[test]
    fn spatial_direction_strictly_increasing() {
        let mut prev = spatial_direction(-89.9).unwrap().value;
        let mut z = -89.9 + 0.5;
        while z < 90.0 - 0.05 {
            let v = spatial_direction(z).unwrap().value;
            assert!(v > prev);
            prev = v;
            z += 0.5;
        }
    }

    #[test]
    fn wrap_direction_principal_interval() {
        assert!((wrap_direction(1.366) - (-0.634)).abs() < TOL);
        assert!((wrap_direction(-1.2) - 0.8).abs() < TOL);
        assert!((wrap_direction(0.25) - 0.25).abs() < TOL);
        assert!((wrap_direction(1.0) - (-1.0)).abs() < TOL);
        assert!((wrap_direction(-3.9) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn default_params_validate() {
        let sc = ScenarioParams::default()
            .validate()
            .expect("defaults valid");
        assert_eq!(sc.n_bs(), 64);
        assert!((sc.tx_power_w() - 1.0).abs() < TOL);
        assert!((sc.noise_power_w() - 1e-15).abs() / 1e-15 < TOL);
        assert!((sc.rcs_sqm() - dbsm_to_sqm(7.0)).abs() < TOL);
        assert!((sc.theta_bi().value + 0.866025403784438647).abs() < 1e-12);
    }

    #[test]
    fn small_codebook_is_named_violation() {
        let mut p = ScenarioParams::default();
        p.codebook_size = 32;
        let errs = p.validate().unwrap_err();
        assert!(errs
            .0
            .iter()
            .any(|e| matches!(e, ScenarioViolation::CodebookSmallerThanReCount { .. })));
        let text = alloc::format!("{errs}");
        assert!(text.contains("codebook smaller than RE count"));
    }

    #[test]
    fn scan_equal_to_coherence_is_named_violation() {
        let mut p = ScenarioParams::default();
        p.scan_symbols = p.coherence_symbols;
        let errs = p.validate().unwrap_err();
        assert!(errs
            .0
            .iter()
            .any(|e| matches!(e, ScenarioViolation::NoDataSymbols { .. })));
    }

    #[test]
    fn validation_is_idempotent() {
        let sc = ScenarioParams::default().validate().unwrap();
        let again = sc.params().clone().validate().unwrap();
        assert_eq!(sc, again);
    }

    #[test]
    fn multiple_violations_all_reported() {
        let mut p = ScenarioParams::default();
        p.codebook_size = 1;
        p.d_it = -5.0;
        p.zeta_it = 90.0;
        let errs = p.validate().unwrap_err();
        assert!(errs.0.len() >= 3);
    }
}
