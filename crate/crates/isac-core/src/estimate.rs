//! Grid-search maximum-likelihood estimation of the target direction from
//! cancelled echo blocks, for the scanning phase alone or for both phases
//! combined.
//!
//! The concentrated objective at direction `theta` is
//!
//! ```text
//!   |a_s^H(theta) (Y X^H + Y2 X2^H) q(theta)|^2
//!   -------------------------------------------------------------
//!   ||P a_s(theta)||^2 (L M + tau2 |q^H(theta) phi|^2)
//! ```
//!
//! with `q(theta)` the reflecting-array response at the BS-relative offset
//! and `P` the direct-path cancellation projector. The numerator is the
//! matched-filter correlation of the stacked echoes; the denominator is the
//! exact energy of the cancelled signal model, whose `||P a_s||^2` factor
//! reduces to the constant `M_s` when the probed direction is far from the
//! BS. Keeping the exact factor makes the noiseless argmax land on the true
//! direction to machine precision instead of being biased by cancellation
//! leakage. The search wraps a uniform grid over `[-1, 1]` (half-step guard
//! at the ends, ties to the lowest direction) with bounded successive
//! parabolic refinement around the grid peak.

use alloc::vec::Vec;
use core::fmt;
use libm::sqrt;

use crate::array::{leakage_fraction, steering};
use crate::channel::path_gains;
use crate::linalg::{inner, sandwich, CMat, C64};
use crate::scan::Codebook;
use crate::scenario::{Scenario, SpatialDirection};

/// Search-grid and refinement settings.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Grid points per narrowest mainlobe half-width; the step is
    /// `2 / (oversample * max(M, M_s))`.
    pub oversample: usize,
    /// Run local refinement around the grid peak.
    pub refine: bool,
    /// Relative direction tolerance of the refinement.
    pub refine_tol: f64,
    pub max_refine_iters: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            oversample: 8,
            refine: true,
            refine_tol: 1e-10,
            max_refine_iters: 80,
        }
    }
}

/// Direction estimate with the concentrated echo-gain estimate.
#[derive(Debug, Clone)]
pub struct EstimationResult {
    /// Estimated spatial direction of the target, in `[-1, 1]`.
    pub theta_hat: f64,
    /// Estimated physical angle in degrees.
    pub zeta_hat_deg: f64,
    /// Closed-form echo-gain estimate at `theta_hat`.
    pub alpha_hat: C64,
    /// Objective value at `theta_hat`.
    pub objective_peak: f64,
    /// Grid argmax before refinement.
    pub grid_argmax: f64,
    /// Grid step used.
    pub grid_step: f64,
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimateError {
    /// Echo block carries no signal energy at all.
    NoSignalEnergy,
    DimensionMismatch {
        what: &'static str,
    },
}

impl fmt::Display for EstimateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoSignalEnergy => write!(f, "no signal energy in echo block"),
            Self::DimensionMismatch { what } => write!(f, "dimension mismatch: {what}"),
        }
    }
}

/// The concentrated objective over direction, with everything that does not
/// depend on `theta` folded into the correlation matrix `b = Y X^H (+ Y2 X2^H)`.
struct Objective<'a> {
    b: CMat,
    m: usize,
    m_s: usize,
    lm: f64,
    tau2: f64,
    phi: Option<&'a [C64]>,
    theta_bi: f64,
}

impl Objective<'_> {
    // unwrapped offset: steering is 2-periodic only up to a sign for even
    // element counts, and the gain estimate needs the physical phase
    fn q(&self, theta: f64) -> crate::array::SteeringVector {
        steering(self.m, SpatialDirection::from_value(theta - self.theta_bi))
    }

    /// `||P a_s(theta)||^2 / M_s = 1 - f(theta - theta_bi)`.
    fn residual_fraction(&self, theta: f64) -> f64 {
        1.0 - leakage_fraction(self.m_s, theta - self.theta_bi)
    }

    fn model_energy(&self, theta: f64, q: &[C64]) -> f64 {
        let mut energy = self.lm;
        if let Some(phi) = self.phi {
            let g = inner(q, phi).norm_sqr();
            energy += self.tau2 * g;
        }
        self.m_s as f64 * self.residual_fraction(theta) * energy
    }

    fn eval(&self, theta: f64) -> f64 {
        let resid = self.residual_fraction(theta);
        // directions indistinguishable from the cancelled BS path carry no
        // usable model energy
        if resid < 1e-9 {
            return 0.0;
        }
        let a_s = steering(self.m_s, SpatialDirection::from_value(theta));
        let q = self.q(theta);
        let num = sandwich(&a_s, &self.b, &q).norm_sqr();
        num / self.model_energy(theta, &q)
    }

    /// Matched-filter correlation (numerator before squaring) at `theta`.
    fn correlation(&self, theta: f64) -> C64 {
        let a_s = steering(self.m_s, SpatialDirection::from_value(theta));
        let q = self.q(theta);
        sandwich(&a_s, &self.b, &q)
    }
}

/// Bounded maximization by successive parabolic interpolation with
/// golden-section fallback, started from a known good interior point.
fn refine_peak(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    x0: f64,
    f0: f64,
    tol: f64,
    max_iters: usize,
) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let mut e: f64 = 0.0;
    let mut d: f64 = 0.0;
    for _ in 0..max_iters {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-14;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut take_golden = true;
        if e.abs() > tol1 {
            // parabola through (x, w, v)
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm > x { tol1 } else { -tol1 };
                }
                take_golden = false;
            }
        }
        if take_golden {
            e = if x < xm { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu > fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu > fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu > fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}

fn search(obj: &Objective, sc: &Scenario, cfg: &EstimatorConfig) -> EstimationResult {
    let step = 2.0 / (cfg.oversample.max(1) * obj.m.max(obj.m_s)) as f64;
    let n = (2.0 / step) as usize;
    // half-step guard at both ends avoids the +-1 wrap duplicate
    let mut best_theta = -1.0 + 0.5 * step;
    let mut best_val = obj.eval(best_theta);
    for i in 1..n {
        let theta = -1.0 + (i as f64 + 0.5) * step;
        if theta > 1.0 {
            break;
        }
        let val = obj.eval(theta);
        if val > best_val {
            best_val = val;
            best_theta = theta;
        }
    }
    let grid_argmax = best_theta;
    let (mut theta_hat, mut peak) = (best_theta, best_val);
    if cfg.refine {
        let lo = (best_theta - step).max(-1.0);
        let hi = (best_theta + step).min(1.0);
        let f = |t: f64| obj.eval(t);
        let (t, v) = refine_peak(
            &f,
            lo,
            hi,
            best_theta,
            best_val,
            cfg.refine_tol,
            cfg.max_refine_iters,
        );
        // refinement must never degrade the objective
        if v >= peak {
            theta_hat = t;
            peak = v;
        }
    }

    // concentrated gain estimate at the peak
    let gains = path_gains(sc);
    let amp = sqrt(sc.n_bs() as f64 * sc.tx_power_w()) * gains.alpha_g;
    let q = obj.q(theta_hat);
    let alpha_hat = obj.correlation(theta_hat) / (amp * obj.model_energy(theta_hat, &q));

    EstimationResult {
        theta_hat,
        zeta_hat_deg: SpatialDirection::from_value(theta_hat).angle_deg(),
        alpha_hat,
        objective_peak: peak,
        grid_argmax,
        grid_step: step,
        refined: cfg.refine,
    }
}

fn phase1_objective<'a>(
    y: &CMat,
    codebook: &Codebook,
    sc: &Scenario,
) -> Result<Objective<'a>, EstimateError> {
    if y.rows() != sc.m_se() {
        return Err(EstimateError::DimensionMismatch {
            what: "echo rows vs sensing elements",
        });
    }
    if y.cols() != codebook.len() {
        return Err(EstimateError::DimensionMismatch {
            what: "echo columns vs codebook size",
        });
    }
    if codebook.columns.rows() != sc.m_re() {
        return Err(EstimateError::DimensionMismatch {
            what: "codebook rows vs reflecting elements",
        });
    }
    Ok(Objective {
        b: y.mul_bh(&codebook.columns),
        m: sc.m_re(),
        m_s: sc.m_se(),
        lm: (codebook.len() * sc.m_re()) as f64,
        tau2: 0.0,
        phi: None,
        theta_bi: sc.theta_bi().value,
    })
}

/// ML direction estimate from the scanning-phase echo block.
pub fn mle_phase1(
    y: &CMat,
    codebook: &Codebook,
    sc: &Scenario,
    cfg: &EstimatorConfig,
) -> Result<EstimationResult, EstimateError> {
    let obj = phase1_objective(y, codebook, sc)?;
    if y.norm2() == 0.0 {
        return Err(EstimateError::NoSignalEnergy);
    }
    Ok(search(&obj, sc, cfg))
}

/// ML direction estimate combining scanning-phase and data-phase echoes.
///
/// `phi` is the reflection vector actually used in the data phase (also the
/// column pattern of `x2`). With zero data symbols this reduces exactly to
/// [`mle_phase1`].
pub fn mle_whole(
    y: &CMat,
    codebook: &Codebook,
    y2: &CMat,
    x2: &CMat,
    phi: &[C64],
    sc: &Scenario,
    cfg: &EstimatorConfig,
) -> Result<EstimationResult, EstimateError> {
    let tau2 = x2.cols();
    if tau2 == 0 {
        return mle_phase1(y, codebook, sc, cfg);
    }
    if y2.rows() != sc.m_se() || y2.cols() != tau2 {
        return Err(EstimateError::DimensionMismatch {
            what: "data-phase echo block shape",
        });
    }
    if x2.rows() != sc.m_re() || phi.len() != sc.m_re() {
        return Err(EstimateError::DimensionMismatch {
            what: "data-phase reflection length",
        });
    }
    let mut obj = phase1_objective(y, codebook, sc)?;
    if y.norm2() == 0.0 && y2.norm2() == 0.0 {
        return Err(EstimateError::NoSignalEnergy);
    }
    obj.b = obj.b.add(&y2.mul_bh(x2));
    obj.tau2 = tau2 as f64;
    obj.phi = Some(phi);
    Ok(search(&obj, sc, cfg))
}

/// Objective values of the scanning-phase estimator on a caller-supplied
/// direction grid (diagnostic; one `(theta, objective)` pair per input).
pub fn objective_trace(
    y: &CMat,
    codebook: &Codebook,
    sc: &Scenario,
    thetas: &[f64],
) -> Result<Vec<(f64, f64)>, EstimateError> {
    let obj = phase1_objective(y, codebook, sc)?;
    Ok(thetas.iter().map(|&t| (t, obj.eval(t))).collect())
}
