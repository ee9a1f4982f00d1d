//! Complex path gains and the rank-one LoS channel blocks.
//!
//! Free-space one-way links carry gain `lambda / (4 pi d)` with phase
//! `exp(j 2 pi d / lambda)`; the element-target-element echo link carries
//! `sqrt(lambda^2 kappa / (64 pi^3 d^4))` with the round-trip phase
//! `exp(j 4 pi d / lambda)`. Every block is an outer product of steering
//! vectors, so a matched transmit beam collapses the BS dimension exactly;
//! the full-matrix synthesis here serves as the oracle for the reduced
//! signal path used in simulation.

use alloc::vec::Vec;
use libm::{cos, sin, sqrt};
use num_complex::Complex;

use crate::array::steering;
use crate::linalg::{CMat, C64};
use crate::scenario::Scenario;

const PI: f64 = core::f64::consts::PI;

/// Complex gains of the three propagation links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGains {
    /// BS to reflecting elements.
    pub alpha_g: C64,
    /// Reflecting elements to user.
    pub alpha_h: C64,
    /// Reflecting elements to target to sensing elements (round trip).
    pub alpha_s: C64,
}

fn one_way_gain(lambda: f64, d: f64) -> C64 {
    let mag = lambda / (4.0 * PI * d);
    let phase = 2.0 * PI * d / lambda;
    mag * Complex::new(cos(phase), sin(phase))
}

/// Path gains for a validated scenario.
pub fn path_gains(sc: &Scenario) -> PathGains {
    let lambda = sc.wavelength();
    let mag_s =
        sqrt(lambda * lambda * sc.rcs_sqm() / (64.0 * PI * PI * PI * libm::pow(sc.d_it(), 4.0)));
    let phase_s = 4.0 * PI * sc.d_it() / lambda;
    PathGains {
        alpha_g: one_way_gain(lambda, sc.d_bi()),
        alpha_h: one_way_gain(lambda, sc.d_iu()),
        alpha_s: mag_s * Complex::new(cos(phase_s), sin(phase_s)),
    }
}

/// The four channel blocks of the link, all rank one.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// BS to reflecting elements, `m_re x n_bs`.
    pub g: CMat,
    /// Reflecting elements to user, length `m_re`.
    pub h_u: Vec<C64>,
    /// BS to sensing elements, `m_se x n_bs`.
    pub g_s: CMat,
    /// Reflecting elements to target to sensing elements, `m_se x m_re`.
    pub h_t: CMat,
    pub gains: PathGains,
}

fn outer(scale: C64, left: &[C64], right: &[C64]) -> CMat {
    let mut out = CMat::zeros(left.len(), right.len());
    for j in 0..right.len() {
        let w = scale * right[j].conj();
        let col = out.col_mut(j);
        for (c, &l) in col.iter_mut().zip(left.iter()) {
            *c = l * w;
        }
    }
    out
}

/// Builds the channel blocks from steering outer products.
pub fn assemble_channels(sc: &Scenario, gains: PathGains) -> ChannelSet {
    let a_b = steering(sc.n_bs(), sc.bs_aod());
    let a_r_bi = steering(sc.m_re(), sc.theta_bi());
    let a_s_bi = steering(sc.m_se(), sc.theta_bi());
    let a_r_it = steering(sc.m_re(), sc.theta_it());
    let a_s_it = steering(sc.m_se(), sc.theta_it());
    let h_u = steering(sc.m_re(), sc.theta_iu())
        .iter()
        .map(|&a| gains.alpha_h * a)
        .collect();
    ChannelSet {
        g: outer(gains.alpha_g, &a_r_bi, &a_b),
        h_u,
        g_s: outer(gains.alpha_g, &a_s_bi, &a_b),
        h_t: outer(gains.alpha_s, &a_s_it, &a_r_it),
        gains,
    }
}

/// Target SNR `P_t |alpha_g|^2 |alpha_s|^2 / sigma^2`.
pub fn target_snr(sc: &Scenario, gains: PathGains) -> f64 {
    sc.tx_power_w() * gains.alpha_g.norm_sqr() * gains.alpha_s.norm_sqr() / sc.noise_power_w()
}

/// Matched transmit beam `a_b(bs_aod) / sqrt(N)`.
pub fn matched_beam(sc: &Scenario) -> Vec<C64> {
    let n = sc.n_bs();
    let s = 1.0 / sqrt(n as f64);
    steering(n, sc.bs_aod()).iter().map(|&a| a * s).collect()
}

/// Noise-free user sample via the full matrix products (test oracle):
/// `sqrt(P_t) h_u^H diag(phi) G w s`.
pub fn user_signal_full(sc: &Scenario, ch: &ChannelSet, phi: &[C64], s: C64) -> C64 {
    let w = matched_beam(sc);
    // gw = G w
    let mut gw = alloc::vec![C64::new(0.0, 0.0); sc.m_re()];
    for (j, &wj) in w.iter().enumerate() {
        for (g, &c) in gw.iter_mut().zip(ch.g.col(j).iter()) {
            *g += c * wj;
        }
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..sc.m_re() {
        acc += ch.h_u[i].conj() * phi[i] * gw[i];
    }
    sqrt(sc.tx_power_w()) * acc * s
}

/// Noise-free sensing-element snapshot via the full matrix products
/// (test oracle): `sqrt(P_t) (H_t diag(phi) G + G_s) w s`.
pub fn se_signal_full(sc: &Scenario, ch: &ChannelSet, phi: &[C64], s: C64) -> Vec<C64> {
    let w = matched_beam(sc);
    let mut gw = alloc::vec![C64::new(0.0, 0.0); sc.m_re()];
    for (j, &wj) in w.iter().enumerate() {
        for (g, &c) in gw.iter_mut().zip(ch.g.col(j).iter()) {
            *g += c * wj;
        }
    }
    let mut gsw = alloc::vec![C64::new(0.0, 0.0); sc.m_se()];
    for (j, &wj) in w.iter().enumerate() {
        for (g, &c) in gsw.iter_mut().zip(ch.g_s.col(j).iter()) {
            *g += c * wj;
        }
    }
    let amp = sqrt(sc.tx_power_w());
    let mut out = gsw;
    for (j, &g) in gw.iter().enumerate() {
        let w = phi[j] * g;
        for (o, &h) in out.iter_mut().zip(ch.h_t.col(j).iter()) {
            *o += h * w;
        }
    }
    for o in out.iter_mut() {
        *o *= amp * s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inner, norm2};
    use crate::scenario::ScenarioParams;
    use alloc::vec;

    fn defaults() -> Scenario {
        ScenarioParams::default().validate().unwrap()
    }

    #[test]
    fn gain_magnitudes() {
        let sc = defaults();
        let g = path_gains(&sc);
        // lambda / (4 pi d) with lambda = 2.998e8 / 28e9
        assert!((g.alpha_g.norm() - 2.84015785350894e-5).abs() / 2.84e-5 < 1e-9);
        assert!((g.alpha_h.norm() - 8.52047356052683e-5).abs() / 8.52e-5 < 1e-9);
        assert!((g.alpha_s.norm_sqr() - 4.63273634801165e-10).abs() / 4.63e-10 < 1e-9);
        // magnitudes against the defining formulas, independent route
        let lam = sc.wavelength();
        assert!((g.alpha_g.norm() - lam / (4.0 * PI * 30.0)).abs() < 1e-18);
        let want = lam * lam * sc.rcs_sqm() / (64.0 * PI.powi(3) * 5.0f64.powi(4));
        assert!((g.alpha_s.norm_sqr() - want).abs() / want < 1e-12);
    }

    #[test]
    fn echo_gain_inverse_fourth_power() {
        let mut p = ScenarioParams::default();
        let g1 = path_gains(&p.clone().validate().unwrap());
        p.d_it *= 2.0;
        let g2 = path_gains(&p.validate().unwrap());
        let ratio = g1.alpha_s.norm_sqr() / g2.alpha_s.norm_sqr();
        assert!((ratio - 16.0).abs() < 1e-9);
    }

    #[test]
    fn target_snr_value_and_scalings() {
        let sc = defaults();
        let g = path_gains(&sc);
        let rho = target_snr(&sc, g);
        assert!((rho - 3.73699521521109e-4).abs() / 3.737e-4 < 1e-9);

        let mut p = ScenarioParams::default();
        p.tx_power_w *= 10.0;
        let sc10 = p.validate().unwrap();
        assert!((target_snr(&sc10, path_gains(&sc10)) / rho - 10.0).abs() < 1e-9);

        let mut p = ScenarioParams::default();
        p.noise_power_w *= 2.0;
        let sc2 = p.validate().unwrap();
        assert!((target_snr(&sc2, path_gains(&sc2)) / rho - 0.5).abs() < 1e-9);
    }

    #[test]
    fn user_channel_norm() {
        let sc = defaults();
        let ch = assemble_channels(&sc, path_gains(&sc));
        let want = sc.m_re() as f64 * ch.gains.alpha_h.norm_sqr();
        assert!((norm2(&ch.h_u) - want).abs() / want < 1e-12);
    }

    #[test]
    fn matched_filter_collapses_bs_dimension() {
        // G (a_b / sqrt(N)) = sqrt(N) alpha_g a_r(theta_bi), for any bs_aod
        for aod in [0.2, -0.73] {
            let mut p = ScenarioParams::default();
            p.bs_aod = aod;
            let sc = p.validate().unwrap();
            let ch = assemble_channels(&sc, path_gains(&sc));
            let w = matched_beam(&sc);
            let mut gw = vec![C64::new(0.0, 0.0); sc.m_re()];
            for (j, &wj) in w.iter().enumerate() {
                for (g, &c) in gw.iter_mut().zip(ch.g.col(j).iter()) {
                    *g += c * wj;
                }
            }
            let a_r = steering(sc.m_re(), sc.theta_bi());
            let scale = (sc.n_bs() as f64).sqrt() * ch.gains.alpha_g;
            for (g, &a) in gw.iter().zip(a_r.iter()) {
                assert!((g - scale * a).norm() < 1e-12 * scale.norm());
            }
        }
    }

    #[test]
    fn echo_block_is_rank_one() {
        let sc = defaults();
        let ch = assemble_channels(&sc, path_gains(&sc));
        // every column of H_t is proportional to a_s(theta_it)
        let a_s = steering(sc.m_se(), sc.theta_it());
        for j in 0..sc.m_re() {
            let col = ch.h_t.col(j);
            let c = inner(&a_s, col) / sc.m_se() as f64;
            let mut resid = 0.0;
            for (x, &a) in col.iter().zip(a_s.iter()) {
                resid += (x - a * c).norm_sqr();
            }
            assert!(resid.sqrt() <= 1e-9 * norm2(col).sqrt().max(1e-30));
        }
        // row space direction: H_t^H column proportional to a_r(theta_it)
        let a_r = steering(sc.m_re(), sc.theta_it());
        let mut row0: Vec<C64> = (0..sc.m_re()).map(|j| ch.h_t.get(0, j).conj()).collect();
        let c = inner(&a_r, &row0) / sc.m_re() as f64;
        for (x, &a) in row0.iter_mut().zip(a_r.iter()) {
            *x -= a * c;
        }
        assert!(norm2(&row0).sqrt() < 1e-9 * ch.gains.alpha_s.norm() * (sc.m_re() as f64));
    }

    #[test]
    fn bs_se_block_column_space() {
        let sc = defaults();
        let ch = assemble_channels(&sc, path_gains(&sc));
        let a_s = steering(sc.m_se(), sc.theta_bi());
        for j in 0..sc.n_bs() {
            let col = ch.g_s.col(j);
            let c = inner(&a_s, col) / sc.m_se() as f64;
            let mut resid = 0.0;
            for (x, &a) in col.iter().zip(a_s.iter()) {
                resid += (x - a * c).norm_sqr();
            }
            assert!(resid.sqrt() <= 1e-9 * norm2(col).sqrt().max(1e-30));
        }
    }
}
