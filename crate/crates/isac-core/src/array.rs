//! ULA array responses, the beam-gain kernel, and direct-path cancellation.
//!
//! All arrays are uniform linear with half-wavelength spacing and the array
//! center as phase reference: element k of an m-element array contributes
//! phase `pi * theta * (k - (m-1)/2)` at spatial direction `theta`. With the
//! centered reference, `a^H(theta) da/dtheta(theta) = 0` holds exactly for
//! every direction, which the estimation bounds rely on.

use alloc::vec::Vec;
use core::fmt;
use libm::{cos, sin};
use num_complex::Complex;

use crate::linalg::{inner, C64};
use crate::scenario::{wrap_direction, SpatialDirection};

const PI: f64 = core::f64::consts::PI;

/// Unit-modulus array response of an m-element centered ULA.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub elements: Vec<C64>,
    pub theta: SpatialDirection,
}

impl SteeringVector {
    pub fn m(&self) -> usize {
        self.elements.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.elements
    }
}

impl core::ops::Deref for SteeringVector {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.elements
    }
}

/// Array response vector at spatial direction `theta`.
pub fn steering(m: usize, theta: SpatialDirection) -> SteeringVector {
    let center = (m as f64 - 1.0) / 2.0;
    let elements = (0..m)
        .map(|k| {
            let phase = PI * theta.value * (k as f64 - center);
            Complex::new(cos(phase), sin(phase))
        })
        .collect();
    SteeringVector { elements, theta }
}

/// Elementwise derivative of [`steering`] with respect to `theta`:
/// entry k is multiplied by `j * pi * (k - (m-1)/2)`.
pub fn steering_derivative(m: usize, theta: SpatialDirection) -> Vec<C64> {
    let center = (m as f64 - 1.0) / 2.0;
    steering(m, theta)
        .elements
        .into_iter()
        .enumerate()
        .map(|(k, a)| a * Complex::new(0.0, PI * (k as f64 - center)))
        .collect()
}

/// `||da/dtheta||^2 = pi^2 m (m^2 - 1) / 12`, independent of the direction.
pub fn steering_derivative_norm2(m: usize) -> f64 {
    let m = m as f64;
    PI * PI * m * (m * m - 1.0) / 12.0
}

/// Magnitude of the coherent sum of an m-element ULA across a direction
/// offset `delta`: `|sin(pi m d / 2) / sin(pi d / 2)|` on the wrapped offset,
/// with the removable singularity at even offsets evaluated by its limit `m`.
///
/// Values lie in `[0, m]`; zeros sit exactly at `d = 2k/m`, `k = 1..m-1`.
pub fn beam_kernel(m: usize, delta: f64) -> f64 {
    let d = wrap_direction(delta);
    let den = sin(PI * d / 2.0);
    if den.abs() < 1e-9 {
        return m as f64;
    }
    (sin(PI * m as f64 * d / 2.0) / den).abs()
}

/// Normalized power leakage between two directions of an m-element array:
/// `beam_kernel(m, delta)^2 / m^2`, in `[0, 1]`.
pub fn leakage_fraction(m: usize, delta: f64) -> f64 {
    let k = beam_kernel(m, delta) / m as f64;
    k * k
}

/// Snapshot length did not match the projector's element count.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthMismatch {
    pub expected: usize,
    pub got: usize,
}

impl fmt::Display for LengthMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "snapshot length {} does not match element count {}",
            self.got, self.expected
        )
    }
}

/// Orthogonal projector `I - a a^H / m` that removes the static direct-path
/// component along the BS direction from sensing-element snapshots.
#[derive(Debug, Clone)]
pub struct CancellationProjector {
    a_bs: SteeringVector,
}

impl CancellationProjector {
    pub fn new(m_se: usize, theta_bi: SpatialDirection) -> Self {
        Self {
            a_bs: steering(m_se, theta_bi),
        }
    }

    pub fn m_se(&self) -> usize {
        self.a_bs.m()
    }

    /// Projects one snapshot; the result is orthogonal to the BS steering
    /// vector. Idempotent and Hermitian.
    pub fn apply(&self, snapshot: &[C64]) -> Result<Vec<C64>, LengthMismatch> {
        if snapshot.len() != self.a_bs.m() {
            return Err(LengthMismatch {
                expected: self.a_bs.m(),
                got: snapshot.len(),
            });
        }
        let mut out = snapshot.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    pub fn apply_in_place(&self, snapshot: &mut [C64]) {
        debug_assert_eq!(snapshot.len(), self.a_bs.m());
        let coef = inner(&self.a_bs, snapshot) / self.a_bs.m() as f64;
        for (s, &a) in snapshot.iter_mut().zip(self.a_bs.iter()) {
            *s -= a * coef;
        }
    }
}

/// Convenience wrapper around [`CancellationProjector::apply`].
pub fn cancellation_project(
    snapshot: &[C64],
    theta_bi: SpatialDirection,
) -> Result<Vec<C64>, LengthMismatch> {
    CancellationProjector::new(snapshot.len(), theta_bi).apply(snapshot)
}
