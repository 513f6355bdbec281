//! Laplace-transformed quantum transport on the network.
//!
//! A wave packet localized at node `j` evolves under `exp(-iHt)`; its Laplace
//! transform at damping `s` is `(s + iH)^{-1} e_j`, evaluated here as the
//! spectral sum `sum_n psi_n(i) psi_n(j) / (s + i E_n)`. The arguments of
//! the resulting amplitudes are nearly constant within a cluster and jump
//! between clusters.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::spectral::GapReport;

/// Amplitudes below this magnitude are recomputed with compensated summation.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

/// Which spectral gap sets the Laplace parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SRule {
    /// `s = multiplier * (E_1 - E_0)`.
    FirstGap,
    /// `s = multiplier * (E_{q-1} - E_0) / (q - 1)`.
    AvgGap,
    /// `s = multiplier`.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    pub rule: SRule,
    pub multiplier: f64,
}

impl Default for LaplaceParams {
    fn default() -> Self {
        Self {
            rule: SRule::AvgGap,
            multiplier: 1.2,
        }
    }
}

pub fn select_s(gaps: &GapReport, params: &LaplaceParams) -> Result<f64> {
    if !(params.multiplier > 0.0 && params.multiplier.is_finite()) {
        return Err(QtcError::Parameter(format!(
            "s multiplier must be > 0, got {}",
            params.multiplier
        )));
    }
    let gap = match params.rule {
        SRule::Explicit => return Ok(params.multiplier),
        SRule::FirstGap => gaps.first_gap,
        SRule::AvgGap => gaps.avg_gap,
    };
    if !gap.is_finite() {
        return Err(QtcError::Parameter(format!("non-finite gap {gap}")));
    }
    if gap <= 0.0 {
        return Err(QtcError::Degenerate(
            "selected spectral gap is zero (graph is disconnected at this scale); \
             pass an explicit s or increase eps"
                .into(),
        ));
    }
    Ok(params.multiplier * gap)
}

/// Laplace-transformed wave function for one initialization node.
#[derive(Debug, Clone)]
pub struct WavePhaseField {
    pub init_node: usize,
    pub s: f64,
    pub amplitudes: Vec<Complex<f64>>,
    pub phases: Vec<f64>,
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Spectral weights `1 / (s + i E_n)`.
pub(crate) fn resolvent_weights(energies: &[f64], s: f64) -> Vec<Complex<f64>> {
    energies
        .iter()
        .map(|&e| Complex::new(1.0, 0.0) / Complex::new(s, e))
        .collect()
}

fn compensated_amplitude(
    eig: &crate::spectral::EigenSystem,
    weights: &[Complex<f64>],
    i: usize,
    j: usize,
) -> Complex<f64> {
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for (n, w) in weights.iter().enumerate() {
        let c = eig.mode(n, i) * eig.mode(n, j);
        re.add(c * w.re);
        im.add(c * w.im);
    }
    Complex::new(re.value(), im.value())
}

/// `psi(i|j) = sum_n psi_n(i) psi_n(j) / (s + i E_n)` for every node `i`.
pub fn laplace_wavefunction(
    eig: &crate::spectral::EigenSystem,
    init_node: usize,
    s: f64,
) -> Result<WavePhaseField> {
    let m = eig.len();
    if init_node >= m {
        return Err(QtcError::Parameter(format!(
            "initialization node {init_node} out of range for {m} nodes"
        )));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(QtcError::Parameter(format!("s must be > 0, got {s}")));
    }
    let weights = resolvent_weights(eig.energies.as_slice(), s);
    // coefficient of mode n is psi_n(j) / (s + i E_n)
    let coeffs: Vec<Complex<f64>> = weights
        .iter()
        .enumerate()
        .map(|(n, w)| w * eig.mode(n, init_node))
        .collect();
    let mut amplitudes = vec![Complex::new(0.0, 0.0); m];
    for (n, c) in coeffs.iter().enumerate() {
        let col = eig.modes.column(n);
        for (a, &psi) in amplitudes.iter_mut().zip(col.iter()) {
            *a += c * psi;
        }
    }
    let mut underflow = 0usize;
    for (i, a) in amplitudes.iter_mut().enumerate() {
        if a.norm() < UNDERFLOW_THRESHOLD {
            *a = compensated_amplitude(eig, &weights, i, init_node);
            underflow += 1;
        }
    }
    if underflow > 0 {
        log::warn!(
            "{underflow} amplitude(s) below {UNDERFLOW_THRESHOLD:e} for init node {init_node}; \
             recomputed with compensated summation"
        );
    }
    let phases = phase_field(&amplitudes);
    Ok(WavePhaseField {
        init_node,
        s,
        amplitudes,
        phases,
    })
}

/// Argument of a complex number mapped into `(-pi, pi]`.
pub fn principal_arg(z: Complex<f64>) -> f64 {
    let theta = z.im.atan2(z.re);
    if theta <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        theta
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Phases of a set of amplitudes, in `(-pi, pi]`.
pub fn phase_field(amplitudes: &[Complex<f64>]) -> Vec<f64> {
    let tiny = amplitudes
        .iter()
        .filter(|a| a.norm() < UNDERFLOW_THRESHOLD)
        .count();
    if tiny > 0 {
        log::warn!("{tiny} amplitude(s) below {UNDERFLOW_THRESHOLD:e}; phases may be unreliable");
    }
    amplitudes.iter().map(|&a| principal_arg(a)).collect()
}
