//! Stationary spectrum from a sampled correlation function.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liouvillian::{Correlation, DECAY_TARGET};

/// Peaks lower than this fraction of the maximum are ignored.
pub const PEAK_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Detuning from the lasing frequency.
    pub omega: Vec<f64>,
    /// Spectral density normalized to unit peak.
    pub s: Vec<f64>,
    /// Peak of the raw density; `s * scale` restores it.
    pub scale: f64,
    /// Full width at half the global maximum; `None` unless exactly one peak.
    pub fwhm: Option<f64>,
    pub peak_positions: Vec<f64>,
    /// Width of each peak at half its own height; `None` where the
    /// half-height crossing falls off the grid.
    pub peak_widths: Vec<Option<f64>>,
}

impl SpectrumResult {
    pub fn raw(&self) -> Vec<f64> {
        self.s.iter().map(|v| v * self.scale).collect()
    }

    /// `sum S d omega / 2 pi` by the trapezoid rule on the raw density.
    pub fn integrated(&self) -> f64 {
        let raw = self.raw();
        let mut acc = 0.0;
        for i in 1..self.omega.len() {
            acc += 0.5 * (raw[i] + raw[i - 1]) * (self.omega[i] - self.omega[i - 1]);
        }
        acc / (2.0 * core::f64::consts::PI)
    }
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 3 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidGrid("need at least 3 points on a finite, increasing range"));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|k| if k + 1 == points { hi } else { lo + step * k as f64 }).collect())
}

/// `[-1.5 g, 1.5 g]` with 4001 points, for the vacuum Rabi doublet.
pub fn doublet_grid(g: f64) -> Result<Vec<f64>> {
    uniform_grid(-1.5 * g, 1.5 * g, 4001)
}

/// `[-20 kappa, 20 kappa]` with 4001 points, for the narrow lasing line.
pub fn narrow_grid(kappa: f64) -> Result<Vec<f64>> {
    uniform_grid(-20.0 * kappa, 20.0 * kappa, 4001)
}

/// `2 Re sum_k w_k e^{i omega tau_k} g_k dtau` with trapezoid weights.
pub fn half_line_transform(g: &[Complex64], dtau: f64, omega: &[f64]) -> Vec<f64> {
    let last = g.len().saturating_sub(1);
    omega
        .iter()
        .map(|&w| {
            let (s, c) = libm::sincos(w * dtau);
            let rot = Complex64::new(c, s);
            let mut phase = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, gk) in g.iter().enumerate() {
                let weight = if k == 0 || k == last { 0.5 } else { 1.0 };
                acc += phase * gk * weight;
                phase *= rot;
                // Renormalize to stop the rotation drifting off the unit circle.
                if k % 1024 == 1023 {
                    phase /= phase.norm();
                }
            }
            2.0 * acc.re * dtau
        })
        .collect()
}

/// Transform `corr` onto `omega` and extract peaks.
///
/// Fails with [`Error::InsufficientDecay`] when `|g(T)| / |g(0)|` exceeds
/// the decay target, unless `allow_undecayed` is set.
pub fn spectrum(corr: &Correlation, omega: &[f64], allow_undecayed: bool) -> Result<SpectrumResult> {
    let ratio = corr.decay_ratio();
    if ratio > DECAY_TARGET && !allow_undecayed {
        return Err(Error::InsufficientDecay { ratio });
    }
    let raw = half_line_transform(&corr.g, corr.dtau, omega);
    analyze(omega, &raw)
}

/// Normalize a sampled spectrum and locate its peaks and widths.
pub fn analyze(omega: &[f64], raw: &[f64]) -> Result<SpectrumResult> {
    if omega.len() != raw.len() || omega.len() < 3 {
        return Err(Error::InvalidGrid("omega and s must match and have at least 3 points"));
    }
    if omega.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("omega must be strictly increasing"));
    }
    let scale = raw.iter().cloned().fold(0.0, f64::max);
    let s: Vec<f64> = if scale > 0.0 { raw.iter().map(|v| v / scale).collect() } else { raw.to_vec() };
    let mut peak_positions = Vec::new();
    let mut peak_widths = Vec::new();
    if scale > 0.0 {
        for i in 1..s.len() - 1 {
            if s[i] >= PEAK_FLOOR && s[i] >= s[i - 1] && s[i] > s[i + 1] {
                let denom = s[i - 1] - 2.0 * s[i] + s[i + 1];
                let delta = if denom < 0.0 { 0.5 * (s[i - 1] - s[i + 1]) / denom } else { 0.0 };
                let step = if delta >= 0.0 { omega[i + 1] - omega[i] } else { omega[i] - omega[i - 1] };
                peak_positions.push(omega[i] + delta * step);
                peak_widths.push(width_at(omega, &s, i, 0.5 * s[i]));
            }
        }
    }
    let fwhm = if peak_positions.len() == 1 {
        let top = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        width_at(omega, &s, top, 0.5)
    } else {
        None
    };
    Ok(SpectrumResult { omega: omega.to_vec(), s, scale, fwhm, peak_positions, peak_widths })
}

fn width_at(omega: &[f64], s: &[f64], top: usize, level: f64) -> Option<f64> {
    let cross = |a: usize, b: usize| omega[a] + (level - s[a]) * (omega[b] - omega[a]) / (s[b] - s[a]);
    let mut left = None;
    for i in (0..top).rev() {
        if s[i] < level {
            left = Some(cross(i, i + 1));
            break;
        }
    }
    let mut right = None;
    for i in top + 1..s.len() {
        if s[i] < level {
            right = Some(cross(i - 1, i));
            break;
        }
    }
    Some(right? - left?)
}
