//! Dressed-state parameterization of the driven atom.
//!
//! A strong laser of Rabi frequency `epsilon` and detuning `delta_a` dresses
//! the bare levels into `|1~>` and `|2~>`. The mixing is carried by
//! `cos2phi = cos^2(phi)`, and the photonic band gap enters only as on/off
//! flags on the three dressed emission lines (`omega_L`, `omega_-`, `omega_+`).

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// How the atom is driven.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// Resonant Rabi frequency and atom-laser detuning.
    Laser { epsilon: f64, delta_a: f64 },
    /// Direct pump parameter `cos^4(phi) = gamma_+ / gamma`.
    Pump { cos4phi: f64 },
}

/// Unit-step mode-density occupancies at the three dressed frequencies.
///
/// `true` means the line lies above the band edge and can radiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GapFlags {
    pub u_l: bool,
    pub u_minus: bool,
    pub u_plus: bool,
}

impl GapFlags {
    /// Every dressed line radiates (no band gap).
    pub const OPEN: GapFlags = GapFlags { u_l: true, u_minus: true, u_plus: true };
    /// The lasing line `omega_-` sits inside the gap; the other two radiate.
    pub const LASING_LINE_BLOCKED: GapFlags = GapFlags { u_l: true, u_minus: false, u_plus: true };
}

impl Default for GapFlags {
    fn default() -> Self {
        GapFlags::OPEN
    }
}

/// Bare physical inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Bare atomic spontaneous emission rate.
    pub gamma: f64,
    /// Cavity damping rate.
    pub kappa: f64,
    /// Atom-cavity coupling strength.
    pub g: f64,
    pub drive: Drive,
    pub gap: GapFlags,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be positive and finite"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter("kappa must be positive and finite"));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidParameter("g must be non-negative and finite"));
        }
        match self.drive {
            Drive::Pump { cos4phi } => {
                if !(0.0..=1.0).contains(&cos4phi) {
                    return Err(Error::InvalidParameter("cos4phi must lie in [0, 1]"));
                }
            }
            Drive::Laser { epsilon, delta_a } => {
                if !epsilon.is_finite() || !delta_a.is_finite() {
                    return Err(Error::InvalidParameter("drive parameters must be finite"));
                }
                if epsilon <= 0.0 {
                    return Err(Error::DegenerateDrive(epsilon));
                }
            }
        }
        Ok(())
    }
}

/// Mixing of the dressed states and the generalized Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixAngle {
    pub cos2phi: f64,
    /// `2 Omega = sqrt(4 epsilon^2 + delta_a^2)`.
    pub omega2: f64,
}

/// Mixing angle from the laser drive.
pub fn mix_angle(epsilon: f64, delta_a: f64) -> Result<MixAngle> {
    if !(epsilon > 0.0) {
        return Err(Error::DegenerateDrive(epsilon));
    }
    let omega2 = libm::hypot(2.0 * epsilon, delta_a);
    let cos2phi = (0.5 * (1.0 + delta_a / omega2)).clamp(0.0, 1.0);
    Ok(MixAngle { cos2phi, omega2 })
}

/// Rates between the dressed states, filtered by the band gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedRates {
    pub cos2phi: f64,
    /// `2 Omega`; `None` when the drive was given directly as `cos4phi`.
    pub omega2: Option<f64>,
    /// Emission at `omega_L` (acts as dephasing of the dressed coherence).
    pub gamma0: f64,
    /// Emission at `omega_+`: incoherent pump of the lasing transition.
    pub gamma_plus: f64,
    /// Emission at `omega_-`: spontaneous emission on the lasing transition.
    pub gamma_minus: f64,
    /// Effective coupling `g sin^2(phi)` of the cavity to the lasing transition.
    pub g1: f64,
}

impl DressedRates {
    /// Rates for a given mixing `cos2phi` in `[0, 1]`.
    pub fn from_mixing(gamma: f64, g: f64, cos2phi: f64, gap: GapFlags) -> DressedRates {
        let sin2phi = 1.0 - cos2phi;
        let sin2_2phi = 4.0 * cos2phi * sin2phi;
        let gate = |open: bool, rate: f64| if open { rate } else { 0.0 };
        DressedRates {
            cos2phi,
            omega2: None,
            gamma0: gate(gap.u_l, gamma * sin2_2phi),
            gamma_plus: gate(gap.u_plus, gamma * cos2phi * cos2phi),
            gamma_minus: gate(gap.u_minus, gamma * sin2phi * sin2phi),
            g1: g * sin2phi,
        }
    }

    pub fn sin2phi(&self) -> f64 {
        1.0 - self.cos2phi
    }

    /// Pump-to-loss ratio `gamma_+ / (2 kappa)`.
    pub fn alpha(&self, kappa: f64) -> f64 {
        self.gamma_plus / (2.0 * kappa)
    }

    /// Total decay rate of the dressed coherence entering the ladder
    /// equations: `(4 gamma0 + gamma_+ + gamma_-) / 2`.
    pub fn coherence_decay(&self) -> f64 {
        0.5 * (4.0 * self.gamma0 + self.gamma_plus + self.gamma_minus)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.gamma0, self.gamma_plus, self.gamma_minus, self.g1];
        if all.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter("dressed rates must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.cos2phi) {
            return Err(Error::InvalidParameter("cos2phi must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Dressed rates for a full parameter set.
pub fn dressed_rates(params: &SystemParams) -> Result<DressedRates> {
    params.validate()?;
    let (cos2phi, omega2) = match params.drive {
        Drive::Pump { cos4phi } => (libm::sqrt(cos4phi), None),
        Drive::Laser { epsilon, delta_a } => {
            let mix = mix_angle(epsilon, delta_a)?;
            (mix.cos2phi, Some(mix.omega2))
        }
    };
    let mut rates = DressedRates::from_mixing(params.gamma, params.g, cos2phi, params.gap);
    rates.omega2 = omega2;
    Ok(rates)
}

/// The two band-gap configurations compared in a pump sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GapConfig {
    /// Spontaneous emission present on the lasing transition (`u_minus = 1`).
    NoGap,
    /// Lasing transition inside the gap (`u_minus = 0`).
    FullGap,
}

impl GapConfig {
    pub const BOTH: [GapConfig; 2] = [GapConfig::NoGap, GapConfig::FullGap];

    pub fn label(self) -> &'static str {
        match self {
            GapConfig::NoGap => "no_gap",
            GapConfig::FullGap => "full_gap",
        }
    }

    /// Apply to a base set of flags; only `u_minus` is touched.
    pub fn apply(self, base: GapFlags) -> GapFlags {
        GapFlags { u_minus: self == GapConfig::NoGap, ..base }
    }
}

/// One point of a pump sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Position on the `cos4phi` grid.
    pub index: usize,
    pub cos4phi: f64,
    pub config: GapConfig,
    pub params: SystemParams,
}

/// Uniform grid in `cos4phi`; every value appears once per [`GapConfig`],
/// ordered by grid index and then configuration.
pub fn pump_sweep_grid(
    n_points: usize,
    lo: f64,
    hi: f64,
    base: &SystemParams,
) -> Result<Vec<SweepPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidGrid("a sweep needs at least two points"));
    }
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidGrid("sweep range must satisfy 0 <= lo < hi <= 1"));
    }
    let last = (n_points - 1) as f64;
    let mut out = Vec::with_capacity(2 * n_points);
    for index in 0..n_points {
        let cos4phi = if index == n_points - 1 {
            hi
        } else {
            lo + (hi - lo) * (index as f64) / last
        };
        for config in GapConfig::BOTH {
            let params = SystemParams {
                drive: Drive::Pump { cos4phi },
                gap: config.apply(base.gap),
                ..*base
            };
            out.push(SweepPoint { index, cos4phi, config, params });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pump(cos4phi: f64, gap: GapFlags) -> SystemParams {
        SystemParams { gamma: 1.0, kappa: 1e-3, g: 10.0, drive: Drive::Pump { cos4phi }, gap }
    }

    #[test]
    fn mix_angle_on_resonance() {
        let m = mix_angle(1.0, 0.0).unwrap();
        assert_eq!(m.cos2phi, 0.5);
        assert_eq!(m.omega2, 2.0);
    }

    #[test]
    fn mix_angle_detuned() {
        let m = mix_angle(1.0, 10.0).unwrap();
        assert_relative_eq!(m.omega2, 104f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(m.omega2, 10.19804, max_relative = 1e-6);
        assert_relative_eq!(m.cos2phi, 0.99029, epsilon = 5e-6);
        let m = mix_angle(1.0, -10.0).unwrap();
        assert_relative_eq!(m.cos2phi, 0.00971, epsilon = 5e-6);
    }

    #[test]
    fn zero_drive_is_degenerate() {
        assert_eq!(mix_angle(0.0, 1.0), Err(Error::DegenerateDrive(0.0)));
        assert!(mix_angle(-1.0, 1.0).is_err());
        let p = SystemParams { drive: Drive::Laser { epsilon: 0.0, delta_a: 3.0 }, ..pump(0.1, GapFlags::OPEN) };
        assert!(matches!(dressed_rates(&p), Err(Error::DegenerateDrive(_))));
    }

    #[test]
    fn rates_at_quarter_mixing() {
        let r = DressedRates::from_mixing(1.0, 10.0, 0.5, GapFlags::OPEN);
        assert_eq!((r.gamma0, r.gamma_plus, r.gamma_minus, r.g1), (1.0, 0.25, 0.25, 5.0));
        let blocked = DressedRates::from_mixing(1.0, 10.0, 0.5, GapFlags::LASING_LINE_BLOCKED);
        assert_eq!(blocked.gamma_minus, 0.0);
        assert_eq!(blocked.gamma0.to_bits(), r.gamma0.to_bits());
        assert_eq!(blocked.gamma_plus.to_bits(), r.gamma_plus.to_bits());
        assert_eq!(blocked.g1.to_bits(), r.g1.to_bits());
    }

    #[test]
    fn rates_at_cos2phi_0_3() {
        let r = DressedRates::from_mixing(1.0, 10.0, 0.3, GapFlags::LASING_LINE_BLOCKED);
        assert_relative_eq!(r.gamma0, 0.84, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_plus, 0.09, max_relative = 1e-14);
        assert_eq!(r.gamma_minus, 0.0);
        assert_relative_eq!(r.g1, 7.0, max_relative = 1e-14);
        // Same point reached through the pump parameter.
        let via_pump = dressed_rates(&pump(0.09, GapFlags::LASING_LINE_BLOCKED)).unwrap();
        assert_relative_eq!(via_pump.gamma0, 0.84, max_relative = 1e-12);
        assert_relative_eq!(via_pump.g1, 7.0, max_relative = 1e-12);
    }

    #[test]
    fn laser_drive_keeps_rabi_frequency() {
        let p = SystemParams { drive: Drive::Laser { epsilon: 1.0, delta_a: -10.0 }, g: 20.0, kappa: 0.05, ..pump(0.0, GapFlags::LASING_LINE_BLOCKED) };
        let r = dressed_rates(&p).unwrap();
        assert_relative_eq!(r.omega2.unwrap(), 104f64.sqrt());
        assert_relative_eq!(r.g1, 19.8058, epsilon = 1e-4);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(pump(1.2, GapFlags::OPEN).validate().is_err());
        assert!(SystemParams { kappa: 0.0, ..pump(0.5, GapFlags::OPEN) }.validate().is_err());
        assert!(SystemParams { gamma: -1.0, ..pump(0.5, GapFlags::OPEN) }.validate().is_err());
        assert!(SystemParams { g: -1.0, ..pump(0.5, GapFlags::OPEN) }.validate().is_err());
    }

    #[test]
    fn threshold_balance() {
        let r = dressed_rates(&pump(0.25, GapFlags::OPEN)).unwrap();
        assert_relative_eq!(r.gamma_plus, r.gamma_minus, max_relative = 1e-15);
    }

    #[test]
    fn sweep_grid_layout() {
        let base = pump(0.0, GapFlags::OPEN);
        let grid = pump_sweep_grid(3, 0.0, 1.0, &base).unwrap();
        let values: Vec<f64> = grid.iter().step_by(2).map(|p| p.cos4phi).collect();
        assert_eq!(values, [0.0, 0.5, 1.0]);
        assert_eq!(grid.len(), 6);
        for pair in grid.chunks(2) {
            assert_eq!(pair[0].index, pair[1].index);
            assert_eq!(pair[0].config, GapConfig::NoGap);
            assert!(pair[0].params.gap.u_minus);
            assert_eq!(pair[1].config, GapConfig::FullGap);
            assert!(!pair[1].params.gap.u_minus);
        }
        let grid = pump_sweep_grid(101, 0.0, 1.0, &base).unwrap();
        assert!(grid.iter().any(|p| p.cos4phi == 0.25));
        assert_eq!(grid.iter().filter(|p| p.cos4phi == 0.25).count(), 2);
        assert!(pump_sweep_grid(1, 0.0, 1.0, &base).is_err());
        assert!(pump_sweep_grid(5, 0.6, 0.2, &base).is_err());
        assert!(pump_sweep_grid(5, 0.0, 1.5, &base).is_err());
    }

    proptest! {
        #[test]
        fn mixing_stays_in_unit_interval(eps in 1e-6f64..1e3, delta in -1e4f64..1e4) {
            let m = mix_angle(eps, delta).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.cos2phi));
            let r = DressedRates::from_mixing(1.0, 1.0, m.cos2phi, GapFlags::OPEN);
            prop_assert_eq!(r.sin2phi() + m.cos2phi, 1.0);
            prop_assert!(r.gamma0 >= 0.0 && r.gamma_plus >= 0.0 && r.gamma_minus >= 0.0);
            prop_assert!(r.g1 >= 0.0 && r.g1 <= 1.0);
        }

        #[test]
        fn mixing_is_monotone_in_detuning(eps in 1e-3f64..10.0, d in -100f64..100.0, step in 1e-3f64..10.0) {
            let lo = mix_angle(eps, d).unwrap().cos2phi;
            let hi = mix_angle(eps, d + step).unwrap().cos2phi;
            prop_assert!(hi >= lo);
        }

        #[test]
        fn gap_flags_gate_one_rate(c in 0f64..=1.0, g in 0f64..50.0) {
            let open = DressedRates::from_mixing(1.0, g, c, GapFlags::OPEN);
            for (flags, which) in [
                (GapFlags { u_l: false, ..GapFlags::OPEN }, 0),
                (GapFlags { u_minus: false, ..GapFlags::OPEN }, 1),
                (GapFlags { u_plus: false, ..GapFlags::OPEN }, 2),
            ] {
                let r = DressedRates::from_mixing(1.0, g, c, flags);
                let pairs = [(r.gamma0, open.gamma0), (r.gamma_minus, open.gamma_minus), (r.gamma_plus, open.gamma_plus)];
                for (k, (got, full)) in pairs.iter().enumerate() {
                    if k == which {
                        prop_assert_eq!(*got, 0.0);
                    } else {
                        prop_assert_eq!(got.to_bits(), full.to_bits());
                    }
                }
                prop_assert_eq!(r.g1.to_bits(), open.g1.to_bits());
            }
        }
    }

    #[test]
    fn detuning_limits() {
        assert!(mix_angle(1.0, 1e8).unwrap().cos2phi > 1.0 - 1e-12);
        assert!(mix_angle(1.0, -1e8).unwrap().cos2phi < 1e-12);
    }
}
