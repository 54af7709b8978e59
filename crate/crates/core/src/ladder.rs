//! Photon-number ladder for the dressed-atom laser.
//!
//! The state at photon number `n` is the 4-vector
//!
//! - `P1[n] = <n| rho_22 + rho_11 |n>` (photon distribution),
//! - `P2[n] = <n| rho_22 - rho_11 |n>` (dressed population difference),
//! - `P3[n] = <n| (a^+ rho_12 + rho_21 a) / 2 |n>`,
//! - `P4[n] = <n| (a rho_21 + rho_12 a^+) / 2 |n>`,
//!
//! and the cavity couples only neighbouring `n`, so the generator is block
//! tridiagonal. A Fock cutoff at `N` forces `P3[0] = 0` (no photon to
//! remove) and `P4[N] = 0` (no photon `N + 1` to reach); those two components
//! are pinned and carry no dynamics.

use alloc::vec;
use alloc::vec::Vec;

use crate::block::{BlockTridiagonal, Vec4};
use crate::dressed::DressedRates;
use crate::error::{Error, Result};
use crate::specfun::{self, SeriesControl};

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
pub const DEFAULT_TRUNCATION_CAP: usize = 20_000;
pub const MIN_TRUNCATION: usize = 30;
/// Below this mean photon number the Fano factor is reported as undefined.
pub const MEAN_N_FLOOR: f64 = 1e-12;

const P1: usize = 0;
const P2: usize = 1;
const P3: usize = 2;
const P4: usize = 3;

/// Truncated photon-number representation of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonLadder {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    pub p4: Vec<f64>,
}

impl PhotonLadder {
    /// Vacuum with the atom in the lower lasing level `|2~>`.
    pub fn vacuum(n_max: usize) -> PhotonLadder {
        let mut s = PhotonLadder::zeros(n_max);
        s.p1[0] = 1.0;
        s.p2[0] = 1.0;
        s
    }

    pub fn zeros(n_max: usize) -> PhotonLadder {
        let len = n_max + 1;
        PhotonLadder { p1: vec![0.0; len], p2: vec![0.0; len], p3: vec![0.0; len], p4: vec![0.0; len] }
    }

    /// Fock cutoff `N`; indices run over `0..=N`.
    pub fn n_max(&self) -> usize {
        self.p1.len() - 1
    }

    pub fn trace(&self) -> f64 {
        self.p1.iter().sum()
    }

    pub fn tail(&self) -> f64 {
        self.p1[self.n_max()]
    }

    fn to_blocks(&self) -> Vec<Vec4> {
        (0..self.p1.len())
            .map(|n| [self.p1[n], self.p2[n], self.p3[n], self.p4[n]])
            .collect()
    }

    fn from_blocks(x: &[Vec4]) -> PhotonLadder {
        let mut s = PhotonLadder::zeros(x.len() - 1);
        for (n, v) in x.iter().enumerate() {
            s.p1[n] = v[P1];
            s.p2[n] = v[P2];
            s.p3[n] = v[P3];
            s.p4[n] = v[P4];
        }
        s
    }

    /// Steady-state residual of this state: `max |A x| / (||A||_inf max |x|)`
    /// over the pinned system.
    pub fn residual(&self, rates: &DressedRates, kappa: f64) -> f64 {
        let sys = stationary_system(rates, kappa, self.n_max());
        let x = self.to_blocks();
        let r = sys.mul_vec(&x);
        let worst = r.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        let size = x.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        let denom = sys.max_row_norm() * size;
        if denom == 0.0 {
            0.0
        } else {
            worst / denom
        }
    }

    /// Positivity `P1 >= -1e-10`, `|P2| <= P1 + 1e-10`, and unit trace within `1e-9`.
    pub fn satisfies_invariants(&self) -> bool {
        (self.trace() - 1.0).abs() <= 1e-9
            && self.p1.iter().all(|&p| p >= -1e-10)
            && self.p1.iter().zip(&self.p2).all(|(&p, &d)| d.abs() <= p + 1e-10)
    }
}

/// Generator of the ladder equations of motion, `d/dt x = A x`.
pub fn generator(rates: &DressedRates, kappa: f64, n_max: usize) -> BlockTridiagonal {
    let DressedRates { gamma_plus: gp, gamma_minus: gm, g1, .. } = *rates;
    let coh = 4.0 * rates.gamma0 + gp + gm;
    let mut sys = BlockTridiagonal::zeros(n_max + 1);
    for n in 0..=n_max {
        let nf = n as f64;
        let up = nf + 1.0;
        let top = n == n_max;
        let (sub, diag, sup) = (&mut sys.sub[n], &mut sys.diag[n], &mut sys.sup[n]);

        diag[P1][P1] = -kappa * nf;
        diag[P1][P3] = -2.0 * g1;
        diag[P1][P4] = 2.0 * g1;

        diag[P2][P2] = -(gp + gm + kappa * nf);
        diag[P2][P1] = -(gp - gm);
        diag[P2][P3] = -2.0 * g1;
        diag[P2][P4] = -2.0 * g1;

        if !top {
            sup[P1][P1] = kappa * up;
            sup[P2][P2] = kappa * up;
        }

        if n > 0 {
            let c = 0.5 * nf * g1;
            diag[P3][P3] = -0.5 * (coh + kappa * (2.0 * nf - 1.0));
            diag[P3][P1] = c;
            diag[P3][P2] = c;
            sub[P3][P1] = -c;
            sub[P3][P2] = c;
            diag[P3][P4] = -kappa;
            if !top {
                sup[P3][P3] = kappa * up;
            }
        }

        if !top {
            let c = 0.5 * up * g1;
            diag[P4][P4] = -0.5 * (coh + kappa * (2.0 * nf + 1.0));
            sup[P4][P1] = c;
            diag[P4][P1] = -c;
            sup[P4][P2] = c;
            diag[P4][P2] = c;
            sup[P4][P4] = kappa * up;
        }
    }
    sys
}

/// Generator with the pinned components turned into `x = 0` rows.
fn stationary_system(rates: &DressedRates, kappa: f64, n_max: usize) -> BlockTridiagonal {
    let mut sys = generator(rates, kappa, n_max);
    sys.diag[0][P3][P3] = 1.0;
    sys.diag[n_max][P4][P4] = 1.0;
    sys
}

fn check_inputs(rates: &DressedRates, kappa: f64, n_max: usize) -> Result<()> {
    rates.validate()?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter("kappa must be positive and finite"));
    }
    if n_max < 2 {
        return Err(Error::InvalidParameter("truncation N must be at least 2"));
    }
    Ok(())
}

/// Stationary ladder at cutoff `n_max`, normalized to `sum P1 = 1`.
///
/// Fails with [`Error::TruncationTooSmall`] when `P1[N] >= tail_tol`; pass
/// `f64::INFINITY` to accept any cutoff.
pub fn steady_state(
    rates: &DressedRates,
    kappa: f64,
    n_max: usize,
    tail_tol: f64,
) -> Result<PhotonLadder> {
    check_inputs(rates, kappa, n_max)?;
    let sys = stationary_system(rates, kappa, n_max);
    let x = solve_near_mode(&sys, rates, kappa)?;
    let trace: f64 = x.iter().map(|v| v[P1]).sum();
    if !(trace.abs() > 0.0) || !trace.is_finite() {
        return Err(Error::Singular);
    }
    let mut state = PhotonLadder::from_blocks(&x);
    state.p3[0] = 0.0;
    state.p4[n_max] = 0.0;
    for v in [&mut state.p1, &mut state.p2, &mut state.p3, &mut state.p4] {
        v.iter_mut().for_each(|p| *p /= trace);
    }
    let tail = state.tail();
    if !(tail < tail_tol) {
        return Err(Error::TruncationTooSmall { n: n_max, tail, suggested: 2 * n_max });
    }
    Ok(state)
}

fn above_threshold_mean(rates: &DressedRates, kappa: f64) -> f64 {
    ((rates.gamma_plus - rates.gamma_minus) / (2.0 * kappa)).max(0.0)
}

fn mode_of(x: &[Vec4]) -> usize {
    (0..x.len()).max_by(|&a, &b| x[a][P1].abs().total_cmp(&x[b][P1].abs())).unwrap_or(0)
}

/// Null vector with the block elimination meeting near the peak of `P1`.
///
/// The guess comes from the above-threshold mean; when the solved
/// distribution peaks elsewhere the system is solved again from that peak.
fn solve_near_mode(sys: &BlockTridiagonal, rates: &DressedRates, kappa: f64) -> Result<Vec<Vec4>> {
    let last = sys.blocks() - 1;
    let guess = (libm::round(above_threshold_mean(rates, kappa).min(last as f64))) as usize;
    let attempt = |pivot: usize| match sys.null_vector_from(pivot) {
        Err(Error::Singular) if pivot > 0 => sys.null_vector_from(0).map(|x| (x, 0)),
        other => other.map(|x| (x, pivot)),
    };
    let (x, used) = attempt(guess)?;
    let mode = mode_of(&x);
    let slack = 2.0 * libm::sqrt(mode as f64) + 2.0;
    if (mode as f64 - used as f64).abs() > slack {
        return attempt(mode).map(|(x, _)| x);
    }
    Ok(x)
}

/// Initial cutoff guess from the above-threshold photon number.
pub fn initial_truncation(rates: &DressedRates, kappa: f64) -> usize {
    let n_hat = above_threshold_mean(rates, kappa);
    let guess = libm::ceil(n_hat + 12.0 * libm::sqrt(n_hat + 1.0));
    if guess.is_finite() && guess < usize::MAX as f64 {
        (guess as usize).max(MIN_TRUNCATION)
    } else {
        usize::MAX
    }
}

/// Steady state at the smallest doubling of [`initial_truncation`] whose
/// tail `P1[N]` is below `tail_tol`.
pub fn steady_state_adaptive(
    rates: &DressedRates,
    kappa: f64,
    tail_tol: f64,
    cap: usize,
) -> Result<PhotonLadder> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidParameter("tail_tol must be positive"));
    }
    let mut n_max = initial_truncation(rates, kappa);
    loop {
        if n_max > cap {
            return Err(Error::TruncationCap { cap });
        }
        match steady_state(rates, kappa, n_max, tail_tol) {
            Err(Error::TruncationTooSmall { suggested, .. }) => n_max = suggested,
            other => return other,
        }
    }
}

/// Fock cutoff accepted by [`steady_state_adaptive`].
pub fn choose_truncation(rates: &DressedRates, kappa: f64, tail_tol: f64) -> Result<usize> {
    steady_state_adaptive(rates, kappa, tail_tol, DEFAULT_TRUNCATION_CAP).map(|s| s.n_max())
}

/// Largest rate in the ladder dynamics; `dt` times this must stay below 0.1.
pub fn fastest_rate(rates: &DressedRates, kappa: f64, n_max: usize) -> f64 {
    let nf = n_max as f64;
    let coh = 4.0 * rates.gamma0 + rates.gamma_plus + rates.gamma_minus;
    (kappa * nf).max(coh + 2.0 * kappa * nf).max(rates.g1 * libm::sqrt(nf))
}

/// Fixed-step RK4 integration of the ladder equations over `t_final`.
///
/// `tail_tol` bounds `P1[N]` along the trajectory.
pub fn evolve(
    state: &PhotonLadder,
    rates: &DressedRates,
    kappa: f64,
    dt: f64,
    t_final: f64,
    tail_tol: f64,
) -> Result<PhotonLadder> {
    let n_max = state.n_max();
    check_inputs(rates, kappa, n_max)?;
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParameter("dt must be positive and t_final non-negative"));
    }
    let limit = 0.1 / fastest_rate(rates, kappa, n_max);
    if dt > limit {
        return Err(Error::StepExceedsLimit { dt, limit });
    }
    let sys = generator(rates, kappa, n_max);
    let steps = libm::ceil(t_final / dt) as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };

    let mut x = state.to_blocks();
    x[0][P3] = 0.0;
    x[n_max][P4] = 0.0;
    let trace0: f64 = x.iter().map(|v| v[P1]).sum();
    let len = x.len();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![[0.0; 4]; len], vec![[0.0; 4]; len], vec![[0.0; 4]; len], vec![[0.0; 4]; len]);
    let mut tmp = vec![[0.0; 4]; len];
    let axpy = |out: &mut [Vec4], base: &[Vec4], k: &[Vec4], a: f64| {
        for ((o, b), d) in out.iter_mut().zip(base).zip(k) {
            for i in 0..4 {
                o[i] = b[i] + a * d[i];
            }
        }
    };
    for _ in 0..steps {
        sys.mul_vec_into(&x, &mut k1);
        axpy(&mut tmp, &x, &k1, 0.5 * h);
        sys.mul_vec_into(&tmp, &mut k2);
        axpy(&mut tmp, &x, &k2, 0.5 * h);
        sys.mul_vec_into(&tmp, &mut k3);
        axpy(&mut tmp, &x, &k3, h);
        sys.mul_vec_into(&tmp, &mut k4);
        for n in 0..len {
            for i in 0..4 {
                x[n][i] += h / 6.0 * (k1[n][i] + 2.0 * (k2[n][i] + k3[n][i]) + k4[n][i]);
            }
        }
        let tail = x[n_max][P1];
        if !tail.is_finite() {
            return Err(Error::StepTooLarge { drift: f64::INFINITY });
        }
        if tail >= tail_tol {
            return Err(Error::TruncationTooSmall { n: n_max, tail, suggested: 2 * n_max });
        }
    }
    let trace: f64 = x.iter().map(|v| v[P1]).sum();
    let drift = (trace - trace0).abs();
    if !(drift <= 1e-9 * t_final.max(1.0)) {
        return Err(Error::StepTooLarge { drift });
    }
    Ok(PhotonLadder::from_blocks(&x))
}

/// Moments of the photon distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldObservables {
    pub mean_n: f64,
    pub mean_n2: f64,
    /// `Var(n) / <n>`; `None` when `<n>` is below [`MEAN_N_FLOOR`].
    pub fano: Option<f64>,
    /// Mandel `Q = F - 1`; zero marks a Poissonian (coherent) field.
    pub q_mandel: Option<f64>,
}

/// Observables of a photon-number distribution `p[n]`.
pub fn distribution_observables(p: &[f64]) -> FieldObservables {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (n, &pn) in p.iter().enumerate() {
        let nf = n as f64;
        m1 += nf * pn;
        m2 += nf * nf * pn;
    }
    let (fano, q_mandel) = if m1 < MEAN_N_FLOOR {
        (None, None)
    } else {
        let f = (m2 - m1 * m1) / m1;
        (Some(f), Some(f - 1.0))
    };
    FieldObservables { mean_n: m1, mean_n2: m2, fano, q_mandel }
}

pub fn observables(state: &PhotonLadder) -> FieldObservables {
    distribution_observables(&state.p1)
}

/// Closed-form photon distribution valid for `gamma_+ >> kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDistribution {
    /// `gamma_+ / (2 kappa)`.
    pub alpha: f64,
    pub m: f64,
    /// `P_n` for `n = 0..=N`.
    pub p: Vec<f64>,
    /// `ln 1F1(1, m + 1; alpha)`.
    pub ln_norm: f64,
    /// Whether `gamma_+ >= 100 kappa`, i.e. inside the regime the formula targets.
    pub in_regime: bool,
}

/// Shape parameter of the closed-form distribution.
pub fn analytic_m(rates: &DressedRates, kappa: f64) -> Result<f64> {
    let DressedRates { gamma0, gamma_plus: gp, gamma_minus: gm, g1, .. } = *rates;
    if g1 == 0.0 {
        return Err(Error::ThermalPumpLimit);
    }
    Ok(0.5 * (1.0 + gm / kappa + (4.0 * gamma0 + gp + gm) * (gp + gm) / (4.0 * g1 * g1)))
}

/// `P_n = alpha^n m! / ((n + m)! 1F1(1, m + 1; alpha))` for `n = 0..=n_max`.
pub fn analytic_distribution(
    rates: &DressedRates,
    kappa: f64,
    n_max: usize,
    ctl: SeriesControl,
) -> Result<AnalyticDistribution> {
    rates.validate()?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("kappa must be positive"));
    }
    let m = analytic_m(rates, kappa)?;
    let alpha = rates.alpha(kappa);
    let mut p = vec![0.0; n_max + 1];
    if alpha == 0.0 {
        p[0] = 1.0;
        return Ok(AnalyticDistribution { alpha, m, p, ln_norm: 0.0, in_regime: false });
    }
    let ln_norm = specfun::ln_kummer_1f1_a1(m + 1.0, alpha, ctl)?;
    let ln_alpha = libm::log(alpha);
    let ln_gamma_m1 = specfun::ln_gamma(m + 1.0)?;
    for (n, pn) in p.iter_mut().enumerate() {
        let nf = n as f64;
        *pn = libm::exp(nf * ln_alpha + ln_gamma_m1 - specfun::ln_gamma(nf + m + 1.0)? - ln_norm);
    }
    let in_regime = rates.gamma_plus >= 100.0 * kappa;
    Ok(AnalyticDistribution { alpha, m, p, ln_norm, in_regime })
}

/// Normalization of the closed form by direct summation of the unnormalized
/// terms `alpha^n m!/(n+m)!` (log of the sum), an alternative to the Kummer
/// series.
pub fn analytic_norm_by_summation(alpha: f64, m: f64, max_terms: usize) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let ln_alpha = libm::log(alpha);
    let ln_gamma_m1 = specfun::ln_gamma(m + 1.0)?;
    let ln_term = |n: usize| -> Result<f64> {
        let nf = n as f64;
        Ok(nf * ln_alpha + ln_gamma_m1 - specfun::ln_gamma(nf + m + 1.0)?)
    };
    // The terms peak near n = alpha - m; sum relative to the peak.
    let peak_n = libm::floor((alpha - m).max(0.0)) as usize;
    let peak = ln_term(peak_n)?;
    let mut sum = 0.0;
    for n in 0..max_terms {
        let t = libm::exp(ln_term(n)? - peak);
        sum += t;
        if n > peak_n && t < 1e-18 * sum {
            return Ok(peak + libm::log(sum));
        }
    }
    Err(Error::IterationLimit { terms: max_terms, partial: libm::exp(peak + libm::log(sum)) })
}

/// An asymptotic estimate with the regime check that justifies it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    pub mean_n: f64,
    pub q: f64,
    /// For the above-threshold law: `gamma_+ > gamma_-` (the raw `mean_n`
    /// is negative below threshold and is not clamped).
    pub valid: bool,
}

/// Above-threshold laws `<n> = (gamma_+ - gamma_-)/(2 kappa)` and
/// `Q = (gamma_- + kappa)/gamma_+`, valid for `kappa << g`, `kappa << gamma_+`.
pub fn asymptotic_observables(rates: &DressedRates, kappa: f64) -> Result<Asymptotic> {
    let DressedRates { gamma_plus: gp, gamma_minus: gm, .. } = *rates;
    if gp == 0.0 {
        return Err(Error::ZeroPump);
    }
    Ok(Asymptotic { mean_n: (gp - gm) / (2.0 * kappa), q: (gm + kappa) / gp, valid: gp > gm })
}

/// Weak-pump laws `<n> = 2 alpha (1 - 2 alpha)`, `Q = -2 alpha / 3` for the
/// blocked lasing line. `valid` is left `true`; use
/// [`low_pump_regime`] to test the physical preconditions.
pub fn low_pump_observables(alpha: f64) -> Asymptotic {
    Asymptotic { mean_n: 2.0 * alpha * (1.0 - 2.0 * alpha), q: -2.0 * alpha / 3.0, valid: true }
}

/// `kappa < gamma`, `cos^4 phi < 1/4` and `gamma_- = 0`.
pub fn low_pump_regime(rates: &DressedRates, kappa: f64, gamma: f64) -> bool {
    kappa < gamma && rates.cos2phi * rates.cos2phi < 0.25 && rates.gamma_minus == 0.0
}
