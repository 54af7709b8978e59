//! Self-checks: solver invariants, cross-solver oracles and agreement with
//! the closed-form and asymptotic laws.

use pbg_laser_core::ladder::{self, PhotonLadder, DEFAULT_TAIL_TOL};
use pbg_laser_core::liouvillian::{self, DensityMatrix, Horizon, Liouvillian};
use pbg_laser_core::specfun::{self, SeriesControl};
use pbg_laser_core::spectrum;
use pbg_laser_core::{dressed_rates, DressedRates, Drive, GapFlags, SystemParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::format::json_real;
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// Numerical invariants of the solvers.
    Properties,
    /// Cross-solver oracles and the closed-form and asymptotic laws.
    Agreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub group: Group,
    #[serde(serialize_with = "ser_real")]
    pub measured: f64,
    pub relation: Relation,
    #[serde(serialize_with = "ser_real")]
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

fn ser_real<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    json_real(*x).serialize(s)
}

impl Check {
    fn new(name: &'static str, group: Group, measured: f64, relation: Relation, tolerance: f64, detail: String) -> Check {
        let passed = match relation {
            Relation::AtMost => measured <= tolerance,
            Relation::AtLeast => measured >= tolerance,
            Relation::Below => measured < tolerance,
        };
        Check { name, group, measured, relation, tolerance, passed, detail }
    }

    fn failed(name: &'static str, group: Group, detail: String) -> Check {
        Check { name, group, measured: f64::NAN, relation: Relation::AtMost, tolerance: f64::NAN, passed: false, detail }
    }

    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
        };
        format!(
            "{} {:<34} measured {:>12.4e} {rel} {:>9.2e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

use Group::{Agreement, Properties};
use Relation::{AtLeast, AtMost, Below};

fn pump(gamma: f64, kappa: f64, g: f64, cos4phi: f64, gap: GapFlags) -> SystemParams {
    SystemParams { gamma, kappa, g, drive: Drive::Pump { cos4phi }, gap }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

struct Sample {
    label: String,
    rates: DressedRates,
    kappa: f64,
    state: PhotonLadder,
}

fn sample_states() -> Result<Vec<Sample>, SimError> {
    let mut out = Vec::new();
    let mut sets = Vec::new();
    for &c4 in &[0.05, 0.25, 0.5, 0.9] {
        for gap in [GapFlags::OPEN, GapFlags::LASING_LINE_BLOCKED] {
            sets.push((format!("kappa=1e-3 g=10 cos4phi={c4} u_minus={}", gap.u_minus as u8), pump(1.0, 1e-3, 10.0, c4, gap)));
        }
        sets.push((format!("kappa=0.2 g=2000 cos4phi={c4}"), pump(1.0, 0.2, 2000.0, c4, GapFlags::LASING_LINE_BLOCKED)));
    }
    for (label, p) in sets {
        let rates = dressed_rates(&p)?;
        let state = ladder::steady_state_adaptive(&rates, p.kappa, DEFAULT_TAIL_TOL, ladder::DEFAULT_TRUNCATION_CAP)?;
        out.push(Sample { label, rates, kappa: p.kappa, state });
    }
    Ok(out)
}

/// Properties of ladder steady states over the sweep regimes.
fn ladder_properties(samples: &[Sample], checks: &mut Vec<Check>) {
    let worst = |f: &dyn Fn(&Sample) -> f64| {
        samples.iter().map(|s| (f(s), s.label.as_str())).fold((f64::NEG_INFINITY, ""), |a, b| if b.0 > a.0 { b } else { a })
    };
    let (r, at) = worst(&|s| s.state.residual(&s.rates, s.kappa));
    checks.push(Check::new("ladder_residual", Properties, r, AtMost, 1e-10, format!("worst at {at}")));
    let (r, at) = worst(&|s| (s.state.trace() - 1.0).abs());
    checks.push(Check::new("normalization", Properties, r, AtMost, 1e-9, format!("worst at {at}")));
    let (r, at) = worst(&|s| -s.state.p1.iter().cloned().fold(f64::INFINITY, f64::min));
    checks.push(Check::new("p1_positivity", Properties, -r, AtLeast, -1e-10, format!("min P1, worst at {at}")));
    let (r, at) = worst(&|s| s.state.p1.iter().zip(&s.state.p2).map(|(p, d)| d.abs() - p).fold(f64::NEG_INFINITY, f64::max));
    checks.push(Check::new("population_difference_bound", Properties, r, AtMost, 1e-10, format!("max |P2|-P1, worst at {at}")));
    let (r, at) = worst(&|s| match ladder::observables(&s.state).q_mandel {
        Some(q) => -1.0 - q,
        None => f64::NEG_INFINITY,
    });
    checks.push(Check::new("q_at_least_minus_one", Properties, -1.0 - r, AtLeast, -1.0, format!("min Q, worst at {at}")));
}

fn truncation_check(cfg: &RunConfig, checks: &mut Vec<Check>) {
    let p = cfg.system_params();
    let tail_tol = cfg.solver.tail_tol;
    let result = dressed_rates(&p).and_then(|r| match cfg.solver.n_override {
        Some(n) => ladder::steady_state(&r, p.kappa, n, f64::INFINITY).map(|s| (s.tail(), n)),
        None => ladder::steady_state_adaptive(&r, p.kappa, tail_tol, cfg.solver.truncation_cap).map(|s| (s.tail(), s.n_max())),
    });
    checks.push(match result {
        Ok((tail, n)) => Check::new("truncation_tail", Properties, tail, Below, tail_tol, format!("P1[N] at N={n} for the configured point")),
        Err(e) => Check::failed("truncation_tail", Properties, e.to_string()),
    });
}

fn evolution_checks(checks: &mut Vec<Check>) -> Result<(), SimError> {
    let rates = DressedRates::from_mixing(1.0, 2.0, 0.7, GapFlags::OPEN);
    let (kappa, n, t) = (0.2, 40, 50.0);
    let dt = 0.1 / ladder::fastest_rate(&rates, kappa, n);
    let out = ladder::evolve(&PhotonLadder::vacuum(n), &rates, kappa, dt, t, DEFAULT_TAIL_TOL)?;
    checks.push(Check::new("ladder_trace_preservation", Properties, (out.trace() - 1.0).abs() / t, AtMost, 1e-9, format!("drift per unit time over t={t}")));

    let l = Liouvillian::build(&rates, kappa, 12)?;
    let sp = l.space();
    let mut rho = DensityMatrix::zeros(sp);
    let d = sp.dim();
    for i in 0..d {
        rho.set(i, i, Complex64::new(1.0 / d as f64, 0.0));
    }
    rho.set(1, sp.index(1, 2), Complex64::new(0.01, 0.02));
    rho.set(sp.index(1, 2), 1, Complex64::new(0.01, -0.02));
    let t = 10.0;
    let out = l.evolve(&rho, t)?;
    checks.push(Check::new("density_trace_preservation", Properties, (out.trace() - 1.0).norm() / t, AtMost, 1e-9, format!("drift per unit time over t={t}")));
    checks.push(Check::new("density_hermiticity_preservation", Properties, out.hermiticity_error(), AtMost, 1e-10, String::new()));
    Ok(())
}

fn density_checks(checks: &mut Vec<Check>) -> Result<(), SimError> {
    let rates = DressedRates::from_mixing(1.0, 3.0, 0.6, GapFlags::LASING_LINE_BLOCKED);
    let l = Liouvillian::build(&rates, 0.1, 40)?;
    let rho = liouvillian::steady_state_density(&l)?;
    checks.push(Check::new("density_min_eigenvalue", Properties, rho.min_eigenvalue(), AtLeast, -1e-8, String::new()));
    checks.push(Check::new("density_hermiticity", Properties, rho.hermiticity_error(), AtMost, 1e-10, String::new()));
    checks.push(Check::new("density_trace", Properties, (rho.trace() - 1.0).norm(), AtMost, 1e-9, String::new()));
    let (p1, p2) = liouvillian::dressed_populations(&rho);
    checks.push(Check::new("dressed_population_sum", Properties, (p1 + p2 - 1.0).abs(), AtMost, 1e-9, String::new()));
    Ok(())
}

fn spectrum_checks(checks: &mut Vec<Check>) -> Result<(), SimError> {
    let p = SystemParams {
        gamma: 1.0,
        kappa: 0.2,
        g: 3.0,
        drive: Drive::Laser { epsilon: 1.0, delta_a: -2.0 },
        gap: GapFlags::LASING_LINE_BLOCKED,
    };
    let rates = dressed_rates(&p)?;
    let l = Liouvillian::build(&rates, p.kappa, 30)?;
    let rho = liouvillian::steady_state_density(&l)?;
    let omega = spectrum::uniform_grid(-40.0, 40.0, 8001)?;
    let dtau = 2.0 * core::f64::consts::PI / (8.0 * 40.0);
    let corr = liouvillian::correlation(&l, &rho, dtau, Horizon::Auto { start: 50.0 / p.kappa, max: 6400.0 / p.kappa })?;
    let res = spectrum::spectrum(&corr, &omega, false)?;
    let g0 = corr.g[0].re;
    checks.push(Check::new("correlation_at_zero_is_mean_n", Properties, (g0 - rho.mean_photons()).abs(), AtMost, 1e-9, String::new()));
    checks.push(Check::new("fourier_consistency", Properties, rel(res.integrated(), g0), AtMost, 0.02, format!("integral/2pi vs g(0)={g0:.4e}")));
    let min = res.s.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(Check::new("spectrum_nonnegative", Properties, min, AtLeast, -1e-6, "min of unit-peak spectrum".into()));
    let cs = corr.g.iter().map(|v| v.norm()).fold(0.0, f64::max) / g0 - 1.0;
    checks.push(Check::new("correlation_cauchy_schwarz", Properties, cs, AtMost, 1e-9, "max |g(tau)|/g(0) - 1".into()));
    let exact = liouvillian::spectrum_resolvent(&l, &rho, &omega)?;
    let diff = res.raw().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / res.scale;
    checks.push(Check::new("spectrum_resolvent_cross_check", Agreement, diff, AtMost, 1e-3, "max |S_ft - S_resolvent| / max S".into()));
    Ok(())
}

fn specfun_checks(checks: &mut Vec<Check>) -> Result<(), SimError> {
    let mut worst_gamma = 0.0_f64;
    for k in 1..=400 {
        let x = 0.5 * k as f64 - 0.237;
        let ratio = (specfun::ln_gamma(x + 1.0)? - specfun::ln_gamma(x)?).exp();
        worst_gamma = worst_gamma.max(rel(ratio, x));
    }
    checks.push(Check::new("gamma_recurrence", Properties, worst_gamma, AtMost, 1e-10, "exp(lnG(x+1)-lnG(x)) vs x, x in (0, 200]".into()));
    let mut worst_fact = 0.0_f64;
    let mut ln_fact = 0.0_f64;
    for n in 1..=170u32 {
        ln_fact += (n as f64).ln();
        worst_fact = worst_fact.max((specfun::ln_gamma(n as f64 + 1.0)? - ln_fact).abs());
    }
    checks.push(Check::new("gamma_factorials", Properties, worst_fact, AtMost, 1e-10, "|lnG(n+1) - ln n!|, n <= 170".into()));
    let ctl = SeriesControl::default();
    let mut worst_rec = 0.0_f64;
    for &b in &[0.5, 1.5008, 3.0, 17.25, 120.0] {
        for &z in &[0.0, 0.3, 5.0, 45.0, 250.0, 500.0] {
            let lhs = specfun::ln_kummer_1f1_a1(b, z, ctl)?;
            let next = specfun::kummer_1f1_a1(b + 1.0, z, ctl)?;
            let rhs = (1.0 + z / b * next).ln();
            worst_rec = worst_rec.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
    }
    checks.push(Check::new("kummer_contiguous_relation", Properties, worst_rec, AtMost, 1e-10, "1F1(1,b;z) = 1 + z/b 1F1(1,b+1;z)".into()));
    let mut worst_closed = 0.0_f64;
    for &z in &[1e-3, 0.5, 1.0, 10.0, 40.0] {
        let f = specfun::kummer_1f1_a1(2.0, z, ctl)?;
        worst_closed = worst_closed.max(rel(f, z.exp_m1() / z));
    }
    checks.push(Check::new("kummer_closed_form", Properties, worst_closed, AtMost, 1e-10, "1F1(1,2;z) = (e^z-1)/z".into()));
    Ok(())
}

/// Ladder against the Liouvillian partial trace for five seeded random
/// parameter sets with `N <= 40`.
pub fn oracle_equivalence() -> Result<Check, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_101);
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let cos2phi = rng.gen_range(0.15..0.95);
        let g = rng.gen_range(0.3..5.0);
        let kappa = rng.gen_range(0.05..1.0);
        let gap = GapFlags { u_minus: rng.gen_bool(0.5), ..GapFlags::OPEN };
        let n = rng.gen_range(20..=40);
        let rates = DressedRates::from_mixing(1.0, g, cos2phi, gap);
        let lad = ladder::steady_state(&rates, kappa, n, f64::INFINITY)?;
        let l = Liouvillian::build(&rates, kappa, n)?;
        let rho = liouvillian::steady_state_density(&l)?;
        for (a, b) in rho.photon_distribution().iter().zip(&lad.p1) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(Check::new("oracle_equivalence", Agreement, worst, AtMost, 1e-8, "max |P_n ladder - P_n master equation|, 5 seeded sets".into()))
}

fn agreement_checks(checks: &mut Vec<Check>) -> Result<(), SimError> {
    checks.push(oracle_equivalence()?);

    // Closed-form distribution, full gap.
    let p = pump(1.0, 1e-3, 10.0, 0.5, GapFlags::LASING_LINE_BLOCKED);
    let r = dressed_rates(&p)?;
    let num = ladder::steady_state_adaptive(&r, p.kappa, DEFAULT_TAIL_TOL, ladder::DEFAULT_TRUNCATION_CAP)?;
    let ana = ladder::analytic_distribution(&r, p.kappa, num.n_max(), SeriesControl::default())?;
    let (on, oa) = (ladder::observables(&num), ladder::distribution_observables(&ana.p));
    checks.push(Check::new("analytic_mean_n", Agreement, rel(oa.mean_n, on.mean_n), AtMost, 0.01, "kappa=1e-3 g=10 cos4phi=0.5 full gap".into()));
    let (qn, qa) = (on.q_mandel.unwrap_or(f64::NAN), oa.q_mandel.unwrap_or(f64::NAN));
    checks.push(Check::new("analytic_q", Agreement, rel(qa, qn), AtMost, 0.01, format!("Q numeric {qn:.4e}, closed form {qa:.4e}")));
    let direct = ladder::analytic_norm_by_summation(ana.alpha, ana.m, 1_000_000)?;
    checks.push(Check::new("analytic_normalization_paths", Properties, (direct - ana.ln_norm).abs(), AtMost, 1e-10, "ln 1F1 vs direct summation".into()));

    // Above-threshold laws.
    let mut worst_n = (0.0_f64, String::new());
    let mut worst_q = (0.0_f64, String::new());
    for &c4 in &[0.4, 0.6, 0.8] {
        for gap in [GapFlags::OPEN, GapFlags::LASING_LINE_BLOCKED] {
            let p = pump(1.0, 1e-3, 10.0, c4, gap);
            let r = dressed_rates(&p)?;
            let s = ladder::steady_state_adaptive(&r, p.kappa, DEFAULT_TAIL_TOL, ladder::DEFAULT_TRUNCATION_CAP)?;
            let o = ladder::observables(&s);
            let a = ladder::asymptotic_observables(&r, p.kappa)?;
            let e = rel(o.mean_n, a.mean_n);
            if e > worst_n.0 {
                worst_n = (e, format!("cos4phi={c4} u_minus={}", gap.u_minus as u8));
            }
            if !gap.u_minus {
                let e = rel(o.q_mandel.unwrap_or(f64::NAN), a.q);
                if !(e <= worst_q.0) {
                    worst_q = (e, format!("cos4phi={c4}: Q {:.4e} vs (g-+k)/g+ {:.4e}", o.q_mandel.unwrap_or(f64::NAN), a.q));
                }
            }
        }
    }
    checks.push(Check::new("asymptotic_mean_n", Agreement, worst_n.0, AtMost, 0.05, format!("worst at {}", worst_n.1)));
    checks.push(Check::new("asymptotic_q_full_gap", Agreement, worst_q.0, AtMost, 0.10, format!("worst at {}", worst_q.1)));

    // Weak-pump laws.
    let (mut wn, mut wq, mut qmax) = ((0.0_f64, 0.0), (0.0_f64, 0.0), f64::NEG_INFINITY);
    for &alpha in &[0.01, 0.05, 0.1, 0.15] {
        let kappa = 0.2;
        let gamma_plus = 2.0 * kappa * alpha;
        let p = pump(1.0, kappa, 2000.0, gamma_plus, GapFlags::LASING_LINE_BLOCKED);
        let r = dressed_rates(&p)?;
        let s = ladder::steady_state_adaptive(&r, kappa, DEFAULT_TAIL_TOL, ladder::DEFAULT_TRUNCATION_CAP)?;
        let o = ladder::observables(&s);
        let low = ladder::low_pump_observables(alpha);
        let q = o.q_mandel.unwrap_or(f64::NAN);
        let (en, eq) = (rel(o.mean_n, low.mean_n), rel(q, low.q));
        if en > wn.0 {
            wn = (en, alpha);
        }
        if !(eq <= wq.0) {
            wq = (eq, alpha);
        }
        qmax = qmax.max(q);
    }
    checks.push(Check::new("low_pump_mean_n", Agreement, wn.0, AtMost, 0.10, format!("alpha in (0, 0.15], worst at alpha={}", wn.1)));
    checks.push(Check::new("low_pump_q", Agreement, wq.0, AtMost, 0.10, format!("alpha in (0, 0.15], worst at alpha={}", wq.1)));
    checks.push(Check::new("low_pump_sub_poissonian", Agreement, qmax, Below, 0.0, "max Q over alpha in (0, 0.15]".into()));
    Ok(())
}

fn guarded(name: &'static str, group: Group, checks: &mut Vec<Check>, f: impl FnOnce(&mut Vec<Check>) -> Result<(), SimError>) {
    if let Err(e) = f(checks) {
        checks.push(Check::failed(name, group, e.to_string()));
    }
}

/// Every check; solver errors become failed checks rather than aborting.
pub fn run_checks(cfg: &RunConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    match sample_states() {
        Ok(samples) => ladder_properties(&samples, &mut checks),
        Err(e) => checks.push(Check::failed("ladder_samples", Properties, e.to_string())),
    }
    truncation_check(cfg, &mut checks);
    guarded("evolution", Properties, &mut checks, evolution_checks);
    guarded("density", Properties, &mut checks, density_checks);
    guarded("spectrum", Properties, &mut checks, spectrum_checks);
    guarded("special_functions", Properties, &mut checks, specfun_checks);
    guarded("agreement", Agreement, &mut checks, agreement_checks);
    checks
}

pub fn report(checks: &[Check]) -> serde_json::Value {
    let failed = checks.iter().filter(|c| !c.passed).count();
    serde_json::json!({
        "mode": "validate",
        "version": crate::version(),
        "assumptions": crate::assumption_flags(),
        "checks": checks,
        "passed": checks.len() - failed,
        "failed": failed,
    })
}

pub fn write(cfg: &RunConfig, checks: &[Check]) -> Result<(), SimError> {
    let path = cfg.output.path.clone().unwrap_or_else(|| "sim_validate.json".into());
    crate::write_file(&path, serde_json::to_string_pretty(&report(checks)).unwrap().as_bytes())
}
