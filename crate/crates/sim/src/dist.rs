//! Photon-number distribution: numeric ladder against the closed form.

use pbg_laser_core::ladder::{self, PhotonLadder};
use pbg_laser_core::specfun::SeriesControl;
use pbg_laser_core::{dressed_rates, DressedRates};
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::format::{json_opt, json_real, opt_real, real};
use crate::SimError;

#[derive(Debug, Clone)]
pub struct DistRun {
    pub rates: DressedRates,
    pub numeric: PhotonLadder,
    pub analytic: Option<ladder::AnalyticDistribution>,
    /// Why the closed form is missing, when it is.
    pub analytic_error: Option<String>,
}

impl DistRun {
    /// `sum |p_num - p_ana| / 2`.
    pub fn total_variation(&self) -> Option<f64> {
        self.analytic.as_ref().map(|a| total_variation(&self.numeric.p1, &a.p))
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n).map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

pub fn run_dist(cfg: &RunConfig) -> Result<DistRun, SimError> {
    let params = cfg.system_params();
    let rates = dressed_rates(&params)?;
    let numeric = crate::sweep::solve_ladder(&rates, params.kappa, &cfg.solver)?;
    let ctl = SeriesControl { rel_tol: cfg.solver.rel_tol, ..SeriesControl::default() };
    let (analytic, analytic_error) = match ladder::analytic_distribution(&rates, params.kappa, numeric.n_max(), ctl) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(DistRun { rates, numeric, analytic, analytic_error })
}

pub fn to_csv(run: &DistRun) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "p_numeric", "p_analytic"]).expect("in-memory write");
    for (n, p) in run.numeric.p1.iter().enumerate() {
        let a = run.analytic.as_ref().map(|a| a.p[n]);
        w.write_record([n.to_string(), real(*p), opt_real(a)]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn metadata(cfg: &RunConfig, run: &DistRun) -> serde_json::Value {
    let params = cfg.system_params();
    let kappa = params.kappa;
    let r = &run.rates;
    let obs = ladder::observables(&run.numeric);
    let analytic_obs = run.analytic.as_ref().map(|a| ladder::distribution_observables(&a.p));
    let asym = ladder::asymptotic_observables(r, kappa).ok();
    let alpha = r.alpha(kappa);
    let low = ladder::low_pump_observables(alpha);
    json!({
        "mode": "dist",
        "version": crate::version(),
        "params": {
            "gamma": params.gamma,
            "kappa_over_gamma": kappa / params.gamma,
            "g_over_gamma": params.g / params.gamma,
            "drive": cfg.params.drive,
            "gap": cfg.params.gap,
        },
        "rates_over_gamma": {
            "cos2phi": r.cos2phi,
            "gamma0": r.gamma0 / params.gamma,
            "gamma_plus": r.gamma_plus / params.gamma,
            "gamma_minus": r.gamma_minus / params.gamma,
            "g1": r.g1 / params.gamma,
        },
        "solver": cfg.solver,
        "assumptions": crate::assumption_flags(),
        "N_used": run.numeric.n_max(),
        "residual": run.numeric.residual(r, kappa),
        "numeric": { "mean_n": obs.mean_n, "mean_n2": obs.mean_n2, "fano": json_opt(obs.fano), "q_mandel": json_opt(obs.q_mandel) },
        "analytic": run.analytic.as_ref().map(|a| json!({
            "alpha": a.alpha,
            "m": a.m,
            "ln_norm": a.ln_norm,
            "in_regime": a.in_regime,
            "mean_n": analytic_obs.map(|o| o.mean_n),
            "q_mandel": analytic_obs.and_then(|o| o.q_mandel),
            "total_variation": run.total_variation(),
        })),
        "analytic_error": run.analytic_error,
        "asymptotic": asym.map(|a| json!({ "mean_n": json_real(a.mean_n), "q": json_real(a.q), "above_threshold": a.valid })),
        "low_pump": {
            "alpha": alpha,
            "mean_n": low.mean_n,
            "q": low.q,
            "in_regime": ladder::low_pump_regime(r, kappa, params.gamma),
        },
    })
}

pub fn write(cfg: &RunConfig, run: &DistRun) -> Result<(), SimError> {
    let path = cfg.output_path();
    let meta = metadata(cfg, run);
    match cfg.output.format {
        Format::Csv => {
            crate::write_file(&path, &to_csv(run))?;
            crate::write_file(&crate::sidecar_path(&path), serde_json::to_string_pretty(&meta).unwrap().as_bytes())?;
        }
        Format::Json => {
            let doc = json!({
                "p_numeric": run.numeric.p1.iter().map(|v| json_real(*v)).collect::<Vec<_>>(),
                "p_analytic": run.analytic.as_ref().map(|a| a.p.iter().map(|v| json_real(*v)).collect::<Vec<_>>()),
                "metadata": meta,
            });
            crate::write_file(&path, serde_json::to_string_pretty(&doc).unwrap().as_bytes())?;
        }
    }
    if cfg.output.emit_plot_script {
        crate::plot::write_dist_script(&path, cfg.output.format)?;
    }
    Ok(())
}
