//! Pump sweeps: mean photon number and Mandel Q against `cos^4 phi`.

use std::time::Instant;

use pbg_laser_core::ladder::{self, PhotonLadder};
use pbg_laser_core::{dressed_rates, pump_sweep_grid, DressedRates, SweepPoint};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Format, RunConfig, SolverConfig};
use crate::format::{json_opt, json_real, opt_real, real};
use crate::SimError;

pub const CSV_HEADER: [&str; 11] = [
    "cos4phi",
    "gamma_plus",
    "gamma_minus",
    "gamma0",
    "g1",
    "mean_n",
    "q_mandel",
    "N_used",
    "residual",
    "gap_config_label",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub index: usize,
    pub cos4phi: f64,
    /// Rates in units of gamma.
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma0: f64,
    pub g1: f64,
    pub mean_n: Option<f64>,
    pub q_mandel: Option<f64>,
    pub n_used: Option<usize>,
    pub residual: Option<f64>,
    pub gap_config_label: &'static str,
    /// `ok`, or the failure message.
    pub status: String,
    pub wall_clock_s: f64,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Steady state at a fixed cutoff or the adaptive one.
pub fn solve_ladder(rates: &DressedRates, kappa: f64, solver: &SolverConfig) -> pbg_laser_core::Result<PhotonLadder> {
    match solver.n_override {
        Some(n) => ladder::steady_state(rates, kappa, n, solver.tail_tol),
        None => ladder::steady_state_adaptive(rates, kappa, solver.tail_tol, solver.truncation_cap),
    }
}

fn solve_point(point: &SweepPoint, solver: &SolverConfig) -> SweepRecord {
    let start = Instant::now();
    let p = point.params;
    let mut rec = SweepRecord {
        index: point.index,
        cos4phi: point.cos4phi,
        gamma_plus: f64::NAN,
        gamma_minus: f64::NAN,
        gamma0: f64::NAN,
        g1: f64::NAN,
        mean_n: None,
        q_mandel: None,
        n_used: None,
        residual: None,
        gap_config_label: point.config.label(),
        status: String::new(),
        wall_clock_s: 0.0,
    };
    let outcome = dressed_rates(&p).and_then(|r| {
        rec.gamma_plus = r.gamma_plus / p.gamma;
        rec.gamma_minus = r.gamma_minus / p.gamma;
        rec.gamma0 = r.gamma0 / p.gamma;
        rec.g1 = r.g1 / p.gamma;
        let state = solve_ladder(&r, p.kappa, solver)?;
        let obs = ladder::observables(&state);
        rec.mean_n = Some(obs.mean_n);
        rec.q_mandel = obs.q_mandel;
        rec.n_used = Some(state.n_max());
        rec.residual = Some(state.residual(&r, p.kappa));
        Ok(())
    });
    rec.status = match outcome {
        Ok(()) => "ok".into(),
        Err(e) => format!("failed: {e}"),
    };
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec
}

/// Solves every grid point; failures are recorded, never fatal.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRecord>, SimError> {
    let [lo, hi] = cfg.sweep.range;
    let points = pump_sweep_grid(cfg.sweep.points, lo, hi, &cfg.system_params())?;
    let solver = cfg.solver.clone();
    Ok(points.par_iter().map(|p| solve_point(p, &solver)).collect())
}

pub fn to_csv(records: &[SweepRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            real(r.cos4phi),
            real(r.gamma_plus),
            real(r.gamma_minus),
            real(r.gamma0),
            real(r.g1),
            opt_real(r.mean_n),
            opt_real(r.q_mandel),
            r.n_used.map(|n| n.to_string()).unwrap_or_default(),
            opt_real(r.residual),
            r.gap_config_label.to_string(),
            r.status.clone(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn record_json(r: &SweepRecord) -> serde_json::Value {
    json!({
        "cos4phi": json_real(r.cos4phi),
        "gamma_plus": json_real(r.gamma_plus),
        "gamma_minus": json_real(r.gamma_minus),
        "gamma0": json_real(r.gamma0),
        "g1": json_real(r.g1),
        "mean_n": json_opt(r.mean_n),
        "q_mandel": json_opt(r.q_mandel),
        "N_used": r.n_used,
        "residual": json_opt(r.residual),
        "gap_config_label": r.gap_config_label,
        "status": r.status,
    })
}

pub fn metadata(cfg: &RunConfig, records: &[SweepRecord], elapsed_s: f64) -> serde_json::Value {
    let failures = records.iter().filter(|r| !r.ok()).count();
    json!({
        "mode": "sweep",
        "version": crate::version(),
        "params": {
            "gamma": cfg.params.gamma,
            "kappa_over_gamma": cfg.params.kappa / cfg.params.gamma,
            "g_over_gamma": cfg.params.g / cfg.params.gamma,
            "gap_base": cfg.params.gap,
            "range": cfg.sweep.range,
            "points": cfg.sweep.points,
        },
        "solver": cfg.solver,
        "assumptions": crate::assumption_flags(),
        "points_total": records.len(),
        "points_failed": failures,
        "elapsed_s": elapsed_s,
        "wall_clock_per_point_s": records.iter().map(|r| r.wall_clock_s).collect::<Vec<_>>(),
    })
}

/// Writes the main file (CSV or JSON) and the JSON sidecar. Returns the
/// failure count.
pub fn write(cfg: &RunConfig, records: &[SweepRecord], elapsed_s: f64) -> Result<usize, SimError> {
    let path = cfg.output_path();
    let meta = metadata(cfg, records, elapsed_s);
    match cfg.output.format {
        Format::Csv => {
            crate::write_file(&path, &to_csv(records))?;
            crate::write_file(&crate::sidecar_path(&path), serde_json::to_string_pretty(&meta).unwrap().as_bytes())?;
        }
        Format::Json => {
            let doc = json!({ "records": records.iter().map(record_json).collect::<Vec<_>>(), "metadata": meta });
            crate::write_file(&path, serde_json::to_string_pretty(&doc).unwrap().as_bytes())?;
        }
    }
    if cfg.output.emit_plot_script {
        crate::plot::write_sweep_script(&path, cfg.output.format)?;
    }
    Ok(records.iter().filter(|r| !r.ok()).count())
}
