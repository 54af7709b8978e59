//! Stationary cavity spectrum from the regression theorem.

use std::f64::consts::PI;
use std::time::Instant;

use pbg_laser_core::liouvillian::{self, Horizon, Liouvillian};
use pbg_laser_core::spectrum::{self, SpectrumResult};
use pbg_laser_core::{dressed_rates, DressedRates, Drive};
use serde_json::json;

use crate::config::{Format, GridConfig, GridName, RunConfig};
use crate::format::{json_opt, json_real, real};
use crate::SimError;

/// Samples per period of the fastest frequency kept in `g(tau)`.
pub const SAMPLES_PER_PERIOD: f64 = 8.0;
/// Automatic horizons start at this many cavity lifetimes.
pub const HORIZON_START_KAPPA: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub rates: DressedRates,
    pub n_used: usize,
    pub mean_n: f64,
    pub g0: f64,
    pub dtau: f64,
    pub horizon: f64,
    pub decay_ratio: f64,
    /// `sum S d omega / 2 pi` on the output grid.
    pub integrated: f64,
    pub result: SpectrumResult,
    pub elapsed_s: f64,
}

pub fn omega_grid(cfg: &RunConfig) -> Result<Vec<f64>, SimError> {
    let p = &cfg.params;
    Ok(match cfg.spectrum.grid {
        GridConfig::Named(GridName::Doublet) => spectrum::doublet_grid(p.g)?,
        GridConfig::Named(GridName::Narrow) => spectrum::narrow_grid(p.kappa)?,
        GridConfig::Custom { lo, hi, points } => spectrum::uniform_grid(lo, hi, points)?,
    })
}

/// Fock cutoff for the Liouvillian: the override, else the ladder's
/// adaptive choice.
pub fn truncation(cfg: &RunConfig, rates: &DressedRates) -> Result<usize, SimError> {
    let s = &cfg.solver;
    Ok(match s.n_override {
        Some(n) => n,
        None => pbg_laser_core::ladder::steady_state_adaptive(rates, cfg.params.kappa, s.tail_tol, s.truncation_cap)?
            .n_max(),
    })
}

pub fn run_spectrum(cfg: &RunConfig) -> Result<SpectrumRun, SimError> {
    let start = Instant::now();
    let params = cfg.system_params();
    let rates = dressed_rates(&params)?;
    let kappa = params.kappa;
    let n_used = truncation(cfg, &rates)?;
    let l = Liouvillian::build(&rates, kappa, n_used)?;
    let rho = liouvillian::steady_state_density(&l)?;
    let omega = omega_grid(cfg)?;
    let reach = omega.iter().fold(rates.g1, |m, w| m.max(w.abs()));
    let dtau = 2.0 * PI / (SAMPLES_PER_PERIOD * reach);
    let horizon = match cfg.spectrum.horizon {
        Some(t) => Horizon::Fixed(t.max(dtau)),
        None => Horizon::Auto {
            start: HORIZON_START_KAPPA / kappa,
            max: cfg.spectrum.max_horizon_kappa.max(HORIZON_START_KAPPA) / kappa,
        },
    };
    let corr = liouvillian::correlation(&l, &rho, dtau, horizon)?;
    let result = spectrum::spectrum(&corr, &omega, cfg.spectrum.allow_undecayed)?;
    Ok(SpectrumRun {
        rates,
        n_used,
        mean_n: rho.mean_photons(),
        g0: corr.g[0].re,
        dtau,
        horizon: corr.horizon(),
        decay_ratio: corr.decay_ratio(),
        integrated: result.integrated(),
        result,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

pub fn to_csv(res: &SpectrumResult) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["omega", "s"]).expect("in-memory write");
    for (o, s) in res.omega.iter().zip(&res.s) {
        w.write_record([real(*o), real(*s)]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn metadata(cfg: &RunConfig, run: &SpectrumRun) -> serde_json::Value {
    let params = cfg.system_params();
    let (epsilon, delta_a) = match params.drive {
        Drive::Laser { epsilon, delta_a } => (Some(epsilon), Some(delta_a)),
        Drive::Pump { .. } => (None, None),
    };
    let r = &run.rates;
    let peaks: Vec<_> = run
        .result
        .peak_positions
        .iter()
        .zip(&run.result.peak_widths)
        .map(|(p, w)| json!({ "position": json_real(*p), "fwhm": json_opt(*w) }))
        .collect();
    json!({
        "mode": "spectrum",
        "version": crate::version(),
        "params": {
            "gamma": params.gamma,
            "kappa_over_gamma": params.kappa / params.gamma,
            "g_over_gamma": params.g / params.gamma,
            "epsilon": epsilon,
            "delta_a": delta_a,
            "gap": cfg.params.gap,
        },
        "rates_over_gamma": {
            "cos2phi": r.cos2phi,
            "Omega2": r.omega2.map(|w| w / params.gamma),
            "gamma0": r.gamma0 / params.gamma,
            "gamma_plus": r.gamma_plus / params.gamma,
            "gamma_minus": r.gamma_minus / params.gamma,
            "g1": r.g1 / params.gamma,
        },
        "solver": cfg.solver,
        "spectrum": cfg.spectrum,
        "assumptions": crate::assumption_flags(),
        "N_used": run.n_used,
        "mean_n": run.mean_n,
        "g0": run.g0,
        "dtau": run.dtau,
        "horizon": run.horizon,
        "decay_ratio": run.decay_ratio,
        "raw_peak_scale": run.result.scale,
        "integrated_over_2pi": run.integrated,
        "fwhm": json_opt(run.result.fwhm),
        "peaks": peaks,
        "wall_clock_s": run.elapsed_s,
    })
}

pub fn write(cfg: &RunConfig, run: &SpectrumRun) -> Result<(), SimError> {
    let path = cfg.output_path();
    let meta = metadata(cfg, run);
    match cfg.output.format {
        Format::Csv => {
            crate::write_file(&path, &to_csv(&run.result))?;
            crate::write_file(&crate::sidecar_path(&path), serde_json::to_string_pretty(&meta).unwrap().as_bytes())?;
        }
        Format::Json => {
            let doc = json!({
                "omega": run.result.omega.iter().map(|v| json_real(*v)).collect::<Vec<_>>(),
                "s": run.result.s.iter().map(|v| json_real(*v)).collect::<Vec<_>>(),
                "metadata": meta,
            });
            crate::write_file(&path, serde_json::to_string_pretty(&doc).unwrap().as_bytes())?;
        }
    }
    if cfg.output.emit_plot_script {
        crate::plot::write_spectrum_script(&path, cfg.output.format)?;
    }
    Ok(())
}
