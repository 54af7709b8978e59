//! File formats, run modes and the command-line front end for the
//! dressed-atom band-gap laser simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dist;
pub mod format;
pub mod plot;
pub mod spectrum_run;
pub mod sweep;
pub mod validate;

use std::path::PathBuf;

pub use config::{Format, Mode, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(#[from] pbg_laser_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("validation failed: {0} check(s) did not pass")]
    Validation(usize),
}

impl SimError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Usage(_) => 1,
            SimError::Solver(_) | SimError::Io { .. } => 2,
            SimError::Validation(_) => 3,
        }
    }
}

/// Modelling assumptions recorded in every sidecar.
pub fn assumption_flags() -> serde_json::Value {
    serde_json::json!({
        "secular_coupling_only": true,
        "ideal_step_band_edge": true,
        "no_gap_gamma_minus": "gamma*sin^4(phi) throughout the sweep",
        "gamma0_kept_in_both_configurations": true,
        "coherent_state_marker": "Q = 0",
        "dephasing_rate_of_coherences": "2*gamma0",
        "rates_in_units_of_gamma": true,
    })
}

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub(crate) fn write_file(path: &std::path::Path, contents: &[u8]) -> Result<(), SimError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| SimError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}

/// `<stem>.meta.json` next to `path`.
pub fn sidecar_path(path: &std::path::Path) -> PathBuf {
    let stem = path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.meta.json"))
}
