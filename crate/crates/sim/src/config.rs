//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use pbg_laser_core::{Drive, GapFlags, SystemParams};
use serde::{Deserialize, Serialize};

use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sweep,
    Spectrum,
    Dist,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sweep => "sweep",
            Mode::Spectrum => "spectrum",
            Mode::Dist => "dist",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub params: ParamsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "one")]
    pub gamma: f64,
    pub kappa: f64,
    pub g: f64,
    pub drive: DriveConfig,
    #[serde(default)]
    pub gap: GapConfigToml,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DriveConfig {
    Laser { epsilon: f64, delta_a: f64 },
    Pump { cos4phi: f64 },
}

/// Band-gap occupancies written as 0/1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfigToml {
    #[serde(default = "one_u8")]
    pub u_l: u8,
    #[serde(default = "one_u8")]
    pub u_minus: u8,
    #[serde(default = "one_u8")]
    pub u_plus: u8,
}

impl Default for GapConfigToml {
    fn default() -> Self {
        GapConfigToml { u_l: 1, u_minus: 1, u_plus: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_range")]
    pub range: [f64; 2],
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { points: default_points(), range: default_range() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_override: Option<usize>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_cap")]
    pub truncation_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_override: None,
            tail_tol: default_tail_tol(),
            rel_tol: default_rel_tol(),
            truncation_cap: default_cap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridName {
    /// `[-1.5 g, 1.5 g]`, 4001 points.
    Doublet,
    /// `[-20 kappa, 20 kappa]`, 4001 points.
    Narrow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridConfig {
    Named(GridName),
    Custom { lo: f64, hi: f64, points: usize },
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Named(GridName::Doublet)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub grid: GridConfig,
    /// Fixed correlation horizon; automatic doubling from `50 / kappa` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Ceiling for the automatic horizon, in units of `1 / kappa`.
    #[serde(default = "default_max_horizon")]
    pub max_horizon_kappa: f64,
    #[serde(default)]
    pub allow_undecayed: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            grid: GridConfig::default(),
            horizon: None,
            max_horizon_kappa: default_max_horizon(),
            allow_undecayed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub emit_plot_script: bool,
}

fn one() -> f64 {
    1.0
}
fn one_u8() -> u8 {
    1
}
fn default_points() -> usize {
    101
}
fn default_range() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_tail_tol() -> f64 {
    pbg_laser_core::ladder::DEFAULT_TAIL_TOL
}
fn default_rel_tol() -> f64 {
    1e-14
}
fn default_cap() -> usize {
    pbg_laser_core::ladder::DEFAULT_TRUNCATION_CAP
}
fn default_max_horizon() -> f64 {
    6400.0
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub points: Option<usize>,
    pub emit_plot_script: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, SimError> {
        toml::from_str(text).map_err(|e| SimError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, mode: Mode, o: &Overrides) {
        self.mode = Some(mode);
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
            if o.out.is_none() {
                if let Some(p) = &mut self.output.path {
                    p.set_extension(f.extension());
                }
            }
        }
        if let Some(n) = o.points {
            self.sweep.points = n;
        }
        if o.emit_plot_script {
            self.output.emit_plot_script = true;
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.output.path.clone().unwrap_or_else(|| {
            let mode = self.mode.map_or("run", Mode::name);
            PathBuf::from(format!("sim_{mode}.{}", self.output.format.extension()))
        })
    }

    pub fn system_params(&self) -> SystemParams {
        let p = &self.params;
        let drive = match p.drive {
            DriveConfig::Laser { epsilon, delta_a } => Drive::Laser { epsilon, delta_a },
            DriveConfig::Pump { cos4phi } => Drive::Pump { cos4phi },
        };
        let gap = GapFlags { u_l: p.gap.u_l == 1, u_minus: p.gap.u_minus == 1, u_plus: p.gap.u_plus == 1 };
        SystemParams { gamma: p.gamma, kappa: p.kappa, g: p.g, drive, gap }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let usage = |m: &str| Err(SimError::Usage(m.to_string()));
        let gap = self.params.gap;
        if [gap.u_l, gap.u_minus, gap.u_plus].iter().any(|&u| u > 1) {
            return usage("gap flags must be 0 or 1");
        }
        let s = &self.solver;
        if !(s.tail_tol > 0.0) || !(s.rel_tol > 0.0) {
            return usage("solver tolerances must be positive");
        }
        if s.n_override.is_some_and(|n| n < 2) {
            return usage("solver.n_override must be at least 2");
        }
        if !(self.spectrum.max_horizon_kappa > 0.0) || self.spectrum.horizon.is_some_and(|t| !(t > 0.0)) {
            return usage("spectrum horizons must be positive");
        }
        match self.mode {
            Some(Mode::Sweep) => {
                let [lo, hi] = self.sweep.range;
                if self.sweep.points < 2 || !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return usage("sweep needs points >= 2 and 0 <= lo < hi <= 1");
                }
            }
            Some(Mode::Spectrum) if !matches!(self.params.drive, DriveConfig::Laser { .. }) => {
                return usage("spectrum mode needs the drive as {epsilon, delta_a}");
            }
            _ => {}
        }
        if self.mode != Some(Mode::Sweep) && self.mode != Some(Mode::Validate) {
            self.system_params().validate().map_err(|e| SimError::Usage(format!("invalid parameters: {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PUMP_SWEEP: &str = r#"
mode = "sweep"
[params]
kappa = 1e-3
g = 10.0
drive = { cos4phi = 0.5 }
[sweep]
points = 11
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(PUMP_SWEEP).unwrap();
        assert_eq!(c.params.gamma, 1.0);
        assert_eq!(c.params.gap, GapConfigToml::default());
        assert_eq!(c.sweep.range, [0.0, 1.0]);
        assert_eq!(c.solver.tail_tol, 1e-12);
        assert_eq!(c.output.format, Format::Csv);
        c.validate().unwrap();
    }

    #[test]
    fn laser_drive_and_custom_grid() {
        let c = RunConfig::from_toml(
            r#"
[params]
kappa = 0.05
g = 20.0
drive = { epsilon = 1.0, delta_a = -10.0 }
gap = { u_minus = 0 }
[spectrum]
grid = { lo = -1.0, hi = 1.0, points = 11 }
"#,
        )
        .unwrap();
        assert_eq!(c.params.drive, DriveConfig::Laser { epsilon: 1.0, delta_a: -10.0 });
        assert_eq!(c.params.gap.u_minus, 0);
        assert_eq!(c.spectrum.grid, GridConfig::Custom { lo: -1.0, hi: 1.0, points: 11 });
        assert!(!c.system_params().gap.u_minus);
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::from_toml(PUMP_SWEEP).unwrap();
        let o = Overrides { out: Some("x.json".into()), format: Some(Format::Json), points: Some(5), emit_plot_script: true };
        c.apply(Mode::Sweep, &o);
        assert_eq!(c.sweep.points, 5);
        assert_eq!(c.output_path(), PathBuf::from("x.json"));
        assert!(c.output.emit_plot_script);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_toml("[params]\nkappa = 1.0").is_err());
        assert!(RunConfig::from_toml(&format!("{PUMP_SWEEP}\nbogus = 1")).is_err());
        let mut c = RunConfig::from_toml(PUMP_SWEEP).unwrap();
        c.params.gap.u_l = 2;
        assert!(c.validate().is_err());
        let mut c = RunConfig::from_toml(PUMP_SWEEP).unwrap();
        c.mode = Some(Mode::Spectrum);
        assert!(c.validate().is_err());
    }
}
