use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use pbg_laser_sim::validate::{self, Group};
use pbg_laser_sim::{dist, spectrum_run, sweep, Format, Mode, Overrides, RunConfig, SimError};

/// Dressed-atom laser in a photonic band gap.
#[derive(Debug, Parser)]
#[command(name = "sim", version)]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to `sim_<mode>.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Number of sweep points.
    #[arg(long)]
    points: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write a matplotlib script next to the output.
    #[arg(long)]
    emit_plot_script: bool,
}

fn run(cli: Cli) -> Result<(), SimError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    let overrides = Overrides {
        out: cli.out,
        format: cli.format,
        points: cli.points,
        emit_plot_script: cli.emit_plot_script,
    };
    cfg.apply(cli.mode, &overrides);
    cfg.validate()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(SimError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SimError::Usage(e.to_string()))?;
    }

    let start = Instant::now();
    match cli.mode {
        Mode::Sweep => {
            let records = sweep::run_sweep(&cfg)?;
            let failed = sweep::write(&cfg, &records, start.elapsed().as_secs_f64())?;
            eprintln!(
                "sweep: {} points, {failed} failed, {:.2} s -> {}",
                records.len(),
                start.elapsed().as_secs_f64(),
                cfg.output_path().display()
            );
            for r in records.iter().filter(|r| !r.ok()) {
                eprintln!("  cos4phi={} {}: {}", r.cos4phi, r.gap_config_label, r.status);
            }
        }
        Mode::Spectrum => {
            let run = spectrum_run::run_spectrum(&cfg)?;
            spectrum_run::write(&cfg, &run)?;
            let r = &run.result;
            eprintln!(
                "spectrum: N={} <n>={:.6e} peaks at {:?}, {:.2} s -> {}",
                run.n_used,
                run.mean_n,
                r.peak_positions,
                run.elapsed_s,
                cfg.output_path().display()
            );
        }
        Mode::Dist => {
            let run = dist::run_dist(&cfg)?;
            dist::write(&cfg, &run)?;
            eprintln!("dist: N={} -> {}", run.numeric.n_max(), cfg.output_path().display());
        }
        Mode::Validate => {
            let checks = validate::run_checks(&cfg);
            for group in [Group::Properties, Group::Agreement] {
                println!("[{}]", if group == Group::Properties { "properties" } else { "agreement" });
                for c in checks.iter().filter(|c| c.group == group) {
                    println!("{}", c.line());
                }
            }
            validate::write(&cfg, &checks)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} passed, {failed} failed", checks.len() - failed);
            if failed > 0 {
                return Err(SimError::Validation(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
