//! `sldg` — semi-Lagrangian DG transport runs from the command line.
//!
//! Subcommands: `run` (single solve with error metrics), `convergence`
//! (mesh refinement study), `bench` (SVS vs IBS timing), `verify`
//! (numerical checks). Exit codes: 0 success, 1 verification failure,
//! 2 configuration error, 3 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sldg::config::{ResolvedConfig, RunConfig};
use sldg::error::SldgError;
use sldg::runner;

#[derive(Parser)]
#[command(name = "sldg", version, about = "Semi-Lagrangian DG transport solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for the sweep-parallel map.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write the final field snapshot (plain text, one `r s i j beta`
    /// line per coefficient).
    #[arg(long)]
    dump_field: Option<PathBuf>,
    /// Write a log-log error plot.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once on the configured mesh and report error metrics.
    Run(CommonArgs),
    /// Refinement study over the configured mesh list.
    Convergence(CommonArgs),
    /// Time both backends on identical configurations.
    Bench(CommonArgs),
    /// Run the verification checks for the configured problem.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Deliberately corrupt one coefficient mid-run (negative control
        /// for the mass-balance check).
        #[arg(long, hide = true)]
        corrupt_field: bool,
    },
}

fn load(common: &CommonArgs) -> Result<ResolvedConfig, SldgError> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| SldgError::Config(format!("cannot read {:?}: {e}", common.config)))?;
    RunConfig::from_json(&text)?.resolve(common.threads.max(1))
}

fn emit_metrics(
    rc: &ResolvedConfig,
    common: &CommonArgs,
    rows: &[runner::RunMetrics],
) -> Result<(), SldgError> {
    let csv = runner::metrics_csv(rows);
    print!("{csv}");
    if let Some(path) = rc.outputs.metrics_csv.as_deref() {
        fs::write(path, &csv)?;
    }
    if let Some(path) = &common.plot {
        fs::write(path, runner::error_plot_svg(rows))?;
    } else if let Some(path) = rc.outputs.plot_svg.as_deref() {
        fs::write(path, runner::error_plot_svg(rows))?;
    }
    Ok(())
}

fn dump_field(
    rc: &ResolvedConfig,
    common: &CommonArgs,
    field: &sldg::ModalField2D,
) -> Result<(), SldgError> {
    let path = common.dump_field.clone().or_else(|| rc.outputs.field_dump.clone().map(PathBuf::from));
    if let Some(path) = path {
        let mut buf = Vec::new();
        field.dump(&mut buf)?;
        fs::write(path, buf)?;
    }
    Ok(())
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        pool.install(f)
    } else {
        f()
    }
}

fn real_main() -> Result<i32, SldgError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(common) => {
            let rc = load(common)?;
            let (metrics, art) =
                in_pool(common.threads, || runner::run_metrics(&rc, rc.nx, rc.ny))?;
            emit_metrics(&rc, common, std::slice::from_ref(&metrics))?;
            dump_field(&rc, common, &art.field)?;
            Ok(0)
        }
        Command::Convergence(common) => {
            let rc = load(common)?;
            let rows = in_pool(common.threads, || runner::convergence_study(&rc))?;
            emit_metrics(&rc, common, &rows)?;
            Ok(0)
        }
        Command::Bench(common) => {
            let rc = load(common)?;
            let rows = in_pool(common.threads, || runner::bench_backends(&rc))?;
            let csv = runner::bench_csv(&rc, &rows);
            print!("{csv}");
            if let Some(path) = rc.outputs.metrics_csv.as_deref() {
                fs::write(path, &csv)?;
            }
            Ok(0)
        }
        Command::Verify { common, corrupt_field } => {
            let rc = load(common)?;
            let rows =
                in_pool(common.threads, || runner::verify_problem(&rc, *corrupt_field))?;
            let csv = runner::verify_csv(&rows);
            print!("{csv}");
            if let Some(path) = rc.outputs.metrics_csv.as_deref() {
                fs::write(path, &csv)?;
            }
            Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
