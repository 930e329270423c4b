//! Command-line front end.
//!
//! Exit codes: 0 success, 1 check or validation failure, 2 runtime failure.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::{Args, Parser, Subcommand};

use crate::basis::{compute_tensors, Variant};
use crate::config::Config;
use crate::diagnostics::convergence::{convergence_study, Reference};
use crate::diagnostics::identities::EnergyFluxForm;
use crate::diagnostics::suite::{run_checks, CheckOptions, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::parallel::Execution;
use crate::solver::{Grid1D, Solver, Topography, Trajectory, WaveSpeedMode};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "swlme", version, about = "Shallow water linearized moment equations toolkit")]
pub struct Cli {
    /// Run all kernels on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print closure tensors A_ijk, B_ijk as CSV.
    Coeffs(CoeffsArgs),
    /// Run the pointwise identity and entropy-gradient checks.
    Check(CheckArgs),
    /// Run a scenario and write snapshots.csv and summary.csv.
    Run(RunArgs),
    /// Run a scenario on several meshes and print L1 errors and observed orders.
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// Moment order N (at least 1).
    #[arg(long = "N")]
    pub order: usize,
    #[arg(long, default_value = "swme")]
    pub variant: Variant,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Moment orders to check.
    #[arg(long = "N", value_delimiter = ',', default_value = "0,1,2,3")]
    pub orders: Vec<usize>,
    /// Random samples per order.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, env = "SWLME_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Negative control: evaluate the energy identity with a wrong flux.
    #[arg(long, hide = true)]
    pub corrupt_energy_flux: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: std::path::PathBuf,
    /// Print the canonical form of the parsed config and exit.
    #[arg(long)]
    pub print_config: bool,
    /// Cross-check the analytic wave-speed bound with an eigensolve every step.
    #[arg(long)]
    pub checked_wave_speeds: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    pub config: std::path::PathBuf,
    /// Cell counts, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub meshes: Vec<usize>,
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = match &cli.command {
        Command::Coeffs(a) => cmd_coeffs(a, out),
        Command::Check(a) => cmd_check(a, execution, out, err),
        Command::Run(a) => cmd_run(a, execution, out),
        Command::Converge(a) => cmd_converge(a, execution, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Usage(_)
        | Error::Config { .. }
        | Error::UnknownPreset(_)
        | Error::InvalidInitialCondition(_)
        | Error::MeshAlignment(_) => EXIT_FAILURE,
        _ => EXIT_RUNTIME,
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Io(e.to_string())
}

/// CSV number: `0` for exact zeros, 17 significant digits otherwise.
fn coeff(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn cmd_coeffs(args: &CoeffsArgs, out: &mut dyn Write) -> Result<u8> {
    if args.order < 1 {
        return Err(Error::Usage("coeffs needs --N >= 1".into()));
    }
    let t = compute_tensors(args.order, args.variant);
    let mut text = String::from("i,j,k,A,B\n");
    for (i, j, k, a, b) in t.entries() {
        text.push_str(&format!("{i},{j},{k},{},{}\n", coeff(a), coeff(b)));
    }
    out.write_all(text.as_bytes()).map_err(io_err)?;
    Ok(EXIT_OK)
}

pub fn cmd_check(
    args: &CheckArgs,
    execution: Execution,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<u8> {
    if args.samples == 0 {
        writeln!(err, "warning: --samples 0, every check passes vacuously").map_err(io_err)?;
    }
    let options = CheckOptions {
        orders: args.orders.clone(),
        samples: args.samples,
        seed: args.seed,
        energy_flux: if args.corrupt_energy_flux {
            EnergyFluxForm::Corrupted
        } else {
            EnergyFluxForm::Exact
        },
    };
    let report = run_checks(&options, execution)?;
    writeln!(out, "seed {} samples {} per order", args.seed, args.samples).map_err(io_err)?;
    for row in &report.rows {
        writeln!(out, "{row}").map_err(io_err)?;
    }
    if report.passed() {
        writeln!(out, "all checks passed").map_err(io_err)?;
        Ok(EXIT_OK)
    } else {
        for row in report.failures() {
            writeln!(err, "failed: {} (N={})", row.kind.label(), row.order).map_err(io_err)?;
        }
        Ok(EXIT_FAILURE)
    }
}

fn snapshot_csv(traj: &Trajectory, grid: &Grid1D, topo: &Topography, params: &ModelParams) -> Result<String> {
    let mut text = String::from("t,x,h,u_m");
    for i in 1..=params.order() {
        text.push_str(&format!(",u_{i}"));
    }
    text.push_str(",e\n");
    for snap in &traj.snapshots {
        for (i, u) in snap.states.iter().enumerate() {
            let w = model::to_primitive(u)?;
            let e = model::energy_density_conserved(u, topo.b()[i], params.g());
            text.push_str(&format!("{:?},{:?},{:?},{:?}", snap.t, grid.center(i), w.h, w.u_m));
            for ui in &w.u {
                text.push_str(&format!(",{ui:?}"));
            }
            text.push_str(&format!(",{e:?}\n"));
        }
    }
    Ok(text)
}

fn summary_csv(traj: &Trajectory, every_steps: usize) -> String {
    let mut text = String::from("t,mass,momentum,total_energy\n");
    let last = traj.summaries.len().saturating_sub(1);
    for (k, s) in traj.summaries.iter().enumerate() {
        if k % every_steps == 0 || k == last {
            text.push_str(&format!("{:?},{:?},{:?},{:?}\n", s.t, s.mass, s.momentum, s.total_energy));
        }
    }
    text
}

pub fn cmd_run(args: &RunArgs, execution: Execution, out: &mut dyn Write) -> Result<u8> {
    let config = Config::from_path(&args.config)?;
    if args.print_config {
        write!(out, "{config}").map_err(io_err)?;
        return Ok(EXIT_OK);
    }
    let scenario = config.scenario()?;
    let (grid, topo, params) = (scenario.grid, scenario.topography.clone(), scenario.params.clone());
    let mode = if args.checked_wave_speeds {
        WaveSpeedMode::Checked
    } else {
        WaveSpeedMode::Analytic
    };
    let traj = Solver::new(scenario)
        .with_execution(execution)
        .with_wave_speed_mode(mode)
        .run();

    let dir = &config.output_path;
    fs::create_dir_all(dir).map_err(io_err)?;
    write_file(&dir.join("snapshots.csv"), &snapshot_csv(&traj, &grid, &topo, &params)?)?;
    write_file(&dir.join("summary.csv"), &summary_csv(&traj, config.output.every_steps))?;
    let failure_path = dir.join("failure.txt");
    if failure_path.exists() {
        fs::remove_file(&failure_path).map_err(io_err)?;
    }

    let last = traj.summaries.last().expect("initial summary is always recorded");
    let mut line = format!(
        "t={:?} steps={} mass={:?} momentum={:?} total_energy={:?}",
        last.t, last.step, last.mass, last.momentum, last.total_energy
    );
    if params.variant() == Variant::Swme {
        line.push_str(" (energy monitored, not certified for SWME)");
    }
    if args.checked_wave_speeds {
        line.push_str(&format!(" wave_speed_warnings={}", traj.wave_speed_warnings));
    }
    writeln!(out, "{line}").map_err(io_err)?;

    match traj.failure {
        None => Ok(EXIT_OK),
        Some(e) => {
            write_file(
                &failure_path,
                &format!("partial output: run stopped at t={:?} after {} steps\n{e}\n", last.t, last.step),
            )?;
            Err(e)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_converge(args: &ConvergeArgs, execution: Execution, out: &mut dyn Write) -> Result<u8> {
    let config = Config::from_path(&args.config)?;
    let scenario = config.scenario()?;
    let reference = Reference::for_scenario(&scenario)?;
    let bottom = |x: f64| config.topography.eval(x);
    let table = convergence_study(&scenario, &args.meshes, &bottom, reference, execution)?;
    out.write_all(table.to_csv().as_bytes()).map_err(io_err)?;
    Ok(EXIT_OK)
}
