use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tripod_cli::output::{scan_csv, to_json, write_files};
use tripod_cli::runner::{self, BsMatrixReport};
use tripod_cli::{load_scenario, validate, Format, Scenario, ScenarioError};
use tripod_core::{linspace, ControlSet, ScanAxis, ScanParams};

/// Storage and two-stage release of photons in a tripod-type atomic medium.
#[derive(Parser)]
#[command(name = "tripod", version)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir` of the scenario.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Which result files to write; overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Store and release the scenario's photons with the full solver.
    Simulate,
    /// Noncoalescence (Mandel dip) scan, from the scenario's [sweep] table
    /// or, without --config, from the flags below.
    HomScan(ScanArgs),
    /// Print the beam-splitter matrix between a storage and a release set.
    BsMatrix(BsArgs),
    /// Check a scenario and print its diagnostics.
    Validate,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_enum, default_value = "separation")]
    axis: CliAxis,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    start: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    stop: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    delta1: f64,
    /// Second packet width (separation axis only).
    #[arg(long, default_value_t = 1.0)]
    delta2: f64,
    /// Packet separation (width-ratio axis only).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    separation: f64,
    /// Storage set of the first photon, `phi[,chi2[,chi3]]`.
    #[arg(long, value_parser = parse_set, default_value = "0")]
    set0: ControlSet,
    /// Stage-1 release set, `phi[,chi2[,chi3]]`.
    #[arg(long, value_parser = parse_set, default_value = "0.7853981633974483")]
    set1: ControlSet,
}

#[derive(Args)]
struct BsArgs {
    /// Storage set, `phi[,chi2[,chi3]]`.
    #[arg(long, value_parser = parse_set, required_unless_present = "random")]
    set0: Option<ControlSet>,
    /// Release set, `phi[,chi2[,chi3]]`.
    #[arg(long, value_parser = parse_set, required_unless_present = "random")]
    set1: Option<ControlSet>,
    /// Draw both sets from --seed.
    #[arg(long, conflicts_with_all = ["set0", "set1"])]
    random: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliAxis {
    Separation,
    WidthRatio,
}

impl From<CliAxis> for ScanAxis {
    fn from(a: CliAxis) -> Self {
        match a {
            CliAxis::Separation => ScanAxis::Separation,
            CliAxis::WidthRatio => ScanAxis::WidthRatio,
        }
    }
}

fn parse_set(s: &str) -> Result<ControlSet, String> {
    let vals = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let (phi, chi2, chi3) = match vals[..] {
        [p] => (p, 0.0, 0.0),
        [p, c2] => (p, c2, 0.0),
        [p, c2, c3] => (p, c2, c3),
        _ => return Err("expected phi[,chi2[,chi3]]".into()),
    };
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&phi) {
        return Err(format!("phi = {phi} is outside [0, pi/2]"));
    }
    ControlSet::new(phi, chi2, chi3).map_err(|e| e.to_string())
}

fn scenario(cli: &Cli) -> Result<Scenario, ScenarioError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| ScenarioError::Invalid("this command needs --config <path>".into()))?;
    load_scenario(path)
}

fn emit(dir: &Path, files: &[(String, String)]) -> Result<(), ScenarioError> {
    let written = write_files(dir, files)
        .map_err(|e| ScenarioError::Invalid(format!("cannot write to {}: {e}", dir.display())))?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode, ScenarioError> {
    match &cli.command {
        Command::Validate => {
            let s = scenario(cli)?;
            let d = validate(&s);
            println!("cfl: {}", d.cfl);
            match d.adiabaticity {
                Some(a) => println!("adiabaticity: {a:.3e}"),
                None => println!("adiabaticity: unbounded (instantaneous switch)"),
            }
            println!("cells per packet width: {:.1}", d.cells_per_width);
            for w in &d.warnings {
                println!("warning: {w}");
            }
        }
        Command::Simulate => {
            let s = scenario(cli)?;
            let report = runner::simulate(&s)?;
            for (k, p) in report.photons.iter().enumerate() {
                let fr: Vec<String> = p
                    .stages
                    .iter()
                    .map(|st| format!("{} {:.6}", st.label, st.fraction))
                    .collect();
                println!("photon {}: {}", k + 1, fr.join(", "));
            }
            if let Some(pair) = &report.two_photon {
                let st = &pair.simulated;
                println!(
                    "two photons: p_coal1 {:.6}, p_coal2 {:.6}, p_noncoal {:.6}",
                    st.p_coal1, st.p_coal2, st.p_noncoal
                );
            }
            let dir = cli.out.clone().unwrap_or_else(|| s.output.dir.clone());
            emit(&dir, &report.files(cli.format.unwrap_or(s.output.format)))?;
        }
        Command::HomScan(args) => {
            let pool = runner::pool(cli.workers)?;
            if cli.config.is_some() {
                let s = scenario(cli)?;
                let report = runner::sweep(&s, &pool)?;
                let dir = cli.out.clone().unwrap_or_else(|| s.output.dir.clone());
                emit(&dir, &report.files(cli.format.unwrap_or(s.output.format)))?;
            } else {
                let params = ScanParams {
                    delta1: args.delta1,
                    delta2: args.delta2,
                    separation: args.separation,
                    set0: args.set0,
                    set1: args.set1,
                };
                let axis = args.axis.into();
                let xs = linspace(args.start, args.stop, args.points)?;
                let rows = runner::closed_form_scan(axis, &xs, &params, &pool)?;
                let report = runner::SweepReport {
                    schema_version: tripod_cli::output::SCHEMA_VERSION,
                    command: "hom-scan",
                    axis,
                    closed_form: rows,
                    simulated: None,
                };
                match &cli.out {
                    Some(dir) => emit(dir, &report.files(cli.format.unwrap_or_default()))?,
                    None if cli.format == Some(Format::Json) => print!("{}", to_json(&report)),
                    None => print!("{}", scan_csv(&report.closed_form)),
                }
            }
        }
        Command::BsMatrix(args) => {
            let report = match (args.set0, args.set1) {
                (Some(a), Some(b)) if !args.random => BsMatrixReport::new(a, b),
                _ => BsMatrixReport::random(cli.seed),
            };
            print!("{}", report.text());
            if let Some(dir) = &cli.out {
                emit(dir, &report.files(cli.format.unwrap_or_default()))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
