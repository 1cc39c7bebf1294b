//! `qrouter`: run router experiments, export figure data, verify reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrouter_core::experiment::{
    self, CircuitSource, ExperimentError, ExperimentKind, ExperimentReport, ExperimentSpec, Part, TomographyMode,
};

#[derive(Parser)]
#[command(name = "qrouter", version, about = "Quantum router simulator and tomography harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment, run tomography and write a JSON report.
    Run(RunArgs),
    /// Write one part of a report's reconstructed matrix as CSV.
    EmitFigure {
        #[arg(long)]
        report: PathBuf,
        /// `real` or `imag`.
        #[arg(long)]
        part: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a report and print one line per check.
    Verify {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["experiment", "qasm"]))]
struct RunArgs {
    /// router-superposition, router-control0 or router-control1.
    #[arg(long)]
    experiment: Option<String>,
    /// OpenQASM 2.0 file for a custom experiment.
    #[arg(long)]
    qasm: Option<PathBuf>,
    /// `none`, `ibmqx4`, or a device JSON file.
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long, default_value_t = 8192)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `full`, `routed` or `none`; defaults to routed for the classical-control experiments.
    #[arg(long)]
    tomography: Option<String>,
    /// `ibmqx4` or a coupling-map JSON file.
    #[arg(long)]
    transpile: Option<String>,
    /// Device qubit for each logical qubit, e.g. `2,0,1`.
    #[arg(long, value_delimiter = ',')]
    layout: Option<Vec<usize>>,
    /// Execute one setting per Pauli observable instead of the 3^n product settings.
    #[arg(long)]
    settings_per_observable: bool,
    /// Omit wall-clock timestamps so reports are byte-for-byte reproducible.
    #[arg(long)]
    no_timestamps: bool,
    #[arg(long)]
    out: PathBuf,
}

fn spec_from(args: &RunArgs) -> Result<ExperimentSpec, ExperimentError> {
    let invalid = ExperimentError::InvalidSpec;
    let (name, circuit_source) = match (&args.experiment, &args.qasm) {
        (Some(name), None) => {
            let kind: ExperimentKind = name.parse().map_err(invalid)?;
            if kind == ExperimentKind::Custom {
                return Err(invalid("`custom` experiments are selected with --qasm".into()));
            }
            (kind, CircuitSource::Builder)
        }
        (None, Some(path)) => (ExperimentKind::Custom, CircuitSource::Qasm(path.clone())),
        _ => return Err(invalid("give exactly one of --experiment or --qasm".into())),
    };
    let tomography = match &args.tomography {
        Some(t) => t.parse::<TomographyMode>().map_err(invalid)?,
        None => ExperimentSpec::default_tomography(name),
    };
    Ok(ExperimentSpec {
        name,
        circuit_source,
        noise: args.noise.clone(),
        shots: args.shots,
        seed: args.seed,
        tomography,
        settings_per_observable: args.settings_per_observable,
        transpile: args.transpile.clone(),
        layout: args.layout.clone(),
    })
}

fn run(args: &RunArgs) -> Result<(), ExperimentError> {
    let spec = spec_from(args)?;
    let mut result = experiment::run_experiment(&spec, !args.no_timestamps)?;
    experiment::write_run(&mut result, &args.out)?;
    let r = &result.report;
    println!("experiment: {}", spec.name.name());
    println!("fidelity: {:.6}", r.fidelity);
    if let Some(f) = r.null_path_fidelity {
        println!("null path fidelity: {f:.6}");
    }
    if let Some(n) = r.negativity {
        println!("negativity ({}): {n:.6}", r.negativity_source);
    }
    println!("control entropy: {:.6} bits", r.entropy_control_bits);
    println!("report: {}", args.out.display());
    if let Some(c) = &r.counts_file {
        println!("counts: {c}");
    }
    Ok(())
}

fn emit_figure(report: &PathBuf, part: &str, out: &PathBuf) -> Result<(), ExperimentError> {
    let part: Part = part.parse().map_err(ExperimentError::InvalidSpec)?;
    let r = ExperimentReport::read(report)?;
    std::fs::write(out, experiment::emit_figure_data(&r, part))
        .map_err(|e| ExperimentError::Io { path: out.display().to_string(), message: e.to_string() })
}

fn verify(report: &PathBuf) -> Result<bool, ExperimentError> {
    let r = ExperimentReport::read(report)?;
    let checks = experiment::verify(&r);
    for c in &checks {
        println!("{c}");
    }
    let passed = checks.iter().all(|c| c.passed);
    println!("{}", if passed { "all checks passed" } else { "verification failed" });
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => run(args).map(|()| true),
        Command::EmitFigure { report, part, out } => emit_figure(report, part, out).map(|()| true),
        Command::Verify { report } => verify(report),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
