//! Thin command-line front end; every subcommand maps one-to-one onto a
//! library entry point. Exit codes: 0 = success and all pass criteria met,
//! 1 = solver or I/O error, 2 = experiment ran but its criteria failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlagg::diagnostics::{
    run_continuous_dependence, run_pressure_interpolation_study, run_stability_experiment,
    run_yosida_suite, ExperimentReport,
};
use nlagg::io::{export_field_csv, parse_config, simulate_to_dir};
use nlagg::potential::PotentialSpec;
use nlagg::sim::InitialCondition;

#[derive(Parser)]
#[command(name = "nlagg", version, about = "Nonlocal two-phase flow simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigOut {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a coupled simulation into an output directory.
    Simulate {
        #[command(flatten)]
        io: ConfigOut,
        /// Override the grid to N x N cells.
        #[arg(long)]
        grid: Option<usize>,
        /// Override the random-mix seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Continue a simulation from a checkpoint directory.
    Restart {
        #[command(flatten)]
        io: ConfigOut,
        /// Checkpoint directory to resume from.
        #[arg(long)]
        resume: PathBuf,
    },
    /// Distance between the unmatched-density run and the matched-density
    /// reference, fitted against the density difference.
    StabilityStudy {
        #[command(flatten)]
        io: ConfigOut,
        /// Density differences, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
        eps: Vec<f64>,
        /// Reference density of the matched-density run.
        #[arg(long, default_value_t = 1.0)]
        rho_bar: f64,
    },
    /// Perturbed-trajectory growth against the Gronwall envelope.
    DependenceStudy {
        #[command(flatten)]
        io: ConfigOut,
        /// Initial-perturbation amplitudes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        deltas: Vec<f64>,
    },
    /// Pressure interpolation ratio over random forcings and grid refinement.
    PressureStudy {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Grid sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Property suite of the regularized potential.
    YosidaCheck {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Regularization parameters, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
        lambdas: Vec<f64>,
        /// Optional report directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a binary field snapshot to CSV.
    ExportCsv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn report_outcome(report: &ExperimentReport, out: Option<&PathBuf>) -> nlagg::Result<ExitCode> {
    if let Some(dir) = out {
        report.write_dir(dir)?;
    }
    for (name, value) in &report.fitted {
        println!("{}: {name} = {value}", report.name);
    }
    if report.pass {
        println!("{}: PASS ({})", report.name, report.criterion);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{}: FAIL ({})", report.name, report.criterion);
        Ok(ExitCode::from(2))
    }
}

fn run() -> nlagg::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { io, grid, seed } => {
            let bytes = std::fs::read(&io.config)?;
            let mut cfg = parse_config(&io.config)?;
            if let Some(n) = grid {
                cfg.domain = nlagg::grid::Domain::new(n, n, cfg.domain.lx, cfg.domain.ly)?;
            }
            if let Some(s) = seed {
                if let InitialCondition::RandomMix { seed, .. } = &mut cfg.initial {
                    *seed = s;
                }
            }
            let summary = simulate_to_dir(cfg, &bytes, &io.out, None)?;
            let last = summary.ledger.last().expect("ledger is never empty");
            println!(
                "simulate: finished at t = {} ({} steps), E = {}, outputs in {}",
                last.t,
                summary.final_state.step,
                last.e_total,
                summary.out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Restart { io, resume } => {
            let bytes = std::fs::read(&io.config)?;
            let cfg = parse_config(&io.config)?;
            let summary = simulate_to_dir(cfg, &bytes, &io.out, Some(&resume))?;
            println!(
                "restart: finished at t = {} ({} steps), outputs in {}",
                summary.final_state.ch.t,
                summary.final_state.step,
                summary.out_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::StabilityStudy { io, eps, rho_bar } => {
            let cfg = parse_config(&io.config)?;
            let report = run_stability_experiment(&cfg, rho_bar, &eps)?;
            report_outcome(&report, Some(&io.out))
        }
        Command::DependenceStudy { io, deltas } => {
            let cfg = parse_config(&io.config)?;
            let report = run_continuous_dependence(&cfg, &deltas)?;
            report_outcome(&report, Some(&io.out))
        }
        Command::PressureStudy {
            out,
            grid,
            samples,
            seed,
        } => {
            let report = run_pressure_interpolation_study(&grid, samples, seed)?;
            report_outcome(&report, Some(&out))
        }
        Command::YosidaCheck {
            alpha,
            lambdas,
            out,
        } => {
            let pot = PotentialSpec::logarithmic(alpha)?;
            let report = run_yosida_suite(&pot, &lambdas)?;
            report_outcome(&report, out.as_ref())
        }
        Command::ExportCsv { input, out } => {
            export_field_csv(&input, &out)?;
            println!("export-csv: wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
