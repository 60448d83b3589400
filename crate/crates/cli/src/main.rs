//! `bbm`: edges, profiles, simulations and comparisons for branching Brownian
//! motion with selection.
//!
//! Exit codes: 0 ok, 1 a gated comparison failed, 2 configuration error,
//! 3 missing data.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bbm_core::harness::{
    self, profile::FIGURE1_POINTS, ExitStatus, ExperimentConfig, Mode, Overrides, ProfileColumn, ProfileSpec,
};
use bbm_core::theory::ModelParams;
use bbm_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bbm", version, about = "Branching Brownian motion with selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the edges and regime diagnostics for (rho, beta).
    Edges(ParamArgs),
    /// Tabulate f, f_airy and f_gauss on a uniform grid as CSV.
    Profile(ProfileArgs),
    /// The profile at rho = 1e-4, beta = 1e-13 over [L_dagger, L*].
    Figure1(Figure1Args),
    /// Run the replicates of an experiment and write CSV output.
    Simulate(RunArgs),
    /// Compare simulation output with theory and write report.json/report.csv.
    Compare(CompareArgs),
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Column {
    F,
    #[value(name = "f_airy")]
    FAiry,
    #[value(name = "f_gauss")]
    FGauss,
}

impl From<Column> for ProfileColumn {
    fn from(c: Column) -> Self {
        match c {
            Column::F => ProfileColumn::F,
            Column::FAiry => ProfileColumn::FAiry,
            Column::FGauss => ProfileColumn::FGauss,
        }
    }
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Grid start; defaults to L_dagger.
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    /// Grid end; defaults to L*.
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Columns to emit; all three by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    columns: Vec<Column>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Figure1Args {
    #[arg(long, default_value_t = FIGURE1_POINTS)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Let calibrated bands decide the exit status.
    #[arg(long)]
    gate: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Run the simulation first instead of reading existing output.
    #[arg(long)]
    simulate: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let o = Overrides {
            replicates: self.replicates,
            base_seed: self.base_seed,
            output_dir: self.output_dir.clone(),
            dt: self.dt,
            t_end: self.t_end,
            rho: self.rho,
            beta: self.beta,
            mode: self.gate.then_some(Mode::Gate),
        };
        ExperimentConfig::load(&self.config)?.apply(&o)
    }
}

fn params(a: &ParamArgs) -> Result<ModelParams> {
    ModelParams::new(a.rho, a.beta).map_err(|e| Error::Config(e.to_string()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::Edges(a) => {
            emit(&harness::cmd_edges(&params(&a)?), None)?;
        }
        Command::Profile(a) => {
            let p = params(&a.params)?;
            let mut spec = ProfileSpec::edges_to_edges(&p, a.points);
            spec.lo = a.lo.unwrap_or(spec.lo);
            spec.hi = a.hi.unwrap_or(spec.hi);
            if !a.columns.is_empty() {
                spec.columns = a.columns.iter().map(|&c| c.into()).collect();
            }
            let csv = harness::cmd_profile(&p, &spec).map_err(|e| Error::Config(e.to_string()))?;
            emit(&csv, a.out.as_deref())?;
        }
        Command::Figure1(a) => {
            let p = harness::profile::figure1_params();
            let csv = harness::cmd_profile(&p, &ProfileSpec::edges_to_edges(&p, a.points))
                .map_err(|e| Error::Config(e.to_string()))?;
            emit(&csv, a.out.as_deref())?;
        }
        Command::Simulate(a) => {
            let cfg = a.load()?;
            let out = harness::cmd_simulate(&cfg, harness::workers_from_env()?)?;
            eprintln!(
                "{} replicates, {} exploded, output in {}",
                cfg.replicates,
                out.exploded.len(),
                cfg.output_dir.display()
            );
        }
        Command::Compare(a) => {
            let cfg = a.run.load()?;
            if a.simulate {
                harness::cmd_simulate(&cfg, harness::workers_from_env()?)?;
            }
            let rows = harness::cmd_compare(&cfg)?;
            for r in &rows {
                let verdict = match (r.gated, r.pass) {
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                    (false, true) => "monitor ok",
                    (false, false) => "monitor out of band",
                };
                eprintln!(
                    "{:<28} observed {:>14.6e} predicted {:>14.6e}  {verdict}",
                    r.name, r.observed, r.predicted
                );
            }
            return Ok(ExitStatus::for_reports(&rows));
        }
    }
    Ok(ExitStatus::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match run(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::for_error(&e)
        }
    };
    ExitCode::from(status.code() as u8)
}
