use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use parest::harness::{self, emit_report, lookup, render, ExperimentConfig, OutputFormat, RunRecord};
use parest::Error;

#[derive(Parser)]
#[command(name = "parest", version, about = "Parareal error estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a config once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Reproduce a built-in table by name or number.
    Reproduce {
        #[arg(long)]
        table: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// List the built-in tables.
    Tables,
    /// Run the quick property checks.
    Selftest,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn output(records: &[RunRecord], format: OutputFormat, path: Option<&PathBuf>) -> Result<(), Error> {
    match path {
        Some(p) => emit_report(records, format, p),
        None => {
            print!("{}", render(records, format)?);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rec = harness::run_experiment(&cfg)?;
            output(&[rec], cfg.format, cfg.output.as_ref())?;
        }
        Command::Sweep { config, param, values } => {
            let cfg = ExperimentConfig::load(&config)?;
            let recs = harness::run_sweep(&cfg, &param, &values)?;
            output(&recs, cfg.format, cfg.output.as_ref())?;
        }
        Command::Reproduce { table, out, format } => {
            let spec = lookup(&table)?;
            let recs = spec.run()?;
            let format = format.map(Into::into).unwrap_or(OutputFormat::Csv);
            output(&recs, format, out.as_ref())?;
        }
        Command::Tables => {
            for t in harness::registry() {
                println!("{:>2}  {:<20} {} = {}", t.number, t.name, t.param, t.values.join(","));
            }
        }
        Command::Selftest => {
            let results = harness::selftest::run_selftest();
            let mut failed = 0;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", results.len());
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            match e.category() {
                "config" => ExitCode::from(2),
                "io" => ExitCode::from(3),
                "solver" => ExitCode::from(4),
                _ => ExitCode::from(5),
            }
        }
    }
}
