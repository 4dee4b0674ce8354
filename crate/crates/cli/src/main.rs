//! `qpsr`: runs the reproduction experiments and validates configs.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 numerical-guard failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpsr_core::experiments::{run, ConfigFile, Experiment, OutputFormat, RunRecord};
use qpsr_core::Error;

#[derive(Parser)]
#[command(name = "qpsr", version, about = "Stochastic parameter-shift experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV (plus a JSON sidecar) or JSON record.
    Run {
        #[arg(long, value_parser = parse_experiment)]
        experiment: Experiment,
        /// TOML config; built-in defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<OutputFormat>,
        /// Worker threads; rayon's default when omitted.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config file and print its resolved hash.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Experiment to resolve against when the file does not name one.
        #[arg(long, value_parser = parse_experiment)]
        experiment: Option<Experiment>,
    },
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Io(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Core(
                Error::Config(_) | Error::InvalidArgument(_) | Error::ShiftPole { .. } | Error::ParameterLength { .. },
            ) => 2,
            Failure::Core(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn load(config: Option<&Path>) -> Result<ConfigFile, Failure> {
    Ok(match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn emit(record: &RunRecord, out: Option<&Path>, format: OutputFormat) -> Result<(), Failure> {
    let body = match format {
        OutputFormat::Csv => record.to_csv(),
        OutputFormat::Json => record.to_json(),
    };
    match out {
        Some(path) => {
            write(path, &body)?;
            if format == OutputFormat::Csv {
                write(&sidecar_path(path), &record.sidecar_json())?;
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
            format,
            threads,
        } => {
            let mut file = load(config.as_deref())?;
            if seed.is_some() {
                file.seed = seed;
            }
            let mut cfg = file.resolve(Some(experiment))?;
            if let Some(f) = format {
                cfg.format = f;
            }
            let out = out.or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
            let record = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Failure::Core(Error::InvalidArgument(format!("threads: {e}"))))?
                    .install(|| run(&cfg))?,
                None => run(&cfg)?,
            };
            emit(&record, out.as_deref(), cfg.format)
        }
        Command::Validate { config, experiment } => {
            let cfg = load(Some(&config))?.resolve(experiment)?;
            println!("ok: {} config {}", cfg.experiment, cfg.hash());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
