mod args;
mod commands;
mod job;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use args::{Cli, Command, Format};

/// Exit status classes: 2 for invalid input, 3 for numerical refusal.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<ap_core::Error> for Failure {
    fn from(e: ap_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

/// Result of a subcommand: a JSON document and, for tabular reports, CSV text.
pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    job: Value,
    result: Value,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("AP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::Invalid(format!(
            "AP_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))
}

fn parse(argv: &[String]) -> Result<Cli, Failure> {
    Cli::try_parse_from(argv).map_err(|e| Failure::Invalid(e.to_string()))
}

fn execute(mut cli: Cli) -> Result<(), Failure> {
    if let Command::Run(run) = &cli.command {
        let text = std::fs::read_to_string(&run.job)
            .map_err(|e| Failure::Invalid(format!("cannot read job file `{}`: {e}", run.job)))?;
        let argv = job::job_to_argv(&text).map_err(Failure::Invalid)?;
        let inner = parse(&argv)?;
        cli = Cli {
            command: inner.command,
            out: inner.out.or(cli.out),
            format: if inner.format == Format::Json {
                cli.format
            } else {
                inner.format
            },
        };
    }
    let output = commands::dispatch(&cli.command)?;
    let text = match cli.format {
        Format::Json => {
            let report = Report {
                tool: "ap",
                version: env!("CARGO_PKG_VERSION"),
                command: cli.command.name(),
                job: serde_json::to_value(&cli.command).expect("arguments serialize"),
                result: output.json,
            };
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => output.csv.ok_or_else(|| {
            Failure::Invalid(format!(
                "`{}` has no CSV form; use --format json",
                cli.command.name()
            ))
        })?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Invalid(format!("cannot write `{path}`: {e}"))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Invalid(format!("cannot write report: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(msg) | Failure::Numerical(msg)) = &f;
            eprintln!("ap: {msg}");
            ExitCode::from(f.code())
        }
    }
}
