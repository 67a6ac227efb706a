//! The `rotcurl` front end: JSON run configurations, the six pipelines and
//! report emission.
//!
//! ```text
//! rotcurl <subcommand> --config <path> [--seed N] [--out DIR] [--format csv|json|both]
//! ```
//!
//! Exit codes: 0 ok, 2 configuration or contract error, 3 failed check, 4 i/o error.
//! `ROTCURL_THREADS` caps the worker pool.

mod config;
mod pipelines;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use config::{unit_disk_grid, Format, Limits, OutputConfig, RunConfig, Subcommand};
pub use pipelines::{run_pipeline, PipelineOutput};
pub use report::{emit_report, Cell, ReportDoc, ReportTable};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILED: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Contract(_) => EXIT_CONFIG,
        Error::InvariantViolation(_) | Error::Infeasible(_) => EXIT_FAILED,
        Error::Io(_) => EXIT_IO,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config(_) => "config",
        Error::Contract(_) => "contract",
        Error::InvariantViolation(_) => "invariant_violation",
        Error::Infeasible(_) => "infeasible",
        Error::Io(_) => "io",
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rotcurl",
    version,
    about = "Checks on rotation-valued matrix fields"
)]
pub struct Args {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to `output.dir`, then the working directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub doc: ReportDoc,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.doc.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_FAILED
        }
    }
}

/// Runs one pipeline and writes its reports.
///
/// The config echo leaves out the output directory so that the JSON report
/// depends only on the configuration and seed.
pub fn run(
    sub: Subcommand,
    cfg: RunConfig,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
) -> Result<RunOutcome> {
    let mut cfg = cfg.prepare(sub, seed)?;
    let dir = out
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let format = format.or(cfg.output.format).unwrap_or_default();
    cfg.output = OutputConfig {
        dir: None,
        format: Some(format),
    };
    let output = run_pipeline(sub, &cfg)?;
    let doc = ReportDoc {
        run: serde_json::to_value(&cfg)
            .map_err(|e| Error::Contract(format!("config is not serializable: {e}")))?,
        results: output.results,
        failures: output.failures,
        summary: output.summary,
    };
    let files = emit_report(&doc, &output.table, format, &dir, sub.name())?;
    Ok(RunOutcome { doc, files })
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("ROTCURL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Error::Config(format!(
            "ROTCURL_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    // a pool already built by an earlier call in this process is kept
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn run_args(args: Args) -> Result<RunOutcome> {
    configure_threads()?;
    let cfg = RunConfig::load(&args.config).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", args.config.display()),
        )),
        other => other,
    })?;
    run(args.subcommand, cfg, args.seed, args.out, args.format)
}

/// Parses `argv`, runs, prints a one-line summary or a JSON error record, and
/// returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let sub = args.subcommand;
    match run_args(args) {
        Ok(outcome) => {
            let code = outcome.exit_code();
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if code != EXIT_OK {
                let record = serde_json::json!({ "subcommand": sub.name(), "failures": outcome.doc.failures });
                eprintln!("{record}");
            }
            code
        }
        Err(e) => {
            let record = serde_json::json!({
                "subcommand": sub.name(),
                "error": error_kind(&e),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            exit_code(&e)
        }
    }
}
