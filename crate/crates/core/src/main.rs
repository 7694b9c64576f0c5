use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pcrlab::harness::{self, table, ExperimentConfig, OutputFormat, Suite};
use pcrlab::risk::{effective_dimension, effective_rank, j_star};
use pcrlab::Error;

#[derive(Parser)]
#[command(name = "pcrlab", version, about = "Principal component regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (replicate-level parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded sweep and write one row per (n, replicate, d).
    Sweep(Common),
    /// Run a verification suite and print a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// identities, classical, highdim or concentration.
        #[arg(long)]
        suite: String,
    },
    /// Print eigenvalues, tail traces, effective ranks, j* and N(mu).
    Spectrum(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    }
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    if let Some(f) = &common.format {
        cfg.format = f.parse()?;
    }
    cfg.validate()?;
    if let Some(w) = cfg.workers {
        // Ignore the error raised when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    Ok(cfg)
}

fn summary_path(out: &Path, format: OutputFormat) -> PathBuf {
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "jsonl",
    };
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.{ext}"))
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn sweep(common: &Common) -> Result<ExitCode, Error> {
    let cfg = load(common)?;
    let result = harness::run_sweep(&cfg)?;
    match &cfg.output {
        Some(path) => {
            harness::emit(&result.rows, cfg.format, path)?;
            harness::emit_summary(&result.summary, cfg.format, &summary_path(path, cfg.format))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table::write_rows(&result.rows, cfg.format, &mut lock).map_err(stdout_err)?;
            let mut err = std::io::stderr();
            table::write_summary(&result.summary, cfg.format, &mut err).map_err(stdout_err)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(common: &Common, suite: &str) -> Result<ExitCode, Error> {
    let suite: Suite = suite.parse()?;
    let cfg = load(common)?;
    let report = harness::verify(&cfg, suite)?;
    let json = report.to_json();
    match &common.out {
        Some(path) => std::fs::write(path, format!("{json}\n")).map_err(|source| Error::Io { path: path.clone(), source })?,
        None => println!("{json}"),
    }
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn spectrum(common: &Common) -> Result<ExitCode, Error> {
    let cfg = load(common)?;
    let s = cfg.build_spectrum()?;
    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(text, "family {}  p {}  trace {:.6e}", cfg.spectrum.family(), s.p(), s.trace());
    let _ = writeln!(text, "{:>6} {:>14} {:>14} {:>14} {:>14}", "j", "lambda_j", "tr_>j", "tr_>j(sq)", "eff_rank_j");
    let shown = s.p().min(20);
    for j in 0..shown {
        let _ = writeln!(
            text,
            "{:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            j + 1,
            s.lambda(j + 1),
            s.tail_trace(j, 1)?,
            s.tail_trace(j, 2)?,
            effective_rank(&s, j).unwrap_or(f64::NAN)
        );
    }
    if shown < s.p() {
        let _ = writeln!(text, "  ... {} more", s.p() - shown);
    }
    let _ = writeln!(text, "\nB = {}", cfg.constants.b);
    for &n in &cfg.n {
        let js = j_star(&s, n, cfg.constants.b)?;
        let shown = js.map(|j| j.to_string()).unwrap_or_else(|| "none (classical regime)".into());
        let _ = writeln!(text, "n {n:>8}  j* {shown}");
    }
    let _ = writeln!(text, "\n{:>14} {:>14}", "mu", "N(mu)");
    for k in 0..=8 {
        let mu = s.lambda(1) * 10f64.powi(-k);
        let _ = writeln!(text, "{mu:>14.6e} {:>14.6e}", effective_dimension(&s, mu)?);
    }
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io { path: path.clone(), source })?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(stdout_err)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Verify { common, suite } => verify(common, suite),
        Command::Spectrum(c) => spectrum(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pcrlab: {e}");
            ExitCode::from(2)
        }
    }
}
