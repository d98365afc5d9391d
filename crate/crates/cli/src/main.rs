//! `cfscil` command-line front end.
//!
//! Exit codes: 0 success, 1 gradient check above tolerance, 2 usage error,
//! otherwise the category code of the failing library error (see
//! `Error::exit_code`). Failures print one line `error: <category>: <message>`
//! to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfscil_core::harness::checkpoint::Checkpoint;
use cfscil_core::harness::config::ExperimentConfig;
use cfscil_core::harness::format::{read_header, write_embeddings};
use cfscil_core::harness::gradcheck::{run_gradcheck, TOLERANCE};
use cfscil_core::harness::report::{write_compression_csv, write_session_csv};
use cfscil_core::harness::run::{compression_bench, run_config};
use cfscil_core::harness::synth::{generate_synthetic, SynthSpec};
use cfscil_core::{Error, Mode, Result};

const GRADCHECK_POINTS: usize = 20;

#[derive(Parser)]
#[command(name = "cfscil", version, about = "Explicit-memory few-shot class-incremental learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every session and write the per-session CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured mode.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        mode: Option<u8>,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Writes the final state as JSON.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Finite-difference check of both analytic gradients.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write synthetic train and eval embedding files.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out stem>.eval.<out extension>`.
        #[arg(long)]
        eval_out: Option<PathBuf>,
    },
    /// Accuracy with and without 2× prototype compression.
    Compressbench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the header of an embedding file.
    Inspect { file: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CFSCIL_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e);
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run { config, mode, out, checkpoint } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(m) = mode {
                cfg.mode = Mode::try_from(m).map_err(Error::InvalidConfig)?;
            }
            let outcome = run_config(&cfg)?;
            write_session_csv(sink(out.as_deref())?, &outcome.results)?;
            if let Some(path) = checkpoint {
                Checkpoint {
                    config: cfg,
                    results: outcome.results,
                    learner: outcome.learner,
                }
                .save(path)?;
            }
        }
        Command::Gradcheck { seed } => {
            let report = run_gradcheck(seed, GRADCHECK_POINTS)?;
            println!(
                "points={} alignment_max_rel_err={:.3e} nudge_max_rel_err={:.3e} max_rel_err={:.3e} elapsed_s={:.3}",
                report.points,
                report.alignment_max_rel_err,
                report.nudge_max_rel_err,
                report.max_rel_err(),
                report.elapsed.as_secs_f64()
            );
            if !report.passed() {
                eprintln!("error: gradcheck: max relative error above {TOLERANCE:e}");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Synth { spec, out, eval_out } => {
            let spec = SynthSpec::load(&spec)?;
            let (train, eval) = generate_synthetic::<f32>(&spec)?;
            let eval_out = eval_out.unwrap_or_else(|| eval_path(&out));
            write_embeddings(&out, &train)?;
            write_embeddings(&eval_out, &eval)?;
            println!("{} {}", out.display(), eval_out.display());
        }
        Command::Compressbench { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = compression_bench(&cfg)?;
            write_compression_csv(sink(out.as_deref())?, &rows)?;
        }
        Command::Inspect { file } => {
            let h = read_header(&file)?;
            println!(
                "version={} d_f={} count={} bytes={}",
                h.version,
                h.d_f,
                h.sample_count,
                h.file_len()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn eval_path(train: &Path) -> PathBuf {
    let stem = train.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match train.extension() {
        Some(ext) => format!("{stem}.eval.{}", ext.to_string_lossy()),
        None => format!("{stem}.eval"),
    };
    train.with_file_name(name)
}
