use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fsmqa_cli::config::{BackendConfig, RunConfig};
use fsmqa_cli::evaluate::render_text;
use fsmqa_cli::fsio::read_transcript;
use fsmqa_cli::{cmd_eval, cmd_replay, cmd_run, exit, inspect, CliError};
use fsmqa_core::dataset::{DatasetKind, SamplePlan};
use fsmqa_core::prompt::Setting;
use fsmqa_core::transcript::TerminatorVariant;

#[derive(Parser)]
#[command(name = "fsmqa", version, about = "Multi-hop QA runs with a state-machine prompting strategy and baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset, run a strategy over it and score the results.
    Run(RunArgs),
    /// Recompute metrics for a run directory.
    Eval { run_dir: PathBuf },
    /// Rerun a transcript against its recorded responses.
    Replay {
        transcript: PathBuf,
        /// records.jsonl holding the question; defaults to the run directory's.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Print a transcript.
    Inspect {
        transcript: PathBuf,
        /// Show prompts and responses untruncated.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// hotpotqa, 2wiki or musique.
    #[arg(long)]
    kind: Option<DatasetKind>,
    #[arg(long)]
    strategy: Option<String>,
    /// 1 (answer only) or 2 (answer plus supporting facts).
    #[arg(long)]
    setting: Option<Setting>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Endpoint URL or path to a response script.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    max_iterations: Option<u32>,
    #[arg(long)]
    max_revisions: Option<u32>,
    /// continue or identical.
    #[arg(long, value_parser = parse_terminator)]
    terminator: Option<TerminatorVariant>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop after executing this many records; rerun to resume.
    #[arg(long)]
    limit: Option<usize>,
}

fn parse_terminator(s: &str) -> Result<TerminatorVariant, String> {
    match s.to_ascii_lowercase().as_str() {
        "continue" => Ok(TerminatorVariant::Continue),
        "identical" => Ok(TerminatorVariant::Identical),
        other => Err(format!("unknown terminator `{other}` (expected continue or identical)")),
    }
}

fn missing(flag: &str) -> CliError {
    CliError::Config(format!("--{flag} is required without --config"))
}

fn build_config(a: &RunArgs) -> Result<RunConfig, CliError> {
    let mut c = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(
            a.dataset.clone().ok_or_else(|| missing("dataset"))?,
            a.kind.ok_or_else(|| missing("kind"))?,
            a.strategy.as_deref().ok_or_else(|| missing("strategy"))?,
            BackendConfig::from_flag(a.backend.as_deref().ok_or_else(|| missing("backend"))?, a.model.as_deref()),
            a.out.clone().ok_or_else(|| missing("out"))?,
        ),
    };
    if a.config.is_some() {
        if let Some(v) = &a.dataset {
            c.dataset = v.clone();
        }
        if let Some(v) = a.kind {
            c.kind = v;
        }
        if let Some(v) = &a.strategy {
            c.strategy = v.clone();
        }
        if let Some(v) = &a.backend {
            c.backend = BackendConfig::from_flag(v, a.model.as_deref());
        }
        if let Some(v) = &a.out {
            c.out = v.clone();
        }
    }
    if let (Some(m), BackendConfig::Openai { model, .. }) = (&a.model, &mut c.backend) {
        *model = m.clone();
    }
    if let Some(v) = a.setting {
        c.setting = v;
    }
    if let Some(size) = a.sample_size {
        c.sample = Some(SamplePlan { size, seed: a.seed });
    }
    if let Some(v) = a.concurrency {
        c.concurrency = v;
    }
    if let Some(v) = a.max_iterations {
        c.budgets.max_iterations = v;
    }
    if let Some(v) = a.max_revisions {
        c.budgets.max_revisions_per_output = v;
    }
    if let Some(v) = a.terminator {
        c.terminator = v;
    }
    c.apply_env();
    Ok(c)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = build_config(&args)?;
            let summary = cmd_run(&config, args.limit)?;
            eprintln!(
                "{}: executed {}, done {}, failed {}, pending {}",
                summary.run_dir.display(),
                summary.executed,
                summary.done,
                summary.failed,
                summary.pending
            );
            if summary.reports_written {
                let text = std::fs::read_to_string(summary.run_dir.join(fsmqa_cli::fsio::METRICS_TXT)).unwrap_or_default();
                print!("{text}");
            }
            Ok(summary.exit_code())
        }
        Command::Eval { run_dir } => {
            let outcome = cmd_eval(&run_dir)?;
            print!("{}", render_text(&outcome.reports));
            Ok(if outcome.skipped == 0 { exit::OK } else { exit::INCOMPLETE })
        }
        Command::Replay { transcript, records } => {
            let report = cmd_replay(&transcript, records.as_deref())?;
            match &report.divergence {
                None => println!("{} [{}]: equal", report.record_id, report.strategy),
                Some(d) => {
                    let at = d.entry.map(|i| format!("entry {i}")).unwrap_or_else(|| "summary".into());
                    println!("{} [{}]: diverged at {at}: {}", report.record_id, report.strategy, d.detail);
                }
            }
            Ok(if report.equal { exit::OK } else { exit::DIVERGED })
        }
        Command::Inspect { transcript, full } => {
            let t = read_transcript(&transcript)?;
            print!("{}", inspect::render(&t, full));
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let code = match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit::ERROR
        }
    };
    ExitCode::from(code as u8)
}
