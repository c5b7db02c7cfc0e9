//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::info;

use cothinker_core::engine::Engine;
use cothinker_core::netstats::transcript_netstats;
use cothinker_core::transcript::{Clock, Strategy, ZeroClock};
use cothinker_core::{replay, BackendDescriptor, ChatBackend, Embedder, EngineConfig, MockChat, MockEmbedder, SynthMode};

use crate::config_io::{build_config, load_inventory, load_task, ConfigOptions};
use crate::http::{HttpSettings, OpenAiChat, OpenAiEmbedder};
use crate::transcript_io::{read_transcript, JsonlSink};
use crate::{AppError, SystemClock};

#[derive(Debug, Parser)]
#[command(name = "cothinker", version, about = "Multi-agent collaborative thinking runs, baselines and transcript tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full collaborative engine on a task.
    Run(RunArgs),
    /// Run a comparison strategy on a task.
    Baseline {
        #[arg(long, value_parser = parse_baseline)]
        strategy: Strategy,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print per-round network statistics of a transcript.
    Netstats {
        transcript: PathBuf,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Re-execute a transcript against its recorded completions.
    Replay { transcript: PathBuf },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Task file: plain text, or a JSON task record when it ends in `.json`.
    #[arg(long)]
    pub task: PathBuf,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Transcript output path.
    #[arg(long, default_value = "transcript.jsonl")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the offline mock chat and embedding backends.
    #[arg(long)]
    pub mock: bool,
    /// Override a config field, e.g. `--set N=2 --set beta=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long, value_parser = parse_synth_mode)]
    pub synth_mode: Option<SynthMode>,
    /// Style inventory JSON file (defaults to the built-in inventory).
    #[arg(long)]
    pub inventory: Option<PathBuf>,
}

fn parse_baseline(s: &str) -> Result<Strategy, String> {
    match Strategy::parse(s) {
        Some(Strategy::CoThinker) | None => Err(format!("unknown strategy `{s}` (io, cot, self-refine, mad, dmad)")),
        Some(st) => Ok(st),
    }
}

fn parse_synth_mode(s: &str) -> Result<SynthMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown synthesizer mode `{s}` (external, ingroup)"))
}

type Backends = (Box<dyn ChatBackend + Sync>, Box<dyn Embedder + Sync>);

pub fn build_backends(cfg: &EngineConfig) -> Result<Backends, AppError> {
    let chat: Box<dyn ChatBackend + Sync> = match &cfg.chat_backend {
        BackendDescriptor::Mock => Box::new(MockChat::new(cfg.rng_seed)),
        d => Box::new(OpenAiChat::new(HttpSettings::resolve(d, cfg, "chat_backend")?)?),
    };
    let embedder: Box<dyn Embedder + Sync> = match &cfg.embedding_backend {
        BackendDescriptor::Mock => Box::new(MockEmbedder),
        d => Box::new(OpenAiEmbedder::new(HttpSettings::resolve(d, cfg, "embedding_backend")?)?),
    };
    Ok((chat, embedder))
}

fn execute(strategy: Strategy, args: &RunArgs, out: &mut dyn Write) -> Result<(), AppError> {
    let cfg = build_config(&ConfigOptions {
        config_path: args.config.clone(),
        sets: args.sets.clone(),
        seed: args.seed,
        mock: args.mock,
        synth_mode: args.synth_mode,
    })?;
    let task = load_task(&args.task)?;
    let inventory = load_inventory(args.inventory.as_deref())?;
    let (chat, embedder) = build_backends(&cfg)?;
    // Mock runs use a zero clock so their transcripts are byte-stable.
    let clock: &dyn Clock = if cfg.chat_backend.is_mock() && cfg.embedding_backend.is_mock() { &ZeroClock } else { &SystemClock };
    let engine = Engine::new(chat.as_ref(), embedder.as_ref()).with_clock(clock).with_inventory(inventory);
    let mut sink = JsonlSink::create(&args.out)?;
    info!("{} run on task `{}`; transcript {}", strategy.name(), task.id, args.out.display());
    let (answer, transcript) = engine.run_strategy(strategy, &task, &cfg, &mut sink)?;
    info!("{} completions recorded", transcript.completion_count());
    writeln!(out, "{}", answer.text).map_err(|e| AppError::io("<stdout>", e))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), AppError> {
    let stdout = |e| AppError::io("<stdout>", e);
    match cmd {
        Command::Run(args) => execute(Strategy::CoThinker, &args, out),
        Command::Baseline { strategy, run } => execute(strategy, &run, out),
        Command::Netstats { transcript, json } => {
            let report = transcript_netstats(&read_transcript(&transcript)?)?;
            if json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                writeln!(out, "{text}").map_err(stdout)
            } else {
                write!(out, "{report}").map_err(stdout)
            }
        }
        Command::Replay { transcript } => {
            let t = read_transcript(&transcript)?;
            let answer = replay(&t)?;
            writeln!(out, "replay ok: {} records, 0 divergences", t.records.len()).map_err(stdout)?;
            writeln!(out, "{}", answer.text).map_err(stdout)
        }
    }
}

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to standard error. Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
