use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use camtile_core::pipeline::{
    run_eval, run_extract, run_synth, BackendKind, EvalOptions, PipelineConfig,
};
use camtile_core::synth::{ClassMix, CorpusOptions};
use clap::{Parser, Subcommand};

/// Camera tile detection for robotic surgery screen recordings.
#[derive(Parser)]
#[command(name = "camtile", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every frame and write extraction.json.
    Extract {
        /// Directory of numbered frames, or a `frame_index,path` list file.
        #[arg(long)]
        input: PathBuf,
        /// Pipeline TOML; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_backend)]
        backend: Option<BackendKind>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        emit_scores: bool,
        /// Also write frames.csv.
        #[arg(long)]
        csv: bool,
    },
    /// Score an extraction against an annotation CSV.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop frames without a camera tile from the confusion matrices.
        #[arg(long)]
        exclude_no_ui: bool,
        /// Binary metrics from smoothed segments instead of raw frames.
        #[arg(long)]
        smoothed: bool,
    },
    /// Render a labelled synthetic corpus.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Class weights, e.g. `NONE=1,T2_ACTIVE=3`.
        #[arg(long)]
        mix: Option<String>,
        /// Frames per label run.
        #[arg(long, default_value_t = 1)]
        run_length: usize,
    },
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse().map_err(|e: camtile_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract {
            input,
            config,
            out,
            backend,
            workers,
            emit_scores,
            csv,
        } => {
            let mut cfg = match &config {
                Some(path) => PipelineConfig::load(path)
                    .with_context(|| format!("loading {}", path.display()))?,
                None => PipelineConfig::default(),
            };
            if let Some(b) = backend {
                cfg.backend = b;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            cfg.emit_scores |= emit_scores;
            cfg.emit_csv |= csv;
            let output = run_extract(&input, &cfg, &out)?;
            let s = &output.summary;
            println!(
                "{} frames ({} unreadable), {} active segments, {:.1} fps",
                s.frames, s.error_frames, s.segments, s.throughput.fps
            );
        }
        Command::Eval {
            pred,
            truth,
            out,
            exclude_no_ui,
            smoothed,
        } => {
            let report = run_eval(
                &pred,
                &truth,
                &out,
                EvalOptions {
                    exclude_no_ui,
                    smoothed,
                },
            )?;
            if let Some(tile) = &report.tile {
                println!("tile macro F1     {:.4}", tile.macro_f1);
            }
            println!("frame accuracy    {:.4}", report.frame_accuracy);
            for m in [
                &report.binary_including_no_ui,
                &report.binary_excluding_no_ui,
            ] {
                println!(
                    "binary {:<17} acc {:.4}  P {:.4}  R {:.4}  F1 {:.4}",
                    format!("{:?}", m.scope),
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1
                );
            }
        }
        Command::Synth {
            n,
            seed,
            out,
            mix,
            run_length,
        } => {
            anyhow::ensure!(run_length >= 1, "--run-length must be at least 1");
            let mut opts = CorpusOptions {
                run_length: (run_length, run_length),
                ..Default::default()
            };
            if let Some(spec) = mix {
                opts.mix = ClassMix::parse(&spec)?;
            }
            run_synth(n, seed, &out, &opts)?;
            println!("wrote {n} frames to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
