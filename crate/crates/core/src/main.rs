use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cyclegate::commands::{cmd_augment, cmd_evaluate, cmd_sweep, cmd_synth, Overrides};
use cyclegate::eval::report::fmt_rate;
use cyclegate::synth::{SynthSpec, DEFAULT_SEED};
use cyclegate::{selfcheck, Error};

#[derive(Parser)]
#[command(
    name = "cyclegate",
    version,
    about = "Cycle-consistency gating for one-shot prompt segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding `workers` in the config.
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            output_dir: self.out.clone(),
            workers: self.workers,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Gate and score every pair; write report.json, summary.csv, cycles.jsonl.
    Evaluate(Common),
    /// Evaluate at several stage-1 thresholds; write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thresholds, e.g. `0,0.18,1`. Rows keep this order.
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
    },
    /// Generate a synthetic corpus with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = SynthSpec::default().positives)]
        positives: usize,
        #[arg(long, default_value_t = SynthSpec::default().negatives)]
        negatives: usize,
        #[arg(long, default_value_t = SynthSpec::default().width)]
        width: usize,
        #[arg(long, default_value_t = SynthSpec::default().height)]
        height: usize,
        #[arg(long, default_value_t = SynthSpec::default().defect_radius)]
        defect_radius: usize,
    },
    /// Apply the configured augmentation policy to the manifest's corpus.
    Augment(Common),
    /// Run the built-in invariant checks.
    Selfcheck,
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Evaluate(c) => {
            let r = cmd_evaluate(&c.config, &c.overrides())?;
            println!(
                "catch_rate={} yield_rate={} pes={}",
                fmt_rate(r.catch_rate()),
                fmt_rate(r.yield_rate()),
                fmt_rate(r.pes())
            );
        }
        Command::Sweep { common, taus } => {
            for (tau, r) in cmd_sweep(&common.config, &taus, &common.overrides())? {
                println!(
                    "tau={} catch_rate={} yield_rate={} pes={}",
                    fmt_rate(Some(tau)),
                    fmt_rate(r.catch_rate()),
                    fmt_rate(r.yield_rate()),
                    fmt_rate(r.pes())
                );
            }
        }
        Command::Synth {
            out,
            seed,
            positives,
            negatives,
            width,
            height,
            defect_radius,
        } => {
            let spec = SynthSpec {
                positives,
                negatives,
                width,
                height,
                defect_radius,
            };
            println!("{}", cmd_synth(&out, seed, &spec)?.display());
        }
        Command::Augment(c) => {
            println!("{}", cmd_augment(&c.config, &c.overrides())?.display());
        }
        Command::Selfcheck => {
            let results = selfcheck::run_all()?;
            for r in &results {
                let mark = if r.passed { "PASS" } else { "FAIL" };
                println!("{mark} {}: {}", r.name, r.detail);
            }
            return Ok(results.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let summary: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.is_empty() && !l.starts_with("Usage:"))
                .collect();
            eprintln!(
                "error[validation]: {}",
                summary.join(" ").trim_start_matches("error: ")
            );
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error[internal]: self-check failed");
            ExitCode::from(3)
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
