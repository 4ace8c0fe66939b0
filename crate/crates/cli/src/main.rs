use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use prslack_core::at_provider::{PropagateOptions, ProviderRegistry, DEFAULT_PI_SLEW};
use prslack_core::pipeline::{run_compare, run_parse, run_slack, RunConfig};
use prslack_core::slack_engine::ClockEarlyMode;
use prslack_core::synth::{generate, known_slack_chain, SynthOptions};
use prslack_core::Error;

/// Pre-routing slack estimation from Liberty, DEF, SDC and SDF inputs.
#[derive(Parser)]
#[command(name = "prslack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs, build the timing graph and optionally export it.
    Parse {
        #[command(flatten)]
        inputs: Inputs,
        /// Write the graph interchange document here.
        #[arg(long, env = "PRSLACK_OUT_GRAPH")]
        out_graph: Option<PathBuf>,
    },
    /// Estimate endpoint slack and TNS/WNS.
    Slack {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        outputs: Outputs,
        /// Exit 0 even when WNS is negative.
        #[arg(long, env = "PRSLACK_NO_FAIL_ON_WNS")]
        no_fail_on_wns: bool,
    },
    /// Estimate slack and compare against label RAT/AT.
    Compare {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        outputs: Outputs,
        /// Write the evaluation summary document here.
        #[arg(long, env = "PRSLACK_OUT_SUMMARY")]
        out_summary: Option<PathBuf>,
    },
    /// Write random synthetic benchmark circuits.
    Gen(GenArgs),
}

#[derive(Args)]
struct Inputs {
    /// Early-corner Liberty file (repeatable).
    #[arg(long, env = "PRSLACK_LIB_EARLY", value_delimiter = ',')]
    lib_early: Vec<PathBuf>,
    /// Late-corner Liberty file (repeatable).
    #[arg(long, env = "PRSLACK_LIB_LATE", value_delimiter = ',')]
    lib_late: Vec<PathBuf>,
    #[arg(long, env = "PRSLACK_DEF")]
    def: Option<PathBuf>,
    #[arg(long, env = "PRSLACK_SDC")]
    sdc: Option<PathBuf>,
    /// SDF with delay labels (and optional embedded pin labels).
    #[arg(long, env = "PRSLACK_SDF")]
    sdf: Option<PathBuf>,
    /// Pin label sidecar (AT/RAT/SLEW records).
    #[arg(long, env = "PRSLACK_LABELS")]
    labels: Option<PathBuf>,
    /// Arrival-time source: labels, external or propagate.
    #[arg(long = "at", env = "PRSLACK_AT", default_value = "propagate")]
    at_source: String,
    /// Prediction sidecar for `--at external`.
    #[arg(long, env = "PRSLACK_PREDICTIONS")]
    predictions: Option<PathBuf>,
    /// Fill pins missing from labels or predictions by propagation.
    #[arg(long, env = "PRSLACK_PERMISSIVE_LABELS")]
    permissive_labels: bool,
    /// Resampled LUT shape, ROWSxCOLS.
    #[arg(long, env = "PRSLACK_LUT_SHAPE", default_value = "7x7", value_parser = parse_shape)]
    lut_shape: (usize, usize),
    /// Linear net delay in ns per micron (default: zero net delay).
    #[arg(long, env = "PRSLACK_NET_DELAY_PER_MICRON")]
    net_delay_per_micron: Option<f64>,
    /// Slew at primary inputs, ns.
    #[arg(long, env = "PRSLACK_PI_SLEW", default_value_t = DEFAULT_PI_SLEW)]
    pi_slew: f64,
    /// Early clock value: early-rise or min-rise-fall.
    #[arg(long, env = "PRSLACK_CLOCK_EARLY", default_value = "early-rise", value_parser = parse_clock_early)]
    clock_early: ClockEarlyMode,
    /// Worker threads (default: all cores).
    #[arg(long, env = "PRSLACK_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct Outputs {
    /// Write the structured (JSON) report here.
    #[arg(long, env = "PRSLACK_OUT_REPORT")]
    out_report: Option<PathBuf>,
    /// Write the text report here instead of standard output.
    #[arg(long, env = "PRSLACK_OUT_TEXT")]
    out_text: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, env = "PRSLACK_GEN_OUT_DIR")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random circuits (seeds seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 50)]
    max_pins: usize,
    /// Instead of random circuits, write a buffer chain whose only
    /// endpoint has exactly this slack.
    #[arg(long, allow_hyphen_values = true)]
    known_slack: Option<f64>,
    #[arg(long, default_value_t = 4)]
    stages: usize,
    #[arg(long, default_value_t = 0.5)]
    stage_delay: f64,
    #[arg(long, default_value = "7x7", value_parser = parse_shape)]
    lut_shape: (usize, usize),
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let n = |v: &str| v.trim().parse::<usize>().ok().filter(|n| *n > 0);
    match (n(r), n(c)) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(format!("expected positive ROWSxCOLS, got {s:?}")),
    }
}

fn parse_clock_early(s: &str) -> Result<ClockEarlyMode, String> {
    ClockEarlyMode::from_token(s).ok_or_else(|| format!("expected early-rise or min-rise-fall, got {s:?}"))
}

impl Inputs {
    fn config(&self) -> RunConfig {
        RunConfig {
            lib_early: self.lib_early.clone(),
            lib_late: self.lib_late.clone(),
            def: self.def.clone(),
            sdc: self.sdc.clone(),
            sdf: self.sdf.clone(),
            labels: self.labels.clone(),
            predictions: self.predictions.clone(),
            at_source: self.at_source.clone(),
            lut_shape: self.lut_shape,
            propagate: PropagateOptions {
                pi_slew: self.pi_slew,
                net_delay_per_micron: self.net_delay_per_micron,
                permissive: self.permissive_labels,
            },
            clock_early: self.clock_early,
        }
    }

    fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()
            .context("starting worker threads")
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FAILURE: u8 = 3;

fn run(cli: Cli) -> anyhow::Result<u8> {
    let registry = ProviderRegistry::default();
    match cli.command {
        Command::Parse { inputs, out_graph } => {
            let cfg = inputs.config();
            let run = inputs.pool()?.install(|| run_parse(&cfg))?;
            warn(&run.warnings);
            if let Some(path) = out_graph {
                let (doc, w) = run.document();
                warn(&w);
                write(&path, &doc.to_json())?;
            }
            println!("{}", run.stats.line());
            println!("{}", run.phases.line());
            Ok(0)
        }
        Command::Slack {
            inputs,
            outputs,
            no_fail_on_wns,
        } => {
            let cfg = inputs.config();
            let run = inputs.pool()?.install(|| run_slack(&cfg, &registry))?;
            warn(&run.warnings);
            emit_report(&run.report, &outputs)?;
            eprintln!("{}", run.parse.phases.line());
            Ok(if run.report.wns < 0.0 && !no_fail_on_wns {
                EXIT_VIOLATION
            } else {
                0
            })
        }
        Command::Compare {
            inputs,
            outputs,
            out_summary,
        } => {
            let cfg = inputs.config();
            let (run, summary) = inputs.pool()?.install(|| run_compare(&cfg, &registry))?;
            warn(&run.warnings);
            emit_report(&run.report, &outputs)?;
            if let Some(path) = out_summary {
                write(&path, &summary.to_json())?;
            }
            println!("{}", summary.line());
            Ok(0)
        }
        Command::Gen(g) => {
            let circuits = match g.known_slack {
                Some(s) => vec![known_slack_chain(g.stages, g.stage_delay, s)],
                None => (g.seed..g.seed + g.count)
                    .map(|seed| {
                        generate(&SynthOptions {
                            max_pins: g.max_pins,
                            seed,
                        })
                    })
                    .collect::<Result<_, _>>()?,
            };
            for c in circuits {
                let f = c.write_files(&g.out_dir, g.lut_shape)?;
                println!(
                    "{} lib_early={} lib_late={} def={} sdc={} sdf={}",
                    c.name,
                    f.lib_early.display(),
                    f.lib_late.display(),
                    f.def.display(),
                    f.sdc.display(),
                    f.sdf.display()
                );
            }
            Ok(0)
        }
    }
}

fn emit_report(report: &prslack_core::slack_engine::SlackReport, outputs: &Outputs) -> anyhow::Result<()> {
    if let Some(path) = &outputs.out_report {
        write(path, &report.to_json())?;
    }
    match &outputs.out_text {
        Some(path) => write(path, &report.to_text())?,
        None => print!("{}", report.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e.root(), Error::Argument(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_FAILURE })
        }
    }
}
