//! Command-line front end for the plan-verification pipeline. All logic
//! lives in `repv::pipeline`; this binary only parses arguments, reads input
//! files, and maps errors to exit codes (0 success, 1 pipeline failure,
//! 2 usage error).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use repv::fixtures::Domain;
use repv::pipeline::{
    cmd_calibrate, cmd_check, cmd_l2a, cmd_parse, cmd_refine, cmd_report, cmd_train, cmd_verify,
    Backend, FsaFormat, PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "repv",
    about = "Verify action plans against natural-language rules: parse, compile to automata, model-check, and calibrate a learned verifier.",
    version
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured interpreter/embedder backend.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,

    /// Override the configured confidence threshold for fine-tuning exports.
    #[arg(long, global = true)]
    tau: Option<f64>,

    /// Override the configured verification domain.
    #[arg(long, global = true)]
    domain: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a plan and print its canonical form.
    Parse {
        /// Plan source file.
        plan: PathBuf,
    },
    /// Compile a plan to its finite-state automaton.
    L2a {
        plan: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value = "dot")]
        format: FormatArg,
    },
    /// Model-check a plan against a temporal-logic formula.
    Check {
        plan: PathBuf,
        /// Formula source, e.g. 'G (pedestrian -> X !"publish velocity")'.
        #[arg(long)]
        phi: String,
    },
    /// Train the latent projector on the synthetic corpus.
    Train {
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the distance-calibration table for a trained projector.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        /// Table output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional per-sample verdict stream output (JSONL).
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Verify one plan against one rule with a calibrated guarantee.
    Verify {
        plan: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// Natural-language rule text.
        #[arg(long)]
        rule: String,
        /// Optional formula; adds the model checker's ground truth.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Export fine-tuning datasets from verified candidate plans.
    Refine {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// Supervised fine-tuning output (JSONL).
        #[arg(long)]
        sft: PathBuf,
        /// Preference-pair output (JSONL).
        #[arg(long)]
        dpo: PathBuf,
    },
    /// Summarize a verdict stream as accuracy and guarantee metrics.
    Report {
        /// Verdict stream (JSONL), as written by `calibrate --verdicts`.
        verdicts: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(backend) = cli.backend {
        cfg.backend = match backend {
            BackendArg::Mock => Backend::Mock,
            BackendArg::Remote => Backend::Remote,
        };
    }
    if let Some(tau) = cli.tau {
        cfg.tau = tau;
    }
    if let Some(domain) = &cli.domain {
        cfg.domain = domain.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, PipelineError> {
    Ok(fs::read_to_string(path)?)
}

fn run(cli: &Cli) -> Result<String, PipelineError> {
    let cfg = load_config(cli)?;
    let dom: Domain = cfg.domain()?;
    match &cli.command {
        Command::Parse { plan } => cmd_parse(&read(plan)?, &dom),
        Command::L2a { plan, format } => {
            let format = match format {
                FormatArg::Dot => FsaFormat::Dot,
                FormatArg::Json => FsaFormat::Json,
            };
            cmd_l2a(&read(plan)?, &dom, format)
        }
        Command::Check { plan, phi } => cmd_check(&read(plan)?, &dom, phi),
        Command::Train { out } => cmd_train(&cfg, out),
        Command::Calibrate {
            model,
            out,
            verdicts,
        } => cmd_calibrate(&cfg, model, out, verdicts.as_deref()),
        Command::Verify {
            plan,
            model,
            table,
            rule,
            phi,
        } => cmd_verify(&cfg, model, table, &read(plan)?, rule, phi.as_deref()),
        Command::Refine {
            model,
            table,
            sft,
            dpo,
        } => cmd_refine(&cfg, model, table, sft, dpo),
        Command::Report { verdicts } => cmd_report(&read(verdicts)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
