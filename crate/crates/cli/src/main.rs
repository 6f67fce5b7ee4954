use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use knowledge_core::funding::RewardTech;
use knowledge_core::moonshot::NpvMode;
use knowledge_core::{Length, Side};

mod commands;
mod config;
mod output;

use config::{FileConfig, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "kcreate", version, about = "Value of knowledge, researcher choice, moonshots and funding")]
struct Cli {
    /// TOML or JSON file with default parameters (flags take precedence)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scale of the decision maker's payoff
    #[arg(long, global = true)]
    q: Option<f64>,
    /// Researcher's cost weight
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Write output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct KnowledgeArg {
    /// Knowledge file, `{"points": [{"x": .., "y": ..}, ..]}`; defaults to the single point (0, 0)
    #[arg(long)]
    knowledge: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Value of a knowledge set and of each of its areas (CSV)
    Value {
        #[command(flatten)]
        k: KnowledgeArg,
    },
    /// Benefit V(d;X) of a discovery: a single point (JSON) or a curve over d (CSV)
    Benefit {
        /// Area length, or `inf` for an expansion
        #[arg(long, value_parser = parse_length, default_value = "inf")]
        x: Length,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Closed-form and researcher cutoffs (JSON)
    Cutoffs,
    /// The researcher's optimal choice (JSON), or U_R, d and ρ against area length (CSV)
    Choose {
        #[command(flatten)]
        k: KnowledgeArg,
        #[arg(long, value_enum)]
        side: Option<SideArg>,
        /// Emit the deepening curve over X ∈ (0, x-max]
        #[arg(long)]
        curve: bool,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Simulate research periods (JSONL trace; summary on stderr)
    Simulate {
        #[command(flatten)]
        k: KnowledgeArg,
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Every attempt succeeds
        #[arg(long)]
        force_success: bool,
        /// Replace the first choice with an expansion at this distance
        #[arg(long)]
        first_distance: Option<f64>,
        #[arg(long, value_enum)]
        side: Option<SideArg>,
    },
    /// Moonshot benefit: summary (JSON) or a series over x̂, η or δ (CSV)
    Moonshot {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        x_hat: Option<f64>,
        #[arg(long, value_enum)]
        series: Option<Series>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Budget-line scan, frontier, indifference samples and the optimal scheme (CSV)
    Funding {
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        eta0: Option<f64>,
        /// 0 selects the myopic funder
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum)]
        tech: Option<TechArg>,
        #[arg(long)]
        points: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SideArg {
    Left,
    Right,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Paper,
    Consistent,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Series {
    XHat,
    Eta,
    Delta,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TechArg {
    Linear,
    Exponential,
}

fn parse_length(s: &str) -> Result<Length, String> {
    match s {
        "inf" | "infinity" | "Inf" => Ok(Length::Infinite),
        _ => {
            let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
            if v > 0.0 {
                Ok(Length::from_f64(v))
            } else {
                Err(format!("area length must be positive, got {v}"))
            }
        }
    }
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut flags = Overrides { q: cli.q, eta: cli.eta, ..Default::default() };
    match &cli.command {
        Command::Value { k } => flags.knowledge = k.knowledge.clone(),
        Command::Benefit { points, .. } => flags.points = *points,
        Command::Cutoffs => {}
        Command::Choose { k, side, x_max, points, .. } => {
            flags.knowledge = k.knowledge.clone();
            flags.side = side.map(Into::into);
            flags.x_max = *x_max;
            flags.points = *points;
        }
        Command::Simulate { k, periods, seed, force_success, side, .. } => {
            flags.knowledge = k.knowledge.clone();
            flags.periods = *periods;
            flags.seed = *seed;
            flags.force_success = *force_success;
            flags.side = side.map(Into::into);
        }
        Command::Moonshot { mode, delta, x_hat, points, .. } => {
            flags.mode = mode.map(|m| match m {
                ModeArg::Paper => NpvMode::PaperReplication,
                ModeArg::Consistent => NpvMode::ConsistentFoc,
            });
            flags.delta = *delta;
            flags.x_hat = *x_hat;
            flags.points = *points;
        }
        Command::Funding { k, kappa, s, eta0, delta, tech, points } => {
            flags.k = *k;
            flags.kappa = *kappa;
            flags.s = *s;
            flags.eta0 = *eta0;
            flags.delta = *delta;
            flags.tech = tech.map(|t| match t {
                TechArg::Linear => RewardTech::PiecewiseLinear,
                TechArg::Exponential => RewardTech::Exponential,
            });
            flags.points = *points;
        }
    }
    let cfg = RunConfig::resolve(flags, file)?;
    let mut out = output::open(cli.output.as_deref())?;
    match cli.command {
        Command::Value { .. } => commands::value(&cfg, &mut *out)?,
        Command::Benefit { x, d, .. } => commands::benefit(&cfg, x, d, &mut *out)?,
        Command::Cutoffs => commands::cutoffs(&cfg, &mut *out)?,
        Command::Choose { curve, .. } => commands::choose(&cfg, curve, &mut *out)?,
        Command::Simulate { first_distance, .. } => commands::simulate(&cfg, first_distance, &mut *out)?,
        Command::Moonshot { series, .. } => commands::moonshot(&cfg, series, &mut *out)?,
        Command::Funding { .. } => commands::funding(&cfg, &mut *out)?,
    }
    out.flush()?;
    Ok(())
}

/// 1 for numerical non-convergence, 2 for anything the caller supplied wrongly.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<knowledge_core::Error>() {
        Some(knowledge_core::Error::NoConvergence(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
