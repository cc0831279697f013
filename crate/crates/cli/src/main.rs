//! `refund-lab`: compute guarantees, evaluate policies, solve for worst
//! cases and optimal mechanisms, emit figure data, and run certification.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::scenario::Overrides;

#[derive(Debug, Parser)]
#[command(name = "refund-lab", version, about = "Robust pricing with refunds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the best guaranteed profit and the robust refund policy for a market.
    Compute(MarketArgs),
    /// Evaluate policies against distributions by closed form, integration and Monte Carlo.
    Evaluate(ScenarioArgs),
    /// Solve for the worst-case distribution of each policy.
    Adversary(ScenarioArgs),
    /// Compute the optimal direct mechanism against each distribution.
    Mechanism(MechanismArgs),
    /// Write the figure data as CSV files.
    Figures(FiguresArgs),
    /// Run the certification battery.
    Certify(CertifyArgs),
}

#[derive(Debug, Args)]
struct MarketArgs {
    /// Prior probability that the product fits.
    #[arg(long)]
    mu: f64,
    /// Normalized restocking cost in [0, 1].
    #[arg(long, conflicts_with = "cost")]
    gamma: Option<f64>,
    /// Raw restocking cost (gamma = c / (c + 1) unless --v-bar is given).
    #[arg(long)]
    cost: Option<f64>,
    /// Match value; rescales the market (requires --cost).
    #[arg(long, requires = "cost")]
    v_bar: Option<f64>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, conflicts_with = "cost")]
    gamma: Option<f64>,
    #[arg(long)]
    cost: Option<f64>,
    #[arg(long)]
    v_bar: Option<f64>,
    /// Policy name or json:PATH; repeatable. Replaces the scenario's policies.
    #[arg(long = "policy")]
    policies: Vec<String>,
    /// worst_case, rs, point_mass, full_info, random:N or csv:PATH; repeatable.
    #[arg(long = "distribution")]
    distributions: Vec<String>,
    /// Tie rule for indifferent buyers: adversarial or favorable.
    #[arg(long)]
    tie: Option<String>,
    /// Grid size for envelopes or discretization.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Seed for random distributions and Monte Carlo.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples per pair (0 disables the route).
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Exit with status 1 when a certification tolerance fails.
    #[arg(long)]
    check: bool,
}

impl ScenarioArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            mu: self.mu,
            gamma: self.gamma,
            c: self.cost,
            v_bar: self.v_bar,
            policies: self.policies.clone(),
            distributions: self.distributions.clone(),
            tie: self.tie.clone(),
            grid_n: self.grid_n,
            seed: self.seed,
            mc_samples: self.mc_samples,
            output: self.output.clone(),
        }
    }
}

#[derive(Debug, Args)]
struct MechanismArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Directory for one allocation CSV per distribution.
    #[arg(long)]
    allocations_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    #[arg(long, default_value_t = refund_lab::certify::FIGURE_MU)]
    mu: f64,
    /// Restocking costs for the worst-case distribution figure.
    #[arg(long, value_delimiter = ',', default_values_t = refund_lab::certify::FIG1_GAMMAS)]
    gammas: Vec<f64>,
    /// Number of steps of the gamma grid on [0, 1] for the profit figure.
    #[arg(long, default_value_t = refund_lab::certify::FIG2_STEPS)]
    steps: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    /// Directory of figure fixtures to compare against.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Run only these criteria (1-9); repeatable.
    #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=9))]
    criteria: Vec<u8>,
}

/// Failures mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    /// A tolerance check failed: exit 1.
    Certification(String),
    /// Bad parameters or scenario: exit 2.
    Config(String),
    /// Reading or writing files failed: exit 3.
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Certification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Certification(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<refund_lab::Error> for Failure {
    fn from(e: refund_lab::Error) -> Self {
        match e {
            refund_lab::Error::Io(_) => Failure::Io(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("REFUND_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Config(format!(
            "REFUND_LAB_THREADS must be a positive integer, got `{value}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::Compute(a) => commands::compute(a.mu, a.gamma, a.cost, a.v_bar),
        Command::Evaluate(a) => commands::evaluate(a.scenario.as_deref(), a.overrides(), a.check),
        Command::Adversary(a) => commands::adversary(a.scenario.as_deref(), a.overrides(), a.check),
        Command::Mechanism(a) => commands::mechanism(
            a.scenario.scenario.as_deref(),
            a.scenario.overrides(),
            a.scenario.check,
            a.allocations_dir.as_deref(),
        ),
        Command::Figures(a) => commands::figures(a.mu, &a.gammas, a.steps, &a.out_dir),
        Command::Certify(a) => commands::certify(a.fixtures.as_deref(), &a.criteria),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("refund-lab: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
