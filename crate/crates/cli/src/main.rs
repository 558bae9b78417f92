//! `bergm`: statistics, fitting, profiling, projection, simulation and
//! exact-oracle checks for bipartite ERGMs from the command line.

mod commands;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::exit;

#[derive(Parser, Debug)]
#[command(name = "bergm", version, about = "Bipartite exponential-family random graph models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Inputs shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Inputs {
    /// Edge list: header `n1 <int> n2 <int>`, then one `i k` pair per line.
    #[arg(long)]
    pub network: PathBuf,
    /// Mode-1 attribute table.
    #[arg(long)]
    pub attrs1: Option<PathBuf>,
    /// Mode-2 attribute table.
    #[arg(long)]
    pub attrs2: Option<PathBuf>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run data-parallel loops on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Markov chain settings.
#[derive(Args, Debug, Clone)]
pub struct Mcmc {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Burn-in proposals (default: 16384 per started thousand dyads).
    #[arg(long)]
    pub burnin: Option<u64>,
    /// Proposals between retained draws.
    #[arg(long)]
    pub interval: Option<u64>,
    /// Retained draws.
    #[arg(long)]
    pub samplesize: Option<usize>,
    /// Independent chains per sample.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Proposal distribution.
    #[arg(long, value_enum, default_value_t = ProposalArg::Tnt)]
    pub proposal: ProposalArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
pub enum ProposalArg {
    /// Tie/no-tie: half the proposals delete a random edge.
    Tnt,
    /// Uniformly random dyad.
    Uniform,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Mple,
    Mcmcmle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OracleWhat {
    /// log κ(θ).
    Kappa,
    /// Exact log-likelihood of the observed network at θ.
    Loglik,
    /// Exact maximum likelihood estimate.
    Mle,
    /// Probability of every network state.
    Distribution,
    /// Edge probability of every dyad.
    Marginals,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the model's statistics for the network as `name,value` CSV.
    Stats {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model: String,
    },
    /// Fit a model and print a coefficient table.
    Fit {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Mcmcmle)]
        method: MethodArg,
        #[command(flatten)]
        mcmc: Mcmc,
        /// Also estimate the log-likelihood for MPLE fits.
        #[arg(long)]
        loglik: bool,
        /// Exit with the degeneracy code when statistics are nearly constant.
        #[arg(long)]
        fail_on_degeneracy: bool,
    },
    /// Profile likelihood over the exponent of the one nodematch term given
    /// without alpha/beta. Runs both grids unless one is chosen.
    Profile {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Mcmcmle)]
        method: MethodArg,
        /// Comma-separated α values in [0, 1].
        #[arg(long, value_delimiter = ',')]
        alpha_grid: Option<Vec<f64>>,
        /// Comma-separated β values in [0, 1].
        #[arg(long, value_delimiter = ',')]
        beta_grid: Option<Vec<f64>>,
        #[command(flatten)]
        mcmc: Mcmc,
    },
    /// Weighted one-mode projection as `i j weight` lines.
    Project {
        #[command(flatten)]
        inputs: Inputs,
        /// Mode to project onto (1 or 2).
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        mode: u8,
    },
    /// Simulate statistics from the model at θ (CSV, header = statistic names).
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model: String,
        /// Comma-separated parameter vector.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[command(flatten)]
        mcmc: Mcmc,
    },
    /// Exact computations by enumerating every network (at most 22 dyads).
    Oracle {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model: String,
        #[arg(long, value_enum)]
        what: OracleWhat,
        /// Comma-separated parameter vector (kappa, loglik, distribution, marginals).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats { inputs, model } => commands::stats(&inputs, &model),
        Command::Fit { inputs, model, method, mcmc, loglik, fail_on_degeneracy } => {
            commands::fit(&inputs, &model, method, &mcmc, loglik, fail_on_degeneracy)
        }
        Command::Profile { inputs, model, method, alpha_grid, beta_grid, mcmc } => {
            commands::profile(&inputs, &model, method, alpha_grid, beta_grid, &mcmc)
        }
        Command::Project { inputs, mode } => commands::project(&inputs, mode),
        Command::Simulate { inputs, model, theta, mcmc } => commands::simulate(&inputs, &model, &theta, &mcmc),
        Command::Oracle { inputs, model, what, theta } => commands::oracle(&inputs, &model, what, theta),
    };
    match result {
        Ok(()) => std::process::exit(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.code());
        }
    }
}
