//! `entcost` command-line frontend.
//!
//! Every run writes one artifact: a JSON document (`--format json`, default)
//! recording tool version, command, seed, params and result, or a CSV table
//! (`--format csv`) whose first column is the seed.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{CommandName, ExperimentConfig, Format};
use error::{CliError, CliResult};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("ENTCOST_GIT_HASH"), ")");

#[derive(Parser)]
#[command(name = "entcost", version = VERSION, about = "Entanglement-cost numerics at finite truncation")]
#[command(after_help = "Exit status: 0 ok, 2 invalid configuration, 3 numerical invariant violated, 4 i/o error.")]
struct Cli {
    /// Experiment file: {"command", "params", "seed", "output_path", "format"}.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "ENTCOST_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone, Default)]
struct ParamsArg {
    /// Command parameters as inline JSON, or @path to a JSON file.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Von Neumann entropy of a spectrum and its integral representation.
    #[command(after_help = "CSV columns: seed, entropy_bits, tail_uncertainty_bits, closed_form_bits, quadrature_bits\n\
        params: {\"spectrum\": [..] | {\"values\", \"tail_mass\"}, \"tail_levels\"?, \"quadrature_nodes\"?}")]
    Entropy(ParamsArg),
    /// Weak or strong typical-set mass over a block-length grid.
    #[command(after_help = "CSV columns: seed, n, kind, delta, mass, atypical_mass, log2_cardinality_bound, ci_low, ci_high\n\
        params: {\"dist\", \"n\": N | [N..], \"delta\", \"kind\"?: weak|strong, \"mode\"?: exact|mc, \"samples\"?}")]
    Typicality(ParamsArg),
    /// Convex-roof upper bound on the entanglement of formation.
    #[command(after_help = "CSV columns: seed, restart, upper_bound_bits\n\
        params: {\"state\" | \"pure\" | \"schmidt\", \"ensemble_size\"?, \"restarts\"?, \"anneal_sweeps\"?, \"polish_sweeps\"?, \"n_max\"?: 1|2}")]
    Eof(ParamsArg),
    /// Typical-subspace dilution of a pure state.
    #[command(after_help = "CSV columns: seed, n, ebits, cbits, error, rate, error_kind\n\
        params: {\"schmidt\" | \"pure\", \"delta\", \"n\": N | [N..], \"mode\"?: exact|mc, \"samples\"?}")]
    DilutePure(ParamsArg),
    /// Common/rare split rates for a pure-state decomposition.
    #[command(after_help = "CSV columns: seed, n_cut, delta_n, common_term, wasteful_term, rate_bound\n\
        params: {\"members\": [{\"weight\", \"schmidt\" | \"amplitudes\"}], \"n_cut\"?, \"mixing\"?: {\"p0\", \"xi\", \"n\", \"tv_samples\"?}}")]
    DiluteMixed(ParamsArg),
    /// Terms of the converse chain for a target state.
    #[command(after_help = "CSV columns: seed, epsilon, epsilon_prime, energy, lhs, eof_surrogate, energy_term, g_term, rhs, slack, rate_lower_bound\n\
        params: {\"state\" | \"pure\" | \"schmidt\", \"r\", \"epsilon\": x | [x..], \"n\", \"hamiltonian\"?, \"ensemble_size\"?, \"restarts\"?}")]
    ConverseBound(ParamsArg),
    /// Randomized sweeps of the majorization inequalities.
    #[command(after_help = "CSV columns: seed, check, trials, violations, min_margin\n\
        params: {\"trials\"?, \"max_dim\"?, \"schur_horn_max_dim\"?, \"tail_sum_max_dim\"?, \"checks\"?: [majorization, schur_horn, tail_sum_operator, monotonicity]}")]
    MajorizationCheck(MajorizationArgs),
    /// Gibbs points, F_H, continuity bounds and associated Hamiltonians.
    #[command(after_help = "CSV columns: seed, energy, beta, entropy_bits, ratio\n\
        params: {\"hamiltonian\"?: {\"energies\", \"tail_model\"}, \"energies\": [..], \"epsilon\"?: [..], \"associated_spectrum\"?}")]
    Gibbs(ParamsArg),
}

#[derive(Args, Clone)]
struct MajorizationArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    max_dim: Option<usize>,
}

impl Command {
    fn name(&self) -> CommandName {
        match self {
            Command::Entropy(_) => CommandName::Entropy,
            Command::Typicality(_) => CommandName::Typicality,
            Command::Eof(_) => CommandName::Eof,
            Command::DilutePure(_) => CommandName::DilutePure,
            Command::DiluteMixed(_) => CommandName::DiluteMixed,
            Command::ConverseBound(_) => CommandName::ConverseBound,
            Command::MajorizationCheck(_) => CommandName::MajorizationCheck,
            Command::Gibbs(_) => CommandName::Gibbs,
        }
    }

    fn params(&self) -> &ParamsArg {
        match self {
            Command::MajorizationCheck(m) => &m.params,
            Command::Entropy(p)
            | Command::Typicality(p)
            | Command::Eof(p)
            | Command::DilutePure(p)
            | Command::DiluteMixed(p)
            | Command::ConverseBound(p)
            | Command::Gibbs(p) => p,
        }
    }
}

struct Plan {
    command: CommandName,
    params: Value,
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

fn plan(cli: &Cli) -> CliResult<Plan> {
    let file = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let command = match (&cli.command, &file) {
        (Some(c), Some(f)) if c.name() != f.command => {
            return Err(CliError::Schema(format!(
                "subcommand {} conflicts with config command {}",
                c.name().as_str(),
                f.command.as_str()
            )))
        }
        (Some(c), _) => c.name(),
        (None, Some(f)) => f.command,
        (None, None) => return Err(CliError::Schema("give a subcommand or --config".into())),
    };
    let mut params = match cli.command.as_ref().and_then(|c| c.params().params.as_deref()) {
        Some(raw) => config::parse_params(raw)?,
        None => file.as_ref().map_or_else(|| json!({}), |f| f.params.clone()),
    };
    if let Some(Command::MajorizationCheck(m)) = &cli.command {
        let obj = params
            .as_object_mut()
            .ok_or_else(|| CliError::Schema("params must be a JSON object".into()))?;
        if let Some(t) = m.trials {
            obj.insert("trials".into(), t.into());
        }
        if let Some(d) = m.max_dim {
            obj.insert("max_dim".into(), d.into());
        }
    }
    let seed = cli.seed.or(file.as_ref().and_then(|f| f.seed)).unwrap_or(0);
    let out = cli.out.clone().or_else(|| file.as_ref().and_then(|f| f.output_path.clone()).map(PathBuf::from));
    let format = cli.format.or(file.as_ref().and_then(|f| f.format)).unwrap_or_default();
    Ok(Plan { command, params, seed, out, format })
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Schema(format!("thread pool: {e}")))?;
    }
    let p = plan(cli)?;
    let artifact = commands::run(p.command, &p.params, p.seed)?;
    let text = match p.format {
        Format::Json => output::render_json(VERSION, p.command.as_str(), p.seed, &p.params, &artifact)?,
        Format::Csv => output::render_csv(p.seed, &artifact.table)?,
    };
    match &p.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    match artifact.failure {
        Some(msg) => Err(CliError::Invariant(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = json!({ "error": { "kind": e.kind(), "message": e.to_string() }, "exit_code": e.exit_code() });
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
