use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use conc_core::constants::{sigma_estimate_lipschitz, spread_estimate, EstimateOptions};
use conc_core::continuum::{quad_interval_moments, quad_restricted_moments, DensitySpec, Family};
use conc_core::orlicz::{lp_norm, psi_norm};
use conc_core::report::{emit_report, to_json_string, ReportFormat};
use conc_core::scenario::{run_scenario, ScenarioParams};
use conc_core::space::{build_chain_subset, build_hypercube, FiniteMetricProbabilitySpace, ProbabilityVector, SubsetMask};
use conc_core::spectral::{build_graph_form, lambda1, metric_spread_upper, AdjacencyRule};
use conc_core::transport::{sigma_transport, w1, TransportOptions};
use conc_core::{Error, Result};

/// Exit status for invalid input or runtime errors.
const ERROR_EXIT: u8 = 3;

#[derive(Parser)]
#[command(name = "conc", version, about = "Concentration constants on finite metric probability spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or restrict metric probability spaces
    #[command(subcommand)]
    Space(SpaceCommand),
    /// Orlicz and Lp norms of a field
    #[command(subcommand)]
    Norm(NormCommand),
    /// Subgaussian, spread and spectral-gap estimates
    #[command(subcommand)]
    Const(ConstCommand),
    /// Kantorovich distance and transport-entropy estimates
    #[command(subcommand)]
    Transport(TransportCommand),
    /// Quadrature for continuous reference measures
    #[command(subcommand)]
    Continuum(ContinuumCommand),
    /// Run a named verification scenario
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildKind {
    Hypercube,
    Chain,
}

#[derive(Subcommand)]
enum SpaceCommand {
    /// Print a hypercube space, or the chain mask of one, as JSON
    Build {
        kind: BuildKind,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Restrict a space to a mask and renormalize
    Restrict {
        #[command(flatten)]
        space: SpaceArgs,
        /// JSON array of booleans or a members object of indices, inline or as a file
        #[arg(long)]
        mask: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpaceArgs {
    /// Space JSON file ({labels, distance, weights})
    #[arg(long, conflicts_with = "hypercube")]
    space: Option<PathBuf>,
    /// Use the Hamming cube of this dimension
    #[arg(long)]
    hypercube: Option<u32>,
}

impl SpaceArgs {
    fn load(&self) -> Result<FiniteMetricProbabilitySpace> {
        match (&self.space, self.hypercube) {
            (Some(path), _) => FiniteMetricProbabilitySpace::from_json(&fs::read_to_string(path)?),
            (None, Some(n)) => build_hypercube(n),
            (None, None) => Err(Error::Parameter("one of --space or --hypercube is required".into())),
        }
    }
}

#[derive(Args)]
struct FieldArgs {
    /// Comma-separated field values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    values: Vec<f64>,
    /// Comma-separated weights (uniform if omitted)
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

impl FieldArgs {
    fn weights(&self) -> Result<Vec<f64>> {
        let w = match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.values.len() as f64; self.values.len()],
        };
        if w.len() != self.values.len() {
            return Err(Error::Dimension(format!("{} values, {} weights", self.values.len(), w.len())));
        }
        Ok(ProbabilityVector::new(w)?.into_entries())
    }
}

#[derive(Subcommand)]
enum NormCommand {
    /// Orlicz psi-alpha norm
    Psi {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
    },
    /// Lp norm
    Lp {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        p: f64,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, env = "CONC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SigmaRoute {
    Lipschitz,
    Transport,
}

#[derive(Subcommand)]
enum ConstCommand {
    /// Bounds for the subgaussian constant
    Sigma {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_enum, default_value = "lipschitz")]
        route: SigmaRoute,
    },
    /// Bounds for the spread constant
    Spread {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Spectral gap of the unit-distance graph form
    Lambda1 {
        #[command(flatten)]
        space: SpaceArgs,
    },
}

#[derive(Subcommand)]
enum TransportCommand {
    /// Kantorovich distance between two measures on a space
    W1 {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        nu1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        nu2: Vec<f64>,
        /// Write the optimal plan as CSV
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Transport-entropy bounds for the subgaussian constant
    Sigma {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Subcommand)]
enum ContinuumCommand {
    /// Moments of a density restricted to |x| >= R, or to [a, b]
    Quad {
        #[arg(long)]
        family: Family,
        #[arg(long = "R", alias = "r", allow_hyphen_values = true)]
        r: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "b")]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    scenario: String,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long = "R", alias = "r")]
    r: Option<f64>,
    #[arg(long, env = "CONC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps
    #[arg(long)]
    jobs: Option<usize>,
    /// Report runtime_ms = 0 so that output is byte-identical across runs
    #[arg(long)]
    no_timing: bool,
}

fn write_json(value: &Value, out: Option<&PathBuf>) -> Result<()> {
    let text = to_json_string(value)?;
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn estimate_options(search: &SearchArgs) -> EstimateOptions {
    let mut opts = EstimateOptions { seed: search.seed, ..EstimateOptions::default() };
    if let Some(r) = search.restarts {
        opts.restarts = r;
    }
    opts
}

fn transport_options(search: &SearchArgs) -> TransportOptions {
    let mut opts = TransportOptions { seed: search.seed, ..TransportOptions::default() };
    if let Some(r) = search.restarts {
        opts.restarts = r;
    }
    opts
}

fn read_mask(arg: &str, k: usize) -> Result<SubsetMask> {
    let inline = arg.trim_start().starts_with(['[', '{']);
    let text = if inline { arg.to_string() } else { fs::read_to_string(arg)? };
    if !text.trim_start().starts_with('[') {
        return SubsetMask::from_json(k, &text);
    }
    let members: Vec<bool> = serde_json::from_str(&text)?;
    if members.len() != k {
        return Err(Error::Dimension(format!("mask has {} entries, space has {k} points", members.len())));
    }
    Ok(SubsetMask::new(members))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Space(SpaceCommand::Build { kind, n, out }) => {
            let text = match kind {
                BuildKind::Hypercube => build_hypercube(n)?.to_json()? + "\n",
                BuildKind::Chain => build_chain_subset(n)?.to_json() + "\n",
            };
            match out {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Space(SpaceCommand::Restrict { space, mask, out }) => {
            let space = space.load()?;
            let mask = read_mask(&mask, space.len())?;
            let r = space.restrict(&mask)?;
            let restricted: Value = serde_json::from_str(&r.space.to_json()?)?;
            write_json(&json!({"mass": r.mass, "indices": r.indices, "space": restricted}), out.as_ref())?;
        }
        Command::Norm(NormCommand::Psi { field, alpha }) => {
            if !(alpha >= 1.0) {
                return Err(Error::OutOfRange { what: "alpha", value: alpha, range: "[1, inf)" });
            }
            let w = field.weights()?;
            write_json(&json!({"alpha": alpha, "psi_norm": psi_norm(&field.values, &w, alpha)}), None)?;
        }
        Command::Norm(NormCommand::Lp { field, p }) => {
            if !(p >= 1.0) {
                return Err(Error::OutOfRange { what: "p", value: p, range: "[1, inf)" });
            }
            let w = field.weights()?;
            write_json(&json!({"p": p, "lp_norm": lp_norm(&field.values, &w, p)}), None)?;
        }
        Command::Const(ConstCommand::Sigma { space, search, route }) => {
            let space = space.load()?;
            let est = match route {
                SigmaRoute::Lipschitz => sigma_estimate_lipschitz(&space, &estimate_options(&search))?,
                SigmaRoute::Transport => sigma_transport(&space, &transport_options(&search))?,
            };
            write_json(&serde_json::to_value(&est)?, None)?;
        }
        Command::Const(ConstCommand::Spread { space, search }) => {
            let space = space.load()?;
            let upper = build_graph_form(&space, &AdjacencyRule::UnitDistance)
                .and_then(|form| metric_spread_upper(&form, &space))
                .ok()
                .filter(|u| u.is_finite());
            let est = spread_estimate(&space, &estimate_options(&search), upper)?;
            write_json(&serde_json::to_value(&est)?, None)?;
        }
        Command::Const(ConstCommand::Lambda1 { space }) => {
            let space = space.load()?;
            let form = build_graph_form(&space, &AdjacencyRule::UnitDistance)?;
            let gap = lambda1(&form)?;
            write_json(&serde_json::to_value(&gap)?, None)?;
        }
        Command::Transport(TransportCommand::W1 { space, nu1, nu2, plan }) => {
            let space = space.load()?;
            let result = w1(&space, &ProbabilityVector::new(nu1)?, &ProbabilityVector::new(nu2)?)?;
            if let Some(path) = plan {
                fs::write(path, result.to_csv()?)?;
            }
            write_json(
                &json!({"value": result.value, "gap": result.gap, "potential": result.potential.values}),
                None,
            )?;
        }
        Command::Transport(TransportCommand::Sigma { space, search }) => {
            let space = space.load()?;
            let est = sigma_transport(&space, &transport_options(&search))?;
            write_json(&serde_json::to_value(&est)?, None)?;
        }
        Command::Continuum(ContinuumCommand::Quad { family, r, a, b }) => {
            let spec = DensitySpec::new(family, 1)?;
            let m = match (r, a, b) {
                (Some(r), None, None) => quad_restricted_moments(&spec, r)?,
                (None, Some(a), Some(b)) => quad_interval_moments(&spec, a, b)?,
                _ => return Err(Error::Parameter("give either --R or both --a and --b".into())),
            };
            write_json(&serde_json::to_value(m)?, None)?;
        }
        Command::Verify(args) => {
            let params = ScenarioParams {
                n: args.n,
                r: args.r,
                samples: args.samples,
                constant: args.constant,
                restarts: args.restarts,
                jobs: args.jobs,
                timing: !args.no_timing,
            };
            let report = run_scenario(&args.scenario, &params, args.seed)?;
            emit_report(&report, args.format, args.out.as_deref())?;
            return Ok(report.outcome.exit_code() as u8);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ERROR_EXIT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR_EXIT)
        }
    }
}
