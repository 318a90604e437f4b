mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::CliError;

/// Scenario analysis: validate assessment states, generate and solve scenario
/// trees, measure scenario-space distances, apply updates and evaluate outcomes.
#[derive(Debug, Parser)]
#[command(name = "scenario", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Recency,
    SourceQuality,
    RecordConflict,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an assessment state for structural and attitudinal consistency.
    Validate {
        state: PathBuf,
        /// Axiom severity configuration.
        #[arg(long)]
        axioms: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Generate a bundle of scenario trees from a state.
    Gen {
        state: PathBuf,
        /// Method parameters: roots, thresholds, selection rule.
        #[arg(long)]
        method: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Solve a tree for its most rational path.
    Mrp {
        tree: PathBuf,
        /// Decision rule for leaves carrying world-state utilities.
        #[arg(long)]
        rule: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Solve a tree for its most likely path.
    Mlp {
        tree: PathBuf,
        /// Return every maximizing path instead of one.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Pairwise distances between trees.
    Distance {
        trees: PathBuf,
        /// Encoding and weights.
        #[arg(long)]
        spec: PathBuf,
        /// List trees strictly closer than this to `--center`.
        #[arg(long, requires = "center")]
        epsilon: Option<f64>,
        #[arg(long)]
        center: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Build the evaluation matrix and run Pareto and dominance analysis.
    Evaluate {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Apply update records to a state.
    Update {
        state: PathBuf,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Policy::Recency)]
        policy: Policy,
        /// Realized event outcome, as `event=realization`.
        #[arg(long)]
        trigger: Option<String>,
        /// Source list used by the source-quality policy.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Where to write the updated state.
        #[arg(long)]
        out_state: Option<PathBuf>,
        /// Compare update-then-method with method-then-stage: base method.
        #[arg(long, requires_all = ["variant", "spec"])]
        base: Option<PathBuf>,
        #[arg(long, requires = "base")]
        variant: Option<PathBuf>,
        #[arg(long, requires = "base")]
        spec: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Re-run the method over a parameter grid and report where an output is invariant.
    Sweep {
        /// State to regenerate bundles from.
        #[arg(long, conflicts_with = "trees", required_unless_present = "trees")]
        state: Option<PathBuf>,
        /// Fixed tree set to reselect from.
        #[arg(long)]
        trees: Option<PathBuf>,
        #[arg(long)]
        grid: PathBuf,
        /// Output functional to track.
        #[arg(long)]
        functional: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Check the lineage of successive states and retrodict realized transitions.
    Trace {
        #[arg(required = true)]
        states: Vec<PathBuf>,
        /// Bundles held at earlier stages.
        #[arg(long = "bundle")]
        bundles: Vec<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Gate extraction records and assemble accepted ones into a changeset.
    Ingest {
        records: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Policy::Recency)]
        policy: Policy,
        /// Where to write the changeset when every record is accepted.
        #[arg(long)]
        changeset_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

/// Success, or a report was written but it records validation failures.
pub enum Status {
    Ok,
    Invalid,
}

const EXIT_INVALID: u8 = 2;
const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 64;

fn run(cli: Cli) -> Result<Status, CliError> {
    use commands::*;
    match cli.command {
        Command::Validate { state, axioms, output } => validate(&state, axioms.as_deref(), &output),
        Command::Gen { state, method, output } => gen(&state, method.as_deref(), &output),
        Command::Mrp { tree, rule, output } => mrp(&tree, rule.as_deref(), &output),
        Command::Mlp { tree, all, output } => mlp(&tree, all, &output),
        Command::Distance { trees, spec, epsilon, center, output } => {
            distance(&trees, &spec, epsilon.zip(center), &output)
        }
        Command::Evaluate { input, output } => evaluate(&input, &output),
        Command::Update { state, records, policy, trigger, manifest, out_state, base, variant, spec, output } => {
            let compare = match (base, variant, spec) {
                (Some(b), Some(v), Some(s)) => Some((b, v, s)),
                _ => None,
            };
            update(UpdateArgs {
                state: &state,
                records: records.as_deref(),
                policy,
                trigger: trigger.as_deref(),
                manifest: manifest.as_deref(),
                out_state: out_state.as_deref(),
                compare,
                output: &output,
            })
        }
        Command::Sweep { state, trees, grid, functional, spec, output } => {
            sweep(state.as_deref(), trees.as_deref(), &grid, &functional, &spec, &output)
        }
        Command::Trace { states, bundles, output } => trace(&states, &bundles, &output),
        Command::Ingest { records, state, manifest, policy, changeset_out, output } => {
            ingest(&records, &state, manifest.as_deref(), policy, changeset_out.as_deref(), &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Invalid) => ExitCode::from(EXIT_INVALID),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, CliError::Usage(_)) { EXIT_USAGE } else { EXIT_DOMAIN })
        }
    }
}
