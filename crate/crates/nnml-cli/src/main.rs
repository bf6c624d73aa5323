//! `nnml`: prove formulas and hypersequents in non-normal modal logics,
//! print countermodels, check models, transform them, translate derivations
//! into labelled form, and benchmark the search.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nnml::{parse_logic_name, LogicSpec};

/// Exit statuses. They are a stable contract.
pub mod exit {
    /// Proved; or a command other than `prove` succeeded.
    pub const OK: u8 = 0;
    /// Refuted.
    pub const REFUTED: u8 = 1;
    /// Parse or configuration error.
    pub const USAGE: u8 = 2;
    /// Internal error: an emitted artefact failed its in-process check.
    pub const INTERNAL: u8 = 3;
    /// Search budget exceeded.
    pub const BUDGET: u8 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "nnml", version, about = "Hypersequent prover and countermodel generator for non-normal modal logics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prove a formula or hypersequent; print a derivation or countermodels.
    Prove(ProveArgs),
    /// Evaluate a formula on a JSON model and check its frame conditions.
    CheckModel(CheckModelArgs),
    /// Turn a JSON model into an equivalent model of another kind.
    Transform(TransformArgs),
    /// Print the labelled translation of a hypersequent, or of its derivation.
    Translate(TranslateArgs),
    /// Measure search size and time over random formulas of growing size.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct LogicArgs {
    /// Logic name, e.g. E, MC, K, ED3+, MCNT.
    #[arg(long, conflicts_with = "axioms")]
    logic: Option<String>,
    /// Axioms over E, comma-separated, e.g. M,C,N.
    #[arg(long, value_delimiter = ',')]
    axioms: Option<Vec<String>>,
    /// Add the rules D_1^+ .. D_n^+.
    #[arg(long)]
    dplus: Option<u32>,
}

impl LogicArgs {
    fn resolve(&self) -> Result<LogicSpec, String> {
        let mut l = match (&self.logic, &self.axioms) {
            (Some(name), _) => parse_logic_name(name).map_err(|e| e.to_string())?,
            (None, Some(axioms)) => LogicSpec::from_axioms(axioms, None).map_err(|e| e.to_string())?,
            (None, None) => LogicSpec::E,
        };
        if let Some(n) = self.dplus {
            if n == 0 {
                return Err("--dplus must be at least 1".into());
            }
            l.dplus = Some(n);
        }
        Ok(l)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Invertible,
    Unkleened,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum ModelKind {
    Bi,
    StandardFine,
    StandardRough,
    Relational,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct ProveArgs {
    /// A formula (`box p -> p`) or a hypersequent (`<p> => []q | p => q`).
    input: String,
    #[command(flatten)]
    logic: LogicArgs,
    #[arg(long, value_enum, default_value = "invertible")]
    mode: Mode,
    /// Countermodel kinds to print on refutation (the bi model is always
    /// included).
    #[arg(long, value_enum, value_delimiter = ',')]
    model: Vec<ModelKind>,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
    /// Maximum number of visited hypersequents (default: NNML_BUDGET or 10^6).
    #[arg(long)]
    budget: Option<usize>,
    /// Largest number of worlds for the rough transformation.
    #[arg(long, default_value_t = nnml::models::DEFAULT_ROUGH_CAP)]
    rough_cap: usize,
}

#[derive(Args, Debug)]
struct CheckModelArgs {
    /// JSON model file.
    model: PathBuf,
    /// Formula to evaluate at every world.
    formula: String,
    #[command(flatten)]
    logic: LogicArgs,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Bi,
    StandardFine,
    StandardRough,
}

#[derive(Args, Debug)]
struct TransformArgs {
    /// JSON model file (standard models go to bi; bi models to standard).
    model: PathBuf,
    #[arg(long, value_enum)]
    to: Target,
    /// Formulas whose subformulas form the set of the fine transformation.
    #[arg(long = "formula")]
    formulas: Vec<String>,
    /// Close neighbourhoods under supersets (fine), or pair each
    /// neighbourhood with ∅ (standard to bi).
    #[arg(long)]
    supplement: bool,
    #[arg(long, default_value_t = nnml::models::DEFAULT_ROUGH_CAP)]
    rough_cap: usize,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    /// A formula or hypersequent.
    input: String,
    #[command(flatten)]
    logic: LogicArgs,
    /// Prove the input and translate its derivation.
    #[arg(long)]
    derive: bool,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Formula sizes, as `MIN-MAX` or a single size.
    #[arg(long, default_value = "1-10")]
    sizes: String,
    /// Logic names, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "E,M,EC,EN,MC,K")]
    logics: Vec<String>,
    /// Random formulas per size.
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Use `□p1 ∧ … ∧ □pk → □q` (k = size) instead of random formulas.
    #[arg(long)]
    crafted: bool,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
}

/// A failed command: the exit status and a message for stderr.
pub struct Failure {
    pub status: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure { status: exit::USAGE, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Failure {
        Failure { status: exit::INTERNAL, message: message.into() }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Prove(a) => {
            let logic = a.logic.resolve().map_err(Failure::usage)?;
            commands::prove(&commands::ProveConfig {
                input: a.input,
                logic,
                mode: a.mode,
                models: a.model,
                output: a.output,
                budget: a.budget.unwrap_or_else(nnml::search::budget_from_env),
                rough_cap: a.rough_cap,
            })
        }
        Command::CheckModel(a) => {
            let logic = a.logic.resolve().map_err(Failure::usage)?;
            commands::check_model(&a.model, &a.formula, &logic, a.output)
        }
        Command::Transform(a) => commands::transform(&commands::TransformConfig {
            path: a.model,
            to: a.to,
            formulas: a.formulas,
            supplement: a.supplement,
            rough_cap: a.rough_cap,
            output: a.output,
        }),
        Command::Translate(a) => {
            let logic = a.logic.resolve().map_err(Failure::usage)?;
            let budget = a.budget.unwrap_or_else(nnml::search::budget_from_env);
            commands::translate(&a.input, &logic, a.derive, budget, a.output)
        }
        Command::Bench(a) => {
            let sizes = commands::parse_sizes(&a.sizes).map_err(Failure::usage)?;
            let logics = a
                .logics
                .iter()
                .map(|n| parse_logic_name(n).map_err(|e| Failure::usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            commands::bench(&commands::BenchConfig {
                sizes,
                logics,
                count: a.count,
                seed: a.seed,
                crafted: a.crafted,
                budget: a.budget.unwrap_or_else(nnml::search::budget_from_env),
                output: a.output,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Bi => "bi",
            ModelKind::StandardFine => "standard-fine",
            ModelKind::StandardRough => "standard-rough",
            ModelKind::Relational => "relational",
        }
    }
}
