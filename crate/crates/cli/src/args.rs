use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Analyse quantum Turing machine step operators for ballistic evolution.
#[derive(Debug, Parser)]
#[command(name = "qbe", version)]
pub struct Cli {
    /// TOML settings file (`K`, `[tolerance]`).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MachineArgs {
    /// Machine file, or the name of a built-in machine.
    pub machine: String,

    /// Candidate stable basis: a CSV matrix whose columns are basis vectors,
    /// or `@bit_rotation` / `@split_path` for the built-in constructions.
    #[arg(long, value_name = "CSV|@NAME")]
    pub basis: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predicates, rule conditions and the ballistic verdict, as JSON.
    Analyze(MachineArgs),

    /// Ballistic verdict with its evidence; exits 1 when not ballistic.
    Decide(MachineArgs),

    /// Component ranks of the Halmos–Wallen decomposition, as JSON.
    Decompose {
        /// Machine, built-in name, or `shift:N`, `cycle:N`, `tower:N`,
        /// `sum:BITS`, `matrix:CSV`.
        target: String,

        /// Contraction parameter for `tower` and `sum` targets.
        #[arg(long, default_value = "0.25")]
        a: String,
    },

    /// Eigenvalues of the Feynman Hamiltonian, as CSV.
    Spectrum {
        /// Machine or operator target, as for `decompose`.
        target: String,

        /// Hopping strength.
        #[arg(long = "K", value_name = "K")]
        k: Option<f64>,

        /// Closed form to compare against: `cycle:M`, `truncated_shift:N`,
        /// `isometric:N` or `bound_band:W`.
        #[arg(long, value_name = "KIND:PARAM")]
        predict: Option<String>,

        /// Restrict to one path (by index); predicts its closed form when
        /// `--predict` is absent.
        #[arg(long)]
        component: Option<usize>,

        #[arg(long, value_name = "CSV|@NAME")]
        basis: Option<String>,

        #[arg(long, default_value = "0.25")]
        a: String,
    },

    /// Time evolution under the Feynman Hamiltonian, as CSV of path
    /// probabilities.
    Evolve {
        /// Machine or operator target.
        target: String,

        /// Initial state: `+`-joined terms, each `h:j:BITS` (site 0 first)
        /// or a basis index; terms get equal weight.
        #[arg(long)]
        state: String,

        /// Comma-separated times, or `START:STOP:COUNT`.
        #[arg(long)]
        times: String,

        #[arg(long = "K", value_name = "K")]
        k: Option<f64>,

        #[arg(long, value_name = "CSV|@NAME")]
        basis: Option<String>,

        #[arg(long, default_value = "0.25")]
        a: String,
    },

    /// Partial-isometry residuals of the powers of a tower operator, as JSON.
    Counterexample {
        /// Tower level.
        #[arg(long)]
        tower: usize,

        /// Contraction parameter, `|a| < 1/2`.
        #[arg(long, default_value = "0.25")]
        a: String,

        /// Powers to tabulate (default: level + 1).
        #[arg(long)]
        powers: Option<usize>,
    },

    /// Built-in machines.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExamplesAction {
    /// Names and one-line descriptions.
    List,
    /// Machine file of a built-in machine.
    Emit { name: String },
    /// Stable basis of a built-in machine on its lattice, as CSV.
    Basis { name: String },
}
