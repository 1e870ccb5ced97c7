//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::problem::{BoundKindArg, ClassArg, SideArg, Suite};

#[derive(Debug, Parser)]
#[command(
    name = "pconvex",
    version,
    about = "Certify (p,a,b)-convexity and compute tightened Jensen, risk, MGF, likelihood and Hermite-Hadamard bounds"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Write the report here instead of stdout (a directory for `sweep --suite all`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random draw
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance overrides: a JSON file or inline JSON object
    #[arg(long = "tolerance-profile", global = true, value_name = "JSON")]
    pub tolerance_profile: Option<String>,
    /// Print the problem file for this invocation and exit
    #[arg(long = "dump-canonical", global = true)]
    pub dump_canonical: bool,
}

/// `-f`: a JSON file or an inline JSON object.
#[derive(Debug, Clone, Args)]
pub struct FunctionArg {
    /// Function descriptor: a JSON file or inline JSON
    #[arg(short = 'f', long = "function", value_name = "JSON")]
    pub function: String,
}

#[derive(Debug, Clone, Args)]
pub struct DistributionArg {
    /// Distribution descriptor: a JSON file or inline JSON
    #[arg(short = 'd', long = "distribution", value_name = "JSON")]
    pub distribution: String,
}

#[derive(Debug, Clone, Args)]
pub struct Interval {
    /// Left end; defaults to the function's domain
    #[arg(short = 'a', allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Right end; defaults to the function's domain
    #[arg(short = 'b', allow_negative_numbers = true)]
    pub b: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify membership in 𝕴(p,a,b), 𝕯(p,a,b) or the loss class ℒ_p on a grid
    Certify {
        #[command(flatten)]
        f: FunctionArg,
        /// Convexity class
        #[arg(long, value_enum, default_value = "i", ignore_case = true)]
        class: ClassArg,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
        #[command(flatten)]
        interval: Interval,
        /// Grid points
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Tightened Jensen bounds on E f(X) from the shifted (p+1)-norm of X
    Bound {
        #[command(flatten)]
        f: FunctionArg,
        #[command(flatten)]
        d: DistributionArg,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
        #[arg(long, value_enum, default_value = "lower")]
        kind: BoundKindArg,
        #[command(flatten)]
        interval: Interval,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Certainty-equivalent risk measure and p-more-risk-averse comparisons
    Risk {
        #[command(subcommand)]
        command: RiskCommand,
    },
    /// Bounds on the moment generating function E e^{sX} from the p-norm of X
    Mgf {
        #[command(flatten)]
        d: DistributionArg,
        #[arg(short = 's', allow_negative_numbers = true)]
        s: f64,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
    },
    /// Generalized AM-GM lower bound on E X through the p-norm of ln X
    Amgm {
        #[command(flatten)]
        d: DistributionArg,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
    },
    /// EM on a Bernoulli mixture with the classical and tightened ELBO traces
    EmDemo {
        #[arg(long)]
        iters: Option<usize>,
        /// Synthetic data points
        #[arg(long)]
        samples: Option<usize>,
        /// Bernoulli coordinates per data point
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Hermite-Hadamard bounds on the integral mean of f in 𝕴(p-1,a,b)
    Hh {
        #[command(flatten)]
        f: FunctionArg,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
        #[command(flatten)]
        interval: Interval,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Riemann-Liouville fractional Hermite-Hadamard bounds with weight γ(p,α)
    HhFractional {
        #[command(flatten)]
        f: FunctionArg,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        interval: Interval,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Riemann-Liouville fractional integral I_{a+}^α f(x) or I_{b-}^α f(x)
    Rl {
        #[command(flatten)]
        f: FunctionArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "left")]
        side: SideArg,
        /// a for the left integral, b for the right; defaults to the domain end
        #[arg(long, allow_negative_numbers = true)]
        anchor: Option<f64>,
        #[arg(short = 'x', allow_negative_numbers = true)]
        x: f64,
    },
    /// Seeded sweeps of bound gaps, written as CSV with optional SVG plots
    Sweep {
        #[arg(long, value_enum)]
        suite: Suite,
        /// SVG output (a directory for `--suite all`)
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Execute a problem file
    Run {
        problem: PathBuf,
        /// SVG output for sweep problems
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Render gap columns of a CSV report as an SVG line chart
    Plot {
        csv: PathBuf,
        /// Column on the horizontal axis
        #[arg(long, default_value = "p")]
        x: String,
        /// Columns to draw, comma separated
        #[arg(long, value_delimiter = ',', default_value = "lower_gap,upper_gap")]
        series: Vec<String>,
        /// Column whose values split each series
        #[arg(long)]
        group: Option<String>,
        #[arg(long, default_value = "bound gaps")]
        title: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum RiskCommand {
    /// Worst certainty equivalent over ℒ_p, against the closed form ‖X‖_{p+1}
    Measure {
        #[command(flatten)]
        d: DistributionArg,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Whether loss l is p-more risk averse than f, via (p-1,0,∞)-convexity of l∘f⁻¹
    Compare {
        /// The loss l
        #[arg(short = 'l', long = "loss", value_name = "JSON")]
        loss: String,
        #[command(flatten)]
        f: FunctionArg,
        #[arg(short = 'p', default_value_t = 1)]
        p: u32,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
}
