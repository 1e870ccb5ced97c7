//! Problem files: the JSON form of every task the CLI runs.

use pconvex::{FunctionSpec, RandomVariable, ToleranceProfile};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PROBLEM_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_GRID: usize = 1024;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_ITERS: usize = 30;
pub const DEFAULT_SAMPLES: usize = 60;
pub const DEFAULT_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Certify,
    Bound,
    RiskMeasure,
    RiskCompare,
    Mgf,
    Amgm,
    EmDemo,
    Hh,
    HhFractional,
    Rl,
    Sweep,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Certify => "certify",
            Task::Bound => "bound",
            Task::RiskMeasure => "risk-measure",
            Task::RiskCompare => "risk-compare",
            Task::Mgf => "mgf",
            Task::Amgm => "amgm",
            Task::EmDemo => "em-demo",
            Task::Hh => "hh",
            Task::HhFractional => "hh-fractional",
            Task::Rl => "rl",
            Task::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum ClassArg {
    I,
    D,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKindArg {
    /// f(a + ‖X - a‖_{p+1}) for f in 𝕴(p,a,b)
    Lower,
    /// (1 - m) f(a) + m f(b) for f in 𝕴(p,a,b)
    Upper,
    /// f(b - ‖b - X‖_{p+1}) for f in 𝕯(p,a,b)
    LowerD,
    /// f(E X)
    ClassicalLower,
    /// secant through (a, f(a)) and (b, f(b))
    ClassicalUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SideArg {
    /// I_{a+}: integrate from the anchor up to x
    Left,
    /// I_{b-}: integrate from x up to the anchor
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Jensen,
    Hh,
    HhFractional,
    Mgf,
    Risk,
    All,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Jensen => "jensen",
            Suite::Hh => "hh",
            Suite::HhFractional => "hh-fractional",
            Suite::Mgf => "mgf",
            Suite::Risk => "risk",
            Suite::All => "all",
        }
    }
}

/// Task parameters. Unset fields take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<BoundKindArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<SideArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    /// `f` in a risk comparison; `function` holds `l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<FunctionSpec>,
}

impl Params {
    pub fn p(&self) -> u32 {
        self.p.unwrap_or(1)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size.unwrap_or(DEFAULT_GRID)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn iters(&self) -> usize {
        self.iters.unwrap_or(DEFAULT_ITERS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<RandomVariable>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceProfile>,
}

impl ProblemFile {
    pub fn new(task: Task) -> Self {
        ProblemFile {
            version: PROBLEM_VERSION,
            task,
            function: None,
            distribution: None,
            params: Params::default(),
            tolerances: None,
        }
    }

    /// Parses and validates; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let problem: ProblemFile = parse_json(text, "problem")?;
        problem.validate()?;
        Ok(problem)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != PROBLEM_VERSION {
            return Err(CliError::Input(format!(
                "unsupported problem version {} (expected {PROBLEM_VERSION})",
                self.version
            )));
        }
        let need = |present: bool, what: &str| -> Result<(), CliError> {
            if present {
                Ok(())
            } else {
                Err(CliError::Input(format!(
                    "task {} needs {what}",
                    self.task.as_str()
                )))
            }
        };
        let f = self.function.is_some();
        let d = self.distribution.is_some();
        let pr = &self.params;
        match self.task {
            Task::Certify | Task::Hh => need(f, "a function")?,
            Task::Bound => {
                need(f, "a function")?;
                need(d, "a distribution")?;
            }
            Task::RiskMeasure | Task::Amgm => need(d, "a distribution")?,
            Task::RiskCompare => {
                need(f, "a function (the loss l)")?;
                need(pr.inner.is_some(), "params.inner (the loss f)")?;
            }
            Task::Mgf => {
                need(d, "a distribution")?;
                need(pr.s.is_some(), "params.s")?;
            }
            Task::EmDemo => {}
            Task::HhFractional => {
                need(f, "a function")?;
                need(pr.alpha.is_some(), "params.alpha")?;
            }
            Task::Rl => {
                need(f, "a function")?;
                need(pr.alpha.is_some(), "params.alpha")?;
                need(pr.x.is_some(), "params.x")?;
            }
            Task::Sweep => need(pr.suite.is_some(), "params.suite")?,
        }
        if let Some(t) = &self.tolerances {
            t.validate().map_err(CliError::Numeric)?;
        }
        Ok(())
    }
}

/// JSON parsing with the field path and position in the error message.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Input(format!("{what}: field `{path}`: {inner}"))
    })
}
