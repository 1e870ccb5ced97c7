//! Problem construction from the command line, execution and report output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use pconvex::convexity::{certify_d, certify_i, certify_lp};
use pconvex::jensen::{classical_jensen_lower, classical_secant_upper, jensen_lower_decreasing};
use pconvex::likelihood::BernoulliMixture;
use pconvex::risk::DEFAULT_RISK_HORIZON;
use pconvex::{
    am_gm_lower, compare_risk_aversion, em_demo, fractional_hh_bounds, hh_bounds, jensen_lower,
    jensen_upper, mgf_lower, mgf_upper, risk_measure, rl_integral, BoundOptions, BoundReport,
    CertifyConfig, FunctionSpec, RandomVariable, RlSide, ToleranceProfile,
};

use crate::args::{Cli, Command, Common, Interval, RiskCommand};
use crate::error::CliError;
use crate::plot::{render_gap_plot, PlotSpec};
use crate::problem::{
    parse_json, BoundKindArg, ClassArg, ProblemFile, SideArg, Suite, Task, DEFAULT_DIM,
    DEFAULT_SAMPLES,
};
use crate::sweep::{hh_row, run_suite, HH_HEADER};
use crate::table::Table;

/// What a task produces.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Json(String),
    Csv(String),
    /// One `(suite, csv, svg)` per suite.
    Sweep(Vec<(Suite, String, String)>),
}

/// Reads `arg` as inline JSON when it starts with `{`, else as a path.
pub fn load_json<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T, CliError> {
    if arg.trim_start().starts_with('{') {
        return parse_json(arg, what);
    }
    let text = fs::read_to_string(arg).map_err(CliError::io(format!("reading {what} {arg}")))?;
    parse_json(&text, &format!("{what} {arg}"))
}

fn set_interval(problem: &mut ProblemFile, interval: &Interval) {
    problem.params.a = interval.a;
    problem.params.b = interval.b;
}

/// The problem file equivalent to a subcommand. `Run` and `Plot` are handled
/// by the caller.
pub fn problem_from_command(command: &Command, common: &Common) -> Result<ProblemFile, CliError> {
    let function = |s: &str| load_json::<FunctionSpec>(s, "function");
    let distribution = |s: &str| load_json::<RandomVariable>(s, "distribution");
    let mut pf;
    match command {
        Command::Certify {
            f,
            class,
            p,
            interval,
            grid,
        } => {
            pf = ProblemFile::new(Task::Certify);
            pf.function = Some(function(&f.function)?);
            pf.params.class = Some(*class);
            pf.params.p = Some(*p);
            pf.params.grid_size = *grid;
            set_interval(&mut pf, interval);
        }
        Command::Bound {
            f,
            d,
            p,
            kind,
            interval,
            grid,
        } => {
            pf = ProblemFile::new(Task::Bound);
            pf.function = Some(function(&f.function)?);
            pf.distribution = Some(distribution(&d.distribution)?);
            pf.params.p = Some(*p);
            pf.params.kind = Some(*kind);
            pf.params.grid_size = *grid;
            set_interval(&mut pf, interval);
        }
        Command::Risk {
            command: RiskCommand::Measure { d, p, grid },
        } => {
            pf = ProblemFile::new(Task::RiskMeasure);
            pf.distribution = Some(distribution(&d.distribution)?);
            pf.params.p = Some(*p);
            pf.params.grid_size = *grid;
        }
        Command::Risk {
            command:
                RiskCommand::Compare {
                    loss,
                    f,
                    p,
                    trials,
                    horizon,
                    grid,
                },
        } => {
            pf = ProblemFile::new(Task::RiskCompare);
            pf.function = Some(load_json(loss, "loss")?);
            pf.params.inner = Some(function(&f.function)?);
            pf.params.p = Some(*p);
            pf.params.trials = *trials;
            pf.params.horizon = *horizon;
            pf.params.grid_size = *grid;
        }
        Command::Mgf { d, s, p } => {
            pf = ProblemFile::new(Task::Mgf);
            pf.distribution = Some(distribution(&d.distribution)?);
            pf.params.s = Some(*s);
            pf.params.p = Some(*p);
        }
        Command::Amgm { d, p } => {
            pf = ProblemFile::new(Task::Amgm);
            pf.distribution = Some(distribution(&d.distribution)?);
            pf.params.p = Some(*p);
        }
        Command::EmDemo {
            iters,
            samples,
            dim,
        } => {
            pf = ProblemFile::new(Task::EmDemo);
            pf.params.iters = *iters;
            pf.params.samples = *samples;
            pf.params.dim = *dim;
        }
        Command::Hh {
            f,
            p,
            interval,
            grid,
        } => {
            pf = ProblemFile::new(Task::Hh);
            pf.function = Some(function(&f.function)?);
            pf.params.p = Some(*p);
            pf.params.grid_size = *grid;
            set_interval(&mut pf, interval);
        }
        Command::HhFractional {
            f,
            p,
            alpha,
            interval,
            grid,
        } => {
            pf = ProblemFile::new(Task::HhFractional);
            pf.function = Some(function(&f.function)?);
            pf.params.p = Some(*p);
            pf.params.alpha = Some(*alpha);
            pf.params.grid_size = *grid;
            set_interval(&mut pf, interval);
        }
        Command::Rl {
            f,
            alpha,
            side,
            anchor,
            x,
        } => {
            pf = ProblemFile::new(Task::Rl);
            pf.function = Some(function(&f.function)?);
            pf.params.alpha = Some(*alpha);
            pf.params.side = Some(*side);
            pf.params.x = Some(*x);
            match side {
                SideArg::Left => pf.params.a = *anchor,
                SideArg::Right => pf.params.b = *anchor,
            }
        }
        Command::Sweep { suite, .. } => {
            pf = ProblemFile::new(Task::Sweep);
            pf.params.suite = Some(*suite);
        }
        Command::Run { .. } | Command::Plot { .. } => {
            return Err(CliError::Input(
                "this subcommand does not describe a problem".into(),
            ));
        }
    }
    apply_common(&mut pf, common)?;
    pf.validate()?;
    Ok(pf)
}

fn apply_common(pf: &mut ProblemFile, common: &Common) -> Result<(), CliError> {
    if common.seed.is_some() {
        pf.params.seed = common.seed;
    }
    if let Some(t) = &common.tolerance_profile {
        pf.tolerances = Some(load_json::<ToleranceProfile>(t, "tolerance profile")?);
    }
    Ok(())
}

fn certify_config(pf: &ProblemFile) -> CertifyConfig {
    CertifyConfig {
        grid_size: pf.params.grid_size(),
        tol: pf.tolerances.unwrap_or_default(),
        ..CertifyConfig::default()
    }
}

fn required<T>(v: Option<T>, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Input(format!("missing {what}")))
}

fn finite_end(given: Option<f64>, fallback: &[f64], flag: &str) -> Result<f64, CliError> {
    given
        .or_else(|| fallback.iter().copied().find(|v| v.is_finite()))
        .ok_or_else(|| CliError::Input(format!("the interval is unbounded; pass {flag}")))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports always serialize");
    s.push('\n');
    s
}

fn bound_table(r: &BoundReport) -> Result<String, CliError> {
    let mut t = Table::new(&[
        "kind",
        "p",
        "a",
        "b",
        "value",
        "oracle",
        "oracle_error",
        "classical",
        "gap_to_oracle",
        "gap_to_classical",
        "inputs_digest",
    ]);
    t.push(vec![
        r.kind.as_str().into(),
        r.p.into(),
        r.a.into(),
        r.b.into(),
        r.value.into(),
        crate::table::Cell::opt(r.oracle),
        r.oracle_error.into(),
        r.classical.into(),
        crate::table::Cell::opt(r.gap_to_oracle),
        r.gap_to_classical.into(),
        r.inputs_digest.as_str().into(),
    ]);
    t.to_csv()
}

/// The mixture `em-demo` samples from.
pub fn em_truth(dim: usize) -> BernoulliMixture {
    let half = dim.div_ceil(2);
    BernoulliMixture {
        weights: [0.4, 0.6],
        means: [
            (0..dim)
                .map(|j| if j < half { 0.85 } else { 0.2 })
                .collect(),
            (0..dim)
                .map(|j| if j < half { 0.15 } else { 0.75 })
                .collect(),
        ],
    }
}

/// Runs a validated problem.
pub fn execute(pf: &ProblemFile) -> Result<Report, CliError> {
    let pr = &pf.params;
    let cfg = certify_config(pf);
    let opts = BoundOptions {
        skip_oracle: false,
        tol: cfg.tol,
    };
    let function = || required(pf.function.as_ref(), "function");
    let distribution = || required(pf.distribution.as_ref(), "distribution");
    match pf.task {
        Task::Certify => {
            let f = function()?;
            let p = pr.p();
            let cert = match pr.class.unwrap_or(ClassArg::I) {
                ClassArg::Lp => {
                    let horizon = pr.b.or(pr.horizon).unwrap_or(DEFAULT_RISK_HORIZON);
                    certify_lp(f, p, horizon, &cfg)
                }
                class => {
                    let a = pr.a.unwrap_or(f.domain.lo);
                    let b = finite_end(pr.b, &[f.domain.hi], "-b")?;
                    if class == ClassArg::I {
                        certify_i(f, p, a, b, &cfg)
                    } else {
                        certify_d(f, p, a, b, &cfg)
                    }
                }
            };
            Ok(Report::Json(json(&cert)))
        }
        Task::Bound => {
            let (f, x) = (function()?, distribution()?);
            let p = pr.p();
            let kind = pr.kind.unwrap_or(BoundKindArg::Lower);
            let a = pr.a.unwrap_or(f.domain.lo);
            let b = finite_end(pr.b, &[f.domain.hi, x.support().1], "-b")?;
            let report = match kind {
                BoundKindArg::Lower => jensen_lower(f, &certify_i(f, p, a, b, &cfg), x, &opts)?,
                BoundKindArg::Upper => jensen_upper(f, &certify_i(f, p, a, b, &cfg), x, &opts)?,
                BoundKindArg::LowerD => {
                    jensen_lower_decreasing(f, &certify_d(f, p, a, b, &cfg), x, &opts)?
                }
                BoundKindArg::ClassicalLower => classical_jensen_lower(f, x, &opts)?,
                BoundKindArg::ClassicalUpper => classical_secant_upper(f, x, a, b, &opts)?,
            };
            Ok(Report::Csv(bound_table(&report)?))
        }
        Task::RiskMeasure => Ok(Report::Json(json(&risk_measure(
            distribution()?,
            pr.p(),
            &cfg,
        )?))),
        Task::RiskCompare => {
            let l = function()?;
            let f = required(pr.inner.as_ref(), "params.inner")?;
            let horizon = pr.horizon.unwrap_or(DEFAULT_RISK_HORIZON);
            let cmp = compare_risk_aversion(l, f, pr.p(), horizon, pr.trials(), pr.seed(), &cfg)?;
            Ok(Report::Json(json(&cmp)))
        }
        Task::Mgf => {
            let x = distribution()?;
            let s = required(pr.s, "params.s")?;
            let r = if x.is_bounded() {
                mgf_upper(x, s, pr.p())?
            } else {
                mgf_lower(x, s, pr.p())?
            };
            let exact = r.exact.unwrap_or(f64::NAN);
            let mut t = Table::new(&[
                "s",
                "p",
                "lower",
                "upper",
                "exact",
                "exact_error",
                "lower_gap",
                "upper_gap",
            ]);
            t.push(vec![
                s.into(),
                r.p.into(),
                r.lower.into(),
                crate::table::Cell::opt(r.upper),
                crate::table::Cell::opt(r.exact),
                r.exact_error.into(),
                (exact - r.lower).into(),
                crate::table::Cell::opt(r.upper.map(|u| u - exact)),
            ]);
            Ok(Report::Csv(t.to_csv()?))
        }
        Task::Amgm => {
            let x = distribution()?;
            let lower = am_gm_lower(x, pr.p())?;
            let mean = x.mean()?;
            let geometric = x.expect_fn(f64::ln)?.value.exp();
            let mut t = Table::new(&["p", "lower", "mean", "geometric_mean", "gap"]);
            t.push(vec![
                pr.p().into(),
                lower.into(),
                mean.into(),
                geometric.into(),
                (mean - lower).into(),
            ]);
            Ok(Report::Csv(t.to_csv()?))
        }
        Task::EmDemo => {
            let dim = pr.dim.unwrap_or(DEFAULT_DIM);
            let data = em_truth(dim).sample(pr.samples.unwrap_or(DEFAULT_SAMPLES), pr.seed());
            let trace = em_demo(&data, pr.iters(), pr.seed().wrapping_add(1))?;
            let mut t = Table::new(&["iter", "loglik", "elbo_classical", "elbo_tight"]);
            for r in &trace.rows {
                t.push(vec![
                    r.iter.into(),
                    r.loglik.into(),
                    r.elbo_classical.into(),
                    r.elbo_tight.into(),
                ]);
            }
            Ok(Report::Csv(t.to_csv()?))
        }
        Task::Hh | Task::HhFractional => {
            let f = function()?;
            let p = pr.p();
            if p == 0 {
                return Err(CliError::Input("hh needs p >= 1".into()));
            }
            let a = pr.a.unwrap_or(f.domain.lo);
            let b = finite_end(pr.b, &[f.domain.hi], "-b")?;
            let cert = certify_i(f, p - 1, a, b, &cfg);
            let report = match pr.alpha {
                Some(alpha) if pf.task == Task::HhFractional => {
                    fractional_hh_bounds(f, &cert, p, alpha)?
                }
                _ => hh_bounds(f, &cert, p)?,
            };
            let mut t = Table::new(&HH_HEADER);
            t.push(hh_row(&report));
            Ok(Report::Csv(t.to_csv()?))
        }
        Task::Rl => {
            let f = function()?;
            let alpha = required(pr.alpha, "params.alpha")?;
            let x = required(pr.x, "params.x")?;
            let (side, anchor) = match pr.side.unwrap_or(SideArg::Left) {
                SideArg::Left => {
                    let a = pr.a.unwrap_or(f.domain.lo);
                    (RlSide::Left(a), a)
                }
                SideArg::Right => {
                    let b = finite_end(pr.b, &[f.domain.hi], "--anchor")?;
                    (RlSide::Right(b), b)
                }
            };
            let value = rl_integral(f, alpha, side, x)?;
            let label = match side {
                RlSide::Left(_) => "left",
                RlSide::Right(_) => "right",
            };
            let mut t = Table::new(&["alpha", "side", "anchor", "x", "value"]);
            t.push(vec![
                alpha.into(),
                label.into(),
                anchor.into(),
                x.into(),
                value.into(),
            ]);
            Ok(Report::Csv(t.to_csv()?))
        }
        Task::Sweep => {
            let suite = required(pr.suite, "params.suite")?;
            let mut out = Vec::new();
            for s in run_suite(suite, pr.seed())? {
                let csv = s.table.to_csv()?;
                let svg = render_gap_plot(&csv, &s.plot)?;
                out.push((s.suite, csv, svg));
            }
            Ok(Report::Sweep(out))
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    }
    fs::write(path, text).map_err(CliError::io(format!("writing {}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes a report to `out` (stdout when absent) and sweep plots to `plot`.
pub fn deliver(report: &Report, out: Option<&Path>, plot: Option<&Path>) -> Result<(), CliError> {
    match report {
        Report::Json(text) | Report::Csv(text) => {
            if plot.is_some() {
                return Err(CliError::Input("--plot applies to sweeps only".into()));
            }
            emit(text, out)
        }
        Report::Sweep(parts) if parts.len() == 1 => {
            let (_, csv, svg) = &parts[0];
            emit(csv, out)?;
            plot.map_or(Ok(()), |p| write(p, svg))
        }
        Report::Sweep(parts) => {
            let dir =
                out.ok_or_else(|| CliError::Input("sweeping every suite needs --out DIR".into()))?;
            let plot_dir = plot.unwrap_or(dir);
            for (suite, csv, svg) in parts {
                write(&dir.join(format!("{}.csv", suite.as_str())), csv)?;
                write(&plot_dir.join(format!("{}.svg", suite.as_str())), svg)?;
            }
            Ok(())
        }
    }
}

/// Thread pool capped by `PCONVEX_THREADS`.
fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("PCONVEX_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            CliError::Input(format!(
                "PCONVEX_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    let (problem, plot): (ProblemFile, Option<PathBuf>) = match &cli.command {
        Command::Plot {
            csv,
            x,
            series,
            group,
            title,
        } => {
            let text = fs::read_to_string(csv)
                .map_err(CliError::io(format!("reading {}", csv.display())))?;
            let spec = PlotSpec {
                title: title.clone(),
                x: x.clone(),
                series: series.clone(),
                group: group.clone(),
            };
            return emit(&render_gap_plot(&text, &spec)?, common.out.as_deref());
        }
        Command::Run { problem, plot } => {
            let text = fs::read_to_string(problem)
                .map_err(CliError::io(format!("reading {}", problem.display())))?;
            let mut pf = ProblemFile::from_json(&text)?;
            apply_common(&mut pf, common)?;
            pf.validate()?;
            (pf, plot.clone())
        }
        Command::Sweep { plot, .. } => (problem_from_command(&cli.command, common)?, plot.clone()),
        other => (problem_from_command(other, common)?, None),
    };
    if common.dump_canonical {
        return emit(&format!("{}\n", problem.to_json()), common.out.as_deref());
    }
    let report = pool()?.install(|| execute(&problem))?;
    deliver(&report, common.out.as_deref(), plot.as_deref())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_from_env() -> i32 {
    run_cli(std::env::args_os())
}
