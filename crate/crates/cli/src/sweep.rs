//! Seeded sweep suites. Every case draws from its own generator, so the
//! output does not depend on how cases are scheduled across threads.

use pconvex::convexity::certify_i;
use pconvex::jensen::{classical_jensen_lower, classical_secant_upper};
use pconvex::{
    fractional_hh_bounds, hh_bounds, jensen_lower, jensen_upper, mgf_upper, risk_measure,
    BoundOptions, CertifyConfig, FunctionSpec, HHReport, RandomVariable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliError;
use crate::plot::PlotSpec;
use crate::problem::Suite;
use crate::table::{Cell, Table};

pub const JENSEN_CASES: usize = 200;
pub const MGF_CASES: usize = 200;
pub const RISK_CASES: usize = 50;
pub const HH_ORDERS: std::ops::RangeInclusive<u32> = 1..=6;
pub const HH_ALPHAS: [f64; 4] = [0.5, 1.0, 1.5, 2.5];
/// Degree of the power function swept by the hh suites on `[0, 1]`.
pub const HH_DEGREE: f64 = 8.0;

/// Generator for case `index` of a sweep seeded with `seed`.
pub fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Discrete law with `1..=max_atoms` atoms uniform on `[lo, hi]`.
pub fn random_discrete(
    rng: &mut ChaCha8Rng,
    lo: f64,
    hi: f64,
    max_atoms: usize,
) -> pconvex::Result<RandomVariable> {
    let n = rng.random_range(1..=max_atoms);
    let atoms: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    RandomVariable::discrete(atoms, probs)
}

/// A member of 𝕴(p,a,b) with a law on `[a, b]`.
#[derive(Debug, Clone)]
pub struct JensenCase {
    pub family: String,
    pub f: FunctionSpec,
    pub p: u32,
    pub a: f64,
    pub b: f64,
    pub x: RandomVariable,
}

pub fn jensen_case(seed: u64, index: usize) -> pconvex::Result<JensenCase> {
    let mut rng = case_rng(seed, index);
    let p = 1 + (index % 3) as u32;
    let pf = p as f64;
    let a = rng.random_range(-1.0..1.0);
    let b = a + rng.random_range(0.5..3.0);
    let (family, f) = match rng.random_range(0..4) {
        0 => {
            let q = rng.random_range(pf + 1.0..pf + 4.0);
            (
                "shifted-power".to_string(),
                FunctionSpec::shifted_power(q, a)?,
            )
        }
        1 => {
            let m = p + rng.random_range(0..2);
            let s = rng.random_range(0.3..2.0);
            (
                "exp-taylor-remainder".to_string(),
                FunctionSpec::exp_taylor_remainder(m).precompose_affine(s, -s * a)?,
            )
        }
        2 => {
            let mut coefficients = vec![0.0; p as usize + 1];
            coefficients.extend((0..3).map(|_| rng.random_range(0.0..2.0)));
            coefficients[p as usize + 1] += 0.1;
            (
                "polynomial".to_string(),
                FunctionSpec::polynomial(coefficients)?.precompose_affine(1.0, -a)?,
            )
        }
        _ => {
            let q = rng.random_range(pf + 1.0..pf + 3.0);
            let s = rng.random_range(0.3..1.5);
            let left = FunctionSpec::shifted_power(q, a)?;
            let right = FunctionSpec::exp_taylor_remainder(p).precompose_affine(s, -s * a)?;
            (
                "weighted-sum".to_string(),
                FunctionSpec::weighted_sum(&[
                    (rng.random_range(0.1..2.0), &left),
                    (rng.random_range(0.1..2.0), &right),
                ])?,
            )
        }
    };
    let x = random_discrete(&mut rng, a, b, 6)?;
    Ok(JensenCase {
        family,
        f,
        p,
        a,
        b,
        x,
    })
}

/// One sweep's table and how to plot it.
#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub table: Table,
    pub plot: PlotSpec,
}

fn plot(title: &str, x: &str, series: &[&str], group: Option<&str>) -> PlotSpec {
    PlotSpec {
        title: title.into(),
        x: x.into(),
        series: series.iter().map(|s| s.to_string()).collect(),
        group: group.map(str::to_string),
    }
}

fn collect<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T, CliError> + Sync + Send,
) -> Result<Vec<T>, CliError> {
    (0..n).into_par_iter().map(f).collect()
}

pub fn jensen_suite(seed: u64) -> Result<SuiteOutput, CliError> {
    let opts = BoundOptions::default();
    let cfg = CertifyConfig::default();
    let rows = collect(JENSEN_CASES, |i| {
        let c = jensen_case(seed, i)?;
        let cert = certify_i(&c.f, c.p, c.a, c.b, &cfg);
        let mut row: Vec<Cell> = vec![
            i.into(),
            c.family.as_str().into(),
            c.p.into(),
            c.a.into(),
            c.b.into(),
        ];
        if !cert.passed() {
            row.extend(std::iter::repeat_n(Cell::Empty, 9));
            row.push("false".into());
            return Ok(row);
        }
        let lo = jensen_lower(&c.f, &cert, &c.x, &opts)?;
        let up = jensen_upper(&c.f, &cert, &c.x, &opts)?;
        let cl = classical_jensen_lower(
            &c.f,
            &c.x,
            &BoundOptions {
                skip_oracle: true,
                ..opts
            },
        )?;
        let cu = classical_secant_upper(
            &c.f,
            &c.x,
            c.a,
            c.b,
            &BoundOptions {
                skip_oracle: true,
                ..opts
            },
        )?;
        let oracle = lo.oracle.unwrap_or(f64::NAN);
        row.extend([
            lo.value.into(),
            oracle.into(),
            up.value.into(),
            cl.value.into(),
            cu.value.into(),
            (oracle - lo.value).into(),
            (up.value - oracle).into(),
            (lo.value - cl.value).into(),
            (cu.value - up.value).into(),
            "true".into(),
        ]);
        Ok(row)
    })?;
    let mut table = Table::new(&[
        "case",
        "family",
        "p",
        "a",
        "b",
        "lower",
        "oracle",
        "upper",
        "classical_lower",
        "classical_upper",
        "lower_gap",
        "upper_gap",
        "lower_tightening",
        "upper_tightening",
        "certified",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(SuiteOutput {
        suite: Suite::Jensen,
        table,
        plot: plot(
            "Jensen bounds: distance to E f(X)",
            "case",
            &["lower_gap", "upper_gap"],
            None,
        ),
    })
}

pub const HH_HEADER: [&str; 11] = [
    "p",
    "alpha",
    "lower",
    "mid",
    "upper",
    "classical_lower",
    "classical_upper",
    "lower_gap",
    "upper_gap",
    "classical_lower_gap",
    "classical_upper_gap",
];

pub fn hh_row(r: &HHReport) -> Vec<Cell> {
    vec![
        r.p.into(),
        Cell::opt(r.alpha),
        r.lower.into(),
        r.mid.into(),
        r.upper.into(),
        r.classical_lower.into(),
        r.classical_upper.into(),
        (r.mid - r.lower).into(),
        (r.upper - r.mid).into(),
        (r.mid - r.classical_lower).into(),
        (r.classical_upper - r.mid).into(),
    ]
}

fn hh_function() -> pconvex::Result<FunctionSpec> {
    Ok(FunctionSpec::shifted_power(HH_DEGREE, 0.0)?
        .with_domain(0.0, 1.0)?
        .with_label("x^8"))
}

pub fn hh_suite() -> Result<SuiteOutput, CliError> {
    let f = hh_function()?;
    let cfg = CertifyConfig::default();
    let orders: Vec<u32> = HH_ORDERS.collect();
    let rows = collect(orders.len(), |i| {
        let p = orders[i];
        let cert = certify_i(&f, p - 1, 0.0, 1.0, &cfg);
        Ok(hh_row(&hh_bounds(&f, &cert, p)?))
    })?;
    let mut table = Table::new(&HH_HEADER);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(SuiteOutput {
        suite: Suite::Hh,
        table,
        plot: plot(
            "Hermite-Hadamard gaps for x^8 on [0, 1]",
            "p",
            &["lower_gap", "upper_gap"],
            None,
        ),
    })
}

pub fn hh_fractional_suite() -> Result<SuiteOutput, CliError> {
    let f = hh_function()?;
    let cfg = CertifyConfig::default();
    let cells: Vec<(u32, f64)> = HH_ALPHAS
        .iter()
        .flat_map(|al| HH_ORDERS.map(move |p| (p, *al)))
        .collect();
    let rows = collect(cells.len(), |i| {
        let (p, alpha) = cells[i];
        let cert = certify_i(&f, p - 1, 0.0, 1.0, &cfg);
        Ok(hh_row(&fractional_hh_bounds(&f, &cert, p, alpha)?))
    })?;
    let mut table = Table::new(&HH_HEADER);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(SuiteOutput {
        suite: Suite::HhFractional,
        table,
        plot: plot(
            "Fractional Hermite-Hadamard gaps for x^8 on [0, 1]",
            "p",
            &["lower_gap", "upper_gap"],
            Some("alpha"),
        ),
    })
}

/// `(X, s, p)` for case `index` of the mgf sweep; `X` is bounded.
pub fn mgf_case(seed: u64, index: usize) -> pconvex::Result<(RandomVariable, f64, u32)> {
    let mut rng = case_rng(seed, index);
    let hi = rng.random_range(0.5..3.0);
    let x = random_discrete(&mut rng, 0.0, hi, 6)?;
    let s = rng.random_range(0.0..3.0);
    let p = 1 + (index % 4) as u32;
    Ok((x, s, p))
}

pub fn mgf_suite(seed: u64) -> Result<SuiteOutput, CliError> {
    let rows = collect(MGF_CASES, |i| {
        let (x, s, p) = mgf_case(seed, i)?;
        let r = mgf_upper(&x, s, p)?;
        let exact = r.exact.unwrap_or(f64::NAN);
        let upper = r.upper.unwrap_or(f64::NAN);
        Ok(vec![
            i.into(),
            s.into(),
            p.into(),
            r.lower.into(),
            exact.into(),
            upper.into(),
            (exact - r.lower).into(),
            (upper - exact).into(),
        ])
    })?;
    let mut table = Table::new(&[
        "case",
        "s",
        "p",
        "lower",
        "exact",
        "upper",
        "lower_gap",
        "upper_gap",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(SuiteOutput {
        suite: Suite::Mgf,
        table,
        plot: plot(
            "MGF bounds: distance to E exp(sX)",
            "case",
            &["lower_gap", "upper_gap"],
            None,
        ),
    })
}

/// Loss law for case `index` of the risk sweep.
pub fn risk_case(seed: u64, index: usize) -> pconvex::Result<RandomVariable> {
    random_discrete(&mut case_rng(seed, index), 0.0, 5.0, 6)
}

pub fn risk_suite(seed: u64) -> Result<SuiteOutput, CliError> {
    let cfg = CertifyConfig::default();
    let cells: Vec<(usize, u32)> = (0..RISK_CASES)
        .flat_map(|i| (1..=3).map(move |p| (i, p)))
        .collect();
    let rows = collect(cells.len(), |k| {
        let (i, p) = cells[k];
        let r = risk_measure(&risk_case(seed, i)?, p, &cfg)?;
        Ok(vec![
            i.into(),
            p.into(),
            r.closed_form.into(),
            r.sweep_infimum.into(),
            r.achiever.into(),
            (r.sweep_infimum - r.closed_form).into(),
        ])
    })?;
    let mut table = Table::new(&[
        "case",
        "p",
        "closed_form",
        "sweep_infimum",
        "achiever",
        "excess",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(SuiteOutput {
        suite: Suite::Risk,
        table,
        plot: plot(
            "Risk measure: sweep infimum minus closed form",
            "case",
            &["excess"],
            Some("p"),
        ),
    })
}

/// The suites behind `suite`; `All` expands to every suite in a fixed order.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<SuiteOutput>, CliError> {
    match suite {
        Suite::Jensen => Ok(vec![jensen_suite(seed)?]),
        Suite::Hh => Ok(vec![hh_suite()?]),
        Suite::HhFractional => Ok(vec![hh_fractional_suite()?]),
        Suite::Mgf => Ok(vec![mgf_suite(seed)?]),
        Suite::Risk => Ok(vec![risk_suite(seed)?]),
        Suite::All => {
            let mut out = Vec::new();
            for s in [
                Suite::Jensen,
                Suite::Hh,
                Suite::HhFractional,
                Suite::Mgf,
                Suite::Risk,
            ] {
                out.extend(run_suite(s, seed)?);
            }
            Ok(out)
        }
    }
}
