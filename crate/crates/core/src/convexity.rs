//! Grid certification of the classes 𝕴(p,a,b), 𝕯(p,a,b) and ℒ_p, plus the
//! k_p convexity and ratio monotonicity checks.
//!
//! Every condition is reduced to "value >= 0" at grid points. Values are
//! normalized by `1 + S`, where `S` is the largest magnitude the condition
//! takes on the grid, and the normalized margin must be `>= -slack`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{FunctionSpec, Provenance};
use crate::numerics::{ToleranceProfile, NUMERIC_SLACK_FACTOR};

/// Sign convention for 𝕯(p,a,b).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DOrientation {
    /// `f' >= 0, f'' <= 0, f''' >= 0, ...`
    #[default]
    Alternating,
    /// `(-1)^k f^(k) >= 0`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum ConvexityClass {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "D")]
    D { orientation: DOrientation },
    #[serde(rename = "Lp")]
    Lp,
}

impl ConvexityClass {
    pub fn name(&self) -> &'static str {
        match self {
            ConvexityClass::I => "I",
            ConvexityClass::D { .. } => "D",
            ConvexityClass::Lp => "Lp",
        }
    }
}

/// What a certificate attests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Membership,
    KpConvexity,
    RatioMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: f64,
    pub condition: String,
    pub margin: f64,
}

/// Smallest normalized margin of one condition over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub min_margin: f64,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCertificate {
    #[serde(flatten)]
    pub class: ConvexityClass,
    pub check: CheckKind,
    pub p: u32,
    pub interval: [f64; 2],
    pub grid_size: usize,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub derivative_provenance: Provenance,
    pub slack_used: f64,
    pub conditions: Vec<ConditionSummary>,
}

impl ConvexityCertificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Ok when this is a passing membership certificate of `class` at order `p`.
    pub fn require(&self, class: &str, p: u32) -> Result<()> {
        let expected = format!("{class}({p})");
        if self.check != CheckKind::Membership || self.class.name() != class {
            return Err(Error::CertificateRequired {
                expected,
                reason: format!(
                    "got a {:?} certificate of class {}",
                    self.check,
                    self.class.name()
                ),
            });
        }
        if self.p != p {
            return Err(Error::CertificateRequired {
                expected,
                reason: format!("certificate is for order {}", self.p),
            });
        }
        if !self.passed() {
            let reason = match &self.witness {
                Some(w) => format!(
                    "{} fails at x = {} (margin {:e})",
                    w.condition, w.point, w.margin
                ),
                None => "verdict is fail".into(),
            };
            return Err(Error::CertificateRequired { expected, reason });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyConfig {
    pub grid_size: usize,
    pub tol: ToleranceProfile,
    /// Floor for the strict positivity conditions of ℒ_p.
    pub strict_floor: f64,
    pub d_orientation: DOrientation,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            grid_size: 1024,
            tol: ToleranceProfile::default(),
            strict_floor: 0.0,
            d_orientation: DOrientation::Alternating,
        }
    }
}

impl CertifyConfig {
    pub fn with_grid(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }
}

/// Collects conditions and builds the certificate.
struct Evidence {
    slack: f64,
    conditions: Vec<ConditionSummary>,
    witness: Option<Witness>,
}

impl Evidence {
    fn new(slack: f64) -> Self {
        Evidence {
            slack,
            conditions: Vec::new(),
            witness: None,
        }
    }

    /// Records `values[i] >= 0` at `points[i]`, normalized by `1 + max |value|`.
    fn nonnegative(&mut self, condition: &str, points: &[f64], values: &[f64]) {
        let scale = 1.0
            + values
                .iter()
                .filter(|v| v.is_finite())
                .fold(0.0f64, |m, v| m.max(v.abs()));
        self.record(condition, points, values.iter().map(|v| v / scale));
    }

    /// Records `|value| <= slack` for endpoint conditions, normalized by `1 + scale`.
    fn vanishes(&mut self, condition: &str, point: f64, value: f64, scale: f64) {
        self.record(
            condition,
            &[point],
            std::iter::once(-value.abs() / (1.0 + scale)),
        );
    }

    fn record(&mut self, condition: &str, points: &[f64], margins: impl Iterator<Item = f64>) {
        let mut worst = (f64::INFINITY, f64::NAN);
        for (&x, m) in points.iter().zip(margins) {
            // +∞ satisfies ">= 0"; NaN and -∞ are the worst possible violation
            let m = if m.is_nan() || m == f64::NEG_INFINITY {
                -f64::MAX
            } else {
                m
            };
            if m < worst.0 {
                worst = (m, x);
            }
        }
        if worst.0 < -self.slack && self.witness.is_none() {
            self.witness = Some(Witness {
                point: worst.1,
                condition: condition.to_string(),
                margin: worst.0,
            });
        }
        self.conditions.push(ConditionSummary {
            condition: condition.to_string(),
            min_margin: worst.0,
            at: worst.1,
        });
    }

    fn finish(
        self,
        class: ConvexityClass,
        check: CheckKind,
        p: u32,
        interval: [f64; 2],
        grid_size: usize,
        provenance: Provenance,
    ) -> ConvexityCertificate {
        ConvexityCertificate {
            class,
            check,
            p,
            interval,
            grid_size,
            verdict: if self.witness.is_some() {
                Verdict::Fail
            } else {
                Verdict::Pass
            },
            witness: self.witness,
            derivative_provenance: provenance,
            slack_used: self.slack,
            conditions: self.conditions,
        }
    }
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    FunctionSpec::grid(a, b, n.max(2))
}

fn provenance_for(f: &FunctionSpec, order: usize) -> Provenance {
    f.provenance(order).unwrap_or(Provenance::Numeric)
}

fn slack_for(cfg: &CertifyConfig, provenance: Provenance) -> f64 {
    match provenance {
        Provenance::Analytic => cfg.tol.certify_slack,
        Provenance::Numeric => cfg.tol.certify_slack * NUMERIC_SLACK_FACTOR,
    }
}

fn effective_end(f: &FunctionSpec, b: f64) -> f64 {
    if b.is_finite() {
        b
    } else {
        f.domain.effective_hi()
    }
}

fn check_interval(ev: &mut Evidence, f: &FunctionSpec, a: f64, b: f64) {
    let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
    let inside = a >= f.domain.lo - tol && b <= f.domain.hi + tol && a < b;
    let margin = if inside { 0.0 } else { -1.0 };
    ev.record(
        "[a, b] inside the domain",
        &[if a < f.domain.lo { a } else { b }],
        std::iter::once(margin),
    );
}

fn values(f: &FunctionSpec, k: usize, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| f.derivative(k, x)).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter()
        .filter(|x| x.is_finite())
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Second differences `v[i-1] - 2 v[i] + v[i+1]` at interior points.
fn second_differences(xs: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pts = xs[1..xs.len() - 1].to_vec();
    let d2 = (1..v.len() - 1)
        .map(|i| v[i - 1] - 2.0 * v[i] + v[i + 1])
        .collect();
    (pts, d2)
}

/// Membership in 𝕴(p,a,b): `f^(k)(a) = 0` for `k = 1..p`, `f^(p)` increasing
/// and convex. For `p = 0` only convexity is checked.
pub fn certify_i(
    f: &FunctionSpec,
    p: u32,
    a: f64,
    b: f64,
    cfg: &CertifyConfig,
) -> ConvexityCertificate {
    let pu = p as usize;
    let b = effective_end(f, b);
    let top = if f.max_order() >= pu + 2 {
        pu + 2
    } else {
        pu + 1
    };
    let provenance = provenance_for(f, top.min(f.max_order()));
    let mut ev = Evidence::new(slack_for(cfg, provenance));
    check_interval(&mut ev, f, a, b);
    let xs = grid(a, b, cfg.grid_size);

    if f.max_order() < pu + 1 {
        ev.record(
            &format!("f^({}) available", pu + 1),
            &[a],
            std::iter::once(-1.0),
        );
        return ev.finish(
            ConvexityClass::I,
            CheckKind::Membership,
            p,
            [a, b],
            cfg.grid_size,
            provenance,
        );
    }
    for k in 1..=pu {
        let scale = max_abs(&values(f, k, &xs));
        ev.vanishes(&format!("f^({k})(a) = 0"), a, f.derivative(k, a), scale);
    }
    if p >= 1 {
        ev.nonnegative(
            &format!("f^({}) >= 0", pu + 1),
            &xs,
            &values(f, pu + 1, &xs),
        );
    }
    if f.max_order() >= pu + 2 {
        ev.nonnegative(
            &format!("f^({}) >= 0", pu + 2),
            &xs,
            &values(f, pu + 2, &xs),
        );
    } else {
        let v = values(f, pu, &xs);
        let (pts, d2) = second_differences(&xs, &v);
        let scale = 1.0 + max_abs(&v);
        ev.record(
            &format!("second differences of f^({pu}) >= 0"),
            &pts,
            d2.iter().map(|d| d / scale),
        );
    }
    ev.finish(
        ConvexityClass::I,
        CheckKind::Membership,
        p,
        [a, b],
        cfg.grid_size,
        provenance,
    )
}

/// Membership in 𝕯(p,a,b): `f^(k)(b) = 0` for `k = 1..p` and the sign
/// pattern selected by `cfg.d_orientation` for `k = 1..p+2`.
pub fn certify_d(
    f: &FunctionSpec,
    p: u32,
    a: f64,
    b: f64,
    cfg: &CertifyConfig,
) -> ConvexityCertificate {
    let pu = p as usize;
    let top = (pu + 2).min(f.max_order());
    let provenance = provenance_for(f, top);
    let class = ConvexityClass::D {
        orientation: cfg.d_orientation,
    };
    let mut ev = Evidence::new(slack_for(cfg, provenance));
    check_interval(&mut ev, f, a, b);
    if !b.is_finite() {
        ev.record("bounded interval", &[a], std::iter::once(-1.0));
        return ev.finish(
            class,
            CheckKind::Membership,
            p,
            [a, b],
            cfg.grid_size,
            provenance,
        );
    }
    if f.max_order() < pu + 1 {
        ev.record(
            &format!("f^({}) available", pu + 1),
            &[b],
            std::iter::once(-1.0),
        );
        return ev.finish(
            class,
            CheckKind::Membership,
            p,
            [a, b],
            cfg.grid_size,
            provenance,
        );
    }
    let xs = grid(a, b, cfg.grid_size);
    let derivs: Vec<Vec<f64>> = (1..=top).map(|k| values(f, k, &xs)).collect();
    for k in 1..=pu {
        ev.vanishes(
            &format!("f^({k})(b) = 0"),
            b,
            f.derivative(k, b),
            max_abs(&derivs[k - 1]),
        );
    }
    for k in 1..=top {
        let sign = match (cfg.d_orientation, k % 2 == 1) {
            (DOrientation::Alternating, true) | (DOrientation::Literal, false) => 1.0,
            _ => -1.0,
        };
        let signed: Vec<f64> = derivs[k - 1].iter().map(|v| sign * v).collect();
        let rel = if sign > 0.0 { ">=" } else { "<=" };
        ev.nonnegative(&format!("f^({k}) {rel} 0"), &xs, &signed);
    }
    ev.finish(
        class,
        CheckKind::Membership,
        p,
        [a, b],
        cfg.grid_size,
        provenance,
    )
}

/// Points closer to 0 than this are exempt from the strict positivity
/// conditions of ℒ_p.
const LP_STRICT_OFFSET: f64 = 1e-6;

/// Membership in ℒ_p on `[0, horizon]`: `l''(x) x >= p l'(x)` and
/// `l^(k)(x) >= strict_floor` for `k = 1..p+2` at grid points `x > 0`.
pub fn certify_lp(
    l: &FunctionSpec,
    p: u32,
    horizon: f64,
    cfg: &CertifyConfig,
) -> ConvexityCertificate {
    let pu = p as usize;
    let top = (pu + 2).min(l.max_order());
    let provenance = provenance_for(l, top);
    let mut ev = Evidence::new(slack_for(cfg, provenance));
    check_interval(&mut ev, l, 0.0, horizon);
    if l.max_order() < pu + 2 {
        ev.record(
            &format!("l^({}) available", pu + 2),
            &[0.0],
            std::iter::once(-1.0),
        );
        return ev.finish(
            ConvexityClass::Lp,
            CheckKind::Membership,
            p,
            [0.0, horizon],
            cfg.grid_size,
            provenance,
        );
    }
    let xs: Vec<f64> = grid(0.0, horizon, cfg.grid_size)
        .into_iter()
        .filter(|x| *x > 0.0)
        .collect();
    let d1 = values(l, 1, &xs);
    let d2 = values(l, 2, &xs);
    let curvature: Vec<f64> = xs
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(x, (g1, g2))| g2 * x - p as f64 * g1)
        .collect();
    // normalize by the size of the two terms, not their difference
    let scale = 1.0
        + xs.iter()
            .zip(d1.iter().zip(&d2))
            .fold(0.0f64, |m, (x, (g1, g2))| {
                m.max((g2 * x).abs()).max((p as f64 * g1).abs())
            });
    ev.record(
        &format!("l''(x) x - {p} l'(x) >= 0"),
        &xs,
        curvature.iter().map(|c| c / scale),
    );
    let strict: Vec<f64> = xs
        .iter()
        .copied()
        .filter(|x| *x > LP_STRICT_OFFSET)
        .collect();
    for k in 1..=pu + 2 {
        let v = values(l, k, &strict);
        let scale = 1.0 + max_abs(&v);
        ev.record(
            &format!("l^({k}) >= {}", cfg.strict_floor),
            &strict,
            v.iter().map(|d| (d - cfg.strict_floor) / scale),
        );
    }
    ev.finish(
        ConvexityClass::Lp,
        CheckKind::Membership,
        p,
        [0.0, horizon],
        cfg.grid_size,
        provenance,
    )
}

fn require_i(cert: &ConvexityCertificate) -> Result<()> {
    cert.require("I", cert.p)
}

/// Discrete convexity of `k_p(y) = f(a + y^(1/(p+1)))` on `[0, (b-a)^(p+1)]`.
pub fn check_kp_convex(
    f: &FunctionSpec,
    cert: &ConvexityCertificate,
    cfg: &CertifyConfig,
) -> Result<ConvexityCertificate> {
    require_i(cert)?;
    let (p, [a, b]) = (cert.p, cert.interval);
    let inv = 1.0 / (p as f64 + 1.0);
    let top = (b - a).powi(p as i32 + 1);
    let ys = grid(0.0, top, cfg.grid_size);
    let k: Vec<f64> = ys.iter().map(|y| f.eval(a + y.powf(inv))).collect();
    let (pts, d2) = second_differences(&ys, &k);
    let mut ev = Evidence::new(cert.slack_used);
    let scale = 1.0 + max_abs(&k);
    ev.record(
        "second differences of k_p >= 0",
        &pts,
        d2.iter().map(|d| d / scale),
    );
    Ok(ev.finish(
        ConvexityClass::I,
        CheckKind::KpConvexity,
        p,
        [a, b],
        cfg.grid_size,
        Provenance::Analytic,
    ))
}

/// `g(x) = f(x) / (x - a)^(p+1)` nondecreasing on the grid over `(a, b]`.
///
/// Within `1e-4 (b - a)` of `a` the ratio is replaced by its Taylor quotient
/// when analytic derivatives to order `p + 3` exist, falling back to the
/// direct ratio when that quotient is not finite. Without analytic
/// derivatives those points are skipped.
pub fn check_ratio_monotone(
    f: &FunctionSpec,
    cert: &ConvexityCertificate,
    cfg: &CertifyConfig,
) -> Result<ConvexityCertificate> {
    require_i(cert)?;
    let (p, [a, b]) = (cert.p, cert.interval);
    let pu = p as usize;
    let mut ev = Evidence::new(cert.slack_used);
    let fa = f.eval(a);
    let f_scale = 1.0 + (f.eval(b)).abs();
    ev.vanishes("f(a) = 0", a, fa, f_scale - 1.0);

    let near = 1e-4 * (b - a);
    let taylor = f.analytic_order() >= pu + 3;
    let fact = |n: usize| (1..=n).fold(1.0, |acc, j| acc * j as f64);
    let quotient = |x: f64| -> Option<f64> {
        let h = x - a;
        let direct = || Some(f.eval(x) / h.powi(p as i32 + 1)).filter(|g: &f64| g.is_finite());
        if h < near {
            if !taylor {
                return None;
            }
            let q: f64 = (pu + 1..=pu + 3)
                .map(|j| f.derivative(j, a) * h.powi((j - pu - 1) as i32) / fact(j))
                .sum();
            // unbounded derivatives at a, as for non-integer powers
            if q.is_finite() {
                Some(q)
            } else {
                direct()
            }
        } else {
            Some(f.eval(x) / h.powi(p as i32 + 1))
        }
    };
    let (xs, gs): (Vec<f64>, Vec<f64>) = grid(a, b, cfg.grid_size)
        .into_iter()
        .filter_map(|x| quotient(x).map(|g| (x, g)))
        .unzip();
    let scale = 1.0 + max_abs(&gs);
    let steps: Vec<f64> = gs.windows(2).map(|w| (w[1] - w[0]) / scale).collect();
    ev.record("ratio nondecreasing", &xs[1..], steps.into_iter());
    Ok(ev.finish(
        ConvexityClass::I,
        CheckKind::RatioMonotone,
        p,
        [a, b],
        cfg.grid_size,
        provenance_for(f, pu + 3),
    ))
}
