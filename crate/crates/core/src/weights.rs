//! Weight functions `ν: R^d → (0, ∞)` and sampled checks of the weight
//! classes the algebras need (submultiplicative, moderate, GRS).
//!
//! All built-in weights are radial. Predicates are evaluated on sample grids,
//! never proved; the default grid uses the index differences of a point set,
//! which is where matrix norms actually read the weight.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::PointSet;

/// Values above this are treated as overflow.
pub const WEIGHT_CEILING: f64 = 1e300;

/// Tolerance for predicates that hold exactly in exact arithmetic.
pub const EXACT_TOLERANCE: f64 = 1e-12;

pub type WeightFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Opaque user-supplied weight.
#[derive(Clone)]
pub struct CustomWeight {
    name: String,
    f: Arc<WeightFn>,
}

impl CustomWeight {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        CustomWeight {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Radial weight interpolated linearly from `(radius, value)` samples;
    /// constant beyond the last sample.
    pub fn radial_table(name: impl Into<String>, mut table: Vec<(f64, f64)>) -> Result<Self> {
        if table.is_empty() || table.iter().any(|&(r, v)| !(r >= 0.0) || !(v > 0.0)) {
            return Err(Error::InvalidParameter(
                "radial table needs nonempty (r >= 0, value > 0) samples".into(),
            ));
        }
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(CustomWeight::new(name, move |x: &[f64]| {
            let r = euclid(x);
            let i = table.partition_point(|&(tr, _)| tr <= r);
            if i == 0 {
                table[0].1
            } else if i == table.len() {
                table[i - 1].1
            } else {
                let (r0, v0) = table[i - 1];
                let (r1, v1) = table[i];
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomWeight({})", self.name)
    }
}

impl PartialEq for CustomWeight {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

/// Parametric weight descriptor.
///
/// String form (used by the CLI and in JSON): `one`, `polynomial:s`,
/// `subexp:alpha,beta`, `mixed:alpha,beta,s,t`, `eps:delta,eps`, and
/// `product(a;b)` for pointwise products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightSpec {
    ConstantOne,
    /// `(1+|x|)^s`.
    Polynomial {
        s: f64,
    },
    /// `exp(α |x|^β)`.
    Subexponential {
        alpha: f64,
        beta: f64,
    },
    /// `exp(α |x|^β) (1+|x|)^s log(e+|x|)^t`.
    Mixed {
        alpha: f64,
        beta: f64,
        s: f64,
        t: f64,
    },
    /// `(1+ε|x|)^δ`.
    EpsilonScaled {
        delta: f64,
        eps: f64,
    },
    Product(Box<WeightSpec>, Box<WeightSpec>),
    Custom(CustomWeight),
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl WeightSpec {
    pub fn polynomial(s: f64) -> Self {
        WeightSpec::Polynomial { s }
    }

    pub fn product(a: WeightSpec, b: WeightSpec) -> Self {
        WeightSpec::Product(Box::new(a), Box::new(b))
    }

    pub fn custom(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        WeightSpec::Custom(CustomWeight::new(name, f))
    }

    /// Checks parameter ranges of the built-in kinds.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            WeightSpec::ConstantOne | WeightSpec::Custom(_) => Ok(()),
            WeightSpec::Polynomial { s } => {
                if *s >= 0.0 && s.is_finite() {
                    Ok(())
                } else {
                    bad(format!("polynomial weight needs s >= 0, got {s}"))
                }
            }
            WeightSpec::Subexponential { alpha, beta } => {
                if *alpha > 0.0 && *beta > 0.0 && *beta < 1.0 {
                    Ok(())
                } else {
                    bad(format!(
                        "subexponential weight needs alpha > 0, beta in (0,1); got {alpha}, {beta}"
                    ))
                }
            }
            WeightSpec::Mixed { alpha, beta, s, t } => {
                if *alpha >= 0.0 && *beta > 0.0 && *beta < 1.0 && *s >= 0.0 && *t >= 0.0 {
                    Ok(())
                } else {
                    bad(format!(
                        "mixed weight parameters out of range: {alpha}, {beta}, {s}, {t}"
                    ))
                }
            }
            WeightSpec::EpsilonScaled { delta, eps } => {
                if *delta > 0.0 && *delta <= 1.0 && *eps > 0.0 && *eps <= 1.0 {
                    Ok(())
                } else {
                    bad(format!(
                        "epsilon-scaled weight needs delta, eps in (0,1]; got {delta}, {eps}"
                    ))
                }
            }
            WeightSpec::Product(a, b) => {
                a.validate()?;
                b.validate()
            }
        }
    }

    fn raw(&self, x: &[f64]) -> f64 {
        let r = euclid(x);
        match self {
            WeightSpec::ConstantOne => 1.0,
            WeightSpec::Polynomial { s } => {
                if *s == 0.0 {
                    1.0
                } else {
                    (1.0 + r).powf(*s)
                }
            }
            WeightSpec::Subexponential { alpha, beta } => (alpha * r.powf(*beta)).exp(),
            WeightSpec::Mixed { alpha, beta, s, t } => {
                (alpha * r.powf(*beta)).exp()
                    * (1.0 + r).powf(*s)
                    * (std::f64::consts::E + r).ln().powf(*t)
            }
            WeightSpec::EpsilonScaled { delta, eps } => (1.0 + eps * r).powf(*delta),
            WeightSpec::Product(a, b) => a.raw(x) * b.raw(x),
            WeightSpec::Custom(c) => (c.f)(x),
        }
    }

    /// `ν(x)`, with an error for overflow or an invalid custom value.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = self.raw(x);
        if v > WEIGHT_CEILING || v == f64::INFINITY {
            return Err(Error::WeightOverflow {
                value: v,
                radius: euclid(x),
            });
        }
        if !(v > 0.0) {
            return Err(Error::InvalidWeightValue {
                name: self.to_string(),
                value: v,
                radius: euclid(x),
            });
        }
        Ok(v)
    }

    /// `ν(x_k - x_l)` on a point set.
    pub fn eval_pair(&self, set: &PointSet, k: usize, l: usize) -> Result<f64> {
        self.eval(&set.diff(k, l))
    }

    /// Whether the kind is admissible by construction: `ν = e^{ρ(|x|)}` with
    /// `ρ` concave, `ρ(0) = 0` and GRS. Custom weights are never reported as
    /// admissible since their concavity is unknown.
    pub fn is_admissible_kind(&self) -> bool {
        match self {
            WeightSpec::ConstantOne
            | WeightSpec::Polynomial { .. }
            | WeightSpec::Subexponential { .. }
            | WeightSpec::EpsilonScaled { .. } => true,
            // log(log(e+r)) is concave; the sum of concave functions is concave.
            WeightSpec::Mixed { .. } => true,
            WeightSpec::Product(a, b) => a.is_admissible_kind() && b.is_admissible_kind(),
            WeightSpec::Custom(_) => false,
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::ConstantOne => write!(f, "one"),
            WeightSpec::Polynomial { s } => write!(f, "polynomial:{s}"),
            WeightSpec::Subexponential { alpha, beta } => write!(f, "subexp:{alpha},{beta}"),
            WeightSpec::Mixed { alpha, beta, s, t } => write!(f, "mixed:{alpha},{beta},{s},{t}"),
            WeightSpec::EpsilonScaled { delta, eps } => write!(f, "eps:{delta},{eps}"),
            WeightSpec::Product(a, b) => write!(f, "product({a};{b})"),
            WeightSpec::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(inner) = text
            .strip_prefix("product(")
            .and_then(|t| t.strip_suffix(')'))
        {
            let split = split_top_level(inner).ok_or_else(|| {
                Error::InvalidParameter(format!("malformed product weight '{text}'"))
            })?;
            return Ok(WeightSpec::product(split.0.parse()?, split.1.parse()?));
        }
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!("bad number '{a}' in weight '{text}'"))
                    })
                })
                .collect::<Result<_>>()?
        };
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "weight '{kind}' takes {n} parameters, got {}",
                    nums.len()
                )))
            }
        };
        let spec = match kind {
            "one" | "constant_one" => {
                want(0)?;
                WeightSpec::ConstantOne
            }
            "polynomial" | "poly" => {
                want(1)?;
                WeightSpec::Polynomial { s: nums[0] }
            }
            "subexp" | "subexponential" => {
                want(2)?;
                WeightSpec::Subexponential {
                    alpha: nums[0],
                    beta: nums[1],
                }
            }
            "mixed" => {
                want(4)?;
                WeightSpec::Mixed {
                    alpha: nums[0],
                    beta: nums[1],
                    s: nums[2],
                    t: nums[3],
                }
            }
            "eps" | "epsilon_scaled" => {
                want(2)?;
                WeightSpec::EpsilonScaled {
                    delta: nums[0],
                    eps: nums[1],
                }
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown weight kind '{other}'"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn split_top_level(inner: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' if depth == 0 => return Some((&inner[..i], &inner[i + 1..])),
            _ => {}
        }
    }
    None
}

impl TryFrom<String> for WeightSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WeightSpec> for String {
    fn from(w: WeightSpec) -> String {
        w.to_string()
    }
}

/// Outcome of a sampled weight predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPredicateReport {
    pub predicate: String,
    pub worst_ratio: f64,
    /// Sample (pair, or a single point with an empty second entry) where the
    /// worst ratio occurred.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub tolerance: f64,
    pub passed: bool,
}

impl WeightPredicateReport {
    fn new(predicate: &str, worst_ratio: f64, witness: Option<(Vec<f64>, Vec<f64>)>) -> Self {
        WeightPredicateReport {
            predicate: predicate.to_string(),
            worst_ratio,
            witness,
            tolerance: EXACT_TOLERANCE,
            passed: worst_ratio <= 1.0 + EXACT_TOLERANCE,
        }
    }
}

fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

fn worst_pair<F>(
    samples: &[(Vec<f64>, Vec<f64>)],
    mut ratio: F,
) -> Result<(f64, Option<(Vec<f64>, Vec<f64>)>)>
where
    F: FnMut(&[f64], &[f64]) -> Result<f64>,
{
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "sample list must be nonempty".into(),
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for (x, y) in samples {
        let r = ratio(x, y)?;
        if r > worst {
            worst = r;
            witness = Some((x.clone(), y.clone()));
        }
    }
    Ok((worst, witness))
}

/// `max ν(x+x') / (ν(x) ν(x'))` over the sampled pairs.
pub fn check_submultiplicative(
    w: &WeightSpec,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<WeightPredicateReport> {
    let (worst, witness) = worst_pair(samples, |x, y| {
        Ok(w.eval(&add(x, y))? / (w.eval(x)? * w.eval(y)?))
    })?;
    Ok(WeightPredicateReport::new(
        "submultiplicative",
        worst,
        witness,
    ))
}

/// Estimates the moderateness constant `C` in `m(x+x') <= C m(x) ν(x')`.
/// The report passes when `C <= 1`.
pub fn check_moderate(
    m: &WeightSpec,
    nu: &WeightSpec,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<(f64, WeightPredicateReport)> {
    let (worst, witness) = worst_pair(samples, |x, y| {
        Ok(m.eval(&add(x, y))? / (m.eval(x)? * nu.eval(y)?))
    })?;
    Ok((
        worst,
        WeightPredicateReport::new("moderate", worst, witness),
    ))
}

/// `max ν(-x)/ν(x)` over the sampled points; passes for symmetric weights.
pub fn check_symmetric(w: &WeightSpec, points: &[Vec<f64>]) -> Result<WeightPredicateReport> {
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = points.iter().map(|p| (p.clone(), Vec::new())).collect();
    let (worst, witness) = worst_pair(&pairs, |x, _| {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        Ok(w.eval(&neg)? / w.eval(x)?)
    })?;
    Ok(WeightPredicateReport::new("symmetric", worst, witness))
}

/// `a_n = ν(n z)^{1/n}` for `n = 1..=N`.
pub fn grs_profile(w: &WeightSpec, z: &[f64], n_max: usize) -> Result<Vec<f64>> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("GRS profile needs N >= 2".into()));
    }
    (1..=n_max)
        .map(|n| {
            let x: Vec<f64> = z.iter().map(|c| c * n as f64).collect();
            // ln first so the n-th root does not overflow before the division.
            Ok((w.raw(&x).ln() / n as f64).exp())
        })
        .collect()
}

/// Trend test on a GRS profile: last value below the first and below 1.05.
pub fn grs_trend_ok(profile: &[f64]) -> bool {
    match (profile.first(), profile.last()) {
        (Some(&first), Some(&last)) => {
            last < 1.05 && (last < first || (first == 1.0 && last == 1.0))
        }
        _ => false,
    }
}

/// Two-sided check of `(1+ε|x|)^δ <= (1+|x|)^δ <= ε^{-δ} (1+ε|x|)^δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// Largest `ν_ε(x) / ν(x)`; at most 1 when the lower inequality holds.
    pub lower_ratio: f64,
    pub lower_witness: Vec<f64>,
    /// Largest `ν(x) / (ε^{-δ} ν_ε(x))`; at most 1 when the upper inequality holds.
    pub upper_ratio: f64,
    pub upper_witness: Vec<f64>,
    pub passed: bool,
}

pub fn epsilon_sandwich_check(
    delta: f64,
    eps: f64,
    samples: &[Vec<f64>],
) -> Result<SandwichReport> {
    let nu_eps = WeightSpec::EpsilonScaled { delta, eps };
    nu_eps.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "sample list must be nonempty".into(),
        ));
    }
    let nu = WeightSpec::Polynomial { s: delta };
    let scale = eps.powf(-delta);
    let mut report = SandwichReport {
        lower_ratio: f64::NEG_INFINITY,
        lower_witness: Vec::new(),
        upper_ratio: f64::NEG_INFINITY,
        upper_witness: Vec::new(),
        passed: false,
    };
    for x in samples {
        let (a, b) = (nu_eps.eval(x)?, nu.eval(x)?);
        let lower = a / b;
        let upper = b / (scale * a);
        if lower > report.lower_ratio {
            report.lower_ratio = lower;
            report.lower_witness = x.clone();
        }
        if upper > report.upper_ratio {
            report.upper_ratio = upper;
            report.upper_witness = x.clone();
        }
    }
    report.passed =
        report.lower_ratio <= 1.0 + EXACT_TOLERANCE && report.upper_ratio <= 1.0 + EXACT_TOLERANCE;
    Ok(report)
}

/// Measured constants of the summability and subconvolutivity conditions on
/// `ν^{-1}` over a finite index set:
/// `sup_k Σ_l ν(k-l)^{-1}` and `max_{k,l} Σ_n ν(k-n)^{-1} ν(n-l)^{-1} / ν(k-l)^{-1}`.
pub fn check_conditions_generalv(nu: &WeightSpec, set: &PointSet) -> Result<(f64, f64)> {
    let n = set.len();
    let mut inv = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            inv[k * n + l] = 1.0 / nu.eval_pair(set, k, l)?;
        }
    }
    let mut sup_sum = 0.0f64;
    for k in 0..n {
        sup_sum = sup_sum.max(inv[k * n..(k + 1) * n].iter().sum());
    }
    let mut conv = 0.0f64;
    for k in 0..n {
        for l in 0..n {
            let c: f64 = (0..n).map(|m| inv[k * n + m] * inv[m * n + l]).sum();
            conv = conv.max(c / inv[k * n + l]);
        }
    }
    Ok((sup_sum, conv))
}

/// Default sample vectors: all distinct index differences of `set` (strided
/// down to at most `cap` entries), the origin, and a dyadic ray `±2^j e_i`
/// per axis.
pub fn default_sample_points(set: &PointSet, cap: usize) -> Vec<Vec<f64>> {
    let n = set.len();
    let mut diffs: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        for l in 0..n {
            diffs.push(set.diff(k, l));
        }
    }
    diffs.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    diffs.dedup();
    let stride = diffs.len().div_ceil(cap.max(1)).max(1);
    let mut out: Vec<Vec<f64>> = diffs.into_iter().step_by(stride).collect();
    // The origin anchors every sampled constant (e.g. `ν(0)` in moderateness).
    let origin = vec![0.0; set.dim()];
    if !out.contains(&origin) {
        out.push(origin);
    }
    for axis in 0..set.dim() {
        for j in 0..12 {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; set.dim()];
                v[axis] = sign * 2f64.powi(j);
                out.push(v);
            }
        }
    }
    out
}

/// All ordered pairs of [`default_sample_points`].
pub fn default_sample_pairs(set: &PointSet, cap: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let pts = default_sample_points(set, cap);
    let mut pairs = Vec::with_capacity(pts.len() * pts.len());
    for x in &pts {
        for y in &pts {
            pairs.push((x.clone(), y.clone()));
        }
    }
    pairs
}
