// SPDX-License-Identifier: MIT OR Apache-2.0

//! Univariate transport maps between two samples of one activation.
//!
//! In one dimension the optimal transport map under a submodular cost is the
//! monotone rearrangement `Q_target ∘ F_source`. [`estimate_exact`] stores
//! it empirically as a pair of sorted samples and is used as an oracle. The
//! deployable maps are affine ([`AffineMap1D`]):
//!
//! * [`estimate_linear`]: least-squares fit of `b ≈ ωa + β` on the sorted
//!   (quantile-matched) pairs.
//! * [`estimate_mean`]: translation `a + m_b − m_a`.
//! * [`estimate_gaussian`]: the closed-form map between two Gaussians,
//!   `ω = σ_b / σ_a`.
//!
//! Maps are applied with [`apply`], which interpolates between the input and
//! its image by a [`Strength`] and leaves inputs outside the map's
//! [`SupportBounds`] untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Interval of inputs a map is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBounds {
    lo: f64,
    hi: f64,
}

impl SupportBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid(format!("invalid support bounds [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// The whole real line.
    pub fn infinite() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// `[min, max]` of a sample.
    pub fn observed(samples: &[f64]) -> Result<Self> {
        support_bounds(samples, 0.0, 1.0)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, a: f64) -> bool {
        self.lo <= a && a <= self.hi
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }
}

/// Which interval a fitted map is gated to.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SupportPolicy {
    /// `[min A, max A]`, used for mitigation.
    #[default]
    Observed,
    /// The whole real line, used for induction.
    Infinite,
    /// `[quantile(A, lo), quantile(A, hi)]`.
    Quantile { lo: f64, hi: f64 },
}

impl SupportPolicy {
    pub fn bounds(&self, source: &[f64]) -> Result<SupportBounds> {
        match *self {
            SupportPolicy::Observed => SupportBounds::observed(source),
            SupportPolicy::Infinite => Ok(SupportBounds::infinite()),
            SupportPolicy::Quantile { lo, hi } => support_bounds(source, lo, hi),
        }
    }
}

impl fmt::Display for SupportPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportPolicy::Observed => f.write_str("observed"),
            SupportPolicy::Infinite => f.write_str("infinite"),
            SupportPolicy::Quantile { lo, hi } => write!(f, "q:{lo},{hi}"),
        }
    }
}

impl FromStr for SupportPolicy {
    type Err = Error;

    /// Accepts `observed`, `infinite`, or `q:LO,HI`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "observed" => Ok(SupportPolicy::Observed),
            "infinite" => Ok(SupportPolicy::Infinite),
            _ => {
                let body = s
                    .strip_prefix("q:")
                    .ok_or_else(|| Error::Config(format!("unknown support `{s}`")))?;
                let (lo, hi) = body
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("expected q:LO,HI, got `{s}`")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad quantile `{v}`")))
                };
                let (lo, hi) = (parse(lo)?, parse(hi)?);
                check_quantiles(lo, hi)?;
                Ok(SupportPolicy::Quantile { lo, hi })
            }
        }
    }
}

/// Affine transport of one activation: `a ↦ ωa + β` on its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap1D {
    omega: f64,
    beta: f64,
    support: SupportBounds,
}

impl AffineMap1D {
    pub fn new(omega: f64, beta: f64, support: SupportBounds) -> Result<Self> {
        if !omega.is_finite() || !beta.is_finite() {
            return Err(invalid(format!(
                "map parameters must be finite (omega={omega}, beta={beta})"
            )));
        }
        Ok(Self {
            omega,
            beta,
            support,
        })
    }

    pub fn identity() -> Self {
        Self {
            omega: 1.0,
            beta: 0.0,
            support: SupportBounds::infinite(),
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn support(&self) -> SupportBounds {
        self.support
    }

    pub fn with_support(self, support: SupportBounds) -> Self {
        Self { support, ..self }
    }

    /// `ωa + β`, ignoring support and strength.
    pub fn eval(&self, a: f64) -> f64 {
        self.omega * a + self.beta
    }
}

/// Conditioning strength λ. Values above 1 extrapolate past the full map.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Strength(f64);

impl Strength {
    pub const ZERO: Strength = Strength(0.0);
    pub const FULL: Strength = Strength(1.0);

    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(invalid(format!(
                "strength must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(self) -> f64 {
        self.0
    }

    pub fn is_extrapolation(self) -> bool {
        self.0 > 1.0
    }
}

impl TryFrom<f64> for Strength {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Strength::new(v)
    }
}

impl From<Strength> for f64 {
    fn from(s: Strength) -> f64 {
        s.0
    }
}

/// How λ enters the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSemantics {
    /// `(1 − λ)a + λ(ωa + β)`.
    #[default]
    Interpolation,
    /// `ωa + λβ`.
    BiasMultiplier,
}

impl LambdaSemantics {
    pub fn as_str(self) -> &'static str {
        match self {
            LambdaSemantics::Interpolation => "interpolation",
            LambdaSemantics::BiasMultiplier => "bias_multiplier",
        }
    }
}

impl fmt::Display for LambdaSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Applies `map` to `a` at `strength`, interpolating `(1 − λ)a + λ(ωa + β)`.
///
/// Inputs outside the map's support are returned unchanged for every λ.
pub fn apply(map: &AffineMap1D, a: f64, strength: Strength) -> f64 {
    apply_with(map, a, strength, LambdaSemantics::Interpolation)
}

/// Like [`apply`] with an explicit λ convention.
pub fn apply_with(
    map: &AffineMap1D,
    a: f64,
    strength: Strength,
    semantics: LambdaSemantics,
) -> f64 {
    if !map.support.contains(a) {
        return a;
    }
    let lambda = strength.lambda();
    match semantics {
        LambdaSemantics::Interpolation => (1.0 - lambda) * a + lambda * map.eval(a),
        LambdaSemantics::BiasMultiplier => map.omega * a + lambda * map.beta,
    }
}

/// Denominator used by [`estimate_linear_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearDenominator {
    /// `Σ ã²`: the exact least-squares minimizer.
    #[default]
    Source,
    /// `Σ b̃²`: the alternative closed form, kept for comparison only.
    Target,
}

/// Least-squares affine map on sorted pairs, support `[min A, max A]`.
///
/// A constant source falls back to the mean shift with a warning.
pub fn estimate_linear(a: &[f64], b: &[f64]) -> Result<AffineMap1D> {
    estimate_linear_with(a, b, LinearDenominator::Source)
}

pub fn estimate_linear_with(
    a: &[f64],
    b: &[f64],
    denominator: LinearDenominator,
) -> Result<AffineMap1D> {
    check_pair(a, b)?;
    let sa = sorted(a);
    let sb = sorted(b);
    let support = SupportBounds::new(sa[0], sa[sa.len() - 1])?;
    let (ma, mb) = (mean(&sa), mean(&sb));

    if sa[0] == sa[sa.len() - 1] {
        log::warn!(
            "constant source sample (value {}); falling back to mean shift",
            sa[0]
        );
        return AffineMap1D::new(1.0, mb - ma, support);
    }

    let mut cross = 0.0;
    let mut ss_a = 0.0;
    let mut ss_b = 0.0;
    for (x, y) in sa.iter().zip(&sb) {
        let (ca, cb) = (x - ma, y - mb);
        cross += ca * cb;
        ss_a += ca * ca;
        ss_b += cb * cb;
    }
    let denom = match denominator {
        LinearDenominator::Source => ss_a,
        LinearDenominator::Target => ss_b,
    };
    if denom == 0.0 {
        // Only reachable with a constant target under the `Target` variant.
        return AffineMap1D::new(0.0, mb, support);
    }
    let omega = cross / denom;
    AffineMap1D::new(omega, mb - omega * ma, support)
}

/// Translation `a ↦ a + m_b − m_a`, support `[min A, max A]`.
pub fn estimate_mean(a: &[f64], b: &[f64]) -> Result<AffineMap1D> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("mean shift needs non-empty samples"));
    }
    check_finite(a)?;
    check_finite(b)?;
    AffineMap1D::new(1.0, mean(b) - mean(a), SupportBounds::observed(a)?)
}

/// Gaussian closed form `ω = σ_b/σ_a`, `β = m_b − ω m_a` with population σ.
pub fn estimate_gaussian(a: &[f64], b: &[f64]) -> Result<AffineMap1D> {
    if a.len() < 2 || b.len() < 2 {
        return Err(invalid(
            "Gaussian map needs at least 2 samples on each side",
        ));
    }
    check_finite(a)?;
    check_finite(b)?;
    let (ma, sd_a) = mean_std(a);
    let (mb, sd_b) = mean_std(b);
    if sd_a == 0.0 {
        return Err(Error::DegenerateSource(
            "source standard deviation is zero".into(),
        ));
    }
    let omega = sd_b / sd_a;
    AffineMap1D::new(omega, mb - omega * ma, SupportBounds::observed(a)?)
}

/// Empirical monotone rearrangement between two equal-size samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    src_sorted: Vec<f64>,
    tgt_sorted: Vec<f64>,
}

impl QuantileMap {
    /// Builds a map from already sorted knots.
    pub fn from_sorted(src_sorted: Vec<f64>, tgt_sorted: Vec<f64>) -> Result<Self> {
        if src_sorted.len() != tgt_sorted.len() || src_sorted.len() < 2 {
            return Err(invalid(
                "quantile map needs two sorted samples of equal length >= 2",
            ));
        }
        check_finite(&src_sorted)?;
        check_finite(&tgt_sorted)?;
        let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        if !nondecreasing(&src_sorted) || !nondecreasing(&tgt_sorted) {
            return Err(invalid("quantile map knots must be nondecreasing"));
        }
        Ok(Self {
            src_sorted,
            tgt_sorted,
        })
    }

    pub fn src_sorted(&self) -> &[f64] {
        &self.src_sorted
    }

    pub fn tgt_sorted(&self) -> &[f64] {
        &self.tgt_sorted
    }

    pub fn len(&self) -> usize {
        self.src_sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src_sorted.is_empty()
    }
}

/// Stores sorted copies of both samples.
pub fn estimate_exact(a: &[f64], b: &[f64]) -> Result<QuantileMap> {
    check_pair(a, b)?;
    QuantileMap::from_sorted(sorted(a), sorted(b))
}

/// Evaluates `Q_target(F_source(a))` with piecewise-linear CDF and quantile
/// function. The rank is clamped to `[0, 1]` outside the source range.
pub fn apply_exact(map: &QuantileMap, a: f64) -> f64 {
    let src = &map.src_sorted;
    let tgt = &map.tgt_sorted;
    let last = src.len() - 1;
    if a <= src[0] {
        // Ties at the lower end all map to the first knot.
        return tgt[0];
    }
    if a >= src[last] {
        return tgt[last];
    }
    // Largest i with src[i] <= a; 0 <= i < last here.
    let i = src.partition_point(|&s| s <= a) - 1;
    let span = src[i + 1] - src[i];
    let frac = if span > 0.0 { (a - src[i]) / span } else { 0.0 };
    if frac == 0.0 {
        return tgt[i];
    }
    tgt[i] + frac * (tgt[i + 1] - tgt[i])
}

/// `[quantile(A, q_lo), quantile(A, q_hi)]` with linear interpolation between
/// closest ranks, so `(0, 1)` yields `[min A, max A]`.
pub fn support_bounds(a: &[f64], q_lo: f64, q_hi: f64) -> Result<SupportBounds> {
    check_quantiles(q_lo, q_hi)?;
    if a.is_empty() {
        return Err(invalid("support of an empty sample"));
    }
    check_finite(a)?;
    let s = sorted(a);
    SupportBounds::new(quantile_sorted(&s, q_lo), quantile_sorted(&s, q_hi))
}

/// Quantile of a sorted sample at position `q·(n − 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `Σ_i (b_(i) − ω a_(i) − β)²` over sorted samples.
pub fn sorted_pair_cost(a: &[f64], b: &[f64], omega: f64, beta: f64) -> f64 {
    let sa = sorted(a);
    let sb = sorted(b);
    sa.iter()
        .zip(&sb)
        .map(|(x, y)| {
            let r = y - omega * x - beta;
            r * r
        })
        .sum()
}

pub(crate) fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid("samples contain non-finite values"))
    }
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "sample sizes differ: {} source vs {} target",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(invalid("need at least 2 samples"));
    }
    check_finite(a)?;
    check_finite(b)
}

fn check_quantiles(q_lo: f64, q_hi: f64) -> Result<()> {
    let ok = |q: f64| (0.0..=1.0).contains(&q);
    if !ok(q_lo) || !ok(q_hi) {
        return Err(invalid(format!(
            "quantiles must lie in [0, 1], got ({q_lo}, {q_hi})"
        )));
    }
    if q_lo > q_hi {
        return Err(invalid(format!("q_lo {q_lo} exceeds q_hi {q_hi}")));
    }
    Ok(())
}
