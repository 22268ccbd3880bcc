//! Cosine-series analytics: evaluation, finite differences, convexity and
//! decay checks, trigonometric kernels, total-variation bounds, spectral
//! densities and the continuous Fejér convexity probe.

pub mod quad;
pub mod special;
mod spectral;

pub use spectral::{fejer_convexity_probe, spectral_cov, spectral_sigma2, FejerProbe, SpectralDensity};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::fit::{loglog_fit, RateFit};
use special::{polycos, polycos_supported, power_diffs};

/// Largest cutoff the tail-controlled evaluator will try before giving up.
pub const MAX_SERIES_MODES: usize = 1 << 22;

/// Rule for the coefficients `c_k`, `k ≥ 1`, of a cosine or sine series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CoefficientRule {
    Zero,
    Constant {
        value: f64,
    },
    /// `scale · k^{-exponent}`
    Power {
        scale: f64,
        exponent: f64,
    },
    /// `scale · (-1)^k k^{-exponent}`
    AlternatingPower {
        scale: f64,
        exponent: f64,
    },
    /// `e^{-k² τ}`
    Gaussian {
        tau: f64,
    },
    /// `k^{-2γ} / (2(λ + k^{2α}))`, the periodic fractional heat spectrum.
    FractionalHeat {
        alpha: f64,
        lambda: f64,
        color: f64,
    },
    /// Explicit values for `k = 1..=len`, zero afterwards.
    Table {
        values: Vec<f64>,
    },
}

impl std::fmt::Display for CoefficientRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoefficientRule::Zero => write!(f, "0"),
            CoefficientRule::Constant { value } => write!(f, "{value}"),
            CoefficientRule::Power { scale, exponent } if *scale == 1.0 => write!(f, "k^-{exponent}"),
            CoefficientRule::Power { scale, exponent } => write!(f, "{scale}k^-{exponent}"),
            CoefficientRule::AlternatingPower { scale, exponent } => write!(f, "{scale}(-1)^k k^-{exponent}"),
            CoefficientRule::Gaussian { tau } => write!(f, "exp(-{tau}k^2)"),
            CoefficientRule::FractionalHeat { alpha, lambda, color } => {
                write!(f, "heat(alpha={alpha},lambda={lambda},color={color})")
            }
            CoefficientRule::Table { values } => write!(f, "table[{}]", values.len()),
        }
    }
}

impl CoefficientRule {
    pub fn power(exponent: f64) -> Self {
        CoefficientRule::Power { scale: 1.0, exponent }
    }

    pub fn value(&self, k: u64) -> f64 {
        let kf = k as f64;
        match self {
            CoefficientRule::Zero => 0.0,
            CoefficientRule::Constant { value } => *value,
            CoefficientRule::Power { scale, exponent } => scale * kf.powf(-exponent),
            CoefficientRule::AlternatingPower { scale, exponent } => {
                let v = scale * kf.powf(-exponent);
                if k % 2 == 1 {
                    -v
                } else {
                    v
                }
            }
            CoefficientRule::Gaussian { tau } => (-kf * kf * tau).exp(),
            CoefficientRule::FractionalHeat { alpha, lambda, color } => {
                kf.powf(-2.0 * color) / (2.0 * (lambda + kf.powf(2.0 * alpha)))
            }
            CoefficientRule::Table { values } => {
                let i = k as usize;
                if i >= 1 && i <= values.len() {
                    values[i - 1]
                } else {
                    0.0
                }
            }
        }
    }

    /// Limit of `c_k` as `k → ∞`, when it is known in closed form.
    pub fn limit(&self) -> Option<f64> {
        match self {
            CoefficientRule::Constant { value } => Some(*value),
            CoefficientRule::Power { scale, exponent } => {
                if *exponent > 0.0 {
                    Some(0.0)
                } else if *exponent == 0.0 {
                    Some(*scale)
                } else {
                    None
                }
            }
            CoefficientRule::AlternatingPower { exponent, .. } => (*exponent > 0.0).then_some(0.0),
            _ => Some(0.0),
        }
    }

    /// Whether every coefficient is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            CoefficientRule::Zero | CoefficientRule::Gaussian { .. } => true,
            CoefficientRule::Constant { value } => *value >= 0.0,
            CoefficientRule::Power { scale, .. } => *scale >= 0.0,
            CoefficientRule::AlternatingPower { scale, .. } => *scale == 0.0,
            CoefficientRule::FractionalHeat { lambda, .. } => *lambda >= 0.0,
            CoefficientRule::Table { values } => values.iter().all(|v| *v >= 0.0),
        }
    }

    /// Exponent `p` with `c_k = O(k^{-p})`, if the rule is of power type.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self {
            CoefficientRule::Power { exponent, .. } | CoefficientRule::AlternatingPower { exponent, .. } => {
                Some(*exponent)
            }
            CoefficientRule::FractionalHeat { alpha, color, .. } => Some(2.0 * alpha + 2.0 * color),
            CoefficientRule::Zero | CoefficientRule::Table { .. } | CoefficientRule::Gaussian { .. } => {
                Some(f64::INFINITY)
            }
            CoefficientRule::Constant { value } => Some(if *value == 0.0 { f64::INFINITY } else { 0.0 }),
        }
    }

    /// `(Δc_k, Δ²c_k)` with relative accuracy preserved for power laws.
    pub fn diffs(&self, k: u64) -> (f64, f64) {
        match self {
            CoefficientRule::Power { scale, exponent } if k >= 1 => {
                let (d1, d2) = power_diffs(*exponent, k as f64);
                (scale * d1, scale * d2)
            }
            _ => {
                let (a0, a1, a2) = (self.value(k), self.value(k + 1), self.value(k + 2));
                (a1 - a0, a2 - 2.0 * a1 + a0)
            }
        }
    }

    /// `(Δ(k²c_k), Δ²(k²c_k))` for `k ≥ 1`.
    pub fn weighted_diffs(&self, k: u64) -> (f64, f64) {
        match self {
            CoefficientRule::Power { scale, exponent } if k >= 1 => {
                let (d1, d2) = power_diffs(exponent - 2.0, k as f64);
                (scale * d1, scale * d2)
            }
            _ => {
                let w = |j: u64| (j as f64).powi(2) * self.value(j);
                let (a0, a1, a2) = (w(k), w(k + 1), w(k + 2));
                (a1 - a0, a2 - 2.0 * a1 + a0)
            }
        }
    }
}

/// Squared Fourier coefficients of a random Fourier series.
///
/// `sine` holds `a_k` (the coefficients of `sin(kt)`), `cosine` the `a_{-k}`;
/// `None` means the symmetric, stationary case `a_{-k} = a_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequence {
    pub a0: f64,
    pub sine: CoefficientRule,
    pub cosine: Option<CoefficientRule>,
    pub k_max: usize,
    pub decay_rho: f64,
}

impl CoefficientSequence {
    /// Stationary sequence `a_k = a_{-k} = rule(k)` with `a_0 = 0`.
    pub fn symmetric(rule: CoefficientRule, k_max: usize) -> Self {
        let decay_rho = rule
            .decay_exponent()
            .filter(|p| *p > 1.0 && p.is_finite())
            .map(|p| 1.0 / (p - 1.0))
            .unwrap_or(1.0)
            .max(1.0);
        CoefficientSequence { a0: 0.0, sine: rule, cosine: None, k_max, decay_rho }
    }

    pub fn with_a0(mut self, a0: f64) -> Self {
        self.a0 = a0;
        self
    }

    pub fn cosine_rule(&self) -> &CoefficientRule {
        self.cosine.as_ref().unwrap_or(&self.sine)
    }

    /// `a_k` for any integer `k`: positive for sine, negative for cosine terms.
    pub fn get(&self, k: i64) -> f64 {
        match k.cmp(&0) {
            std::cmp::Ordering::Equal => self.a0,
            std::cmp::Ordering::Greater => self.sine.value(k as u64),
            std::cmp::Ordering::Less => self.cosine_rule().value(k.unsigned_abs()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a0 < 0.0 || !self.sine.is_nonnegative() || !self.cosine_rule().is_nonnegative() {
            return Err(Error::InvalidParameter("squared coefficients must be nonnegative".into()));
        }
        if self.decay_rho < 1.0 {
            return Err(Error::InvalidParameter("decay_rho must be at least 1".into()));
        }
        Ok(())
    }
}

/// How infinite cosine series are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// The model is the `N`-mode truncation itself.
    Modes(usize),
    /// The full series, with the neglected part certified below `tol`.
    Tail { tol: f64 },
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::Tail { tol: 1e-10 }
    }
}

/// `Σ_{k=from}^{to} c(k) cos(kx)` in a fixed order. Angles come from a
/// rotation recurrence that is re-anchored every 32 steps.
pub fn cos_sum<F: Fn(u64) -> f64>(c: F, x: f64, from: u64, to: u64) -> f64 {
    if to < from {
        return 0.0;
    }
    let (sx, cx) = x.sin_cos();
    let mut total = 0.0;
    let mut k = from;
    let (mut s, mut co) = (k as f64 * x).sin_cos();
    while k <= to {
        total += c(k) * co;
        k += 1;
        if k.is_multiple_of(32) {
            let v = (k as f64 * x).sin_cos();
            s = v.0;
            co = v.1;
        } else {
            let ns = s * cx + co * sx;
            co = co * cx - s * sx;
            s = ns;
        }
    }
    total
}

/// `Σ_{k≥1} c_k cos(kx)` under a truncation policy.
pub fn cosine_series(rule: &CoefficientRule, x: f64, policy: TruncationPolicy) -> Result<f64> {
    let tol = match policy {
        TruncationPolicy::Modes(n) => return Ok(cos_sum(|k| rule.value(k), x, 1, n as u64)),
        TruncationPolicy::Tail { tol } => tol,
    };
    let at_origin = (x.rem_euclid(2.0 * std::f64::consts::PI)).abs() < 1e-300;
    match rule {
        CoefficientRule::Zero => Ok(0.0),
        CoefficientRule::Table { values } => Ok(cos_sum(|k| rule.value(k), x, 1, values.len() as u64)),
        CoefficientRule::Constant { value } if *value == 0.0 => Ok(0.0),
        CoefficientRule::Constant { .. } => Err(Error::TailNotControlled { tol, bound: f64::INFINITY, n: 0 }),
        CoefficientRule::Power { scale, exponent } | CoefficientRule::AlternatingPower { scale, exponent } => {
            let shift =
                if matches!(rule, CoefficientRule::AlternatingPower { .. }) { std::f64::consts::PI } else { 0.0 };
            if *exponent <= 1.0 && at_origin && shift == 0.0 {
                return Err(Error::TailNotControlled { tol, bound: f64::INFINITY, n: 0 });
            }
            if polycos_supported(*exponent) {
                return Ok(scale * polycos(*exponent, x + shift).unwrap());
            }
            // odd integer exponent ≥ 3: direct sum with an absolute tail bound
            let p = *exponent;
            let n = ((scale.abs() / (tol * (p - 1.0))).powf(1.0 / (p - 1.0))).ceil() as usize;
            if n > MAX_SERIES_MODES {
                let bound = scale.abs() * (MAX_SERIES_MODES as f64).powf(1.0 - p) / (p - 1.0);
                return Err(Error::TailNotControlled { tol, bound, n: MAX_SERIES_MODES });
            }
            Ok(cos_sum(|k| rule.value(k), x, 1, n.max(1) as u64))
        }
        CoefficientRule::Gaussian { tau } => {
            let mut n = 1usize;
            loop {
                let nf = n as f64;
                let bound = (-(nf + 1.0).powi(2) * tau).exp() / (1.0 - (-(2.0 * nf + 3.0) * tau).exp());
                if bound <= tol {
                    return Ok(cos_sum(|k| rule.value(k), x, 1, n as u64));
                }
                if n >= MAX_SERIES_MODES {
                    return Err(Error::TailNotControlled { tol, bound, n });
                }
                n *= 2;
            }
        }
        CoefficientRule::FractionalHeat { alpha, lambda, color } => {
            // leading term ½k^{-p} in closed form, remainder summed directly
            let p = 2.0 * alpha + 2.0 * color;
            let lead = match polycos(p, x) {
                Some(v) if v.is_finite() => 0.5 * v,
                _ => {
                    return Err(Error::TailNotControlled { tol, bound: f64::INFINITY, n: 0 });
                }
            };
            let q = p + 2.0 * alpha;
            let rem = |k: u64| {
                let kf = k as f64;
                let k2a = kf.powf(2.0 * alpha);
                -0.5 * kf.powf(-p) * lambda / (lambda + k2a)
            };
            let mut n = 64usize;
            loop {
                let bound = 0.5 * lambda * (n as f64).powf(1.0 - q) / (q - 1.0);
                if bound <= tol {
                    return Ok(lead + cos_sum(rem, x, 1, n as u64));
                }
                if n >= MAX_SERIES_MODES {
                    return Err(Error::TailNotControlled { tol, bound, n });
                }
                n *= 2;
            }
        }
    }
}

/// Partial sum `K_N(t) = a_0/2 + Σ_{k=1}^N a_k cos(kt)` of the cosine
/// coefficients.
pub fn cosine_eval(a: &CoefficientSequence, t: f64, n: usize) -> f64 {
    let rule = a.cosine_rule();
    0.5 * a.a0 + cos_sum(|k| rule.value(k), t, 1, n.min(a.k_max) as u64)
}

/// Forward differences of a coefficient sequence at index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteDiffs {
    pub da: f64,
    pub d2a: f64,
    pub dw: f64,
    pub d2w: f64,
}

/// `Δa_k, Δ²a_k, Δ(k²a_k), Δ²(k²a_k)` for the cosine coefficients.
pub fn diff2_weighted(a: &CoefficientSequence, k: u64) -> FiniteDiffs {
    let rule = a.cosine_rule();
    if k == 0 {
        let v = |j: u64| if j == 0 { a.a0 } else { rule.value(j) };
        let w = |j: u64| (j as f64).powi(2) * rule.value(j);
        return FiniteDiffs { da: v(1) - v(0), d2a: v(2) - 2.0 * v(1) + v(0), dw: w(1), d2w: w(2) - 2.0 * w(1) };
    }
    let (da, d2a) = rule.diffs(k);
    let (dw, d2w) = rule.weighted_diffs(k);
    FiniteDiffs { da, d2a, dw, d2w }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityVerdict {
    /// (i) `Δ²(k²a_k) ≤ 0` for every checked `k`.
    pub weighted_concave: bool,
    pub first_violation: Option<u64>,
    /// (ii) the decay triple is eventually decreasing.
    pub decay_monotone: bool,
    pub last_ascent: u64,
    /// (iii) sampled convexity on `(0, 2π)` and monotonicity on `(0, π)`.
    pub kernel_convex: bool,
    pub kernel_nonincreasing: bool,
    pub min_second_difference: f64,
    pub checked_up_to: u64,
    pub pass: bool,
}

/// Grid resolution for the sampled kernel check.
const KERNEL_SAMPLES: usize = 256;

/// Checks the convexity hypotheses on the cosine coefficients up to `k_max`.
pub fn convexity_check(a: &CoefficientSequence, k_max: u64) -> ConvexityVerdict {
    let k_max = k_max.max(10);
    let rule = a.cosine_rule();

    let mut first_violation = None;
    for k in 0..=k_max - 2 {
        let d = diff2_weighted(a, k).d2w;
        let scale = (k as f64 + 2.0).powi(2) * rule.value(k + 2).abs() + rule.value(1).abs();
        if d > 1e-12 * scale {
            first_violation = Some(k);
            break;
        }
    }

    let triple = |k: u64| {
        let (d1, d2) = rule.diffs(k);
        let kf = k as f64;
        kf.powi(3) * d2.abs() + kf * kf * d1.abs() + kf * rule.value(k).abs()
    };
    let mut last_ascent = 0;
    let mut prev = triple(1);
    for k in 2..=k_max - 2 {
        let t = triple(k);
        if t > prev * (1.0 + 1e-9) {
            last_ascent = k;
        }
        prev = t;
    }
    let tail_small = triple(k_max - 2) <= triple((k_max / 10).max(1));
    let decay_monotone = last_ascent < k_max / 2 && tail_small;

    let h = 2.0 * std::f64::consts::PI / KERNEL_SAMPLES as f64;
    let values: Vec<f64> = (1..KERNEL_SAMPLES).map(|j| cosine_eval(a, j as f64 * h, k_max as usize)).collect();
    let mut min_second = f64::INFINITY;
    for w in values.windows(3) {
        min_second = min_second.min(w[0] - 2.0 * w[1] + w[2]);
    }
    let kernel_convex = min_second >= -1e-8;
    let half = KERNEL_SAMPLES / 2;
    let kernel_nonincreasing = values[..half].windows(2).all(|w| w[1] - w[0] <= 1e-8);

    let weighted_concave = first_violation.is_none();
    ConvexityVerdict {
        weighted_concave,
        first_violation,
        decay_monotone,
        last_ascent,
        kernel_convex,
        kernel_nonincreasing,
        min_second_difference: min_second,
        checked_up_to: k_max,
        pass: weighted_concave && decay_monotone && kernel_convex && kernel_nonincreasing,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvCase {
    L1,
    MonotoneMajorant,
    QuasiConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvBound {
    pub case: TvCase,
    pub bound: f64,
    pub limit_b: f64,
}

/// Sum of a tail `Σ_{k>K} t_k`, extrapolated from the terms at `K/2` and `K`
/// assuming power-law decay of the summands.
fn extrapolated_tail(t_half: f64, t_full: f64, k: u64) -> Result<f64> {
    if t_full == 0.0 || t_full < 1e-300 {
        return Ok(0.0);
    }
    let r = (t_half / t_full).ln() / 2f64.ln();
    if !(r > 1.0 + 1e-6) {
        return Err(Error::Diverges(format!("summands decay like k^-{r:.3}")));
    }
    Ok(t_full * k as f64 / (r - 1.0))
}

/// Total-variation bound `|b| + Σ_{k≥1} (case summand)` for the measure whose
/// cosine moments are `b_k`, with the unspecified constant normalized to 1.
/// The index `k = 0` only enters as the constant term of the series.
pub fn tv_bound(rule: &CoefficientRule, case: TvCase, k_max: u64) -> Result<TvBound> {
    let k_max = k_max.max(16);
    let limit_b = match rule.limit() {
        Some(b) => b,
        None => {
            let lo = k_max / 2;
            (lo..=k_max).map(|k| rule.value(k)).sum::<f64>() / (k_max - lo + 1) as f64
        }
    };
    let term = |k: u64| -> f64 {
        match case {
            TvCase::L1 => (rule.value(k) - limit_b).abs(),
            TvCase::MonotoneMajorant => rule.diffs(k).0.abs(),
            TvCase::QuasiConvex => (k as f64 + 1.0) * rule.diffs(k).1.abs(),
        }
    };
    let sum = match case {
        TvCase::MonotoneMajorant => {
            // smallest nonincreasing majorant of |Δb_k|, scanned backwards
            let mut total = 0.0;
            let mut run = 0.0f64;
            let mut majorant = vec![0.0; k_max as usize + 1];
            for k in (1..=k_max).rev() {
                run = run.max(term(k));
                majorant[k as usize] = run;
            }
            for &m in &majorant[1..] {
                total += m;
            }
            total + (rule.value(k_max + 1) - limit_b).abs()
        }
        _ => {
            let mut total = 0.0;
            for k in 1..=k_max {
                total += term(k);
            }
            total + extrapolated_tail(term(k_max / 2), term(k_max), k_max)?
        }
    };
    let bound = limit_b.abs() + sum;
    if !bound.is_finite() || bound > 1e300 {
        return Err(Error::Diverges("bound overflowed".into()));
    }
    Ok(TvBound { case, bound, limit_b })
}

/// Dirichlet kernel `D_n(t) = 1 + 2 Σ_{k=1}^n cos(kt)`.
pub fn dirichlet(n: u64, t: f64) -> f64 {
    1.0 + 2.0 * cos_sum(|_| 1.0, t, 1, n)
}

/// Fejér kernel, the Cesàro mean `(1/(n+1)) Σ_{k=0}^n D_k(t)`.
pub fn fejer_discrete(n: u64, t: f64) -> f64 {
    let nf = n as f64 + 1.0;
    1.0 + 2.0 * cos_sum(|k| 1.0 - k as f64 / nf, t, 1, n)
}

/// Continuous Fejér kernel `(1 - cos(ξx))/x²`, with its limit `ξ²/2` at 0.
pub fn fejer_cont(xi: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.5 * xi * xi;
    }
    let s = (0.5 * xi * x).sin();
    2.0 * s * s / (x * x)
}

/// Log-log slope of the largest increment of sampled values against the lag,
/// over the `n_scales` smallest dyadic lags of a uniform grid with spacing `step`.
pub fn holder_estimate(samples: &[f64], step: f64, n_scales: usize) -> Result<RateFit> {
    if n_scales < 5 {
        return Err(Error::DegenerateFit(format!("need at least 5 dyadic scales, got {n_scales}")));
    }
    let mut points = Vec::with_capacity(n_scales);
    for m in 0..n_scales {
        let lag = 1usize << m;
        if lag >= samples.len() {
            return Err(Error::DegenerateFit("grid too short for the requested scales".into()));
        }
        let inc = samples.iter().zip(&samples[lag..]).map(|(a, b)| (b - a).abs()).fold(0.0f64, f64::max);
        points.push((lag as f64 * step, inc, 0.0));
    }
    loglog_fit(&points)
}
