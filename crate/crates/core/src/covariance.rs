//! Catalog of covariance models with exact evaluation, rectangular increments
//! and increment variances.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{
    cosine_series, spectral_cov, CoefficientRule, CoefficientSequence, SpectralDensity, TruncationPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("interval [{lo}, {hi}] is not valid")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    /// Membership with a relative slack of 1e-12 for grid round-off.
    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }

    /// `n` equispaced points including both endpoints.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![self.lo];
        }
        (0..n).map(|i| self.lo + self.len() * i as f64 / (n - 1) as f64).collect()
    }
}

/// `[s.lo, s.hi] × [u.lo, u.hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub s: Interval,
    pub u: Interval,
}

impl Rectangle {
    pub fn new(s: Interval, u: Interval) -> Self {
        Rectangle { s, u }
    }

    pub fn square(i: Interval) -> Self {
        Rectangle { s: i, u: i }
    }

    /// The two sides overlap in at most one point.
    pub fn diagonal_disjoint(&self) -> bool {
        self.s.hi <= self.u.lo || self.u.hi <= self.s.lo
    }
}

/// Known shape of a stationary-increment variance function `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryMeta {
    /// `F` is concave on the domain.
    pub concave: bool,
    /// `F(t) ≍ t^{exponent}` near 0.
    pub exponent: f64,
}

/// `σ²(s,t) = F(|t−s|)` for a user-supplied `F` with `F(0) = 0`.
#[derive(Clone)]
pub struct StationaryF {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub name: String,
    pub meta: Option<StationaryMeta>,
}

impl StationaryF {
    pub fn new<F>(name: &str, meta: Option<StationaryMeta>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        StationaryF { f: Arc::new(f), name: name.to_string(), meta }
    }

    /// `F(t) = t^e`; concave for `e ≤ 1`.
    pub fn power(e: f64) -> Self {
        Self::new(&format!("t^{e}"), Some(StationaryMeta { concave: e <= 1.0, exponent: e }), move |t: f64| {
            t.abs().powf(e)
        })
    }

    /// `F(t) = 1 − e^{−λt}`, the Ornstein–Uhlenbeck shape.
    pub fn exponential(lambda: f64) -> Self {
        Self::new(
            &format!("1-exp(-{lambda}t)"),
            Some(StationaryMeta { concave: true, exponent: 1.0 }),
            move |t: f64| -(-lambda * t.abs()).exp_m1(),
        )
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

impl fmt::Debug for StationaryF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StationaryF").field("name", &self.name).field("meta", &self.meta).finish()
    }
}

impl PartialEq for StationaryF {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.meta == other.meta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Fbm { hurst: f64 },
    BrownianBridge { horizon: f64 },
    StationaryF(StationaryF),
    Ou { lambda: f64 },
    FractionalOu { hurst: f64, lambda: f64, density: SpectralDensity },
    BiFbm { hurst: f64, k: f64 },
    Rfs(CoefficientSequence),
    SheDirichlet { alpha: f64 },
    ShePeriodic { alpha: f64, lambda: f64, color: f64 },
    Spectral(SpectralDensity),
}

impl ModelKind {
    pub fn tag(&self) -> String {
        match self {
            ModelKind::Fbm { hurst } => format!("fbm(H={hurst})"),
            ModelKind::BrownianBridge { horizon } => format!("brownian_bridge(T={horizon})"),
            ModelKind::StationaryF(f) => format!("stationary({})", f.name),
            ModelKind::Ou { lambda } => format!("ou(lambda={lambda})"),
            ModelKind::FractionalOu { hurst, lambda, .. } => format!("fou(H={hurst},lambda={lambda})"),
            ModelKind::BiFbm { hurst, k } => format!("bifbm(H={hurst},K={k})"),
            ModelKind::Rfs(a) => format!("rfs({})", a.sine),
            ModelKind::SheDirichlet { alpha } => format!("she_dirichlet(alpha={alpha})"),
            ModelKind::ShePeriodic { alpha, lambda, color } => {
                format!("she_periodic(alpha={alpha},lambda={lambda},color={color})")
            }
            ModelKind::Spectral(f) => format!("spectral({})", f.name),
        }
    }
}

/// A covariance kernel `R(s,t)` with its domain, the ρ the theory predicts,
/// and how series are truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub kind: ModelKind,
    pub domain: Interval,
    pub nominal_rho: f64,
    pub trunc: TruncationPolicy,
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Hurst parameter {h} not in (0,1)")))
    }
}

fn check_alpha(a: f64) -> Result<()> {
    if a > 0.5 && a <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha {a} not in (1/2,1]")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be positive")))
    }
}

fn rho_from_decay(p: f64) -> f64 {
    if p > 1.0 {
        (1.0 / (p - 1.0)).max(1.0)
    } else {
        f64::INFINITY
    }
}

impl CovarianceModel {
    fn build(kind: ModelKind, domain: Interval) -> Self {
        let nominal_rho = catalog_rho(&kind);
        CovarianceModel { kind, domain, nominal_rho, trunc: TruncationPolicy::default() }
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        Ok(Self::build(ModelKind::Fbm { hurst }, Interval { lo: 0.0, hi: 1.0 }))
    }

    pub fn brownian_bridge(horizon: f64) -> Result<Self> {
        check_positive("horizon", horizon)?;
        Ok(Self::build(ModelKind::BrownianBridge { horizon }, Interval { lo: 0.0, hi: horizon }))
    }

    pub fn stationary_f(f: StationaryF) -> Result<Self> {
        if f.eval(0.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter("F(0) must vanish".into()));
        }
        Ok(Self::build(ModelKind::StationaryF(f), Interval { lo: 0.0, hi: 1.0 }))
    }

    pub fn ou(lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(Self::build(ModelKind::Ou { lambda }, Interval { lo: 0.0, hi: 1.0 }))
    }

    pub fn fractional_ou(hurst: f64, lambda: f64) -> Result<Self> {
        check_hurst(hurst)?;
        check_positive("lambda", lambda)?;
        let density = SpectralDensity::fractional_ou(hurst, lambda)?;
        Ok(Self::build(ModelKind::FractionalOu { hurst, lambda, density }, Interval { lo: 0.0, hi: 1.0 }))
    }

    pub fn bifbm(hurst: f64, k: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if !(k > 0.0 && k <= 1.0) {
            return Err(Error::InvalidParameter(format!("K = {k} not in (0,1]")));
        }
        Ok(Self::build(ModelKind::BiFbm { hurst, k }, Interval { lo: 0.0, hi: 1.0 }))
    }

    pub fn rfs(a: CoefficientSequence) -> Result<Self> {
        a.validate()?;
        Ok(Self::build(ModelKind::Rfs(a), Interval { lo: 0.0, hi: 2.0 * PI }))
    }

    pub fn she_dirichlet(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::build(ModelKind::SheDirichlet { alpha }, Interval { lo: 0.0, hi: 2.0 * PI }))
    }

    pub fn she_periodic(alpha: f64, lambda: f64, color: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("lambda", lambda)?;
        if color < 0.0 {
            return Err(Error::InvalidParameter("noise color must be nonnegative".into()));
        }
        Ok(Self::build(ModelKind::ShePeriodic { alpha, lambda, color }, Interval { lo: 0.0, hi: 2.0 * PI }))
    }

    pub fn spectral(f: SpectralDensity) -> Result<Self> {
        Ok(Self::build(ModelKind::Spectral(f), Interval { lo: 0.0, hi: 1.0 }))
    }

    pub fn with_domain(mut self, domain: Interval) -> Result<Self> {
        match &self.kind {
            ModelKind::Fbm { .. } | ModelKind::BiFbm { .. } if domain.lo < 0.0 => {
                return Err(Error::InvalidParameter("fBm-type domains must lie in [0, ∞)".into()));
            }
            ModelKind::BrownianBridge { horizon } if domain.lo < 0.0 || domain.hi > *horizon => {
                return Err(Error::InvalidParameter("bridge domain must lie in [0, T]".into()));
            }
            _ => {}
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn with_truncation(mut self, trunc: TruncationPolicy) -> Self {
        self.trunc = trunc;
        self
    }

    /// Overrides ρ; must agree with the catalog rule when the kind has one.
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        let cat = catalog_rho(&self.kind);
        if rho < 1.0 || (cat.is_finite() && (rho - cat).abs() > 1e-9 * cat) {
            return Err(Error::InvalidParameter(format!("rho {rho} disagrees with the catalog value {cat}")));
        }
        self.nominal_rho = rho;
        Ok(self)
    }

    pub fn tag(&self) -> String {
        self.kind.tag()
    }

    /// Stationary kernel `K` with `R(s,t) = K(|t−s|)`, where one exists.
    pub fn is_stationary(&self) -> bool {
        match &self.kind {
            ModelKind::Ou { .. } | ModelKind::FractionalOu { .. } | ModelKind::Spectral(_) => true,
            ModelKind::Rfs(a) => a.cosine.as_ref().is_none_or(|c| *c == a.sine),
            ModelKind::ShePeriodic { .. } => true,
            _ => false,
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: x, lo: self.domain.lo, hi: self.domain.hi })
        }
    }

    /// Coefficients of the series kinds, as a random Fourier series.
    pub fn series(&self) -> Option<CoefficientSequence> {
        match &self.kind {
            ModelKind::Rfs(a) => Some(a.clone()),
            ModelKind::ShePeriodic { alpha, lambda, color } => Some(CoefficientSequence {
                a0: 1.0 / (2.0 * lambda),
                sine: CoefficientRule::FractionalHeat { alpha: *alpha, lambda: *lambda, color: *color },
                cosine: None,
                k_max: usize::MAX,
                decay_rho: catalog_rho(&self.kind),
            }),
            _ => None,
        }
    }

    fn rfs_eval(&self, a: &CoefficientSequence, s: f64, t: f64) -> Result<f64> {
        let d = t - s;
        let pos = cosine_series(&a.sine, d, self.trunc)?;
        let mut r = 0.25 * a.a0;
        match &a.cosine {
            None => r += pos,
            Some(c) => {
                let neg = cosine_series(c, d, self.trunc)?;
                let pos_sum = cosine_series(&a.sine, s + t, self.trunc)?;
                let neg_sum = cosine_series(c, s + t, self.trunc)?;
                r += 0.5 * (pos + neg) + 0.5 * (neg_sum - pos_sum);
            }
        }
        Ok(r)
    }

    pub(crate) fn eval_unchecked(&self, s: f64, t: f64) -> Result<f64> {
        Ok(match &self.kind {
            ModelKind::Fbm { hurst } => {
                let e = 2.0 * hurst;
                0.5 * (s.powf(e) + t.powf(e) - (t - s).abs().powf(e))
            }
            ModelKind::BrownianBridge { horizon } => s.min(t) - s * t / horizon,
            ModelKind::StationaryF(f) => {
                let o = self.domain.lo;
                0.5 * (f.eval(s - o) + f.eval(t - o) - f.eval((t - s).abs()))
            }
            ModelKind::Ou { lambda } => (-lambda * (t - s).abs()).exp(),
            ModelKind::FractionalOu { density, .. } | ModelKind::Spectral(density) => spectral_cov(density, t - s)?,
            ModelKind::BiFbm { hurst, k } => {
                let e = 2.0 * hurst;
                let sp = if s == 0.0 { 0.0 } else { s.powf(e) };
                let tp = if t == 0.0 { 0.0 } else { t.powf(e) };
                2f64.powf(-k) * ((sp + tp).powf(*k) - (t - s).abs().powf(e * k))
            }
            ModelKind::Rfs(a) => self.rfs_eval(a, s, t)?,
            ModelKind::ShePeriodic { .. } => {
                let a = self.series().expect("series kind");
                self.rfs_eval(&a, s, t)?
            }
            ModelKind::SheDirichlet { alpha } => {
                let rule = CoefficientRule::Power { scale: 2f64.powf(2.0 * alpha - 1.0), exponent: 2.0 * alpha };
                let minus = cosine_series(&rule, 0.5 * (s - t), self.trunc)?;
                let plus = cosine_series(&rule, 0.5 * (s + t), self.trunc)?;
                0.5 * (minus - plus)
            }
        })
    }

    /// `R(s,t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        self.check_domain(s)?;
        self.check_domain(t)?;
        self.eval_unchecked(s, t)
    }

    /// `R(s,u) − R(s,v) − R(t,u) + R(t,v)` over `[s,t] × [u,v]`.
    pub fn rect_increment(&self, r: &Rectangle) -> Result<f64> {
        for x in [r.s.lo, r.s.hi, r.u.lo, r.u.hi] {
            self.check_domain(x)?;
        }
        let (s, t, u, v) = (r.s.lo, r.s.hi, r.u.lo, r.u.hi);
        if let ModelKind::Fbm { hurst } = self.kind {
            // closed form without the s^{2H}, t^{2H} terms, which cancel
            let e = 2.0 * hurst;
            let g = |x: f64| x.abs().powf(e);
            return Ok(0.5 * (g(v - s) + g(u - t) - g(u - s) - g(v - t)));
        }
        Ok(self.eval_unchecked(s, u)? - self.eval_unchecked(s, v)? - self.eval_unchecked(t, u)?
            + self.eval_unchecked(t, v)?)
    }

    /// `σ²(s,t) = R(s,s) + R(t,t) − 2R(s,t)`.
    pub fn sigma2(&self, s: f64, t: f64) -> Result<f64> {
        self.check_domain(s)?;
        self.check_domain(t)?;
        match &self.kind {
            ModelKind::Fbm { hurst } => Ok((t - s).abs().powf(2.0 * hurst)),
            ModelKind::StationaryF(f) => Ok(f.eval((t - s).abs())),
            ModelKind::Ou { lambda } => Ok(-2.0 * (-lambda * (t - s).abs()).exp_m1()),
            _ => Ok(self.eval_unchecked(s, s)? + self.eval_unchecked(t, t)? - 2.0 * self.eval_unchecked(s, t)?),
        }
    }

    /// Gram matrix `G[i][j] = R(p_i, p_j)`, validated to be positive
    /// semidefinite up to one ridge retry.
    pub fn gram(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.gram_unchecked(points)?;
        cholesky_with_ridge(&g)?;
        Ok(g)
    }

    pub(crate) fn gram_unchecked(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("gram points must be sorted".into()));
        }
        for &p in points {
            self.check_domain(p)?;
        }
        let n = points.len();
        let mut g = DMatrix::zeros(n, n);
        if self.is_stationary() && n > 1 && is_uniform(points) {
            // Toeplitz: one kernel evaluation per lag
            let lags: Vec<f64> = (0..n).map(|k| self.eval_unchecked(points[0], points[k])).collect::<Result<_>>()?;
            for i in 0..n {
                for j in 0..n {
                    g[(i, j)] = lags[i.abs_diff(j)];
                }
            }
            return Ok(g);
        }
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(points[i], points[j])?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}

fn is_uniform(p: &[f64]) -> bool {
    let h = (p[p.len() - 1] - p[0]) / (p.len() - 1) as f64;
    p.iter().enumerate().all(|(i, x)| (x - (p[0] + i as f64 * h)).abs() <= 1e-12 * (1.0 + x.abs()))
}

/// Ridge added on the single retry.
pub const GRAM_RIDGE: f64 = 1e-12;

/// Cholesky factor, retrying once with `1e-12 · I` before reporting `NotPsd`.
pub fn cholesky_with_ridge(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = g.clone().cholesky() {
        return Ok(c.l());
    }
    let n = g.nrows();
    let ridged = g + DMatrix::identity(n, n) * GRAM_RIDGE;
    match ridged.cholesky() {
        Some(c) => Ok(c.l()),
        None => {
            let min_eig = g.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            Err(Error::NotPsd { row: 0, pivot: min_eig })
        }
    }
}

/// The ρ the theory predicts for each kind.
pub fn catalog_rho(kind: &ModelKind) -> f64 {
    match kind {
        ModelKind::Fbm { hurst } | ModelKind::FractionalOu { hurst, .. } => (1.0 / (2.0 * hurst)).max(1.0),
        ModelKind::BrownianBridge { .. } | ModelKind::Ou { .. } => 1.0,
        ModelKind::StationaryF(f) => f.meta.map(|m| (1.0 / m.exponent).max(1.0)).unwrap_or(1.0),
        ModelKind::BiFbm { hurst, k } => (1.0 / (2.0 * hurst * k)).max(1.0),
        ModelKind::Rfs(a) => a.decay_rho,
        ModelKind::SheDirichlet { alpha } => 1.0 / (2.0 * alpha - 1.0),
        ModelKind::ShePeriodic { alpha, color, .. } => rho_from_decay(2.0 * alpha + 2.0 * color),
        ModelKind::Spectral(f) => rho_from_decay(f.decay),
    }
}
