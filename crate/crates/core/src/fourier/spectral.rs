//! Spectral densities and the covariances they generate.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::quad::{integrate, wynn_limit};
use super::special::gamma;
use crate::error::{Error, Result};

/// A symmetric spectral density `f ≥ 0` on the real line with an
/// integrability certificate.
#[derive(Clone)]
pub struct SpectralDensity {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub name: String,
    /// `f(ξ) = O(|ξ|^{-decay})` at infinity; must exceed 1.
    pub decay: f64,
    /// `f(ξ) = O(|ξ|^{-singularity})` at 0; must be below 1.
    pub singularity: f64,
    /// `f` vanishes beyond this radius.
    pub support: Option<f64>,
}

impl fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralDensity")
            .field("name", &self.name)
            .field("decay", &self.decay)
            .field("singularity", &self.singularity)
            .field("support", &self.support)
            .finish()
    }
}

impl PartialEq for SpectralDensity {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.decay == other.decay
            && self.singularity == other.singularity
            && self.support == other.support
    }
}

impl SpectralDensity {
    pub fn new<F>(name: &str, decay: f64, singularity: f64, support: Option<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if support.is_none() && decay <= 1.0 {
            return Err(Error::InvalidParameter(format!("decay exponent {decay} is not integrable")));
        }
        if singularity >= 1.0 {
            return Err(Error::InvalidParameter(format!("singularity order {singularity} is not integrable")));
        }
        Ok(SpectralDensity { f: Arc::new(f), name: name.to_string(), decay, singularity, support })
    }

    /// `c_H |ξ|^{1-2H} / (λ² + ξ²)`, the fractional Ornstein–Uhlenbeck spectrum.
    pub fn fractional_ou(hurst: f64, lambda: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) || lambda <= 0.0 {
            return Err(Error::InvalidParameter("fractional OU needs H in (0,1), λ > 0".into()));
        }
        let c = gamma(2.0 * hurst + 1.0) * (PI * hurst).sin() / (2.0 * PI);
        let e = 1.0 - 2.0 * hurst;
        Self::new(&format!("fou(H={hurst},lambda={lambda})"), 1.0 + 2.0 * hurst, -e, None, move |xi: f64| {
            let a = xi.abs();
            if a == 0.0 {
                return if e > 0.0 {
                    0.0
                } else if e == 0.0 {
                    c / (lambda * lambda)
                } else {
                    f64::INFINITY
                };
            }
            c * a.powf(e) / (lambda * lambda + a * a)
        })
    }

    /// `1/(2|ξ|^{2α} + 2λ)`, the stationary spectrum of the whole-line heat equation.
    pub fn whole_line_she(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha <= 1.0) || lambda <= 0.0 {
            return Err(Error::InvalidParameter("whole-line SHE needs α in (1/2,1], λ > 0".into()));
        }
        Self::new(&format!("she(alpha={alpha},lambda={lambda})"), 2.0 * alpha, 0.0, None, move |xi: f64| {
            1.0 / (2.0 * xi.abs().powf(2.0 * alpha) + 2.0 * lambda)
        })
    }

    /// Standard Gaussian density; its covariance is `e^{-x²/2}`.
    pub fn gaussian() -> Self {
        let c = 1.0 / (2.0 * PI).sqrt();
        Self::new("gaussian", f64::INFINITY, 0.0, Some(40.0), move |xi: f64| c * (-0.5 * xi * xi).exp())
            .expect("valid certificate")
    }

    /// `height` on `[-r, r]`, zero outside.
    pub fn indicator(r: f64, height: f64) -> Result<Self> {
        if r <= 0.0 || height < 0.0 {
            return Err(Error::InvalidParameter("indicator needs r > 0, height ≥ 0".into()));
        }
        Self::new(
            &format!("indicator(r={r})"),
            f64::INFINITY,
            0.0,
            Some(r),
            move |xi: f64| {
                if xi.abs() <= r {
                    height
                } else {
                    0.0
                }
            },
        )
    }

    pub fn eval(&self, xi: f64) -> f64 {
        (self.f)(xi)
    }
}

/// Default absolute tolerance for spectral quadrature.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// `∫_0^b f` with a graded substitution that absorbs a power singularity at 0.
fn integrate_from_zero(f: &SpectralDensity, b: f64, tol: f64, w: &dyn Fn(f64) -> f64) -> Result<f64> {
    let q = f.singularity.max(0.0);
    let kappa = 2.0 / (1.0 - q);
    let g = |v: f64| {
        if v == 0.0 {
            return 0.0;
        }
        let xi = b * v.powf(kappa);
        f.eval(xi) * w(xi) * b * kappa * v.powf(kappa - 1.0)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// `∫_a^∞ f` for `a > 0`, mapped to `(0, 1]` so that the power-law tail
/// becomes a bounded integrand.
fn integrate_tail(f: &SpectralDensity, a: f64, tol: f64) -> Result<f64> {
    let kappa = 1.0 / (f.decay - 1.0);
    let g = |v: f64| {
        if v == 0.0 {
            return 0.0;
        }
        let xi = a * v.powf(-kappa);
        f.eval(xi) * a * kappa * v.powf(-kappa - 1.0)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// `K(x) = ∫_ℝ f(ξ) cos(ξx) dξ`.
///
/// Compactly supported densities are integrated directly. Otherwise the
/// half-line is cut at the zeros of `cos(ξx)`; the resulting eventually
/// alternating series of panel integrals is summed with Wynn's epsilon
/// algorithm. At `x = 0` the tail is integrated after a decay-adapted
/// change of variables.
pub fn spectral_cov(f: &SpectralDensity, x: f64) -> Result<f64> {
    spectral_cov_tol(f, x, SPECTRAL_TOL)
}

pub fn spectral_cov_tol(f: &SpectralDensity, x: f64, tol: f64) -> Result<f64> {
    let x = x.abs();
    let cosw = move |xi: f64| (xi * x).cos();
    if let Some(r) = f.support {
        // geometric breakpoints keep the adaptive rule happy near 0
        let mut total = integrate_from_zero(f, r.min(1.0), tol / 8.0, &cosw)?;
        let mut a = r.min(1.0);
        while a < r {
            let b = (2.0 * a).min(r);
            let panels = (((b - a) * x / PI).ceil() as usize).max(1);
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                total += integrate(&|xi: f64| f.eval(xi) * cosw(xi), lo, lo + h, tol / (8.0 * panels as f64))?;
            }
            a = b;
        }
        return Ok(2.0 * total);
    }
    if x == 0.0 {
        let head = integrate_from_zero(f, 1.0, tol / 4.0, &|_| 1.0)?;
        let tail = integrate_tail(f, 1.0, tol / 4.0)?;
        return Ok(2.0 * (head + tail));
    }
    let first_zero = 0.5 * PI / x;
    // head: [0, first_zero], split geometrically from 1
    let mut head = integrate_from_zero(f, first_zero.min(1.0), tol / 16.0, &cosw)?;
    let mut a = first_zero.min(1.0);
    while a < first_zero {
        let b = (2.0 * a).min(first_zero);
        head += integrate(&|xi: f64| f.eval(xi) * cosw(xi), a, b, tol / 64.0)?;
        a = b;
    }
    let mut partial = Vec::new();
    let mut running = head;
    let mut last_estimate = f64::NAN;
    let period = PI / x;
    for j in 0..4000usize {
        let lo = first_zero + j as f64 * period;
        running += integrate(&|xi: f64| f.eval(xi) * cosw(xi), lo, lo + period, tol / 64.0)?;
        partial.push(running);
        if partial.len() >= 12 && partial.len() % 4 == 0 {
            let start = partial.len().saturating_sub(40);
            let (est, change) = wynn_limit(&partial[start..]);
            if change < tol / 4.0 && (est - last_estimate).abs() < tol / 2.0 {
                return Ok(2.0 * est);
            }
            last_estimate = est;
        }
    }
    Err(Error::QuadratureFailed(format!("oscillatory tail of {} did not converge at x = {x}", f.name)))
}

/// `σ²(t) = 4 ∫ sin²(tξ/2) f(ξ) dξ = 2(K(0) − K(t))`.
pub fn spectral_sigma2(f: &SpectralDensity, t: f64) -> Result<f64> {
    Ok(2.0 * (spectral_cov(f, 0.0)? - spectral_cov(f, t)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FejerProbe {
    /// Probe values at each grid point, taken as the largest over the
    /// increasing cutoffs (a finite limsup proxy).
    pub values: Vec<(f64, f64)>,
    /// Probe nonpositive at the smallest grid point.
    pub nonpositive_near_zero: bool,
    /// Largest grid point such that the probe is ≤ tol at all smaller points.
    pub x0_detected: f64,
    pub r_max: f64,
}

/// Evaluates `∫_0^R ∂²_ξ(f(ξ)ξ²) F_ξ(x) dξ` for `R ∈ {R/4, R/2, R}` at each
/// grid point. The second derivative is an extrapolated central difference.
pub fn fejer_convexity_probe(f: &SpectralDensity, x_grid: &[f64], r_max: f64, tol: f64) -> Result<FejerProbe> {
    if x_grid.is_empty() || r_max <= 0.0 {
        return Err(Error::InvalidParameter("probe needs a nonempty grid and R > 0".into()));
    }
    let phi = |xi: f64| f.eval(xi) * xi * xi;
    // central difference at steps h and h/2, Richardson combined; a small
    // step would drown the integrand in rounding noise
    let d2 = |xi: f64, h: f64| {
        let lo = (xi - h).max(0.0);
        let hi = xi + h;
        let mid = 0.5 * (lo + hi);
        let hh = 0.5 * (hi - lo);
        (phi(hi) - 2.0 * phi(mid) + phi(lo)) / (hh * hh)
    };
    let g = |xi: f64| {
        let h = 0.05 * xi.max(1e-2);
        if xi < h {
            return d2(xi, h);
        }
        (4.0 * d2(xi, 0.5 * h) - d2(xi, h)) / 3.0
    };
    let mut values = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let width = if x > 0.0 { (PI / x).min(1.0) } else { 1.0 };
        let cuts = [0.25 * r_max, 0.5 * r_max, r_max];
        let mut acc = 0.0;
        let mut best = f64::NEG_INFINITY;
        let mut a = 0.0;
        for &cut in &cuts {
            while a < cut {
                let b = (a + width).min(cut);
                acc += integrate(&|xi: f64| g(xi) * super::fejer_cont(xi, x), a, b, tol * 1e-3)?;
                a = b;
            }
            best = best.max(acc);
        }
        values.push((x, best));
    }
    let nonpositive_near_zero = values[0].1 <= tol;
    let mut x0 = 0.0;
    let mut all_ok = true;
    for &(x, v) in &values {
        if v > tol {
            x0 = x;
            all_ok = false;
            break;
        }
    }
    if all_ok {
        x0 = values.last().unwrap().0;
    }
    Ok(FejerProbe { values, nonpositive_near_zero, x0_detected: x0, r_max })
}
