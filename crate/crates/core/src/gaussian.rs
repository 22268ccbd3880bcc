//! Gaussian sampling, Cameron–Martin elements, the discrete embedding
//! inequality and conditional variances.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{cholesky_with_ridge, CovarianceModel, Interval, Rectangle};
use crate::error::{Error, Result};
use crate::fourier::CoefficientSequence;
use crate::roughpath::PlPath;
use crate::variation::Dissection;

/// Components per path addressable by one stream layout.
pub const MAX_COMPONENTS: u64 = 64;

fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Reproducible stream of draws keyed by `(seed, purpose, stream_id)`.
///
/// ChaCha8 keyed by a hash of `(seed, purpose)`, with `stream_id` selecting
/// the ChaCha stream. Normal draws use the `StandardNormal` ziggurat of
/// `rand_distr`.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, purpose: &str, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(purpose).rotate_left(17));
        rng.set_stream(stream_id);
        RngStream { rng, seed, stream_id }
    }

    /// Stream for component `c` of path `p`.
    pub fn for_path(seed: u64, purpose: &str, path: usize, component: usize) -> Self {
        Self::new(seed, purpose, path as u64 * MAX_COMPONENTS + component as u64)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

/// `M` paths of a `d`-dimensional process on a grid, stored path-major,
/// then component, then grid index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub grid: Vec<f64>,
    pub d: usize,
    pub m: usize,
    pub data: Vec<f64>,
    pub seed: u64,
    pub model: String,
}

impl PathEnsemble {
    pub fn path(&self, p: usize, c: usize) -> &[f64] {
        let n = self.grid.len();
        let start = (p * self.d + c) * n;
        &self.data[start..start + n]
    }

    /// Path `p` as a piecewise-linear path in `ℝ^d`.
    pub fn pl_path(&self, p: usize) -> PlPath {
        let n = self.grid.len();
        let mut values = Vec::with_capacity(n * self.d);
        for i in 0..n {
            for c in 0..self.d {
                values.push(self.path(p, c)[i]);
            }
        }
        PlPath { times: self.grid.clone(), d: self.d, values }
    }
}

fn check_counts(d: usize, m: usize) -> Result<()> {
    if d == 0 || d as u64 > MAX_COMPONENTS || m == 0 {
        return Err(Error::InvalidParameter(format!("need 1 ≤ d ≤ {MAX_COMPONENTS} and M ≥ 1")));
    }
    Ok(())
}

/// Exact sampling through a Cholesky factor of the Gram matrix. Grid points
/// of zero variance are pinned at 0 and left out of the factorization.
pub fn sample_cholesky(m: &CovarianceModel, grid: &[f64], d: usize, paths: usize, seed: u64) -> Result<PathEnsemble> {
    check_counts(d, paths)?;
    let g = m.gram_unchecked(grid)?;
    let n = grid.len();
    let scale = (0..n).map(|i| g[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let live: Vec<usize> = (0..n).filter(|&i| g[(i, i)] > 1e-14 * scale).collect();
    let sub = DMatrix::from_fn(live.len(), live.len(), |i, j| g[(live[i], live[j])]);
    let l = if live.is_empty() { sub.clone() } else { cholesky_with_ridge(&sub)? };
    let k = live.len();
    let blocks: Vec<Vec<f64>> = (0..paths * d)
        .into_par_iter()
        .map(|idx| {
            let (p, c) = (idx / d, idx % d);
            let mut rng = RngStream::for_path(seed, "cholesky", p, c);
            let mut z = vec![0.0; k];
            rng.fill_normal(&mut z);
            let mut out = vec![0.0; n];
            for (r, &gi) in live.iter().enumerate() {
                let mut acc = 0.0;
                for (col, zc) in z.iter().enumerate().take(r + 1) {
                    acc += l[(r, col)] * zc;
                }
                out[gi] = acc;
            }
            out
        })
        .collect();
    Ok(PathEnsemble { grid: grid.to_vec(), d, m: paths, data: blocks.concat(), seed, model: m.tag() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Wave {
    Const,
    Sin(f64),
    Cos(f64),
}

impl Wave {
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        match self {
            Wave::Const => 1.0,
            Wave::Sin(w) => (w * x).sin(),
            Wave::Cos(w) => (w * x).cos(),
        }
    }
}

/// One Fourier mode: `amplitude · wave(x) · Y` with its frequency index `k`
/// and the Ornstein–Uhlenbeck rate of its coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: usize,
    pub amplitude: f64,
    pub wave: Wave,
    pub rate: f64,
}

/// A Gaussian field `Σ_m amplitude_m wave_m(x) Y_m`, modes ordered by `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub modes: Vec<Mode>,
}

impl SpectralField {
    /// `α_0 Y_0/2 + Σ_{k≤N} α_k Y^k sin(kt) + α_{-k} Y^{-k} cos(kt)`.
    pub fn rfs(a: &CoefficientSequence, n: usize) -> Self {
        let mut modes = Vec::with_capacity(2 * n + 1);
        modes.push(Mode { k: 0, amplitude: 0.5 * a.a0.sqrt(), wave: Wave::Const, rate: 0.0 });
        let cos_rule = a.cosine_rule();
        for k in 1..=n {
            let kf = k as f64;
            modes.push(Mode { k, amplitude: a.sine.value(k as u64).sqrt(), wave: Wave::Sin(kf), rate: 0.0 });
            modes.push(Mode { k, amplitude: cos_rule.value(k as u64).sqrt(), wave: Wave::Cos(kf), rate: 0.0 });
        }
        SpectralField { modes }
    }

    /// Number of leading modes with frequency index `≤ k`.
    pub fn modes_up_to(&self, k: usize) -> usize {
        self.modes.partition_point(|m| m.k <= k)
    }

    /// Grid-major matrix `B[g][m] = amplitude_m · wave_m(x_g)`.
    pub fn basis(&self, grid: &[f64]) -> Vec<f64> {
        let nm = self.modes.len();
        let mut b = vec![0.0; grid.len() * nm];
        for (g, &x) in grid.iter().enumerate() {
            for (j, m) in self.modes.iter().enumerate() {
                b[g * nm + j] = m.amplitude * m.wave.at(x);
            }
        }
        b
    }

    /// Field values on the grid using the first `count` modes.
    pub fn synthesize(&self, basis: &[f64], y: &[f64], count: usize, out: &mut [f64]) {
        let nm = self.modes.len();
        for (g, o) in out.iter_mut().enumerate() {
            let row = &basis[g * nm..g * nm + count];
            *o = row.iter().zip(&y[..count]).map(|(b, y)| b * y).sum();
        }
    }

    /// Partial sums for several cutoffs at once: `out[c][g]` uses the first
    /// `counts[c]` modes. `counts` must be increasing.
    pub fn synthesize_prefixes(&self, basis: &[f64], y: &[f64], counts: &[usize], out: &mut [Vec<f64>]) {
        let nm = self.modes.len();
        let ng = out[0].len();
        for g in 0..ng {
            let row = &basis[g * nm..(g + 1) * nm];
            let mut acc = 0.0;
            let mut from = 0;
            for (c, &to) in counts.iter().enumerate() {
                for j in from..to {
                    acc += row[j] * y[j];
                }
                out[c][g] = acc;
                from = to;
            }
        }
    }
}

/// Direct spectral synthesis of the random Fourier series truncated at `N`.
/// Each `(path, component)` stream draws the mode coefficients in mode order,
/// so different cutoffs with the same seed are coupled.
pub fn sample_rfs(
    a: &CoefficientSequence,
    n: usize,
    grid: &[f64],
    d: usize,
    paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_counts(d, paths)?;
    if n > a.k_max {
        return Err(Error::InvalidParameter(format!("cutoff {n} exceeds K_max = {}", a.k_max)));
    }
    let field = SpectralField::rfs(a, n);
    let basis = field.basis(grid);
    let nm = field.modes.len();
    let ng = grid.len();
    let blocks: Vec<Vec<f64>> = (0..paths * d)
        .into_par_iter()
        .map(|idx| {
            let mut rng = RngStream::for_path(seed, "rfs", idx / d, idx % d);
            let mut y = vec![0.0; nm];
            rng.fill_normal(&mut y);
            let mut out = vec![0.0; ng];
            field.synthesize(&basis, &y, nm, &mut out);
            out
        })
        .collect();
    Ok(PathEnsemble { grid: grid.to_vec(), d, m: paths, data: blocks.concat(), seed, model: format!("rfs(N={n})") })
}

/// Exact stationary OU transition over time `τ`, row `k` with rate `λ_k`.
/// Noise is drawn column by column.
pub fn ou_evolve(lambda: &[f64], y0: &DMatrix<f64>, tau: f64, stream: &mut RngStream) -> Result<DMatrix<f64>> {
    if y0.nrows() != lambda.len() {
        return Err(Error::DimensionMismatch(format!("{} rates for {} rows", lambda.len(), y0.nrows())));
    }
    if tau < 0.0 || lambda.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("need τ ≥ 0 and positive rates".into()));
    }
    let mut out = y0.clone();
    if tau == 0.0 {
        return Ok(out);
    }
    for c in 0..y0.ncols() {
        for (k, &l) in lambda.iter().enumerate() {
            let decay = (-l * tau).exp();
            let noise = (-(-2.0 * l * tau).exp_m1()).sqrt();
            out[(k, c)] = decay * y0[(k, c)] + noise * stream.normal();
        }
    }
    Ok(out)
}

/// `h(t) = Σ_i c_i R(s_i, t)` with `|h|_H² = cᵀ G c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CameronMartinElement {
    pub anchors: Vec<f64>,
    pub weights: Vec<f64>,
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
    pub h_norm: f64,
}

impl CameronMartinElement {
    pub fn eval(&self, m: &CovarianceModel, t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (s, c) in self.anchors.iter().zip(&self.weights) {
            acc += c * m.eval(*s, t)?;
        }
        Ok(acc)
    }
}

/// Cameron–Martin element from anchors and weights, evaluated on `grid`.
pub fn cm_element(m: &CovarianceModel, anchors: &[f64], weights: &[f64], grid: &[f64]) -> Result<CameronMartinElement> {
    if anchors.len() != weights.len() {
        return Err(Error::DimensionMismatch("anchors and weights differ in length".into()));
    }
    let mut order: Vec<usize> = (0..anchors.len()).collect();
    order.sort_by(|&a, &b| anchors[a].total_cmp(&anchors[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| anchors[i]).collect();
    let c = DVector::from_iterator(order.len(), order.iter().map(|&i| weights[i]));
    let g = m.gram_unchecked(&sorted)?;
    let norm2 = c.dot(&(&g * &c));
    let mut el = CameronMartinElement {
        anchors: anchors.to_vec(),
        weights: weights.to_vec(),
        grid: grid.to_vec(),
        h: Vec::new(),
        h_norm: norm2.max(0.0).sqrt(),
    };
    el.h = grid.iter().map(|&t| el.eval(m, t)).collect::<Result<_>>()?;
    Ok(el)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingCheck {
    pub q: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// `q = 1/(1/(2ρ) + 1/2)`.
pub fn embedding_exponent(rho: f64) -> f64 {
    1.0 / (0.5 / rho + 0.5)
}

/// Discrete Cameron–Martin embedding inequality on a dissection:
/// `(Σ_j |h_j|^q)^{1/q} ≤ |h|_H (Σ_j (Σ_k |R_jk|)^ρ)^{1/(2ρ)}`.
pub fn embedding_check(
    m: &CovarianceModel,
    rho: f64,
    dis: &Dissection,
    h: &CameronMartinElement,
) -> Result<EmbeddingCheck> {
    if !(rho >= 1.0) {
        return Err(Error::BadExponent(format!("ρ = {rho} < 1")));
    }
    let q = embedding_exponent(rho);
    let p = &dis.points;
    let hv: Vec<f64> = p.iter().map(|&t| h.eval(m, t)).collect::<Result<_>>()?;
    let lhs = hv.windows(2).map(|w| (w[1] - w[0]).abs().powf(q)).sum::<f64>().powf(1.0 / q);
    let n = p.len() - 1;
    let mut outer = 0.0;
    for j in 0..n {
        let rj = Interval { lo: p[j], hi: p[j + 1] };
        let mut row = 0.0;
        for k in 0..n {
            let rk = Interval { lo: p[k], hi: p[k + 1] };
            row += m.rect_increment(&Rectangle::new(rj, rk))?.abs();
        }
        outer += row.powf(rho);
    }
    let rhs = h.h_norm * outer.powf(0.5 / rho);
    Ok(EmbeddingCheck { q, lhs, rhs, slack: rhs - lhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalVariance {
    pub value: f64,
    /// The conditioning matrix was singular; a pseudo-inverse was used.
    pub pseudo_inverse: bool,
}

/// Covariances `E X_{cell_i} X_{cell_j}` of the grid increments.
pub fn increment_cov(m: &CovarianceModel, grid: &[f64]) -> Result<DMatrix<f64>> {
    let n = grid.len().saturating_sub(1);
    let mut c = DMatrix::zeros(n, n);
    if let crate::covariance::ModelKind::Fbm { .. } = m.kind {
        // the closed-form rectangle avoids cancelling the s^{2H} terms
        let cells: Vec<Interval> = grid.windows(2).map(|w| Interval { lo: w[0], hi: w[1] }).collect();
        for a in 0..n {
            for b in a..n {
                let x = m.rect_increment(&Rectangle::new(cells[a], cells[b]))?;
                c[(a, b)] = x;
                c[(b, a)] = x;
            }
        }
        return Ok(c);
    }
    let g = m.gram_unchecked(grid)?;
    for a in 0..n {
        for b in a..n {
            let x = g[(a, b)] - g[(a, b + 1)] - g[(a + 1, b)] + g[(a + 1, b + 1)];
            c[(a, b)] = x;
            c[(b, a)] = x;
        }
    }
    Ok(c)
}

/// Conditional variance of the increment over cells `s..t` given all other
/// cells, from a precomputed [`increment_cov`] matrix.
pub fn conditional_variance_cells(c: &DMatrix<f64>, s: usize, t: usize) -> Result<ConditionalVariance> {
    let n = c.nrows();
    if !(s < t && t <= n) {
        return Err(Error::InvalidParameter(format!("need grid indices s < t <= {n}, got ({s}, {t})")));
    }
    let v: f64 = (s..t).flat_map(|i| (s..t).map(move |j| (i, j))).map(|(i, j)| c[(i, j)]).sum();
    let outside: Vec<usize> = (0..n).filter(|&i| i < s || i >= t).collect();
    if outside.is_empty() {
        return Ok(ConditionalVariance { value: v, pseudo_inverse: false });
    }
    let k = outside.len();
    let sub = DMatrix::from_fn(k, k, |a, b| c[(outside[a], outside[b])]);
    let b = DVector::from_fn(k, |a, _| (s..t).map(|i| c[(i, outside[a])]).sum::<f64>());
    if let Some(ch) = sub.clone().cholesky() {
        let sol = ch.solve(&b);
        return Ok(ConditionalVariance { value: v - b.dot(&sol), pseudo_inverse: false });
    }
    let svd = sub.svd(true, true);
    let sol = svd.solve(&b, 1e-12).map_err(|_| Error::SingularConditioning)?;
    Ok(ConditionalVariance { value: v - b.dot(&sol), pseudo_inverse: true })
}

/// `Var(X_{s,t} | grid increments outside [s,t])` by a Schur complement,
/// with `s < t` given as grid indices.
pub fn conditional_variance(m: &CovarianceModel, grid: &[f64], s: usize, t: usize) -> Result<ConditionalVariance> {
    if !(s < t && t < grid.len()) {
        return Err(Error::InvalidParameter(format!("need grid indices s < t < {}, got ({s}, {t})", grid.len())));
    }
    conditional_variance_cells(&increment_cov(m, grid)?, s, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCov {
    pub matrix: DMatrix<f64>,
    /// Largest deviation from the analytic Gram matrix, when a model is given.
    pub max_abs_error: Option<f64>,
    /// Number of pooled samples (paths × components).
    pub samples: usize,
}

/// Unbiased empirical covariance over paths, pooled over components.
pub fn empirical_cov(e: &PathEnsemble, model: Option<&CovarianceModel>) -> Result<EmpiricalCov> {
    if e.m < 2 {
        return Err(Error::InvalidParameter("need at least 2 paths".into()));
    }
    let n = e.grid.len();
    let mut acc = DMatrix::zeros(n, n);
    for c in 0..e.d {
        let mut mean = vec![0.0; n];
        for p in 0..e.m {
            for (mu, x) in mean.iter_mut().zip(e.path(p, c)) {
                *mu += x;
            }
        }
        for mu in mean.iter_mut() {
            *mu /= e.m as f64;
        }
        for p in 0..e.m {
            let x = e.path(p, c);
            for i in 0..n {
                let xi = x[i] - mean[i];
                for j in i..n {
                    acc[(i, j)] += xi * (x[j] - mean[j]);
                }
            }
        }
    }
    let denom = (e.d * (e.m - 1)) as f64;
    for i in 0..n {
        for j in i..n {
            let v = acc[(i, j)] / denom;
            acc[(i, j)] = v;
            acc[(j, i)] = v;
        }
    }
    let max_abs_error = match model {
        None => None,
        Some(m) => {
            let g = m.gram_unchecked(&e.grid)?;
            Some((&acc - g).abs().max())
        }
    };
    Ok(EmpiricalCov { matrix: acc, max_abs_error, samples: e.m * e.d })
}

/// Standard error of an empirical covariance entry for a Gaussian pair with
/// variances `vi`, `vj` and covariance `cij`.
pub fn cov_standard_error(vi: f64, vj: f64, cij: f64, samples: usize) -> f64 {
    ((vi * vj + cij * cij) / samples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_closed_form() {
        let y0 = DMatrix::from_element(1, 1, 1.0);
        let mut s = RngStream::new(1, "t", 0);
        let same = ou_evolve(&[1.0], &y0, 0.0, &mut s).unwrap();
        assert_eq!(same, y0);
        let mut a = RngStream::new(1, "t", 0);
        let mut b = RngStream::new(1, "t", 0);
        let out = ou_evolve(&[1.0], &y0, 2f64.ln(), &mut a).unwrap();
        let want = 0.5 + 0.75f64.sqrt() * b.normal();
        assert!((out[(0, 0)] - want).abs() < 1e-15);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngStream::new(9, "x", 3);
        let mut b = RngStream::new(9, "x", 3);
        let mut c = RngStream::new(9, "x", 4);
        let va: Vec<f64> = (0..5).map(|_| a.normal()).collect();
        let vb: Vec<f64> = (0..5).map(|_| b.normal()).collect();
        let vc: Vec<f64> = (0..5).map(|_| c.normal()).collect();
        assert_eq!(va, vb);
        assert_ne!(va, vc);
    }

    #[test]
    fn brownian_cm_element() {
        let m = CovarianceModel::fbm(0.5).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let h = cm_element(&m, &[0.5], &[1.0], &grid).unwrap();
        assert_eq!(h.h, vec![0.0, 0.25, 0.5, 0.5, 0.5]);
        assert!((h.h_norm - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn brownian_conditioning_is_trivial() {
        let m = CovarianceModel::fbm(0.5).unwrap();
        let grid = Interval::new(0.0, 1.0).unwrap().linspace(9);
        let v = conditional_variance(&m, &grid, 2, 5).unwrap();
        assert!((v.value - 3.0 / 8.0).abs() < 1e-12 && !v.pseudo_inverse);
    }
}
