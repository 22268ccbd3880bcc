//! 1D p-variation and 2D mixed (γ,ρ)-variation over grids.
//!
//! Everything runs on a table of values `f(h_a, v_b)` of a two-parameter
//! function, so covariance models, random grid functions and convolved
//! kernels share one engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, Interval, Rectangle};
use crate::error::{Error, Result};
use crate::harness::fit::{loglog_fit, RateFit};

/// Largest number of points per axis for exact `V_{γ,ρ}`.
pub const MAX_EXACT: usize = 12;
/// `V⁺` is solved by nested dynamic programs, so exact mode scales further.
pub const MAX_EXACT_PLUS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dissection {
    pub points: Vec<f64>,
}

impl Dissection {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("a dissection needs at least 2 points".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("dissection points must be strictly increasing".into()));
        }
        Ok(Dissection { points })
    }

    pub fn uniform(i: Interval, n: usize) -> Result<Self> {
        Self::new(i.linspace(n))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn interval(&self) -> Interval {
        Interval { lo: self.points[0], hi: *self.points.last().unwrap() }
    }

    fn spans(&self, i: &Interval) -> bool {
        let tol = 1e-12 * (1.0 + i.lo.abs().max(i.hi.abs()));
        (self.points[0] - i.lo).abs() <= tol && (self.points[self.len() - 1] - i.hi).abs() <= tol
    }

    fn select(&self, idx: &[usize]) -> Dissection {
        Dissection { points: idx.iter().map(|&i| self.points[i]).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Lower,
    Greedy,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "lower" => Ok(Mode::Lower),
            "greedy" => Ok(Mode::Greedy),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationEstimate {
    pub value: f64,
    pub gamma: f64,
    pub rho: f64,
    pub rect: Rectangle,
    pub mode: Mode,
    /// Maximizing (horizontal, vertical) dissections.
    pub argmax: Option<(Dissection, Dissection)>,
}

/// Values `f(h_a, v_b)` on a product grid, row-major in `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub h: Vec<f64>,
    pub v: Vec<f64>,
    values: Vec<f64>,
}

impl GridTable {
    pub fn new(h: Vec<f64>, v: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != h.len() * v.len() {
            return Err(Error::DimensionMismatch(format!(
                "table has {} values for a {}x{} grid",
                values.len(),
                h.len(),
                v.len()
            )));
        }
        if h.len() < 2 || v.len() < 2 {
            return Err(Error::InvalidParameter("tables need at least 2 points per axis".into()));
        }
        Ok(GridTable { h, v, values })
    }

    pub fn from_model(m: &CovarianceModel, h: &[f64], v: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(h.len() * v.len());
        for &x in h {
            for &y in v {
                values.push(m.eval(x, y)?);
            }
        }
        Self::new(h.to_vec(), v.to_vec(), values)
    }

    /// Table of an arbitrary function.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(h: &[f64], v: &[f64], f: F) -> Result<Self> {
        let values = h.iter().flat_map(|&x| v.iter().map(move |&y| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(h.to_vec(), v.to_vec(), values)
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.v.len() + b]
    }

    /// Rectangular increment over `[h_a, h_b] × [v_c, v_d]`.
    #[inline]
    pub fn inc(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.at(a, c) - self.at(a, d) - self.at(b, c) + self.at(b, d)
    }

    pub fn add(&self, other: &GridTable) -> Result<GridTable> {
        if self.h != other.h || self.v != other.v {
            return Err(Error::GridMismatch("tables live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridTable { h: self.h.clone(), v: self.v.clone(), values })
    }

    fn rect(&self) -> Rectangle {
        Rectangle {
            s: Interval { lo: self.h[0], hi: *self.h.last().unwrap() },
            u: Interval { lo: self.v[0], hi: *self.v.last().unwrap() },
        }
    }
}

fn check_exponents(gamma: f64, rho: f64) -> Result<()> {
    if !(gamma >= 1.0) || !(rho >= 1.0) || !gamma.is_finite() || !rho.is_finite() {
        return Err(Error::BadExponent(format!("need γ, ρ ≥ 1, got γ = {gamma}, ρ = {rho}")));
    }
    Ok(())
}

/// Exact p-variation of a sequence by dynamic programming over all
/// sub-dissections of the index grid.
pub fn pvar_1d(samples: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::BadExponent(format!("p = {p} < 1")));
    }
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("pvar_1d needs at least 2 samples".into()));
    }
    Ok(pvar_dp(samples.len(), |i, j| (samples[j] - samples[i]).abs().powf(p)).powf(1.0 / p))
}

/// `max` over dissections `0 = i_0 < … < i_k = n−1` of `Σ cost(i_l, i_{l+1})`.
pub fn pvar_dp<F: Fn(usize, usize) -> f64>(n: usize, cost: F) -> f64 {
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut b = f64::NEG_INFINITY;
        for (i, &bi) in best.iter().enumerate().take(j) {
            let v = bi + cost(i, j);
            if v > b {
                b = v;
            }
        }
        best[j] = b;
    }
    best[n - 1]
}

/// Outer DP over vertical dissections for a fixed inner dissection `hs`.
/// Returns the maximal Σ_j (Σ_i |inc|^γ)^{ρ/γ} and the maximizing indices.
fn outer_dp(t: &GridTable, hs: &[usize], vs: &[usize], gamma: f64, rho: f64) -> (f64, Vec<usize>) {
    let n = vs.len();
    let e = rho / gamma;
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut from = vec![0usize; n];
    best[0] = 0.0;
    for d in 1..n {
        for c in 0..d {
            let mut inner = 0.0;
            for w in hs.windows(2) {
                inner += t.inc(w[0], w[1], vs[c], vs[d]).abs().powf(gamma);
            }
            let v = best[c] + inner.powf(e);
            if v > best[d] {
                best[d] = v;
                from[d] = c;
            }
        }
    }
    let mut path = vec![n - 1];
    let mut k = n - 1;
    while k > 0 {
        k = from[k];
        path.push(k);
    }
    path.reverse();
    (best[n - 1], path.into_iter().map(|i| vs[i]).collect())
}

/// `Σ_j (Σ_i |inc|^γ)^{ρ/γ}` for fixed index dissections.
fn power_sum(t: &GridTable, hs: &[usize], vs: &[usize], gamma: f64, rho: f64) -> f64 {
    let e = rho / gamma;
    let mut outer = 0.0;
    for wv in vs.windows(2) {
        let mut inner = 0.0;
        for wh in hs.windows(2) {
            inner += t.inc(wh[0], wh[1], wv[0], wv[1]).abs().powf(gamma);
        }
        outer += inner.powf(e);
    }
    outer
}

fn mask_to_indices(mask: u64, n: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(n);
    idx.push(0);
    for i in 1..n - 1 {
        if mask >> (i - 1) & 1 == 1 {
            idx.push(i);
        }
    }
    idx.push(n - 1);
    idx
}

/// `V_{γ,ρ}` of a grid table (horizontal axis inner, exponent γ).
pub fn mixed_var_table(t: &GridTable, gamma: f64, rho: f64, mode: Mode) -> Result<VariationEstimate> {
    check_exponents(gamma, rho)?;
    let (nh, nv) = (t.h.len(), t.v.len());
    let hd = Dissection { points: t.h.clone() };
    let vd = Dissection { points: t.v.clone() };
    let full_h: Vec<usize> = (0..nh).collect();
    let full_v: Vec<usize> = (0..nv).collect();
    let (value, hs, vs) = match mode {
        Mode::Lower => (power_sum(t, &full_h, &full_v, gamma, rho), full_h, full_v),
        Mode::Exact => {
            if nh > MAX_EXACT || nv > MAX_EXACT {
                return Err(Error::TooLargeForExact { max: MAX_EXACT, got: nh.max(nv) });
            }
            let masks = 1u64 << (nh - 2);
            let (v, mask, vs) = (0..masks)
                .into_par_iter()
                .map(|mask| {
                    let hs = mask_to_indices(mask, nh);
                    let (v, vs) = outer_dp(t, &hs, &full_v, gamma, rho);
                    (v, mask, vs)
                })
                .reduce(
                    || (f64::NEG_INFINITY, u64::MAX, Vec::new()),
                    |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
                );
            (v, mask_to_indices(mask, nh), vs)
        }
        Mode::Greedy => greedy(t, gamma, rho),
    };
    Ok(VariationEstimate {
        value: value.max(0.0).powf(1.0 / rho),
        gamma,
        rho,
        rect: t.rect(),
        mode,
        argmax: Some((hd.select(&hs), vd.select(&vs))),
    })
}

/// Steepest ascent over single-point toggles, horizontal axis first, ties
/// broken by ascending index.
fn greedy(t: &GridTable, gamma: f64, rho: f64) -> (f64, Vec<usize>, Vec<usize>) {
    let (nh, nv) = (t.h.len(), t.v.len());
    let mut in_h = vec![true; nh];
    let mut in_v = vec![true; nv];
    let collect = |mask: &[bool]| -> Vec<usize> { (0..mask.len()).filter(|&i| mask[i]).collect() };
    let mut current = power_sum(t, &collect(&in_h), &collect(&in_v), gamma, rho);
    loop {
        let mut best = (current, None::<(bool, usize)>);
        for axis_h in [true, false] {
            let n = if axis_h { nh } else { nv };
            for i in 1..n - 1 {
                let (mut mh, mut mv) = (in_h.clone(), in_v.clone());
                if axis_h {
                    mh[i] = !mh[i];
                } else {
                    mv[i] = !mv[i];
                }
                let v = power_sum(t, &collect(&mh), &collect(&mv), gamma, rho);
                if v > best.0 * (1.0 + 1e-14) + 1e-300 {
                    best = (v, Some((axis_h, i)));
                }
            }
        }
        match best.1 {
            None => break,
            Some((axis_h, i)) => {
                if axis_h {
                    in_h[i] = !in_h[i];
                } else {
                    in_v[i] = !in_v[i];
                }
                current = best.0;
            }
        }
    }
    (current, collect(&in_h), collect(&in_v))
}

/// `V_{γ,ρ}(R; r)` over the given grids.
pub fn mixed_var(
    m: &CovarianceModel,
    r: &Rectangle,
    grid_h: &Dissection,
    grid_v: &Dissection,
    gamma: f64,
    rho: f64,
    mode: Mode,
) -> Result<VariationEstimate> {
    check_exponents(gamma, rho)?;
    if !grid_h.spans(&r.s) || !grid_v.spans(&r.u) {
        return Err(Error::GridMismatch("grids must start and end at the rectangle corners".into()));
    }
    if mode == Mode::Exact && (grid_h.len() > MAX_EXACT || grid_v.len() > MAX_EXACT) {
        return Err(Error::TooLargeForExact { max: MAX_EXACT, got: grid_h.len().max(grid_v.len()) });
    }
    let t = GridTable::from_model(m, &grid_h.points, &grid_v.points)?;
    let mut est = mixed_var_table(&t, gamma, rho, mode)?;
    est.rect = *r;
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Square,
    U,
    L,
    D,
}

/// Inner horizontal index range for outer cell `[c, d]`.
fn region_range(region: Region, c: usize, d: usize, n: usize) -> (usize, usize) {
    match region {
        Region::Square => (0, n - 1),
        Region::U => (0, c),
        Region::L => (d, n - 1),
        Region::D => (c, d),
    }
}

/// `V⁺_{γ,ρ}` of a square grid table over a region.
pub fn vplus_table(t: &GridTable, region: Region, gamma: f64, rho: f64, mode: Mode) -> Result<VariationEstimate> {
    check_exponents(gamma, rho)?;
    let n = t.v.len();
    if t.h != t.v {
        return Err(Error::GridMismatch("V⁺ needs the same grid on both axes".into()));
    }
    if mode == Mode::Exact && n > MAX_EXACT_PLUS {
        return Err(Error::TooLargeForExact { max: MAX_EXACT_PLUS, got: n });
    }
    let e = rho / gamma;
    // inner value of the outer cell [c,d]
    let inner = |c: usize, d: usize| -> f64 {
        let (lo, hi) = region_range(region, c, d, n);
        if hi <= lo {
            return 0.0;
        }
        match mode {
            Mode::Lower => (lo..hi).map(|a| t.inc(a, a + 1, c, d).abs().powf(gamma)).sum(),
            _ => {
                let m = hi - lo + 1;
                pvar_dp(m, |i, j| t.inc(lo + i, lo + j, c, d).abs().powf(gamma))
            }
        }
    };
    let value = match mode {
        Mode::Lower => (0..n - 1).map(|c| inner(c, c + 1).powf(e)).sum::<f64>(),
        _ => pvar_dp(n, |c, d| inner(c, d).powf(e)),
    };
    Ok(VariationEstimate { value: value.max(0.0).powf(1.0 / rho), gamma, rho, rect: t.rect(), mode, argmax: None })
}

/// `V⁺_{γ,ρ}(R; region of [s,t])`.
pub fn vplus(
    m: &CovarianceModel,
    interval: &Interval,
    region: Region,
    gamma: f64,
    rho: f64,
    grid: &Dissection,
    mode: Mode,
) -> Result<VariationEstimate> {
    if !grid.spans(interval) {
        return Err(Error::GridMismatch("grid must start and end at the interval endpoints".into()));
    }
    let t = GridTable::from_model(m, &grid.points, &grid.points)?;
    vplus_table(&t, region, gamma, rho, mode)
}

/// Constant of the three-way concatenation bound
/// `V⁺(square) ≤ C (V⁺(U) + V⁺(D) + V⁺(L))`.
pub fn concatenation_constant(gamma: f64, rho: f64) -> f64 {
    3f64.powf(1.0 - 1.0 / gamma + (1.0 / gamma - 1.0 / rho).max(0.0))
}

/// Slope of `log V_{γ,ρ}([s, s+L]²)` against `log L`, lower mode, `n`
/// equispaced points per side.
pub fn scaling_fit(m: &CovarianceModel, gamma: f64, rho: f64, squares: &[Interval], n: usize) -> Result<RateFit> {
    if squares.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 squares, got {}", squares.len())));
    }
    let mut pts = Vec::with_capacity(squares.len());
    for sq in squares {
        let g = Dissection::uniform(*sq, n)?;
        let est = mixed_var(m, &Rectangle::square(*sq), &g, &g, gamma, rho, Mode::Lower)?;
        pts.push((sq.len(), est.value, 0.0));
    }
    loglog_fit(&pts)
}

/// `n` nested dyadic squares `[lo, lo + L·2^{-j}]`, `j = 0..n`.
pub fn dyadic_squares(lo: f64, side: f64, n: usize) -> Vec<Interval> {
    (0..n).map(|j| Interval { lo, hi: lo + side / (1u64 << j) as f64 }).collect()
}
