//! Spectral simulation of the fractional stochastic heat equation on
//! `[0, 2π]`, spatial rough path lifts of its slices, and the Monte Carlo
//! rate experiments (Galerkin truncation, hyper-viscosity, time regularity,
//! moment scaling).
//!
//! Every experiment couples the processes it compares: both sides are built
//! from the same mode draws, so distances measure the approximation and not
//! independent noise.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::CoefficientSequence;
use crate::gaussian::{ou_evolve, Mode, PathEnsemble, RngStream, SpectralField, Wave, MAX_COMPONENTS};
use crate::harness::fit::{loglog_fit, RateFit};
use crate::roughpath::{dist_inhomog_on, hnorm, signature, PairSet, PlPath, RoughPathRecord, MAX_LEVEL};

/// Relative standard error above which a Monte Carlo point is unusable.
pub const MAX_REL_SE: f64 = 0.2;

/// Boundary condition and spectrum of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bc {
    /// Modes `sin(kx/2)`, `λ_k = (k/2)^{2α}`.
    Dirichlet,
    /// Modes `1, sin(kx), cos(kx)`, `λ_k = λ + k^{2α}`, noise colored by `k^{-2γ}`.
    Periodic { lambda: f64, color: f64 },
    /// Modes `cos(kx/2)`, `λ_k = (k/2)^{2α} + shift`, `k ≥ 0`.
    Neumann { shift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheConfig {
    pub alpha: f64,
    pub bc: Bc,
    /// Components of the field.
    pub d: usize,
    /// Largest frequency index kept.
    pub n_modes: usize,
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub seed: u64,
}

impl SheConfig {
    /// `x_points` equispaced points on `[0, 2π]`, a single time, `d = 1`.
    pub fn new(alpha: f64, bc: Bc, n_modes: usize, x_points: usize) -> Result<Self> {
        let x_grid = (0..x_points).map(|i| 2.0 * PI * i as f64 / (x_points - 1).max(1) as f64).collect();
        let cfg = SheConfig { alpha, bc, d: 1, n_modes, x_grid, t_grid: vec![0.0], seed: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} not in (1/2,1]", self.alpha)));
        }
        if self.d == 0 || self.d as u64 > MAX_COMPONENTS {
            return Err(Error::InvalidParameter(format!("d = {} out of range", self.d)));
        }
        if self.n_modes == 0 {
            return Err(Error::InvalidParameter("need at least one mode".into()));
        }
        if self.x_grid.len() < 2 || self.x_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("x grid must be strictly increasing with ≥ 2 points".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("t grid must be strictly increasing".into()));
        }
        match self.bc {
            Bc::Periodic { lambda, color } if !(lambda > 0.0 && color >= 0.0) => {
                Err(Error::InvalidParameter("periodic needs λ > 0 and γ ≥ 0".into()))
            }
            Bc::Neumann { shift } if shift <= 0.0 => {
                Err(Error::InvalidParameter("Neumann needs a positive shift".into()))
            }
            _ => Ok(()),
        }
    }

    /// The catalog ρ of the spatial covariance.
    pub fn rho(&self) -> f64 {
        match self.bc {
            Bc::Periodic { color, .. } => {
                let p = 2.0 * self.alpha + 2.0 * color;
                (1.0 / (p - 1.0)).max(1.0)
            }
            _ => 1.0 / (2.0 * self.alpha - 1.0),
        }
    }
}

/// Eigenvalue `(k/2)^{2α}` of the Dirichlet problem on `[0, 2π]`.
pub fn dirichlet_eigenvalue(alpha: f64, k: usize) -> f64 {
    (0.5 * k as f64).powf(2.0 * alpha)
}

/// Stationary modes with unit-variance coefficients: amplitude `√(1/(2λ_k))`
/// (times the noise color) and OU rate `λ_k`.
pub fn she_field(cfg: &SheConfig) -> SpectralField {
    field_with(cfg, |k| match cfg.bc {
        Bc::Dirichlet => dirichlet_eigenvalue(cfg.alpha, k),
        Bc::Neumann { shift } => dirichlet_eigenvalue(cfg.alpha, k) + shift,
        Bc::Periodic { lambda, .. } => lambda + (k as f64).powf(2.0 * cfg.alpha),
    })
}

fn field_with<F: Fn(usize) -> f64>(cfg: &SheConfig, rate: F) -> SpectralField {
    let n = cfg.n_modes;
    let mut modes = Vec::with_capacity(2 * n + 1);
    match cfg.bc {
        Bc::Dirichlet => {
            for k in 1..=n {
                let l = rate(k);
                modes.push(Mode { k, amplitude: (0.5 / l).sqrt(), wave: Wave::Sin(0.5 * k as f64), rate: l });
            }
        }
        Bc::Neumann { .. } => {
            for k in 0..=n {
                let l = rate(k);
                let wave = if k == 0 { Wave::Const } else { Wave::Cos(0.5 * k as f64) };
                modes.push(Mode { k, amplitude: (0.5 / l).sqrt(), wave, rate: l });
            }
        }
        Bc::Periodic { color, .. } => {
            let l0 = rate(0);
            modes.push(Mode { k: 0, amplitude: 0.5 * (0.5 / l0).sqrt(), wave: Wave::Const, rate: l0 });
            for k in 1..=n {
                let l = rate(k);
                let amp = ((k as f64).powf(-2.0 * color) * 0.5 / l).sqrt();
                modes.push(Mode { k, amplitude: amp, wave: Wave::Sin(k as f64), rate: l });
                modes.push(Mode { k, amplitude: amp, wave: Wave::Cos(k as f64), rate: l });
            }
        }
    }
    SpectralField { modes }
}

/// Draws the stationary mode coefficients of every `(path, component)`.
fn draw_modes(seed: u64, purpose: &str, nm: usize, p: usize, c: usize) -> Vec<f64> {
    let mut rng = RngStream::for_path(seed, purpose, p, c);
    let mut y = vec![0.0; nm];
    rng.fill_normal(&mut y);
    y
}

fn ensemble(cfg: &SheConfig, paths: usize, data: Vec<f64>, tag: &str) -> PathEnsemble {
    PathEnsemble { grid: cfg.x_grid.clone(), d: cfg.d, m: paths, data, seed: cfg.seed, model: tag.to_string() }
}

/// `Ψ(0, ·)` from stationary modes, `paths` independent draws.
pub fn she_stationary_slice(cfg: &SheConfig, paths: usize) -> Result<PathEnsemble> {
    cfg.validate()?;
    let field = she_field(cfg);
    let basis = field.basis(&cfg.x_grid);
    let nm = field.modes.len();
    let ng = cfg.x_grid.len();
    let blocks: Vec<Vec<f64>> = (0..paths * cfg.d)
        .into_par_iter()
        .map(|idx| {
            let y = draw_modes(cfg.seed, "she", nm, idx / cfg.d, idx % cfg.d);
            let mut out = vec![0.0; ng];
            field.synthesize(&basis, &y, nm, &mut out);
            out
        })
        .collect();
    Ok(ensemble(cfg, paths, blocks.concat(), &format!("she(alpha={})", cfg.alpha)))
}

/// Slices at every time of `cfg.t_grid`, evolved by exact OU transitions of
/// the modes. Time 0 agrees with [`she_stationary_slice`].
pub fn she_evolve(cfg: &SheConfig, paths: usize) -> Result<Vec<PathEnsemble>> {
    cfg.validate()?;
    let field = she_field(cfg);
    let basis = field.basis(&cfg.x_grid);
    let nm = field.modes.len();
    let ng = cfg.x_grid.len();
    let rates: Vec<f64> = field.modes.iter().map(|m| m.rate).collect();
    let nt = cfg.t_grid.len();
    // per (path, component): one block of nt slices
    let blocks: Vec<Result<Vec<Vec<f64>>>> = (0..paths * cfg.d)
        .into_par_iter()
        .map(|idx| {
            let (p, c) = (idx / cfg.d, idx % cfg.d);
            let mut y = DMatrix::from_vec(nm, 1, draw_modes(cfg.seed, "she", nm, p, c));
            let mut rng = RngStream::for_path(cfg.seed, "she-time", p, c);
            let mut slices = Vec::with_capacity(nt);
            for ti in 0..nt {
                if ti > 0 {
                    y = ou_evolve(&rates, &y, cfg.t_grid[ti] - cfg.t_grid[ti - 1], &mut rng)?;
                }
                let mut out = vec![0.0; ng];
                field.synthesize(&basis, y.as_slice(), nm, &mut out);
                slices.push(out);
            }
            Ok(slices)
        })
        .collect();
    let blocks: Vec<Vec<Vec<f64>>> = blocks.into_iter().collect::<Result<_>>()?;
    Ok((0..nt)
        .map(|ti| {
            let data = blocks.iter().flat_map(|b| b[ti].iter().copied()).collect();
            ensemble(cfg, paths, data, &format!("she(alpha={},t={})", cfg.alpha, cfg.t_grid[ti]))
        })
        .collect())
}

/// `sup_x E|Ψ(t+τ,x) − Ψ(t,x)|²` over the spatial grid, in closed form.
pub fn temporal_increment_variance(cfg: &SheConfig, tau: f64) -> f64 {
    let field = she_field(cfg);
    cfg.x_grid
        .iter()
        .map(|&x| {
            field
                .modes
                .iter()
                .map(|m| {
                    let w = m.amplitude * m.wave.at(x);
                    2.0 * w * w * -(-m.rate * tau).exp_m1()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Level-`level` lift of path `p` of a spatial slice. The theory needs
/// `α > 3/4`; smaller `α` is still computed.
pub fn she_lift(slice: &PathEnsemble, p: usize, level: usize, beta: f64) -> Result<RoughPathRecord> {
    if p >= slice.m {
        return Err(Error::InvalidParameter(format!("path {p} out of {}", slice.m)));
    }
    let mut rec = signature(&slice.pl_path(p), level)?;
    rec.beta = Some(beta);
    Ok(rec)
}

/// Monte Carlo budget and the metric used by the rate experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    pub level: usize,
    pub beta: f64,
    /// Moment `q` of `E[ρ^q]^{1/q}`.
    pub q: f64,
    pub pairs: PairSet,
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::InvalidParameter("need at least 2 Monte Carlo paths".into()));
        }
        if self.level == 0 || self.level > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!("level must be in 1..={MAX_LEVEL}")));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) || self.q < 1.0 {
            return Err(Error::InvalidParameter("need β ∈ (0,1) and q ≥ 1".into()));
        }
        Ok(())
    }
}

/// `E[ρ^q]^{1/q}` at one abscissa with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub x: f64,
    pub value: f64,
    pub se: f64,
}

impl RatePoint {
    pub fn rel_se(&self) -> f64 {
        if self.value > 0.0 {
            self.se / self.value
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperiment {
    pub points: Vec<RatePoint>,
    /// Points left out of the fit for excessive noise.
    pub dropped: Vec<RatePoint>,
    pub fit: RateFit,
}

/// Moment estimate from per-path samples of `ρ`.
fn moment_point(x: f64, samples: &[f64], q: f64) -> RatePoint {
    let m = samples.len() as f64;
    let pw: Vec<f64> = samples.iter().map(|r| r.powf(q)).collect();
    let mean = pw.iter().sum::<f64>() / m;
    let var = pw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    let value = mean.powf(1.0 / q);
    let se = if mean > 0.0 { value / (q * mean) * (var / m).sqrt() } else { 0.0 };
    RatePoint { x, value, se }
}

/// Drops noisy points at the end named by `drop_last` (the largest `N` or
/// the smallest lag) and fits the rest. Noise anywhere else is an error.
fn fit_points(mut pts: Vec<RatePoint>, drop_from_end: bool) -> Result<RateExperiment> {
    let mut dropped = Vec::new();
    loop {
        let idx = if drop_from_end { pts.len().checked_sub(1) } else { (!pts.is_empty()).then_some(0) };
        match idx {
            Some(i) if pts[i].rel_se() > MAX_REL_SE => dropped.push(pts.remove(i)),
            _ => break,
        }
    }
    if let Some(bad) = pts.iter().find(|p| p.rel_se() > MAX_REL_SE) {
        return Err(Error::McNoiseDominates { x: bad.x, rel_se: bad.rel_se() });
    }
    if pts.len() < 4 {
        let worst = dropped.first().copied().unwrap_or(RatePoint { x: f64::NAN, value: 0.0, se: 0.0 });
        return Err(Error::McNoiseDominates { x: worst.x, rel_se: worst.rel_se() });
    }
    let fit = loglog_fit(&pts.iter().map(|p| (p.x, p.value, p.se)).collect::<Vec<_>>())?;
    Ok(RateExperiment { points: pts, dropped, fit })
}

fn lift_values(grid: &[f64], d: usize, comps: &[&[f64]], level: usize) -> Result<RoughPathRecord> {
    let n = grid.len();
    let mut values = Vec::with_capacity(n * d);
    for i in 0..n {
        for c in comps {
            values.push(c[i]);
        }
    }
    signature(&PlPath::new(grid.to_vec(), d, values)?, level)
}

/// Coupled truncation experiment: for each cutoff `k` in `cutoffs`, the
/// inhomogeneous β-Hölder distance between the lift of the full field and
/// the lift of its modes with index `≤ k`. The fit is distance against `k`;
/// its slope is minus the rate.
pub fn truncation_rate(
    field: &SpectralField,
    grid: &[f64],
    d: usize,
    cutoffs: &[usize],
    mc: &McConfig,
) -> Result<RateExperiment> {
    mc.validate()?;
    if cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("cutoffs must be increasing".into()));
    }
    let nm = field.modes.len();
    let mut counts: Vec<usize> = cutoffs.iter().map(|&k| field.modes_up_to(k)).collect();
    counts.push(nm);
    let basis = field.basis(grid);
    let ng = grid.len();
    let per_path: Vec<Result<Vec<f64>>> = (0..mc.paths)
        .into_par_iter()
        .map(|p| {
            // out[comp][cutoff][grid]
            let mut out = vec![vec![vec![0.0; ng]; counts.len()]; d];
            for (c, o) in out.iter_mut().enumerate() {
                let y = draw_modes(mc.seed, "she-trunc", nm, p, c);
                field.synthesize_prefixes(&basis, &y, &counts, o);
            }
            let full_comps: Vec<&[f64]> = out.iter().map(|o| o[counts.len() - 1].as_slice()).collect();
            let full = lift_values(grid, d, &full_comps, mc.level)?;
            (0..cutoffs.len())
                .map(|j| {
                    if counts[j] == nm {
                        return Ok(0.0);
                    }
                    let comps: Vec<&[f64]> = out.iter().map(|o| o[j].as_slice()).collect();
                    let trunc = lift_values(grid, d, &comps, mc.level)?;
                    dist_inhomog_on(&full, &trunc, mc.beta, mc.pairs)
                })
                .collect()
        })
        .collect();
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;
    let pts = (0..cutoffs.len())
        .map(|j| {
            let s: Vec<f64> = per_path.iter().map(|v| v[j]).collect();
            moment_point(cutoffs[j] as f64, &s, mc.q)
        })
        .collect();
    fit_points(pts, true)
}

/// Galerkin truncation rate of the SHE spatial lift: cutoffs `N` against
/// the `cfg.n_modes` field.
pub fn galerkin_rate(cfg: &SheConfig, n_list: &[usize], mc: &McConfig) -> Result<RateExperiment> {
    cfg.validate()?;
    truncation_rate(&she_field(cfg), &cfg.x_grid, cfg.d, n_list, mc)
}

/// Truncation rate of a random Fourier series lift, full series cut at `n_full`.
pub fn rfs_truncation_rate(
    a: &CoefficientSequence,
    n_full: usize,
    grid: &[f64],
    d: usize,
    cutoffs: &[usize],
    mc: &McConfig,
) -> Result<RateExperiment> {
    truncation_rate(&SpectralField::rfs(a, n_full), grid, d, cutoffs, mc)
}

/// `2√(λλ^ε)/(λ+λ^ε)`: correlation of two stationary OU coefficients
/// driven by the same Brownian motion.
pub fn hyperviscosity_correlation(lambda: f64, lambda_eps: f64) -> f64 {
    2.0 * (lambda * lambda_eps).sqrt() / (lambda + lambda_eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperviscosityExperiment {
    /// Distance per ε, in the order given.
    pub points: Vec<RatePoint>,
    /// Whether distances strictly decrease as ε decreases.
    pub monotone: bool,
    /// Fit of distance against ε over the positive ε, when ≥ 4 remain.
    pub fit: Option<RateFit>,
}

/// Coupled distance between `Ψ` and the hyper-viscous `Ψ^ε` with
/// `λ_k^ε = λ_k + ε(k/2)^{2θ}` and coefficients `Y^ε = ϱY + √(1−ϱ²)Z`.
pub fn hyperviscosity_rate(
    cfg: &SheConfig,
    theta: f64,
    eps_list: &[f64],
    mc: &McConfig,
) -> Result<HyperviscosityExperiment> {
    cfg.validate()?;
    mc.validate()?;
    if theta <= cfg.alpha {
        return Err(Error::InvalidParameter(format!("need θ > α, got θ = {theta}")));
    }
    if eps_list.iter().any(|e| *e < 0.0) {
        return Err(Error::InvalidParameter("ε must be nonnegative".into()));
    }
    let base = she_field(cfg);
    let nm = base.modes.len();
    let fields: Vec<(SpectralField, Vec<f64>)> = eps_list
        .iter()
        .map(|&eps| {
            let mut f = base.clone();
            let mut corr = vec![1.0; nm];
            for (m, r) in f.modes.iter_mut().zip(corr.iter_mut()) {
                let extra = eps * (0.5 * m.k as f64).powf(2.0 * theta);
                let le = m.rate + extra;
                *r = hyperviscosity_correlation(m.rate, le);
                m.amplitude *= (m.rate / le).sqrt();
                m.rate = le;
            }
            (f, corr)
        })
        .collect();
    let grid = &cfg.x_grid;
    let ng = grid.len();
    let d = cfg.d;
    let b0 = base.basis(grid);
    let bases: Vec<Vec<f64>> = fields.iter().map(|(f, _)| f.basis(grid)).collect();
    let per_path: Vec<Result<Vec<f64>>> = (0..mc.paths)
        .into_par_iter()
        .map(|p| {
            let ys: Vec<Vec<f64>> = (0..d).map(|c| draw_modes(mc.seed, "she-hv-y", nm, p, c)).collect();
            let zs: Vec<Vec<f64>> = (0..d).map(|c| draw_modes(mc.seed, "she-hv-z", nm, p, c)).collect();
            let mut psi = vec![vec![0.0; ng]; d];
            for c in 0..d {
                base.synthesize(&b0, &ys[c], nm, &mut psi[c]);
            }
            let refs: Vec<&[f64]> = psi.iter().map(|v| v.as_slice()).collect();
            let x = lift_values(grid, d, &refs, mc.level)?;
            fields
                .iter()
                .zip(&bases)
                .map(|((f, corr), b)| {
                    let mut pe = vec![vec![0.0; ng]; d];
                    for c in 0..d {
                        let ye: Vec<f64> = (0..nm)
                            .map(|j| corr[j] * ys[c][j] + (1.0 - corr[j] * corr[j]).max(0.0).sqrt() * zs[c][j])
                            .collect();
                        f.synthesize(b, &ye, nm, &mut pe[c]);
                    }
                    let refs: Vec<&[f64]> = pe.iter().map(|v| v.as_slice()).collect();
                    let y = lift_values(grid, d, &refs, mc.level)?;
                    dist_inhomog_on(&x, &y, mc.beta, mc.pairs)
                })
                .collect()
        })
        .collect();
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;
    let points: Vec<RatePoint> = eps_list
        .iter()
        .enumerate()
        .map(|(j, &e)| moment_point(e, &per_path.iter().map(|v| v[j]).collect::<Vec<_>>(), mc.q))
        .collect();
    let mut by_eps = points.clone();
    by_eps.sort_by(|a, b| a.x.total_cmp(&b.x));
    let monotone = by_eps.windows(2).all(|w| w[0].value < w[1].value);
    let pos: Vec<(f64, f64, f64)> = by_eps.iter().filter(|p| p.x > 0.0).map(|p| (p.x, p.value, p.se)).collect();
    let fit = if pos.len() >= 4 { loglog_fit(&pos).ok() } else { None };
    Ok(HyperviscosityExperiment { points, monotone, fit })
}

/// Distance between spatial lifts at times `s` and `s + τ` for each `τ` in
/// `lags`, coupled through the exact OU transition. The fit is distance
/// against `τ`.
pub fn time_regularity_probe(cfg: &SheConfig, lags: &[f64], mc: &McConfig) -> Result<RateExperiment> {
    cfg.validate()?;
    mc.validate()?;
    if lags.iter().any(|t| *t < 0.0) {
        return Err(Error::InvalidParameter("time lags must be nonnegative".into()));
    }
    let field = she_field(cfg);
    let nm = field.modes.len();
    let basis = field.basis(&cfg.x_grid);
    let rates: Vec<f64> = field.modes.iter().map(|m| m.rate).collect();
    let grid = &cfg.x_grid;
    let ng = grid.len();
    let d = cfg.d;
    let per_path: Vec<Result<Vec<f64>>> = (0..mc.paths)
        .into_par_iter()
        .map(|p| {
            let y0: Vec<DMatrix<f64>> =
                (0..d).map(|c| DMatrix::from_vec(nm, 1, draw_modes(mc.seed, "she-time-y", nm, p, c))).collect();
            let mut psi = vec![vec![0.0; ng]; d];
            for c in 0..d {
                field.synthesize(&basis, y0[c].as_slice(), nm, &mut psi[c]);
            }
            let refs: Vec<&[f64]> = psi.iter().map(|v| v.as_slice()).collect();
            let x = lift_values(grid, d, &refs, mc.level)?;
            lags.iter()
                .enumerate()
                .map(|(j, &tau)| {
                    let mut pt = vec![vec![0.0; ng]; d];
                    for c in 0..d {
                        let mut rng = RngStream::new(mc.seed, "she-time-step", ((p * d + c) * lags.len() + j) as u64);
                        let y = ou_evolve(&rates, &y0[c], tau, &mut rng)?;
                        field.synthesize(&basis, y.as_slice(), nm, &mut pt[c]);
                    }
                    let refs: Vec<&[f64]> = pt.iter().map(|v| v.as_slice()).collect();
                    let y = lift_values(grid, d, &refs, mc.level)?;
                    dist_inhomog_on(&x, &y, mc.beta, mc.pairs)
                })
                .collect()
        })
        .collect();
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;
    let pts = lags
        .iter()
        .enumerate()
        .map(|(j, &tau)| moment_point(tau, &per_path.iter().map(|v| v[j]).collect::<Vec<_>>(), mc.q))
        .collect();
    fit_points(pts, false)
}

/// `E hnorm(X_{s,s+h})²` for lags `h = lag·Δx` in grid steps, averaged over
/// all start points of each path. The fit is against `h`; for a field of
/// regularity `1/(2ρ)` the slope is `1/ρ`.
pub fn moment_scaling(
    field: &SpectralField,
    grid: &[f64],
    d: usize,
    lags: &[usize],
    mc: &McConfig,
) -> Result<RateExperiment> {
    mc.validate()?;
    let ng = grid.len();
    if lags.iter().any(|&l| l == 0 || l >= ng) {
        return Err(Error::InvalidParameter("lags must lie in 1..grid length".into()));
    }
    let nm = field.modes.len();
    let basis = field.basis(grid);
    let per_path: Vec<Result<Vec<f64>>> = (0..mc.paths)
        .into_par_iter()
        .map(|p| {
            let mut psi = vec![vec![0.0; ng]; d];
            for (c, out) in psi.iter_mut().enumerate() {
                let y = draw_modes(mc.seed, "she-moment", nm, p, c);
                field.synthesize(&basis, &y, nm, out);
            }
            let refs: Vec<&[f64]> = psi.iter().map(|v| v.as_slice()).collect();
            let x = lift_values(grid, d, &refs, mc.level)?;
            let inv: Vec<_> = x.elements.iter().map(|g| g.inverse()).collect();
            Ok(lags
                .iter()
                .map(|&l| {
                    let n = ng - l;
                    (0..n).map(|s| hnorm(&inv[s].mul(&x.elements[s + l]).expect("same shape")).powi(2)).sum::<f64>()
                        / n as f64
                })
                .collect())
        })
        .collect();
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;
    let dx = (grid[ng - 1] - grid[0]) / (ng - 1) as f64;
    let pts = lags
        .iter()
        .enumerate()
        .map(|(j, &l)| moment_point(l as f64 * dx, &per_path.iter().map(|v| v[j]).collect::<Vec<_>>(), 1.0))
        .collect();
    fit_points(pts, false)
}
