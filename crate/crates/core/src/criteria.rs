//! Numerical checkers for the hypotheses of the main theorem, the
//! Jain–Monrad condition, Part A / Part B routing and the CHLT hypotheses.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, Interval, ModelKind, Rectangle};
use crate::error::{Error, Result};
use crate::fourier::spectral_sigma2;
use crate::gaussian::{conditional_variance_cells, increment_cov};
use crate::variation::{mixed_var, scaling_fit, Dissection, GridTable, Mode};

/// Tolerance for sign conditions on rectangular increments.
pub const SIGN_TOL: f64 = 1e-10;
/// Successive refinements may grow the JM constant by at most this factor.
pub const JM_RATIO: f64 = 1.1;
/// μ± is flagged divergent when the finest estimate exceeds the coarsest by this factor.
pub const MASS_RATIO: f64 = 1.5;
/// Masses below this are treated as zero by the divergence detector.
pub const MASS_FLOOR: f64 = 1e-9;
/// Allowed distance of a fitted slope from `1/ρ`.
pub const SLOPE_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Passed on every checked point; the underlying statement is asymptotic.
    CheckedUpTo,
    /// Not numerically decidable, assumed for catalog kinds.
    Assumed,
}

/// One verdict with the evidence and the resolution it was computed at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub value: f64,
    pub grid: usize,
    pub tol: f64,
    pub detail: String,
}

impl Verdict {
    fn new(ok: bool, value: f64, grid: usize, tol: f64, detail: impl Into<String>) -> Self {
        Verdict { status: if ok { Status::Pass } else { Status::Fail }, value, grid, tol, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "snake_case")]
pub enum Route {
    PartA,
    PartB { rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub model: String,
    pub route: Option<Route>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub rho_used: f64,
    pub jm_constant: f64,
    pub h_detected: f64,
    pub mu_plus_mass: f64,
    pub mu_minus_mass: f64,
    pub mu_plus_diverges: bool,
    pub mu_minus_diverges: bool,
    /// Left derivative `F′₋(T)` for CHLT reports.
    pub f_prime_minus: Option<f64>,
}

impl ConditionReport {
    fn empty(m: &CovarianceModel) -> Self {
        ConditionReport {
            model: m.tag(),
            route: None,
            verdicts: BTreeMap::new(),
            rho_used: m.nominal_rho,
            jm_constant: f64::NAN,
            h_detected: 0.0,
            mu_plus_mass: f64::NAN,
            mu_minus_mass: f64::NAN,
            mu_plus_diverges: false,
            mu_minus_diverges: false,
            f_prime_minus: None,
        }
    }

    /// Every verdict passed (or is assumed / checked up to a cutoff).
    pub fn pass(&self) -> bool {
        self.verdicts.values().all(Verdict::passed)
    }
}

/// Models with `σ²(s,t) = F(|t−s|)`.
pub fn has_stationary_increments(m: &CovarianceModel) -> bool {
    matches!(m.kind, ModelKind::Fbm { .. } | ModelKind::StationaryF(_)) || m.is_stationary()
}

/// `F(x) = σ²(lo, lo + x)` for stationary-increment models, valid beyond
/// the domain where the formula extends.
pub fn increment_variance(m: &CovarianceModel, x: f64) -> Result<f64> {
    let x = x.abs();
    match &m.kind {
        ModelKind::Fbm { hurst } => Ok(x.powf(2.0 * hurst)),
        ModelKind::StationaryF(f) => Ok(f.eval(x)),
        ModelKind::Ou { lambda } => Ok(-2.0 * (-lambda * x).exp_m1()),
        ModelKind::FractionalOu { density, .. } | ModelKind::Spectral(density) => spectral_sigma2(density, x),
        _ if m.is_stationary() => {
            let o = m.domain.lo;
            Ok(2.0 * (m.eval_unchecked(o, o)? - m.eval_unchecked(o, o + x)?))
        }
        _ => Err(Error::NotStationary(m.tag())),
    }
}

/// `σ²(g_i, g_j)` for all grid pairs, one evaluation per lag when possible.
fn sigma2_table(m: &CovarianceModel, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = grid.len();
    let mut out = vec![vec![0.0; n]; n];
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let uniform = grid.iter().enumerate().all(|(i, x)| (x - grid[0] - i as f64 * h).abs() <= 1e-12 * (1.0 + x.abs()));
    if uniform && has_stationary_increments(m) {
        let lag: Vec<f64> = (0..n).map(|k| increment_variance(m, grid[k] - grid[0])).collect::<Result<_>>()?;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = lag[i.abs_diff(j)];
            }
        }
        return Ok(out);
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = m.sigma2(grid[i], grid[j])?;
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JmCheck {
    /// `(grid points, C)` per refinement.
    pub constants: Vec<(usize, f64)>,
    pub c: f64,
    pub pass: bool,
}

/// `C = max σ²(s,t)/(t−s)^{1/ρ}` over grid pairs, on `n`, `2n−1` and `4n−3`
/// points; passes when `C` is finite and grows by at most [`JM_RATIO`] per
/// refinement.
pub fn jm_check(m: &CovarianceModel, rho: f64, n: usize) -> Result<JmCheck> {
    if rho < 1.0 {
        return Err(Error::BadExponent(format!("rho = {rho} < 1")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("jm_check needs at least 2 grid points".into()));
    }
    let mut constants = Vec::new();
    for pts in [n, 2 * n - 1, 4 * n - 3] {
        let grid = m.domain.linspace(pts);
        let s2 = sigma2_table(m, &grid)?;
        let mut c: f64 = 0.0;
        for i in 0..pts {
            for j in i + 1..pts {
                c = c.max(s2[i][j] / (grid[j] - grid[i]).powf(1.0 / rho));
            }
        }
        constants.push((pts, c));
    }
    let finite = constants.iter().all(|(_, c)| c.is_finite());
    let stable = constants.windows(2).all(|w| w[1].1 <= JM_RATIO * w[0].1 + 1e-15);
    let c = constants.last().map(|x| x.1).unwrap_or(f64::NAN);
    Ok(JmCheck { constants, c, pass: finite && stable })
}

/// Largest candidate `h` for which every `2R([s,t]×[u,v])` with
/// `[u,v] ⊆ [s,t]`, `t−s ≤ h`, is `≥ −1e−10` on an `n`-point grid.
/// Returns 0 when no candidate passes.
pub fn sign_check_b2(m: &CovarianceModel, n: usize, h_candidates: &[f64]) -> Result<f64> {
    let grid = m.domain.linspace(n.max(2));
    let s2 = sigma2_table(m, &grid)?;
    // smallest span with a violation
    let mut worst = f64::INFINITY;
    for s in 0..grid.len() {
        for t in s + 1..grid.len() {
            let span = grid[t] - grid[s];
            if span >= worst {
                break;
            }
            'inner: for u in s..t {
                for v in u + 1..=t {
                    let q = s2[s][v] - s2[s][u] + s2[u][t] - s2[v][t];
                    if q < -SIGN_TOL {
                        worst = span;
                        break 'inner;
                    }
                }
            }
        }
    }
    Ok(h_candidates.iter().copied().filter(|&h| h < worst - 1e-12).fold(0.0, f64::max))
}

/// Dyadic fractions of the domain length, largest first.
pub fn dyadic_candidates(m: &CovarianceModel, levels: usize) -> Vec<f64> {
    (0..levels).map(|j| m.domain.len() / (1u64 << j) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassEstimates {
    /// `(cells, μ₊, μ₋)` per refinement.
    pub trend: Vec<(usize, f64, f64)>,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub mu_plus_diverges: bool,
    pub mu_minus_diverges: bool,
}

fn off_diagonal_masses(t: &GridTable, lo: usize, hi: usize) -> (f64, f64) {
    let (mut plus, mut minus) = (0.0, 0.0);
    for a in lo..hi {
        for b in lo..hi {
            if a == b {
                continue;
            }
            let x = t.inc(a, a + 1, b, b + 1);
            if x > 0.0 {
                plus += x;
            } else {
                minus -= x;
            }
        }
    }
    (plus, minus)
}

/// Off-diagonal positive and negative rectangle mass on `n`, `2n`, `4n`, `8n`
/// cells, with a divergence flag when the finest exceeds the coarsest by
/// more than [`MASS_RATIO`].
pub fn mass_estimates(m: &CovarianceModel, n: usize) -> Result<MassEstimates> {
    let mut trend = Vec::new();
    for cells in [n, 2 * n, 4 * n, 8 * n] {
        let g = m.domain.linspace(cells + 1);
        let t = GridTable::from_model(m, &g, &g)?;
        let (p, q) = off_diagonal_masses(&t, 0, cells);
        trend.push((cells, p, q));
    }
    let diverges = |first: f64, last: f64| last > MASS_FLOOR && last > MASS_RATIO * first;
    let (f, l) = (trend[0], trend[trend.len() - 1]);
    Ok(MassEstimates {
        mu_plus: l.1,
        mu_minus: l.2,
        mu_plus_diverges: diverges(f.1, l.1),
        mu_minus_diverges: diverges(f.2, l.2),
        trend,
    })
}

/// Catalog routing: Part A or Part B with its ρ.
pub fn route(m: &CovarianceModel) -> Result<Route> {
    let b_or_a = |rho: f64| if rho > 1.0 { Route::PartB { rho } } else { Route::PartA };
    Ok(match &m.kind {
        ModelKind::Fbm { hurst } | ModelKind::FractionalOu { hurst, .. } => b_or_a(1.0 / (2.0 * hurst)),
        ModelKind::BiFbm { hurst, k } => b_or_a(1.0 / (2.0 * hurst * k)),
        ModelKind::BrownianBridge { .. } | ModelKind::Ou { .. } => Route::PartA,
        ModelKind::StationaryF(f) => match f.meta {
            Some(meta) if meta.exponent > 0.0 => b_or_a(1.0 / meta.exponent),
            _ => return Err(Error::UnknownKind(format!("{} carries no monotonicity metadata", m.tag()))),
        },
        ModelKind::Rfs(_) | ModelKind::SheDirichlet { .. } | ModelKind::ShePeriodic { .. } => {
            Route::PartB { rho: m.nominal_rho }
        }
        ModelKind::Spectral(_) => b_or_a(m.nominal_rho),
    })
}

/// Resolution knobs for [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub jm_points: usize,
    pub sign_points: usize,
    pub mass_cells: usize,
    pub fit_points: usize,
    pub fit_squares: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { jm_points: 33, sign_points: 33, mass_cells: 16, fit_points: 33, fit_squares: 5 }
    }
}

/// Routes a model and attaches the numerical evidence for its conditions.
pub fn classify(m: &CovarianceModel, opts: &ClassifyOptions) -> Result<ConditionReport> {
    let route = route(m)?;
    let mut rep = ConditionReport::empty(m);
    rep.route = Some(route);
    let rho = match route {
        Route::PartA => 1.0,
        Route::PartB { rho } => rho,
    };
    rep.rho_used = rho;

    let mass = mass_estimates(m, opts.mass_cells)?;
    rep.mu_plus_mass = mass.mu_plus;
    rep.mu_minus_mass = mass.mu_minus;
    rep.mu_plus_diverges = mass.mu_plus_diverges;
    rep.mu_minus_diverges = mass.mu_minus_diverges;
    let cells = 8 * opts.mass_cells;
    let cont = Verdict {
        status: Status::Assumed,
        value: f64::NAN,
        grid: cells,
        tol: 0.0,
        detail: "continuous distribution function: assumed".into(),
    };

    let candidates = dyadic_candidates(m, 8);
    rep.h_detected = sign_check_b2(m, opts.sign_points, &candidates)?;

    match route {
        Route::PartA => {
            rep.verdicts.insert(
                "A.i".into(),
                Verdict::new(!mass.mu_minus_diverges, mass.mu_minus, cells, MASS_RATIO, "mu_minus finite mass"),
            );
            rep.verdicts.insert("A.i.continuity".into(), cont);
            let grid = m.domain.linspace(opts.sign_points);
            let s2 = sigma2_table(m, &grid)?;
            let min = s2.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            rep.verdicts.insert(
                "A.ii".into(),
                Verdict::new(min >= -SIGN_TOL, min, opts.sign_points, SIGN_TOL, "min sigma^2 near the diagonal"),
            );
            let jm = jm_check(m, 1.0, opts.jm_points)?;
            rep.jm_constant = jm.c;
            // V₁ on squares against R(square) + 2μ₋(square) at the same grid
            let mut worst = f64::NEG_INFINITY;
            for sq in fit_squares(m, opts.fit_squares) {
                let g = sq.linspace(opts.fit_points);
                let d = Dissection::new(g.clone())?;
                let v1 = mixed_var(m, &Rectangle::square(sq), &d, &d, 1.0, 1.0, Mode::Lower)?.value;
                let t = GridTable::from_model(m, &g, &g)?;
                let (_, minus) = off_diagonal_masses(&t, 0, g.len() - 1);
                let bound = m.sigma2(sq.lo, sq.hi)? + 2.0 * minus + 1e-8;
                worst = worst.max(v1 - bound);
            }
            rep.verdicts.insert(
                "part_a_estimate".into(),
                Verdict::new(worst <= 0.0, worst, opts.fit_points, 1e-8, "max of V1 - (sigma^2 + 2 mu_minus)"),
            );
        }
        Route::PartB { rho } => {
            rep.verdicts.insert(
                "B.i".into(),
                Verdict::new(!mass.mu_plus_diverges, mass.mu_plus, cells, MASS_RATIO, "mu_plus finite mass"),
            );
            rep.verdicts.insert("B.i.continuity".into(), cont);
            rep.verdicts.insert(
                "B.ii".into(),
                Verdict::new(rep.h_detected > 0.0, rep.h_detected, opts.sign_points, SIGN_TOL, "largest dyadic h"),
            );
            let jm = jm_check(m, rho, opts.jm_points)?;
            rep.jm_constant = jm.c;
            rep.verdicts.insert(
                "B.iii".into(),
                Verdict::new(jm.pass, jm.c, 4 * opts.jm_points - 3, JM_RATIO, "(JM) constant, omega = C(t-s)"),
            );
            let fit = scaling_fit(m, 1.0, rho, &fit_squares(m, opts.fit_squares), opts.fit_points)?;
            let dev = (fit.slope - 1.0 / rho).abs();
            rep.verdicts.insert(
                "on_diagonal_estimate".into(),
                Verdict::new(
                    dev <= SLOPE_TOL,
                    fit.slope,
                    opts.fit_points,
                    SLOPE_TOL,
                    format!("slope of V_(1,rho) on dyadic squares vs 1/rho = {}", 1.0 / rho),
                ),
            );
        }
    }
    Ok(rep)
}

/// Nested dyadic squares `[c, c + L/2^j]` centred away from the boundary.
fn fit_squares(m: &CovarianceModel, count: usize) -> Vec<Interval> {
    let len = m.domain.len();
    crate::variation::dyadic_squares(m.domain.lo + 0.25 * len, 0.5 * len, count)
}

/// Resolution knobs for [`chlt_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChltOptions {
    pub grid_points: usize,
    pub concavity_points: usize,
    pub tol: f64,
}

impl Default for ChltOptions {
    fn default() -> Self {
        ChltOptions { grid_points: 64, concavity_points: 256, tol: 1e-9 }
    }
}

/// `F′₋(T)` bounded below by the forward difference at scale `T/2¹⁰`.
pub fn left_derivative_lower(m: &CovarianceModel, horizon: f64) -> Result<f64> {
    let h = horizon / 1024.0;
    Ok((increment_variance(m, horizon + h)? - increment_variance(m, horizon)?) / h)
}

/// The checkable CHLT hypotheses on `[lo, lo + T]`:
/// (i) concavity of `F`, (ii) `F′₋(T) > 0`, (iii) the conditional variance
/// lower bounds and (iv) non-positive correlation of disjoint increments.
pub fn chlt_check(m: &CovarianceModel, horizon: f64, opts: &ChltOptions) -> Result<ConditionReport> {
    if !has_stationary_increments(m) {
        return Err(Error::NotStationary(m.tag()));
    }
    if !(horizon > 0.0 && horizon <= m.domain.len() * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must lie in (0, {}]", m.domain.len())));
    }
    let mut rep = ConditionReport::empty(m);
    let tol = opts.tol;

    let nc = opts.concavity_points.max(3);
    let step = horizon / (nc - 1) as f64;
    let f: Vec<f64> = (0..nc).map(|i| increment_variance(m, i as f64 * step)).collect::<Result<_>>()?;
    let max_d2 = f.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).fold(f64::NEG_INFINITY, f64::max);
    rep.verdicts
        .insert("chlt.i_concave".into(), Verdict::new(max_d2 <= tol, max_d2, nc, tol, "max second difference of F"));

    let dfm = left_derivative_lower(m, horizon)?;
    rep.f_prime_minus = Some(dfm);
    rep.verdicts
        .insert("chlt.ii_derivative".into(), Verdict::new(dfm > 0.0, dfm, 1024, 0.0, "forward difference at T/1024"));

    let grid = Interval { lo: m.domain.lo, hi: m.domain.lo + horizon }.linspace(opts.grid_points);
    let c = increment_cov(m, &grid)?;
    let n = c.nrows();
    let mut rect_slack = f64::INFINITY;
    let mut lin_slack = f64::INFINITY;
    let mut pseudo = false;
    for s in 0..n {
        for t in s + 1..=n {
            let cv = conditional_variance_cells(&c, s, t)?;
            pseudo |= cv.pseudo_inverse;
            let whole: f64 = (s..t).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| c[(i, j)]).sum();
            rect_slack = rect_slack.min(cv.value - whole);
            lin_slack = lin_slack.min(cv.value - dfm * (grid[t] - grid[s]));
        }
    }
    let note = if pseudo { " (pseudo-inverse used)" } else { "" };
    rep.verdicts.insert(
        "chlt.iii_var_ge_rect".into(),
        Verdict::new(rect_slack >= -tol, rect_slack, opts.grid_points, tol, format!("min Var - R([s,t]x[0,T]){note}")),
    );
    rep.verdicts.insert(
        "chlt.iii_var_ge_linear".into(),
        Verdict::new(lin_slack >= -tol, lin_slack, opts.grid_points, tol, format!("min Var - F'(T)(t-s){note}")),
    );

    let mut max_off = f64::NEG_INFINITY;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                max_off = max_off.max(c[(a, b)]);
            }
        }
    }
    rep.verdicts.insert(
        "chlt.iv_nonpositive_correlation".into(),
        Verdict::new(max_off <= SIGN_TOL, max_off, opts.grid_points, SIGN_TOL, "max covariance of disjoint cells"),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jm_exact_for_fbm() {
        let m = CovarianceModel::fbm(0.3).unwrap();
        let jm = jm_check(&m, 1.0 / 0.6, 9).unwrap();
        assert!((jm.c - 1.0).abs() < 1e-12 && jm.pass);
        assert!(!jm_check(&m, 1.0, 9).unwrap().pass);
    }

    #[test]
    fn brownian_masses_vanish() {
        let m = CovarianceModel::fbm(0.5).unwrap();
        let e = mass_estimates(&m, 8).unwrap();
        assert!(e.mu_plus < 1e-12 && e.mu_minus < 1e-12);
        assert!(!e.mu_plus_diverges && !e.mu_minus_diverges);
    }

    #[test]
    fn routes() {
        assert_eq!(route(&CovarianceModel::fbm(0.7).unwrap()).unwrap(), Route::PartA);
        match route(&CovarianceModel::bifbm(0.6, 0.7).unwrap()).unwrap() {
            Route::PartB { rho } => assert!((rho - 1.0 / 0.84).abs() < 1e-12),
            r => panic!("{r:?}"),
        }
        let bare = crate::covariance::StationaryF::new("bare", None, |t: f64| t.abs());
        let m = CovarianceModel::stationary_f(bare).unwrap();
        assert!(matches!(route(&m), Err(Error::UnknownKind(_))));
    }

    #[test]
    fn bridge_is_not_stationary() {
        let m = CovarianceModel::brownian_bridge(1.0).unwrap();
        assert!(matches!(chlt_check(&m, 1.0, &ChltOptions::default()), Err(Error::NotStationary(_))));
    }
}
