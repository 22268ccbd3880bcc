//! Experiment orchestration: every subcommand resolves an
//! [`ExperimentConfig`], runs, and returns a [`Report`] that embeds the
//! resolved config next to its results. Reports carry no timestamps, so
//! identical configs reproduce identical files.

pub mod config;
pub mod fit;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::covariance::{CovarianceModel, Interval, Rectangle};
use crate::criteria::{chlt_check, classify, ChltOptions, ClassifyOptions};
use crate::error::{Error, Result};
use crate::fourier::{convexity_check, cosine_series, holder_estimate, tv_bound, TruncationPolicy};
use crate::gaussian::{cm_element, embedding_check, sample_cholesky, RngStream, SpectralField};
use crate::roughpath::{dist_homog, identity_record, signature, Flavor, PlPath};
use crate::she::{
    galerkin_rate, hyperviscosity_rate, moment_scaling, she_field, time_regularity_probe, Bc, McConfig, RateExperiment,
    RatePoint, SheConfig,
};
use crate::variation::{dyadic_squares, mixed_var, scaling_fit, Dissection, Mode};

use config::{ExperimentConfig, ExperimentKind};

/// A CSV table: header and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    /// Whether every assertion of the run held.
    pub pass: bool,
    pub result: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<stem>.json` and one CSV per table into `dir`. The primary
    /// table goes to `<stem>.csv`, others to `<stem>_<table>.csv`.
    pub fn write_to(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&json_path, self.to_json()? + "\n")?;
        written.push(json_path);
        for (i, t) in self.tables.iter().enumerate() {
            let p = if i == 0 { dir.join(format!("{stem}.csv")) } else { dir.join(format!("{stem}_{}.csv", t.name)) };
            std::fs::write(&p, t.to_csv()?)?;
            written.push(p);
        }
        Ok(written)
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn model_of(cfg: &ExperimentConfig) -> Result<CovarianceModel> {
    let m = cfg.model.as_ref().ok_or_else(|| Error::Config("this experiment needs a [model] section".into()))?;
    m.build(cfg.coeffs.as_ref())
}

/// Runs the experiment named in `cfg.experiment.name`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let kind = cfg.experiment.name.ok_or_else(|| Error::Config("[experiment] needs a name".into()))?;
    let (pass, result, tables) = match kind {
        ExperimentKind::Variation => run_variation(cfg)?,
        ExperimentKind::Check => run_check(cfg)?,
        ExperimentKind::CheckSeries => run_check_series(cfg)?,
        ExperimentKind::Sample => run_sample(cfg)?,
        ExperimentKind::Lift => run_lift(cfg)?,
        ExperimentKind::She => run_she(cfg)?,
        ExperimentKind::Rates => run_rates(cfg)?,
        ExperimentKind::Embedding => run_embedding(cfg)?,
    };
    Ok(Report { experiment: kind.name().into(), config: cfg.clone(), pass, result, tables })
}

type Outcome = (bool, Value, Vec<Table>);

fn run_variation(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = model_of(cfg)?;
    let e = &cfg.experiment;
    let gamma = e.gamma.unwrap_or(1.0);
    let rho = e.rho.unwrap_or(m.nominal_rho);
    let mode: Mode = e.mode.as_deref().unwrap_or("lower").parse()?;
    let [lo, hi] = e.rect.unwrap_or([m.domain.lo, m.domain.hi]);
    let sides = e.sides.unwrap_or(1).max(1);
    let mut table = Table::new("variation", &["side", "value", "mode", "gamma", "rho"]);
    let mut estimates = Vec::new();
    for sq in dyadic_squares(lo, hi - lo, sides) {
        let g = Dissection::uniform(sq, cfg.grid.n)?;
        let est = mixed_var(&m, &Rectangle::square(sq), &g, &g, gamma, rho, mode)?;
        table.push([fmt(sq.len()), fmt(est.value), format!("{mode:?}").to_lowercase(), fmt(gamma), fmt(rho)]);
        estimates.push(est);
    }
    let fit = if sides >= 4 && mode == Mode::Lower {
        Some(scaling_fit(&m, gamma, rho, &dyadic_squares(lo, hi - lo, sides), cfg.grid.n)?)
    } else {
        None
    };
    Ok((true, json!({ "model": m.tag(), "estimates": estimates, "fit": fit }), vec![table]))
}

fn run_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = model_of(cfg)?;
    let opts = ClassifyOptions {
        jm_points: cfg.grid.n,
        sign_points: cfg.grid.n,
        fit_points: cfg.grid.n,
        ..Default::default()
    };
    let report = classify(&m, &opts)?;
    let mut pass = report.pass();
    let chlt = match cfg.experiment.horizon {
        Some(t) => {
            let r = chlt_check(&m, t, &ChltOptions::default())?;
            pass &= r.pass();
            Some(r)
        }
        None => None,
    };
    Ok((pass, json!({ "classification": report, "chlt": chlt }), Vec::new()))
}

fn run_check_series(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = cfg.coeffs.as_ref().ok_or_else(|| Error::Config("check-series needs a [coeffs] section".into()))?;
    let a = c.to_sequence()?;
    let verdict = convexity_check(&a, c.k_max);
    let tv = match c.tv_case {
        Some(case) => Some(tv_bound(c.tv_sequence.as_ref().unwrap_or(&c.sequence), case, c.k_max)?),
        None => None,
    };
    // Hölder exponent of K from its values on a fine uniform grid near 0
    let step = 2.0 * PI / 4096.0;
    let k: Vec<f64> = (0..512)
        .map(|i| cosine_series(&c.sequence, i as f64 * step, TruncationPolicy::default()))
        .collect::<Result<_>>()?;
    let holder = holder_estimate(&k, step, 8).ok();
    let out = json!({
        "convexity": verdict,
        "tv_bound": tv,
        "holder": holder,
        "expected_holder": 1.0 / a.decay_rho,
    });
    Ok((verdict.pass, out, Vec::new()))
}

fn run_sample(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = model_of(cfg)?;
    let grid = m.domain.linspace(cfg.grid.n);
    let e = sample_cholesky(&m, &grid, cfg.grid.d, cfg.mc.paths, cfg.mc.seed)?;
    let mut table = Table::new("sample", &["path", "component", "t", "value"]);
    for p in 0..e.m {
        for c in 0..e.d {
            for (t, v) in grid.iter().zip(e.path(p, c)) {
                table.push([p.to_string(), c.to_string(), fmt(*t), fmt(*v)]);
            }
        }
    }
    Ok((true, json!({ "model": m.tag(), "paths": e.m, "d": e.d, "grid_points": grid.len() }), vec![table]))
}

/// Reads `path,component,t,value` rows into one piecewise-linear path per
/// path index.
pub fn read_sample_csv(text: &str) -> Result<Vec<PlPath>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    // path -> component -> (t, value)
    let mut by_path: BTreeMap<usize, BTreeMap<usize, Vec<(f64, f64)>>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Config("sample CSV rows need path,component,t,value".into()));
        }
        let parse = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{}'", &rec[i])))
        };
        let p = parse(0)? as usize;
        let c = parse(1)? as usize;
        by_path.entry(p).or_default().entry(c).or_default().push((parse(2)?, parse(3)?));
    }
    let mut out = Vec::new();
    for (p, comps) in by_path {
        let d = comps.len();
        let first = comps.values().next().expect("nonempty").clone();
        let times: Vec<f64> = first.iter().map(|x| x.0).collect();
        let mut values = vec![0.0; times.len() * d];
        for (ci, (_, pts)) in comps.iter().enumerate() {
            if pts.len() != times.len() || pts.iter().zip(&times).any(|(a, t)| a.0 != *t) {
                return Err(Error::GridMismatch(format!("path {p}: components live on different grids")));
            }
            for (i, (_, v)) in pts.iter().enumerate() {
                values[i * d + ci] = *v;
            }
        }
        out.push(PlPath::new(times, d, values)?);
    }
    Ok(out)
}

fn run_lift(cfg: &ExperimentConfig) -> Result<Outcome> {
    let input = cfg.experiment.input.as_ref().ok_or_else(|| Error::Config("lift needs an input sample CSV".into()))?;
    let text = std::fs::read_to_string(input).map_err(|e| Error::Io(format!("{input}: {e}")))?;
    let paths = read_sample_csv(&text)?;
    let level = cfg.mc.level;
    let beta = cfg.mc.beta;
    let mut table = Table::new("signature", &["path", "t", "level", "index", "value"]);
    let mut norms = Vec::new();
    for (p, path) in paths.iter().enumerate() {
        let rec = signature(path, level)?;
        for (t, g) in rec.grid.iter().zip(&rec.elements) {
            for lv in 1..=level {
                for (flat, v) in g.level(lv).iter().enumerate() {
                    table.push([p.to_string(), fmt(*t), lv.to_string(), multi_index(flat, path.d, lv), fmt(*v)]);
                }
            }
        }
        let e = identity_record(&rec.grid, rec.d(), level)?;
        norms.push(dist_homog(&rec, &e, Flavor::Holder { beta })?);
    }
    Ok((true, json!({ "paths": paths.len(), "level": level, "beta": beta, "holder_norms": norms }), vec![table]))
}

/// Word `i_1.i_2…` (1-based letters) of a flat level-`lv` index.
fn multi_index(mut flat: usize, d: usize, lv: usize) -> String {
    let mut letters = vec![0; lv];
    for slot in letters.iter_mut().rev() {
        *slot = flat % d + 1;
        flat /= d;
    }
    letters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(".")
}

fn mc_of(cfg: &ExperimentConfig) -> McConfig {
    let m = &cfg.mc;
    McConfig { paths: m.paths, seed: m.seed, level: m.level, beta: m.beta, q: m.q, pairs: m.pairs }
}

fn rate_table(name: &str, x: &str, pts: &[RatePoint]) -> Table {
    let mut t = Table::new(name, &[x, "distance", "se"]);
    for p in pts {
        t.push([fmt(p.x), fmt(p.value), fmt(p.se)]);
    }
    t
}

fn she_config(cfg: &ExperimentConfig) -> Result<SheConfig> {
    let e = &cfg.experiment;
    let alpha = e.alpha.ok_or_else(|| Error::Config("she needs alpha".into()))?;
    let mut s = SheConfig::new(alpha, e.bc.unwrap_or(Bc::Dirichlet), e.modes.unwrap_or(256), cfg.grid.n)?;
    s.d = cfg.grid.d;
    s.seed = cfg.mc.seed;
    s.validate()?;
    Ok(s)
}

fn default_cutoffs(modes: usize) -> Vec<usize> {
    (4..).map(|j| 1usize << j).take_while(|&k| 2 * k <= modes).collect()
}

fn run_she(cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = she_config(cfg)?;
    let mc = mc_of(cfg);
    let e = &cfg.experiment;
    let probe = e.probe.as_deref().unwrap_or("galerkin");
    if s.alpha <= 0.75 && probe != "moment" {
        eprintln!("warning: alpha = {} ≤ 3/4, the spatial lift is outside the theory", s.alpha);
    }
    match probe {
        "galerkin" => {
            let cut = e.cutoffs.clone().unwrap_or_else(|| default_cutoffs(s.n_modes));
            let r = galerkin_rate(&s, &cut, &mc)?;
            let pass = -r.fit.slope >= e.min_rate.unwrap_or(0.0);
            Ok(rate_outcome(pass, r, "N_or_eps", true))
        }
        "hyperviscosity" => {
            let eps = e.eps.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3, 1e-4]);
            let r = hyperviscosity_rate(&s, e.theta.unwrap_or(2.0), &eps, &mc)?;
            let t = rate_table("hyperviscosity", "N_or_eps", &r.points);
            Ok((r.monotone, serde_json::to_value(&r)?, vec![t]))
        }
        "time" => {
            let lags = e.lags.clone().unwrap_or_else(|| (0..5).map(|j| 1e-4 * 4f64.powi(j)).collect());
            let r = time_regularity_probe(&s, &lags, &mc)?;
            let pass = r.fit.slope >= e.min_rate.unwrap_or(0.0);
            Ok(rate_outcome(pass, r, "tau", false))
        }
        "moment" => {
            let lags: Vec<usize> = match &e.lags {
                Some(l) => l.iter().map(|x| *x as usize).collect(),
                None => vec![1, 2, 4, 8, 16],
            };
            let r = moment_scaling(&she_field(&s), &s.x_grid, s.d, &lags, &mc)?;
            let target = 1.0 / s.rho();
            let pass = match e.min_rate {
                Some(m) => r.fit.slope >= m,
                None => (r.fit.slope - target).abs() <= 0.1,
            };
            Ok(rate_outcome(pass, r, "lag", false))
        }
        other => Err(Error::Config(format!("unknown she probe '{other}'"))),
    }
}

/// `rate` is the decay exponent `-slope` for distances that shrink with `x`,
/// the slope itself for growth probes.
fn rate_outcome(pass: bool, r: RateExperiment, x: &str, decay: bool) -> Outcome {
    let t = rate_table("rates", x, &r.points);
    let rate = if decay { -r.fit.slope } else { r.fit.slope };
    let v = json!({ "rate": rate, "fit": r.fit, "points": r.points, "dropped": r.dropped });
    (pass, v, vec![t])
}

fn run_rates(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = &cfg.experiment;
    let mc = mc_of(cfg);
    let probe = e.probe.as_deref().unwrap_or("scaling");
    match probe {
        "scaling" => {
            let m = model_of(cfg)?;
            let rho = e.rho.unwrap_or(m.nominal_rho);
            let gamma = e.gamma.unwrap_or(1.0);
            let [lo, hi] = e.rect.unwrap_or([m.domain.lo, m.domain.hi]);
            let fit = scaling_fit(&m, gamma, rho, &dyadic_squares(lo, hi - lo, e.sides.unwrap_or(5)), cfg.grid.n)?;
            let pass = (fit.slope - 1.0 / rho).abs() <= e.min_rate.unwrap_or(0.1);
            let mut t = Table::new("scaling", &["side", "value", "se"]);
            for p in &fit.points {
                t.push([fmt(p.x), fmt(p.y), fmt(p.se)]);
            }
            Ok((pass, json!({ "model": m.tag(), "target": 1.0 / rho, "fit": fit }), vec![t]))
        }
        "rfs-truncation" | "rfs-moment" => {
            let a = match (&cfg.coeffs, &cfg.model) {
                (Some(c), _) => c.to_sequence()?,
                (None, Some(_)) => model_of(cfg)?
                    .series()
                    .ok_or_else(|| Error::Config("rates on a random Fourier series needs an rfs model".into()))?,
                _ => return Err(Error::Config("rfs rates need [coeffs] or an rfs [model]".into())),
            };
            let grid = Interval { lo: 0.0, hi: 2.0 * PI }.linspace(cfg.grid.n);
            let n_full = e.modes.unwrap_or(4096);
            let field = SpectralField::rfs(&a, n_full);
            if probe == "rfs-truncation" {
                let cut = e.cutoffs.clone().unwrap_or_else(|| default_cutoffs(n_full.min(cfg.grid.n / 2)));
                let r = crate::she::truncation_rate(&field, &grid, cfg.grid.d, &cut, &mc)?;
                let pass = -r.fit.slope >= e.min_rate.unwrap_or(0.0);
                Ok(rate_outcome(pass, r, "N", true))
            } else {
                let lags: Vec<usize> = match &e.lags {
                    Some(l) => l.iter().map(|x| *x as usize).collect(),
                    None => vec![4, 8, 16, 32, 64],
                };
                let r = moment_scaling(&field, &grid, cfg.grid.d, &lags, &mc)?;
                let pass = r.fit.slope >= e.min_rate.unwrap_or(1.0 / a.decay_rho - 0.1);
                Ok(rate_outcome(pass, r, "lag", false))
            }
        }
        other => Err(Error::Config(format!("unknown rates probe '{other}'"))),
    }
}

/// Slack tolerance of the embedding inequality.
pub const EMBEDDING_TOL: f64 = 1e-9;

fn run_embedding(cfg: &ExperimentConfig) -> Result<Outcome> {
    let m = model_of(cfg)?;
    let rho = cfg.experiment.rho.unwrap_or(m.nominal_rho);
    let grid = m.domain.linspace(cfg.grid.n);
    let dis = Dissection::new(grid.clone())?;
    let samples = cfg.experiment.samples.unwrap_or(500);
    let mut table = Table::new("embedding", &["sample", "lhs", "rhs", "slack"]);
    let mut min_slack = f64::INFINITY;
    for s in 0..samples {
        let mut rng = RngStream::new(cfg.mc.seed, "embedding", s as u64);
        let weights: Vec<f64> = (0..grid.len()).map(|_| rng.normal()).collect();
        let h = cm_element(&m, &grid, &weights, &grid)?;
        let c = embedding_check(&m, rho, &dis, &h)?;
        min_slack = min_slack.min(c.slack);
        table.push([s.to_string(), fmt(c.lhs), fmt(c.rhs), fmt(c.slack)]);
    }
    let q = crate::gaussian::embedding_exponent(rho);
    Ok((
        min_slack >= -EMBEDDING_TOL,
        json!({ "model": m.tag(), "rho": rho, "q": q, "samples": samples, "min_slack": min_slack }),
        vec![table],
    ))
}
