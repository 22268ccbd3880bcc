//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::f64::consts::PI;
use std::time::Instant;

use gaussrough::covariance::{CovarianceModel, Interval, Rectangle, StationaryF};
use gaussrough::criteria::{chlt_check, classify, ChltOptions, ClassifyOptions, Route};
use gaussrough::error::Result;
use gaussrough::fourier::{
    convexity_check, cosine_series, fejer_convexity_probe, holder_estimate, tv_bound, CoefficientRule,
    CoefficientSequence, SpectralDensity, TruncationPolicy, TvCase, MAX_SERIES_MODES,
};
use gaussrough::gaussian::{cm_element, embedding_check, RngStream, SpectralField};
use gaussrough::roughpath::{hnorm, levy_area, signature, texp, PairSet, PlPath};
use gaussrough::she::{
    galerkin_rate, hyperviscosity_rate, moment_scaling, rfs_truncation_rate, Bc, McConfig, SheConfig,
};
use gaussrough::variation::{
    dyadic_squares, mixed_var, mixed_var_table, scaling_fit, vplus_table, Dissection, GridTable, Mode, Region,
};

const TOL: f64 = 1e-9;

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn rfs_18() -> CoefficientSequence {
    CoefficientSequence::symmetric(CoefficientRule::power(1.8), MAX_SERIES_MODES)
}

/// Sorted grid on [lo, hi] with both endpoints and `n - 2` random interior points.
fn random_grid(rng: &mut RngStream, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..n - 2).map(|_| rng.uniform(lo, hi)).collect();
        g.push(lo);
        g.push(hi);
        g.sort_by(f64::total_cmp);
        if g.windows(2).all(|w| w[1] - w[0] > 1e-6 * (hi - lo)) {
            return g;
        }
    }
}

fn c1_brownian_exact() -> Result<Outcome> {
    let m = CovarianceModel::fbm(0.5)?;
    let unit = Interval::new(0.0, 1.0)?;
    let r = Rectangle::square(unit);
    let mut rng = RngStream::new(1, "acceptance-c1", 0);
    let mut worst: f64 = 0.0;
    let mut grids = 0;
    for nh in 2..=12 {
        for nv in 2..=12 {
            let pairs = [
                (Dissection::uniform(unit, nh)?, Dissection::uniform(unit, nv)?),
                (
                    Dissection::new(random_grid(&mut rng, 0.0, 1.0, nh))?,
                    Dissection::new(random_grid(&mut rng, 0.0, 1.0, nv))?,
                ),
            ];
            for (gh, gv) in pairs {
                let v = mixed_var(&m, &r, &gh, &gv, 1.0, 1.0, Mode::Exact)?.value;
                worst = worst.max((v - 1.0).abs());
                grids += 1;
            }
        }
    }
    outcome(worst <= TOL, format!("max |V1 - 1| = {worst:.2e} over {grids} grid pairs"))
}

fn c2_slopes() -> Result<Outcome> {
    let mut cases: Vec<(String, CovarianceModel, f64, Vec<Interval>)> = Vec::new();
    for h in [0.5, 0.4, 0.3] {
        let rho = f64::max(1.0, 1.0 / (2.0 * h));
        cases.push((format!("fbm({h})"), CovarianceModel::fbm(h)?, rho, dyadic_squares(0.0, 1.0, 5)));
    }
    cases.push(("bifbm(0.6,0.7)".into(), CovarianceModel::bifbm(0.6, 0.7)?, 1.0 / 0.84, dyadic_squares(0.25, 0.5, 5)));
    cases.push(("rfs(k^-1.8)".into(), CovarianceModel::rfs(rfs_18())?, 1.25, dyadic_squares(0.5, 2.0, 5)));
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, m, rho, squares) in cases {
        let fit = scaling_fit(&m, 1.0, rho, &squares, 33)?;
        let ok = (fit.slope - 1.0 / rho).abs() <= 0.1;
        pass &= ok;
        detail.push(format!("{name} {:.3}/{:.3}", fit.slope, 1.0 / rho));
    }
    outcome(pass, detail.join(", "))
}

fn random_model(rng: &mut RngStream, i: usize) -> Result<CovarianceModel> {
    let h = rng.uniform(0.2, 0.9);
    Ok(match i % 4 {
        0 => CovarianceModel::fbm(h)?,
        1 => CovarianceModel::bifbm(h, rng.uniform(0.3, 1.0))?,
        2 => CovarianceModel::ou(rng.uniform(0.5, 3.0))?,
        _ => CovarianceModel::brownian_bridge(1.0)?,
    })
}

fn random_exponents(rng: &mut RngStream) -> (f64, f64) {
    let a = rng.uniform(1.0, 3.0);
    let b = rng.uniform(1.0, 3.0);
    (a.min(b), a.max(b))
}

fn c3_inequalities() -> Result<Outcome> {
    const INSTANCES: usize = 200;
    let mut rng = RngStream::new(3, "acceptance-c3", 0);
    let v = |t: &GridTable, g: f64, r: f64| -> Result<f64> { Ok(mixed_var_table(t, g, r, Mode::Exact)?.value) };
    let (mut ordering, mut plus, mut triangle, mut young) = (0, 0, 0, 0);
    for i in 0..INSTANCES {
        let n = 3 + i % 5;
        let g = random_grid(&mut rng, 0.0, 1.0, n);
        let m = random_model(&mut rng, i)?;
        let (gamma, rho) = random_exponents(&mut rng);
        let t = GridTable::from_model(&m, &g, &g)?;

        let mid = v(&t, gamma, rho)?;
        if v(&t, rho, rho)? > mid + TOL || mid > v(&t, gamma, gamma)? + TOL {
            ordering += 1;
        }
        if mid > vplus_table(&t, Region::Square, gamma, rho, Mode::Exact)?.value + TOL {
            plus += 1;
        }
        let m2 = random_model(&mut rng, i + 1)?;
        let t2 = GridTable::from_model(&m2, &g, &g)?;
        if v(&t.add(&t2)?, gamma, rho)? > mid + v(&t2, gamma, rho)? + TOL {
            triangle += 1;
        }

        // R_μ(s,t) = Σ_j m_j R(s + x_j, t) for a signed discrete μ
        let atoms = 1 + i % 3;
        let shifts: Vec<f64> = (0..atoms).map(|_| rng.uniform(0.0, 1.0)).collect();
        let masses: Vec<f64> = (0..atoms).map(|_| rng.normal()).collect();
        let wide = CovarianceModel::fbm(rng.uniform(0.2, 0.9))?.with_domain(Interval::new(0.0, 2.0)?)?;
        let conv = GridTable::from_fn(&g, &g, |s, u| {
            shifts.iter().zip(&masses).map(|(x, w)| w * wide.eval(s + x, u).expect("in domain")).sum()
        })?;
        let mut sup: f64 = 0.0;
        for x in &shifts {
            let shifted: Vec<f64> = g.iter().map(|s| s + x).collect();
            sup = sup.max(v(&GridTable::from_model(&wide, &shifted, &g)?, gamma, rho)?);
        }
        let tv: f64 = masses.iter().map(|w| w.abs()).sum();
        if v(&conv, gamma, rho)? > tv * sup + TOL {
            young += 1;
        }
    }
    let bad = ordering + plus + triangle + young;
    outcome(
        bad == 0,
        format!("{INSTANCES} instances each; violations ordering {ordering}, V<=V+ {plus}, triangle {triangle}, Young {young}"),
    )
}

fn c4_embedding() -> Result<Outcome> {
    let models = [
        (CovarianceModel::fbm(0.4)?, 1.25),
        (CovarianceModel::fbm(0.3)?, 5.0 / 3.0),
        (CovarianceModel::rfs(rfs_18())?, 1.25),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (j, (m, rho)) in models.iter().enumerate() {
        let grid = m.domain.linspace(32);
        let dis = Dissection::new(grid.clone())?;
        let mut min_slack = f64::INFINITY;
        for s in 0..500 {
            let mut rng = RngStream::new(4 + j as u64, "acceptance-c4", s);
            let weights: Vec<f64> = (0..grid.len()).map(|_| rng.normal()).collect();
            let h = cm_element(m, &grid, &weights, &grid)?;
            min_slack = min_slack.min(embedding_check(m, *rho, &dis, &h)?.slack);
        }
        pass &= min_slack >= -TOL;
        detail.push(format!("{} min slack {min_slack:.3e}", m.tag()));
    }
    outcome(pass, detail.join(", "))
}

/// `½∮(x dy − y dx)` by a fine midpoint rule along each segment.
fn riemann_area(pts: &[(f64, f64)]) -> f64 {
    const STEPS: usize = 1000;
    let mut a = 0.0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let (dx, dy) = ((x1 - x0) / STEPS as f64, (y1 - y0) / STEPS as f64);
        for k in 0..STEPS {
            let t = (k as f64 + 0.5) / STEPS as f64;
            let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            a += 0.5 * (x * dy - y * dx);
        }
    }
    a
}

fn c5_algebra() -> Result<Outcome> {
    let mut chen: f64 = 0.0;
    for depth in 1..=4 {
        for d in 1..=3 {
            for rep in 0..5u64 {
                let mut rng = RngStream::new(5, "acceptance-c5", (depth * 100 + d * 10) as u64 + rep);
                let times: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
                let mut values = vec![0.0; 51 * d];
                for i in 1..=50 {
                    for c in 0..d {
                        values[i * d + c] = values[(i - 1) * d + c] + 0.2 * rng.normal();
                    }
                }
                let rec = signature(&PlPath::new(times, d, values)?, depth)?;
                for u in [1, 17, 25, 49] {
                    let g = rec.increment(0, u).mul(&rec.increment(u, 50))?;
                    chen = chen.max(g.tensor().max_abs_diff(rec.end().tensor()));
                }
            }
        }
    }

    let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)];
    let values: Vec<f64> = square.iter().flat_map(|&(x, y)| [x, y]).collect();
    let rec = signature(&PlPath::new((0..5).map(f64::from).collect(), 2, values)?, 2)?;
    let area = levy_area(&rec, 0, 4)[1];
    let oracle = riemann_area(&square);

    let mut rng = RngStream::new(5, "acceptance-c5-group", 0);
    let mut sym: f64 = 0.0;
    let mut homog: f64 = 0.0;
    for _ in 0..100 {
        let x = [rng.normal(), rng.normal()];
        let y = [rng.normal(), rng.normal()];
        let g = texp(&x, 2)?.mul(&texp(&y, 2)?)?;
        sym = sym.max(g.symmetric_part_defect());
        let lambda = rng.normal().abs() * 3.0 + 0.1;
        let h = texp(&[x[0], x[1], y[0]], 3)?.mul(&texp(&[y[1], x[0], -y[0]], 3)?)?;
        homog = homog.max((hnorm(&h.dilate(lambda)) - lambda * hnorm(&h)).abs() / (1.0 + lambda));
    }
    let pass =
        chen <= 1e-10 && (area - 1.0).abs() <= 1e-12 && (oracle - 1.0).abs() <= 1e-12 && sym <= 1e-12 && homog <= 1e-12;
    outcome(
        pass,
        format!("Chen {chen:.1e}, area {area} (oracle {oracle}), symmetric part {sym:.1e}, dilation {homog:.1e}"),
    )
}

fn mc(paths: usize) -> McConfig {
    McConfig { paths, seed: 7, level: 3, beta: 0.05, q: 2.0, pairs: PairSet::DyadicLags }
}

fn periodic_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| 2.0 * PI * i as f64 / (points - 1) as f64).collect()
}

fn c6_moments() -> Result<Outcome> {
    let field = SpectralField::rfs(&rfs_18(), 512);
    let r = moment_scaling(&field, &periodic_grid(1025), 2, &[4, 8, 16, 32, 64], &mc(2000))?;
    let target = 2.0 * (1.0 / (2.0 * 1.25)) - 0.1;
    outcome(r.fit.slope >= target, format!("slope {:.3} (need >= {target:.2}), r2 {:.3}", r.fit.slope, r.fit.r2))
}

const CUTOFFS: [usize; 5] = [16, 32, 64, 128, 256];

fn c7_truncation() -> Result<Outcome> {
    let r = rfs_truncation_rate(&rfs_18(), 4096, &periodic_grid(513), 2, &CUTOFFS, &mc(1000))?;
    let rate = -r.fit.slope;
    outcome(
        rate >= 0.25,
        format!("rate {rate:.3} (need >= 0.25), r2 {:.3}, points used {}", r.fit.r2, r.fit.points_used),
    )
}

fn c8_she() -> Result<Outcome> {
    let mut cfg = SheConfig::new(0.9, Bc::Dirichlet, 4096, 513)?;
    cfg.d = 2;
    let g = galerkin_rate(&cfg, &CUTOFFS, &mc(1000))?;
    let rate = -g.fit.slope;

    let mut hv = SheConfig::new(0.9, Bc::Dirichlet, 512, 257)?;
    hv.d = 2;
    let h = hyperviscosity_rate(&hv, 2.0, &[1e-1, 1e-2, 1e-3, 1e-4], &mc(200))?;
    let strictly = h.points.windows(2).all(|w| w[1].value < w[0].value);
    let dists: Vec<String> = h.points.iter().map(|p| format!("{:.3}", p.value)).collect();
    outcome(
        rate >= 0.2 && strictly && h.monotone,
        format!("Galerkin rate {rate:.3} (need >= 0.2); hyper-viscosity distances [{}]", dists.join(", ")),
    )
}

fn c9_conditional_variance() -> Result<Outcome> {
    let models = [CovarianceModel::fbm(0.4)?, CovarianceModel::stationary_f(StationaryF::power(0.8))?];
    let opts = ChltOptions { grid_points: 64, ..Default::default() };
    let mut pass = true;
    let mut detail = Vec::new();
    for m in &models {
        let rep = chlt_check(m, 1.0, &opts)?;
        let rect = &rep.verdicts["chlt.iii_var_ge_rect"];
        let linear = &rep.verdicts["chlt.iii_var_ge_linear"];
        pass &= rect.passed() && linear.passed();
        detail.push(format!("{} slack rect {:.2e} linear {:.2e}", m.tag(), rect.value, linear.value));
    }
    outcome(pass, detail.join(", "))
}

fn c10_classification() -> Result<Outcome> {
    let opts = ClassifyOptions::default();
    let expect: [(CovarianceModel, Option<f64>); 5] = [
        (CovarianceModel::fbm(0.7)?, None),
        (CovarianceModel::fbm(0.3)?, Some(5.0 / 3.0)),
        (CovarianceModel::bifbm(0.8, 0.7)?, None),
        (CovarianceModel::bifbm(0.6, 0.7)?, Some(1.0 / 0.84)),
        (CovarianceModel::she_dirichlet(0.9)?, Some(1.25)),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (m, rho) in &expect {
        let rep = classify(m, &opts)?;
        let ok = match (rep.route, rho) {
            (Some(Route::PartA), None) => true,
            (Some(Route::PartB { rho: got }), Some(want)) => (got - want).abs() < 1e-12,
            _ => false,
        };
        pass &= ok && rep.pass();
        let route = match rep.route {
            Some(Route::PartA) => "A".to_string(),
            Some(Route::PartB { rho }) => format!("B({rho:.4})"),
            None => "none".into(),
        };
        detail.push(format!("{}->{route}", m.tag()));
        if rho.is_some_and(|r| (r - 5.0 / 3.0).abs() < 1e-12) {
            pass &= rep.mu_minus_diverges;
            detail.push(format!("mu- diverges {}", rep.mu_minus_diverges));
        }
    }
    outcome(pass, detail.join(", "))
}

fn c11_fourier() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for alpha in [0.6, 0.75, 0.9, 1.0] {
        let a = CoefficientSequence::symmetric(CoefficientRule::power(2.0 * alpha), 1_000_000);
        let v = convexity_check(&a, 1_000_000);
        pass &= v.pass && v.checked_up_to >= 1_000_000;
    }
    detail.push(format!("convexity ok {pass}"));

    let step = 2.0 * PI / 4096.0;
    for (e, rho) in [(1.8, 1.25), (1.5, 2.0)] {
        let k: Vec<f64> = (0..512)
            .map(|i| cosine_series(&CoefficientRule::power(e), i as f64 * step, TruncationPolicy::default()))
            .collect::<Result<_>>()?;
        let fit = holder_estimate(&k, step, 8)?;
        pass &= (fit.slope - 1.0 / rho).abs() <= 0.07;
        detail.push(format!("holder {:.3}/{:.3}", fit.slope, 1.0 / rho));
    }

    let tv = tv_bound(&CoefficientRule::power(1.0), TvCase::QuasiConvex, 1_000_000)?;
    pass &= (tv.bound - 1.5).abs() <= 1e-8;
    detail.push(format!("tv {:.10}", tv.bound));

    let f = SpectralDensity::fractional_ou(0.4, 1.0)?;
    let xs: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
    let probe = fejer_convexity_probe(&f, &xs, 200.0, 1e-9)?;
    pass &= probe.nonpositive_near_zero && probe.x0_detected > 0.0;
    detail.push(format!("fejer x0 {}", probe.x0_detected));
    outcome(pass, detail.join(", "))
}

fn main() {
    // `cargo test -- --list` and similar probes expect no work to be done
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, Criterion); 11] = [
        ("brownian exact variation", c1_brownian_exact),
        ("Hölder-controlled slopes", c2_slopes),
        ("inequality suites", c3_inequalities),
        ("Cameron-Martin embedding", c4_embedding),
        ("rough path algebra", c5_algebra),
        ("moment scaling of lifts", c6_moments),
        ("truncation rate", c7_truncation),
        ("SHE Galerkin and hyper-viscosity", c8_she),
        ("conditional variance", c9_conditional_variance),
        ("classification fidelity", c10_classification),
        ("Fourier analytics", c11_fourier),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.1}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
