use approx::assert_abs_diff_eq;
use nalgebra::SymmetricEigen;

use gaussrough::covariance::{CovarianceModel, Interval, Rectangle, StationaryF};
use gaussrough::error::Error;
use gaussrough::fourier::{CoefficientRule, CoefficientSequence};
use gaussrough::variation::{
    concatenation_constant, dyadic_squares, mixed_var, mixed_var_table, pvar_1d, scaling_fit, vplus, vplus_table,
    Dissection, GridTable, Mode, Region,
};

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn fbm_oracle(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

#[test]
fn catalog_formulas() {
    let bm = CovarianceModel::fbm(0.5).unwrap();
    assert_abs_diff_eq!(bm.eval(0.3, 0.7).unwrap(), 0.3, epsilon = 1e-15);
    let bb = CovarianceModel::brownian_bridge(1.0).unwrap();
    assert_abs_diff_eq!(bb.eval(0.5, 0.5).unwrap(), 0.25, epsilon = 1e-15);

    let f = CovarianceModel::fbm(0.3).unwrap();
    let bi = CovarianceModel::bifbm(0.5, 1.0).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let (s, t) = (i as f64 / 9.0, j as f64 / 9.0);
            assert_abs_diff_eq!(f.eval(s, t).unwrap(), fbm_oracle(0.3, s, t), epsilon = 1e-14);
            assert_abs_diff_eq!(bi.eval(s, t).unwrap(), bm.eval(s, t).unwrap(), epsilon = 1e-14);
        }
    }
    let ou = CovarianceModel::ou(2.0).unwrap();
    assert_abs_diff_eq!(ou.eval(0.1, 0.6).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
}

#[test]
fn rfs_matches_partial_sums() {
    // R(s,t) = Σ a_k cos(k(t−s)) for a symmetric sequence, summed directly
    let a = CoefficientSequence::symmetric(CoefficientRule::power(2.5), 1 << 20);
    let m = CovarianceModel::rfs(a).unwrap();
    for &(s, t) in &[(0.0, 0.0), (0.3, 1.9), (2.0, 5.5)] {
        let direct: f64 = (1..=200_000).map(|k| (k as f64).powf(-2.5) * (k as f64 * (t - s)).cos()).sum();
        assert_abs_diff_eq!(m.eval(s, t).unwrap(), direct, epsilon = 1e-7);
    }
}

#[test]
fn rect_increments() {
    let bm = CovarianceModel::fbm(0.5).unwrap();
    let r = |a, b, c, d| bm.rect_increment(&Rectangle::new(iv(a, b), iv(c, d))).unwrap();
    assert_abs_diff_eq!(r(0.0, 0.5, 0.5, 1.0), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(r(0.2, 0.6, 0.4, 0.8), 0.2, epsilon = 1e-15);
    let f = CovarianceModel::fbm(0.3).unwrap();
    let sq = f.rect_increment(&Rectangle::square(iv(0.1, 0.45))).unwrap();
    assert_abs_diff_eq!(sq, 0.35f64.powf(0.6), epsilon = 1e-14);
}

#[test]
fn increment_variances() {
    let f = CovarianceModel::fbm(0.25).unwrap();
    assert_abs_diff_eq!(f.sigma2(0.0, 0.5).unwrap(), 0.5f64.sqrt(), epsilon = 1e-14);

    let (h, k) = (0.6, 0.7);
    let bi = CovarianceModel::bifbm(h, k).unwrap();
    for &(s, t) in &[(0.0, 0.1), (0.2, 0.9), (0.5, 0.55), (0.0, 1.0)] {
        let v = bi.sigma2(s, t).unwrap();
        let base = (t - s).powf(2.0 * h * k);
        assert!(2f64.powf(-k) * base <= v + 1e-14 && v <= 2f64.powf(1.0 - k) * base + 1e-14);
    }

    let ou_shape = CovarianceModel::stationary_f(StationaryF::exponential(1.0)).unwrap();
    assert_abs_diff_eq!(ou_shape.sigma2(0.0, 1.0).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
}

#[test]
fn gram_matrices() {
    let bm = CovarianceModel::fbm(0.5).unwrap();
    let g = bm.gram(&[0.5, 1.0]).unwrap();
    assert_eq!(g.as_slice(), &[0.5, 0.5, 0.5, 1.0]);
    let one = CovarianceModel::ou(1.0).unwrap().gram(&[0.3]).unwrap();
    assert_eq!(one[(0, 0)], 1.0);

    let pts: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
    let g = CovarianceModel::fbm(0.3).unwrap().gram(&pts).unwrap();
    let min = SymmetricEigen::new(g).eigenvalues.min();
    assert!(min >= -1e-10);
}

#[test]
fn domain_is_enforced() {
    let f = CovarianceModel::fbm(0.3).unwrap();
    assert!(matches!(f.eval(0.2, 1.5), Err(Error::OutOfDomain { .. })));
    assert!(matches!(CovarianceModel::fbm(1.2), Err(Error::InvalidParameter(_) | Error::BadExponent(_))));
}

/// Exhaustive `p`-variation over all sub-dissections of the index set.
fn pvar_brute(x: &[f64], p: f64) -> f64 {
    let n = x.len();
    let inner = n - 2;
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << inner) {
        let mut idx = vec![0];
        idx.extend((0..inner).filter(|i| mask >> i & 1 == 1).map(|i| i + 1));
        idx.push(n - 1);
        let s: f64 = idx.windows(2).map(|w| (x[w[1]] - x[w[0]]).abs().powf(p)).sum();
        best = best.max(s);
    }
    best.powf(1.0 / p)
}

#[test]
fn pvar_examples() {
    assert_abs_diff_eq!(pvar_1d(&[0.0, 1.0, 0.0], 1.0).unwrap(), 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(pvar_1d(&[0.0, 1.0, 0.0], 2.0).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(pvar_1d(&[0.0, 0.1, 0.4, 0.45, 2.0], 1.0).unwrap(), 2.0, epsilon = 1e-15);
    let x = [0.0, 0.7, -0.2, 0.1, 0.9, 0.85, -0.4, 0.3, 0.0];
    for p in [1.0, 1.5, 2.0, 3.3] {
        assert_abs_diff_eq!(pvar_1d(&x, p).unwrap(), pvar_brute(&x, p), epsilon = 1e-12);
    }
}

/// Exhaustive mixed variation over all pairs of sub-dissections.
fn mixed_brute(t: &GridTable, gamma: f64, rho: f64) -> f64 {
    let subsets = |n: usize| -> Vec<Vec<usize>> {
        (0u32..(1 << (n - 2)))
            .map(|mask| {
                let mut idx = vec![0];
                idx.extend((0..n - 2).filter(|i| mask >> i & 1 == 1).map(|i| i + 1));
                idx.push(n - 1);
                idx
            })
            .collect()
    };
    let mut best: f64 = 0.0;
    for hs in subsets(t.h.len()) {
        for vs in subsets(t.v.len()) {
            let outer: f64 = vs
                .windows(2)
                .map(|v| {
                    hs.windows(2)
                        .map(|h| t.inc(h[0], h[1], v[0], v[1]).abs().powf(gamma))
                        .sum::<f64>()
                        .powf(rho / gamma)
                })
                .sum();
            best = best.max(outer);
        }
    }
    best.powf(1.0 / rho)
}

#[test]
fn exact_mode_is_the_exhaustive_supremum() {
    let m = CovarianceModel::fbm(0.3).unwrap();
    let g: Vec<f64> = (0..7).map(|i| i as f64 / 6.0).collect();
    let t = GridTable::from_model(&m, &g, &g).unwrap();
    for (gamma, rho) in [(1.0, 1.0), (1.0, 1.0 / 0.6), (1.5, 2.0)] {
        let exact = mixed_var_table(&t, gamma, rho, Mode::Exact).unwrap().value;
        assert_abs_diff_eq!(exact, mixed_brute(&t, gamma, rho), epsilon = 1e-12);
    }
}

#[test]
fn mode_ordering_and_brownian_value() {
    let m = CovarianceModel::fbm(0.3).unwrap();
    let sq = Rectangle::square(iv(0.0, 1.0));
    let g = Dissection::uniform(iv(0.0, 1.0), 9).unwrap();
    let rho = 1.0 / 0.6;
    let exact = mixed_var(&m, &sq, &g, &g, 1.0, rho, Mode::Exact).unwrap().value;
    let greedy = mixed_var(&m, &sq, &g, &g, 1.0, rho, Mode::Greedy).unwrap().value;
    let lower = mixed_var(&m, &sq, &g, &g, 1.0, rho, Mode::Lower).unwrap().value;
    assert!(lower <= greedy + 1e-12 && greedy <= exact + 1e-12);

    // for γ = ρ = 1 the full grid is optimal
    for n in 2..=8 {
        let g = Dissection::uniform(iv(0.0, 1.0), n).unwrap();
        let e = mixed_var(&m, &sq, &g, &g, 1.0, 1.0, Mode::Exact).unwrap().value;
        let l = mixed_var(&m, &sq, &g, &g, 1.0, 1.0, Mode::Lower).unwrap().value;
        assert_abs_diff_eq!(e, l, epsilon = 1e-12);
    }

    let too_big = Dissection::uniform(iv(0.0, 1.0), 13).unwrap();
    assert!(matches!(
        mixed_var(&m, &sq, &too_big, &too_big, 1.0, 1.0, Mode::Exact),
        Err(Error::TooLargeForExact { .. })
    ));
    assert!(matches!(mixed_var(&m, &sq, &g, &g, 0.5, 1.0, Mode::Lower), Err(Error::BadExponent(_))));
}

#[test]
fn vplus_examples() {
    let bm = CovarianceModel::fbm(0.5).unwrap();
    let g = Dissection::uniform(iv(0.0, 1.0), 9).unwrap();
    let v = vplus(&bm, &iv(0.0, 1.0), Region::Square, 1.0, 1.0, &g, Mode::Exact).unwrap().value;
    assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);

    // D region, γ = 1: when the near-diagonal increments are nonnegative the
    // inner sums collapse to σ² of the outer cells
    let f = CovarianceModel::fbm(0.3).unwrap();
    let g8 = Dissection::uniform(iv(0.0, 1.0), 8).unwrap();
    let t = GridTable::from_model(&f, &g8.points, &g8.points).unwrap();
    let rho = 1.0 / 0.6;
    let lower = vplus_table(&t, Region::D, 1.0, rho, Mode::Lower).unwrap().value;
    let oracle: f64 =
        g8.points.windows(2).map(|w| f.sigma2(w[0], w[1]).unwrap().powf(rho)).sum::<f64>().powf(1.0 / rho);
    assert_abs_diff_eq!(lower, oracle, epsilon = 1e-12);

    // three-way concatenation
    for (gamma, rho) in [(1.0, 1.0), (1.0, 1.5), (1.3, 2.0)] {
        let c = concatenation_constant(gamma, rho);
        let v = |r| vplus_table(&t, r, gamma, rho, Mode::Exact).unwrap().value;
        assert!(v(Region::Square) <= c * (v(Region::U) + v(Region::D) + v(Region::L)) + 1e-9);
    }
}

#[test]
fn scaling_slopes() {
    let bm = CovarianceModel::fbm(0.5).unwrap();
    let fit = scaling_fit(&bm, 1.0, 1.0, &dyadic_squares(0.0, 1.0, 5), 17).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.05);

    let f = CovarianceModel::fbm(0.3).unwrap();
    let fit = scaling_fit(&f, 1.0, 1.0 / 0.6, &dyadic_squares(0.0, 1.0, 5), 33).unwrap();
    assert!((fit.slope - 0.6).abs() < 0.1);

    let bi = CovarianceModel::bifbm(0.5, 0.5).unwrap();
    let fit = scaling_fit(&bi, 1.0, 2.0, &dyadic_squares(0.25, 0.5, 5), 33).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.1, "{}", fit.slope);
}
