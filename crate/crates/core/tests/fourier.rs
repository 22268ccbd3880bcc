use std::f64::consts::PI;

use approx::assert_abs_diff_eq;

use gaussrough::error::Error;
use gaussrough::fourier::special::{gamma, polycos, zeta};

use gaussrough::fourier::{
    convexity_check, cosine_series, dirichlet, fejer_cont, fejer_convexity_probe, fejer_discrete, holder_estimate,
    spectral_cov, spectral_sigma2, tv_bound, CoefficientRule, CoefficientSequence, SpectralDensity, TruncationPolicy,
    TvCase,
};

#[test]
fn special_functions() {
    assert_abs_diff_eq!(gamma(5.0), 24.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gamma(0.5), PI.sqrt(), epsilon = 1e-13);
    assert_abs_diff_eq!(zeta(2.0), PI * PI / 6.0, epsilon = 1e-13);
    assert_abs_diff_eq!(zeta(4.0), PI.powi(4) / 90.0, epsilon = 1e-13);
    // Σ cos(kx)/k² is a quadratic on [0, 2π]
    for &x in &[0.0, 0.4, 1.0, 3.0, 6.0] {
        let want = PI * PI / 6.0 - PI * x / 2.0 + x * x / 4.0;
        assert_abs_diff_eq!(polycos(2.0, x).unwrap(), want, epsilon = 1e-12);
    }
}

#[test]
fn series_evaluation_matches_closed_forms() {
    let rule = CoefficientRule::power(2.0);
    let v = cosine_series(&rule, 1.3, TruncationPolicy::default()).unwrap();
    assert_abs_diff_eq!(v, PI * PI / 6.0 - PI * 1.3 / 2.0 + 1.69 / 4.0, epsilon = 1e-10);

    // Σ e^{-k²τ} cos(kx) summed far past the tolerance
    let g = CoefficientRule::Gaussian { tau: 0.3 };
    let direct: f64 = (1..200).map(|k| (-(k * k) as f64 * 0.3).exp() * (k as f64 * 0.7).cos()).sum();
    assert_abs_diff_eq!(cosine_series(&g, 0.7, TruncationPolicy::default()).unwrap(), direct, epsilon = 1e-10);

    let r = cosine_series(&CoefficientRule::power(0.8), 0.0, TruncationPolicy::default());
    assert!(matches!(r, Err(Error::TailNotControlled { .. })));
}

#[test]
fn kernels() {
    for &t in &[0.3, 1.0, 2.5] {
        for n in [1u64, 4, 11] {
            let d = ((n as f64 + 0.5) * t).sin() / (0.5 * t).sin();
            assert_abs_diff_eq!(dirichlet(n, t), d, epsilon = 1e-11);
            let f = ((n as f64 + 1.0) * t / 2.0).sin().powi(2) / ((n as f64 + 1.0) * (t / 2.0).sin().powi(2));
            assert_abs_diff_eq!(fejer_discrete(n, t), f, epsilon = 1e-11);
        }
    }
    assert_eq!(dirichlet(5, 0.0), 11.0);
    assert_abs_diff_eq!(fejer_cont(2.0, 0.0), 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(fejer_cont(2.0, 0.5), (1.0 - 1f64.cos()) / 0.25, epsilon = 1e-14);
}

#[test]
fn convexity() {
    let ok = CoefficientSequence::symmetric(CoefficientRule::power(1.8), 100_000);
    let v = convexity_check(&ok, 100_000);
    assert!(v.pass, "{v:?}");

    let alt = CoefficientSequence::symmetric(CoefficientRule::AlternatingPower { scale: 1.0, exponent: 2.0 }, 10_000);
    let v = convexity_check(&alt, 10_000);
    assert!(!v.pass);
    assert!(!v.weighted_concave);
}

#[test]
fn total_variation_bounds() {
    // |Δ²(1/k)| (k+1) = 2/(k(k+2)), which telescopes to 3/2
    let tv = tv_bound(&CoefficientRule::power(1.0), TvCase::QuasiConvex, 100_000).unwrap();
    assert_abs_diff_eq!(tv.bound, 1.5, epsilon = 1e-8);
    assert_eq!(tv.limit_b, 0.0);

    let g = CoefficientRule::Gaussian { tau: 0.5 };
    let tv = tv_bound(&g, TvCase::MonotoneMajorant, 1000).unwrap();
    assert!(tv.bound <= 2.0);

    let slow = tv_bound(&CoefficientRule::power(0.5), TvCase::L1, 1000);
    assert!(matches!(slow, Err(Error::Diverges(_))));
}

#[test]
fn holder_exponents_from_series() {
    let sample = |rule: &CoefficientRule| -> Vec<f64> {
        let step = 2.0 * PI / 4096.0;
        (0..512).map(|i| cosine_series(rule, i as f64 * step, TruncationPolicy::default()).unwrap()).collect()
    };
    let step = 2.0 * PI / 4096.0;
    let fit = holder_estimate(&sample(&CoefficientRule::power(2.0)), step, 8).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.05, "{}", fit.slope);
    let fit = holder_estimate(&sample(&CoefficientRule::power(1.8)), step, 8).unwrap();
    assert!((fit.slope - 0.8).abs() < 0.05, "{}", fit.slope);
}

#[test]
fn spectral_covariances() {
    let f = SpectralDensity::indicator(1.0, 0.5).unwrap();
    for &x in &[0.5f64, 2.0, 9.0] {
        assert_abs_diff_eq!(spectral_cov(&f, x).unwrap(), x.sin() / x, epsilon = 1e-9);
    }
    let g = SpectralDensity::gaussian();
    for &x in &[0.0f64, 1.0, 2.5] {
        assert_abs_diff_eq!(spectral_cov(&g, x).unwrap(), (-0.5 * x * x).exp(), epsilon = 1e-9);
    }

    // fOU: σ²(t)/t^{2H} stays bounded near 0
    let fou = SpectralDensity::fractional_ou(0.4, 1.0).unwrap();
    let ratios: Vec<f64> =
        [1e-1f64, 1e-2, 1e-3].iter().map(|&t| spectral_sigma2(&fou, t).unwrap() / t.powf(0.8)).collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.1 && *r < 10.0), "{ratios:?}");
    assert!((ratios[2] / ratios[1] - 1.0).abs() < 0.1);

    // whole-line heat equation: σ²(t) ~ t^{2α−1}
    let she = SpectralDensity::whole_line_she(0.9, 1.0).unwrap();
    let (a, b) = (spectral_sigma2(&she, 1e-3).unwrap(), spectral_sigma2(&she, 1e-4).unwrap());
    let slope = (a / b).log10();
    assert!((slope - 0.8).abs() < 0.05, "{slope}");
}

#[test]
fn fejer_probe_signs() {
    let xs = [0.25, 0.5, 1.0, 2.0];
    let she = SpectralDensity::whole_line_she(0.9, 1.0).unwrap();
    let p = fejer_convexity_probe(&she, &xs, 200.0, 1e-9).unwrap();
    assert!(p.nonpositive_near_zero, "{:?}", p.values);

    let g = SpectralDensity::gaussian();
    let p = fejer_convexity_probe(&g, &xs, 40.0, 1e-9).unwrap();
    assert!(p.values.iter().any(|&(_, v)| v > 1e-9), "{:?}", p.values);
}
