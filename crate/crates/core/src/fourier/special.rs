//! Gamma, Riemann zeta and power-law cosine series.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos approximation, reflected below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::NAN;
        }
        return PI / (s * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

// B_{2j} / (2j)!
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
    43_867.0 / 798.0 / 6_402_373_705_728_000.0,
    -174_611.0 / 330.0 / 2_432_902_008_176_640_000.0,
];

/// Riemann zeta on the real line. Euler–Maclaurin for z ≥ 0, functional
/// equation below.
pub fn zeta(z: f64) -> f64 {
    if z == 1.0 {
        return f64::INFINITY;
    }
    if z < 0.0 {
        let half = 0.5 * z;
        if half == half.floor() {
            return 0.0; // trivial zeros
        }
        return 2f64.powf(z) * PI.powf(z - 1.0) * (PI * half).sin() * gamma(1.0 - z) * zeta(1.0 - z);
    }
    const N: usize = 20;
    let n = N as f64;
    let mut s = 0.0;
    for k in 1..N {
        s += (k as f64).powf(-z);
    }
    s += 0.5 * n.powf(-z) + n.powf(1.0 - z) / (z - 1.0);
    // rising factorial z (z+1) ... (z+2j-2)
    let mut rising = z;
    let mut npow = n.powf(-z - 1.0);
    for (j, &b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        s += b * rising * npow;
        let j2 = 2.0 * j as f64;
        rising *= (z + j2 + 1.0) * (z + j2 + 2.0);
        npow /= n * n;
    }
    s
}

struct SeriesCoefs {
    lead: f64,
    /// `(-1)^m ζ(s-2m)/(2m)!`
    taylor: Vec<f64>,
}

thread_local! {
    static COEF_CACHE: std::cell::RefCell<std::collections::HashMap<u64, std::rc::Rc<SeriesCoefs>>> =
        std::cell::RefCell::new(std::collections::HashMap::new());
}

fn series_coefs(s: f64) -> std::rc::Rc<SeriesCoefs> {
    COEF_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(s.to_bits())
            .or_insert_with(|| {
                // Γ(1-s) sin(πs/2) rewritten without the pole at even s
                let lead = PI / (2.0 * (0.5 * PI * s).cos() * gamma(s));
                let mut taylor = Vec::with_capacity(34);
                let mut fact = 1.0;
                for m in 0..34 {
                    let m2 = 2.0 * m as f64;
                    if m > 0 {
                        fact *= (m2 - 1.0) * m2;
                    }
                    let z = zeta(s - m2) / fact;
                    taylor.push(if m % 2 == 0 { z } else { -z });
                }
                std::rc::Rc::new(SeriesCoefs { lead, taylor })
            })
            .clone()
    })
}

fn near_odd_integer(s: f64) -> bool {
    let r = (s - 1.0) / 2.0;
    (r - r.round()).abs() < 1e-9
}

/// True when [`polycos`] has a closed form for this exponent.
pub fn polycos_supported(s: f64) -> bool {
    s > 0.0 && (s == 1.0 || !near_odd_integer(s))
}

/// `Σ_{k≥1} k^{-s} cos(kx)` for `s > 0`, summed in closed form.
///
/// Uses the expansion around the origin
/// `Γ(1-s) sin(πs/2) x^{s-1} + Σ_m (-1)^m ζ(s-2m) x^{2m}/(2m)!`, valid for
/// `0 < x ≤ π`, together with the symmetry `x ↦ 2π - x`. Returns `None`
/// for odd integer `s ≥ 3`, where the expansion degenerates.
pub fn polycos(s: f64, x: f64) -> Option<f64> {
    if !polycos_supported(s) {
        return None;
    }
    let two_pi = 2.0 * PI;
    let mut x = x.rem_euclid(two_pi);
    if x > PI {
        x = two_pi - x;
    }
    if x == 0.0 {
        return Some(if s > 1.0 { zeta(s) } else { f64::INFINITY });
    }
    if s == 1.0 {
        return Some(-(2.0 * (0.5 * x).sin()).ln());
    }
    let coefs = series_coefs(s);
    let mut total = coefs.lead * x.powf(s - 1.0);
    let x2 = x * x;
    let mut pow = 1.0;
    for &c in &coefs.taylor {
        total += c * pow;
        pow *= x2;
    }
    Some(total)
}

/// Forward differences `(Δc, Δ²c)` of `c_k = k^{-e}` at `k ≥ 1`, computed
/// through `expm1`/`log1p` so that they keep relative accuracy for large `k`.
pub fn power_diffs(e: f64, k: f64) -> (f64, f64) {
    let base = k.powf(-e);
    let r1 = (-e * (1.0 / k).ln_1p()).exp_m1();
    let r2 = (-e * (2.0 / k).ln_1p()).exp_m1();
    (base * r1, base * (r2 - 2.0 * r1))
}
