//! Adaptive Gauss–Kronrod quadrature and Wynn acceleration.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive G7K15 on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
        let (v, err) = gk15(f, a, b);
        if !v.is_finite() {
            return Err(Error::QuadratureFailed(format!("non-finite integrand on [{a}, {b}]")));
        }
        // below ~1e-13 relative the error estimate is rounding noise
        if err <= tol.max(1e-13 * v.abs()) || (b - a).abs() < 1e-14 * a.abs().max(1.0) {
            return Ok(v);
        }
        if depth == 0 {
            return Err(Error::QuadratureFailed(format!("no convergence on [{a}, {b}], error estimate {err:e}")));
        }
        let m = 0.5 * (a + b);
        Ok(rec(f, a, m, 0.5 * tol, depth - 1)? + rec(f, m, b, 0.5 * tol, depth - 1)?)
    }
    rec(f, a, b, tol, 48)
}

/// Limit of a slowly converging sequence of partial sums via Wynn's epsilon
/// algorithm. Returns the accelerated value and the last change.
pub fn wynn_limit(partial: &[f64]) -> (f64, f64) {
    let n = partial.len();
    if n < 3 {
        let last = partial.last().copied().unwrap_or(0.0);
        return (last, f64::INFINITY);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial.to_vec();
    let mut best = *partial.last().unwrap();
    let mut best_change = (partial[n - 1] - partial[n - 2]).abs();
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                next.push(f64::INFINITY);
            } else {
                next.push(prev[i + 1] + 1.0 / d);
            }
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 && cur.len() >= 2 {
            let a = cur[cur.len() - 1];
            let b = cur[cur.len() - 2];
            if a.is_finite() && b.is_finite() {
                let change = (a - b).abs();
                if change < best_change {
                    best = a;
                    best_change = change;
                }
            }
        }
    }
    (best, best_change)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(&|x: f64| x * x * x - x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_singularity() {
        let v = integrate(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=20)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        let (v, _) = wynn_limit(&partial);
        assert!((v - 2f64.ln()).abs() < 1e-10, "{v}");
    }
}
