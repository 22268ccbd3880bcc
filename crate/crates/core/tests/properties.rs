use proptest::prelude::*;

use gaussrough::covariance::{CovarianceModel, Interval, Rectangle};
use gaussrough::gaussian::{conditional_variance, sample_cholesky};
use gaussrough::roughpath::{dist_homog, hnorm, signature, texp, Flavor, GroupElement, PlPath};
use gaussrough::variation::{mixed_var_table, vplus_table, GridTable, Mode, Region};

fn model_strategy() -> impl Strategy<Value = CovarianceModel> {
    prop_oneof![
        (0.15f64..0.95).prop_map(|h| CovarianceModel::fbm(h).unwrap()),
        (0.2f64..0.9, 0.3f64..1.0).prop_map(|(h, k)| CovarianceModel::bifbm(h, k).unwrap()),
        (0.5f64..3.0).prop_map(|l| CovarianceModel::ou(l).unwrap()),
        Just(CovarianceModel::brownian_bridge(1.0).unwrap()),
    ]
}

/// Sorted distinct points of [0, 1] including both ends.
fn grid_strategy(max_inner: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..0.98, 0..=max_inner).prop_map(|mut v| {
        v.push(0.0);
        v.push(1.0);
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        v
    })
}

fn exponents() -> impl Strategy<Value = (f64, f64)> {
    (1.0f64..3.0, 1.0f64..3.0).prop_map(|(a, b)| (a.min(b), a.max(b)))
}

fn path_strategy(d: usize, max_len: usize) -> impl Strategy<Value = PlPath> {
    (2..=max_len).prop_flat_map(move |n| {
        prop::collection::vec(-1.0f64..1.0, n * d).prop_map(move |values| {
            let times = (0..n).map(|i| i as f64).collect();
            PlPath::new(times, d, values).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_is_symmetric(m in model_strategy(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        prop_assert!((m.eval(s, t).unwrap() - m.eval(t, s).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn rect_increment_is_additive(m in model_strategy(), mut p in prop::collection::vec(0.0f64..1.0, 5)) {
        p.sort_by(f64::total_cmp);
        let (a, b, c) = (p[0], p[1], p[2]);
        let j = Interval::new(p[3], p[4]).unwrap();
        let whole = m.rect_increment(&Rectangle::new(Interval::new(a, c).unwrap(), j)).unwrap();
        let left = m.rect_increment(&Rectangle::new(Interval::new(a, b).unwrap(), j)).unwrap();
        let right = m.rect_increment(&Rectangle::new(Interval::new(b, c).unwrap(), j)).unwrap();
        prop_assert!((whole - left - right).abs() < 1e-12);
    }

    #[test]
    fn rect_increment_obeys_cauchy_schwarz(m in model_strategy(), mut p in prop::collection::vec(0.0f64..1.0, 4)) {
        p.sort_by(f64::total_cmp);
        let i = Interval::new(p[0], p[2]).unwrap();
        let j = Interval::new(p[1], p[3]).unwrap();
        let r = m.rect_increment(&Rectangle::new(i, j)).unwrap();
        let si = m.sigma2(i.lo, i.hi).unwrap();
        let sj = m.sigma2(j.lo, j.hi).unwrap();
        prop_assert!(si >= -1e-14 && sj >= -1e-14);
        prop_assert!(r * r <= si * sj + 1e-12);
    }

    #[test]
    fn exponent_ordering(m in model_strategy(), g in grid_strategy(5), (gamma, rho) in exponents()) {
        let t = GridTable::from_model(&m, &g, &g).unwrap();
        let v = |a, b| mixed_var_table(&t, a, b, Mode::Exact).unwrap().value;
        let mid = v(gamma, rho);
        prop_assert!(v(rho, rho) <= mid + 1e-9);
        prop_assert!(mid <= v(gamma, gamma) + 1e-9);
    }

    #[test]
    fn variation_below_vplus(m in model_strategy(), g in grid_strategy(5), (gamma, rho) in exponents()) {
        let t = GridTable::from_model(&m, &g, &g).unwrap();
        let v = mixed_var_table(&t, gamma, rho, Mode::Exact).unwrap().value;
        let vp = vplus_table(&t, Region::Square, gamma, rho, Mode::Exact).unwrap().value;
        prop_assert!(v <= vp + 1e-9, "V = {v} > V+ = {vp}");
    }

    #[test]
    fn variation_triangle_inequality(
        m1 in model_strategy(),
        m2 in model_strategy(),
        g in grid_strategy(5),
        (gamma, rho) in exponents(),
    ) {
        let t1 = GridTable::from_model(&m1, &g, &g).unwrap();
        let t2 = GridTable::from_model(&m2, &g, &g).unwrap();
        let v = |t: &GridTable| mixed_var_table(t, gamma, rho, Mode::Exact).unwrap().value;
        prop_assert!(v(&t1.add(&t2).unwrap()) <= v(&t1) + v(&t2) + 1e-10);
    }

    #[test]
    fn lower_mode_is_deterministic(m in model_strategy(), g in grid_strategy(10)) {
        let t = GridTable::from_model(&m, &g, &g).unwrap();
        let a = mixed_var_table(&t, 1.0, 1.5, Mode::Lower).unwrap().value;
        let b = mixed_var_table(&t, 1.0, 1.5, Mode::Lower).unwrap().value;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn conditioning_reduces_variance(m in model_strategy(), n in 4usize..12, a in 0usize..100, b in 0usize..100) {
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let (s, t) = (a % (n - 1), 1 + b % (n - 1));
        prop_assume!(s < t);
        let cv = conditional_variance(&m, &grid, s, t).unwrap();
        let full = m.sigma2(grid[s], grid[t]).unwrap();
        prop_assert!(cv.value >= -1e-10);
        prop_assert!(cv.value <= full + 1e-10);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>()) {
        let m = CovarianceModel::fbm(0.4).unwrap();
        let grid: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let a = sample_cholesky(&m, &grid, 2, 3, seed).unwrap();
        let b = sample_cholesky(&m, &grid, 2, 3, seed).unwrap();
        prop_assert_eq!(a.data, b.data);
    }

    #[test]
    fn chen_identity(p in path_strategy(3, 12), depth in 1usize..=4, cut in 0usize..100) {
        let rec = signature(&p, depth).unwrap();
        let n = rec.grid.len();
        let u = cut % n;
        let lhs = rec.increment(0, u).mul(&rec.increment(u, n - 1)).unwrap();
        prop_assert!(lhs.tensor().max_abs_diff(rec.end().tensor()) < 1e-10);
    }

    #[test]
    fn group_is_closed(x in prop::collection::vec(-1.0f64..1.0, 2), y in prop::collection::vec(-1.0f64..1.0, 2)) {
        let g = texp(&x, 2).unwrap().mul(&texp(&y, 2).unwrap()).unwrap();
        prop_assert!(g.symmetric_part_defect() < 1e-12);
        let e = g.mul(&g.inverse()).unwrap();
        prop_assert!(e.tensor().max_abs_diff(GroupElement::identity(2, 2).unwrap().tensor()) < 1e-12);
    }

    #[test]
    fn hnorm_is_homogeneous(x in prop::collection::vec(-1.0f64..1.0, 3), lambda in 0.1f64..5.0) {
        let g = texp(&x, 3).unwrap();
        prop_assert!((hnorm(&g.dilate(lambda)) - lambda * hnorm(&g)).abs() < 1e-12 * (1.0 + lambda));
    }

    #[test]
    fn signature_ignores_reparametrization(p in path_strategy(2, 8)) {
        // strictly increasing time change
        let times: Vec<f64> = p.times.iter().map(|t| t * t + t).collect();
        let q = PlPath::new(times, p.d, p.values.clone()).unwrap();
        let a = signature(&p, 3).unwrap();
        let b = signature(&q, 3).unwrap();
        prop_assert!(a.end().tensor().max_abs_diff(b.end().tensor()) < 1e-12);
    }

    #[test]
    fn homogeneous_distance_is_a_metric(
        v1 in prop::collection::vec(-1.0f64..1.0, 16),
        v2 in prop::collection::vec(-1.0f64..1.0, 16),
        v3 in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let times: Vec<f64> = (0..8).map(|i| i as f64 / 7.0).collect();
        let rec = |v: &Vec<f64>| signature(&PlPath::new(times.clone(), 2, v.clone()).unwrap(), 2).unwrap();
        let (x, y, z) = (rec(&v1), rec(&v2), rec(&v3));
        let f = Flavor::Holder { beta: 0.3 };
        let dxy = dist_homog(&x, &y, f).unwrap();
        prop_assert!((dxy - dist_homog(&y, &x, f).unwrap()).abs() < 1e-12);
        prop_assert_eq!(dist_homog(&x, &x, f).unwrap(), 0.0);
        let dxz = dist_homog(&x, &z, f).unwrap();
        let dzy = dist_homog(&z, &y, f).unwrap();
        prop_assert!(dxy <= dxz + dzy + 1e-9);
    }
}
