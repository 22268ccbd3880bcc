use approx::assert_abs_diff_eq;

use gaussrough::error::Error;
use gaussrough::roughpath::{
    dist_homog, dist_homog_on, dist_inhomog, hnorm, identity_record, levy_area, signature, texp, tlog, Flavor,
    GroupElement, PairSet, PlPath,
};
use gaussrough::variation::pvar_1d;

fn path(points: &[[f64; 2]]) -> PlPath {
    let times = (0..points.len()).map(|i| i as f64 / (points.len() - 1) as f64).collect();
    PlPath::new(times, 2, points.iter().flatten().copied().collect()).unwrap()
}

#[test]
fn exp_and_log() {
    let v = [0.3, -1.2, 0.5];
    let g = texp(&v, 4).unwrap();
    let l = tlog(&g);
    assert_eq!(l.scalar(), 0.0);
    for (a, b) in l.level(1).iter().zip(&v) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }
    for i in 2..=4 {
        assert!(l.level(i).iter().all(|x| x.abs() < 1e-14));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert_abs_diff_eq!(hnorm(&g), norm, epsilon = 1e-14);
    assert_eq!(hnorm(&GroupElement::identity(3, 4).unwrap()), 0.0);
}

#[test]
fn straight_line_signature_is_the_exponential() {
    let p = path(&[[0.0, 0.0], [0.5, -0.25], [1.0, -0.5]]);
    let rec = signature(&p, 4).unwrap();
    let want = texp(&[1.0, -0.5], 4).unwrap();
    assert!(rec.end().tensor().max_abs_diff(want.tensor()) < 1e-14);
}

#[test]
fn level_two_matches_iterated_sums() {
    let pts = [[0.0, 0.0], [0.4, 1.0], [-0.3, 0.7], [1.1, -0.2], [0.6, 0.9]];
    let rec = signature(&path(&pts), 2).unwrap();
    let dx: Vec<[f64; 2]> = pts.windows(2).map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]]).collect();
    let l2 = rec.end().level(2);
    for i in 0..2 {
        for j in 0..2 {
            let mut s = 0.0;
            for a in 0..dx.len() {
                s += 0.5 * dx[a][i] * dx[a][j];
                for b in a + 1..dx.len() {
                    s += dx[a][i] * dx[b][j];
                }
            }
            assert_abs_diff_eq!(l2[i * 2 + j], s, epsilon = 1e-14);
        }
    }
}

#[test]
fn areas() {
    let square = path(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]);
    let rec = signature(&square, 2).unwrap();
    let a = levy_area(&rec, 0, 4);
    assert_abs_diff_eq!(a[1], 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(a[2], -1.0, epsilon = 1e-15);
    assert_eq!(a[0], 0.0);
    // half the square is a triangle of area 1/2
    assert_abs_diff_eq!(levy_area(&rec, 0, 2)[1], 0.5, epsilon = 1e-15);
    assert!(levy_area(&signature(&square, 1).unwrap(), 0, 4).iter().all(|&x| x == 0.0));
}

#[test]
fn distance_to_the_constant_path() {
    let p = path(&[[0.0, 0.0], [0.2, 0.5], [-0.1, 0.3], [0.4, -0.6], [0.0, 0.1]]);
    let x = signature(&p, 2).unwrap();
    let e = identity_record(&x.grid, 2, 2).unwrap();
    let beta = 0.4;
    let mut want: f64 = 0.0;
    for s in 0..5 {
        for t in s + 1..5 {
            want = want.max(hnorm(&x.increment(s, t)) / (x.grid[t] - x.grid[s]).powf(beta));
        }
    }
    assert_abs_diff_eq!(dist_homog(&x, &e, Flavor::Holder { beta }).unwrap(), want, epsilon = 1e-14);
    assert!(dist_homog_on(&x, &e, Flavor::Holder { beta }, PairSet::DyadicLags).unwrap() <= want + 1e-15);
    assert_eq!(dist_inhomog(&x, &x, beta).unwrap(), 0.0);

    // one dimension: the level-2 root |Δx|/√2 never dominates
    let vals = [0.0, 0.7, -0.2, 0.4, 0.35, 1.0];
    let times: Vec<f64> = (0..6).map(|i| i as f64).collect();
    let x1 = signature(&PlPath::new(times.clone(), 1, vals.to_vec()).unwrap(), 2).unwrap();
    let e1 = identity_record(&times, 1, 2).unwrap();
    for p in [1.0, 2.0, 3.5] {
        let d = dist_homog(&x1, &e1, Flavor::PVar { p }).unwrap();
        assert_abs_diff_eq!(d, pvar_1d(&vals, p).unwrap(), epsilon = 1e-13);
    }
    assert!(matches!(dist_homog(&x1, &e1, Flavor::PVar { p: 0.5 }), Err(Error::BadExponent(_))));
    let other = identity_record(&[0.0, 1.0], 1, 2).unwrap();
    assert!(matches!(dist_homog(&x1, &other, Flavor::Holder { beta }), Err(Error::GridMismatch(_))));
}
