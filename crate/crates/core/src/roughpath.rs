//! Truncated tensor algebra over `d` letters, signatures of piecewise-linear
//! paths, homogeneous norms and rough path distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variation::pvar_dp;

pub const MAX_LEVEL: usize = 5;
pub const MAX_DIM: usize = 4;

/// Element of `T^N(ℝ^d) = ℝ ⊕ ℝ^d ⊕ … ⊕ (ℝ^d)^{⊗N}`, levels stored
/// contiguously; level `i` holds `d^i` entries in lexicographic word order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedTensor {
    pub d: usize,
    pub depth: usize,
    data: Vec<f64>,
}

fn offsets(d: usize, depth: usize) -> Vec<usize> {
    let mut off = Vec::with_capacity(depth + 2);
    let mut acc = 0;
    let mut size = 1;
    for _ in 0..=depth {
        off.push(acc);
        acc += size;
        size *= d;
    }
    off.push(acc);
    off
}

impl TruncatedTensor {
    pub fn zero(d: usize, depth: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM || depth == 0 || depth > MAX_LEVEL {
            return Err(Error::DimensionMismatch(format!(
                "supported sizes are 1 ≤ d ≤ {MAX_DIM}, 1 ≤ N ≤ {MAX_LEVEL}; got d = {d}, N = {depth}"
            )));
        }
        let total = offsets(d, depth)[depth + 1];
        Ok(TruncatedTensor { d, depth, data: vec![0.0; total] })
    }

    pub fn one(d: usize, depth: usize) -> Result<Self> {
        let mut t = Self::zero(d, depth)?;
        t.data[0] = 1.0;
        Ok(t)
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        let mut start = 0;
        let mut size = 1;
        for _ in 0..i {
            start += size;
            size *= self.d;
        }
        start..start + size
    }

    pub fn level(&self, i: usize) -> &[f64] {
        let r = self.range(i);
        &self.data[r]
    }

    pub fn level_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.range(i);
        &mut self.data[r]
    }

    pub fn scalar(&self) -> f64 {
        self.data[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.depth != other.depth {
            return Err(Error::DimensionMismatch(format!(
                "(d, N) = ({}, {}) vs ({}, {})",
                self.d, self.depth, other.d, other.depth
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(TruncatedTensor { d: self.d, depth: self.depth, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(TruncatedTensor { d: self.d, depth: self.depth, data })
    }

    pub fn scale(&self, c: f64) -> Self {
        TruncatedTensor { d: self.d, depth: self.depth, data: self.data.iter().map(|x| c * x).collect() }
    }

    /// Multiplies level `i` by `λ^i`.
    pub fn dilate(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        let mut f = 1.0;
        for i in 0..=self.depth {
            for x in out.level_mut(i) {
                *x *= f;
            }
            f *= lambda;
        }
        out
    }

    /// Graded product truncated at level `N`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.d, self.depth)?;
        mul_into(self, other, &mut out);
        Ok(out)
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn mul_into(x: &TruncatedTensor, y: &TruncatedTensor, out: &mut TruncatedTensor) {
    let d = x.d;
    let off = offsets(d, x.depth);
    for v in out.data.iter_mut() {
        *v = 0.0;
    }
    for n in 0..=x.depth {
        for i in 0..=n {
            let j = n - i;
            let xi = &x.data[off[i]..off[i + 1]];
            let yj = &y.data[off[j]..off[j + 1]];
            let dst = &mut out.data[off[n]..off[n + 1]];
            let w = yj.len();
            for (a, &xa) in xi.iter().enumerate() {
                if xa == 0.0 {
                    continue;
                }
                let row = &mut dst[a * w..(a + 1) * w];
                for (r, &yb) in row.iter_mut().zip(yj) {
                    *r += xa * yb;
                }
            }
        }
    }
}

/// `x ⊗ y`.
pub fn tensor_mul(x: &TruncatedTensor, y: &TruncatedTensor) -> Result<TruncatedTensor> {
    x.mul(y)
}

/// Element of the step-`N` free nilpotent group: a tensor with scalar part 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement(pub TruncatedTensor);

impl GroupElement {
    pub fn identity(d: usize, depth: usize) -> Result<Self> {
        Ok(GroupElement(TruncatedTensor::one(d, depth)?))
    }

    pub fn from_tensor(t: TruncatedTensor) -> Result<Self> {
        if (t.scalar() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("group elements have scalar part 1".into()));
        }
        Ok(GroupElement(t))
    }

    pub fn tensor(&self) -> &TruncatedTensor {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.d
    }

    pub fn depth(&self) -> usize {
        self.0.depth
    }

    pub fn level(&self, i: usize) -> &[f64] {
        self.0.level(i)
    }

    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        Ok(GroupElement(self.0.mul(&other.0)?))
    }

    /// `g^{-1} = Σ_k (−1)^k (g − 1)^{⊗k}`, evaluated by Horner's scheme.
    pub fn inverse(&self) -> GroupElement {
        let mut a = self.0.clone();
        a.data[0] = 0.0;
        let one = TruncatedTensor::one(a.d, a.depth).expect("valid shape");
        let mut r = one.clone();
        let mut tmp = one.clone();
        for _ in 0..a.depth {
            mul_into(&a, &r, &mut tmp);
            for (ri, (&oi, &ti)) in r.data.iter_mut().zip(one.data.iter().zip(&tmp.data)) {
                *ri = oi - ti;
            }
        }
        GroupElement(r)
    }

    pub fn dilate(&self, lambda: f64) -> GroupElement {
        GroupElement(self.0.dilate(lambda))
    }

    /// Largest deviation of the symmetric part of level 2 from `½ x¹ ⊗ x¹`.
    pub fn symmetric_part_defect(&self) -> f64 {
        if self.depth() < 2 {
            return 0.0;
        }
        let d = self.d();
        let l1 = self.level(1);
        let l2 = self.level(2);
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let sym = 0.5 * (l2[i * d + j] + l2[j * d + i]);
                worst = worst.max((sym - 0.5 * l1[i] * l1[j]).abs());
            }
        }
        worst
    }
}

/// `exp(v) = Σ v^{⊗i}/i!`.
pub fn texp(v: &[f64], depth: usize) -> Result<GroupElement> {
    let d = v.len();
    let mut t = TruncatedTensor::one(d, depth)?;
    t.level_mut(1).copy_from_slice(v);
    for i in 2..=depth {
        let prev = t.level(i - 1).to_vec();
        let inv = 1.0 / i as f64;
        let dst = t.level_mut(i);
        for (a, &pa) in prev.iter().enumerate() {
            for (b, &vb) in v.iter().enumerate() {
                dst[a * d + b] = pa * vb * inv;
            }
        }
    }
    Ok(GroupElement(t))
}

/// `log(g) = Σ_k (−1)^{k+1} (g − 1)^{⊗k}/k`.
pub fn tlog(g: &GroupElement) -> TruncatedTensor {
    let mut a = g.0.clone();
    a.data[0] = 0.0;
    let mut sum = a.clone();
    let mut pow = a.clone();
    for k in 2..=a.depth {
        pow = pow.mul(&a).expect("same shape");
        let c = if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64;
        for (s, p) in sum.data.iter_mut().zip(&pow.data) {
            *s += c * p;
        }
    }
    sum
}

/// Max-of-roots homogeneous norm `max_i |g_i|^{1/i}` (Frobenius norms),
/// symmetrized over `g` and `g^{-1}` so that the induced distance is
/// symmetric.
pub fn hnorm(g: &GroupElement) -> f64 {
    raw_hnorm(g).max(raw_hnorm(&g.inverse()))
}

fn raw_hnorm(g: &GroupElement) -> f64 {
    (1..=g.depth())
        .map(|i| {
            let f = g.level(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            f.powf(1.0 / i as f64)
        })
        .fold(0.0, f64::max)
}

/// A piecewise-linear path in `ℝ^d`: times and row-major points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlPath {
    pub times: Vec<f64>,
    pub d: usize,
    pub values: Vec<f64>,
}

impl PlPath {
    pub fn new(times: Vec<f64>, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != times.len() * d {
            return Err(Error::DimensionMismatch("path values do not match times × d".into()));
        }
        if times.len() < 2 {
            return Err(Error::InvalidParameter("a path needs at least 2 points".into()));
        }
        Ok(PlPath { times, d, values })
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}

/// Level-`N` lift of a path: group elements at each grid time, starting at
/// the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoughPathRecord {
    pub grid: Vec<f64>,
    pub elements: Vec<GroupElement>,
    pub beta: Option<f64>,
}

impl RoughPathRecord {
    pub fn d(&self) -> usize {
        self.elements[0].d()
    }

    pub fn depth(&self) -> usize {
        self.elements[0].depth()
    }

    /// `X_{s,t} = X_s^{-1} ⊗ X_t` for grid indices.
    pub fn increment(&self, s: usize, t: usize) -> GroupElement {
        self.elements[s].inverse().mul(&self.elements[t]).expect("same shape")
    }

    pub fn end(&self) -> &GroupElement {
        self.elements.last().unwrap()
    }
}

/// Chen construction: running product of the exponentials of the segment
/// increments.
pub fn signature(path: &PlPath, depth: usize) -> Result<RoughPathRecord> {
    let d = path.d;
    let mut cur = GroupElement::identity(d, depth)?;
    let mut elements = Vec::with_capacity(path.times.len());
    elements.push(cur.clone());
    let mut out = TruncatedTensor::zero(d, depth)?;
    let mut inc = vec![0.0; d];
    for i in 1..path.times.len() {
        for (k, x) in inc.iter_mut().enumerate() {
            *x = path.point(i)[k] - path.point(i - 1)[k];
        }
        let e = texp(&inc, depth)?;
        mul_into(&cur.0, &e.0, &mut out);
        std::mem::swap(&mut cur.0, &mut out);
        elements.push(cur.clone());
    }
    Ok(RoughPathRecord { grid: path.times.clone(), elements, beta: None })
}

/// Antisymmetric part of level 2 of `X_{s,t}`, row-major `d × d`.
pub fn levy_area(record: &RoughPathRecord, s: usize, t: usize) -> Vec<f64> {
    let g = record.increment(s, t);
    let d = g.d();
    if g.depth() < 2 {
        return vec![0.0; d * d];
    }
    let l2 = g.level(2);
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = 0.5 * (l2[i * d + j] - l2[j * d + i]);
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Holder { beta: f64 },
    PVar { p: f64 },
}

/// Grid pairs over which sups are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSet {
    All,
    /// Pairs `(i, i + 2^j)`: a cheaper lower bound for the sup.
    DyadicLags,
}

impl PairSet {
    pub fn pairs(&self, n: usize) -> Vec<(usize, usize)> {
        match self {
            PairSet::All => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            PairSet::DyadicLags => {
                let mut v = Vec::new();
                let mut lag = 1;
                while lag < n {
                    v.extend((0..n - lag).map(|i| (i, i + lag)));
                    lag *= 2;
                }
                v
            }
        }
    }
}

fn check_compatible(x: &RoughPathRecord, y: &RoughPathRecord) -> Result<()> {
    if x.grid.len() != y.grid.len() || x.grid.iter().zip(&y.grid).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::GridMismatch("records live on different grids".into()));
    }
    if x.d() != y.d() || x.depth() != y.depth() {
        return Err(Error::GridMismatch("records differ in dimension or level".into()));
    }
    Ok(())
}

/// Increments of both records over a pair, with precomputed inverses.
struct PairIncrements<'a> {
    x: &'a RoughPathRecord,
    y: &'a RoughPathRecord,
    xi: Vec<GroupElement>,
    yi: Vec<GroupElement>,
}

impl<'a> PairIncrements<'a> {
    fn new(x: &'a RoughPathRecord, y: &'a RoughPathRecord) -> Self {
        PairIncrements {
            x,
            y,
            xi: x.elements.iter().map(|g| g.inverse()).collect(),
            yi: y.elements.iter().map(|g| g.inverse()).collect(),
        }
    }

    fn get(&self, s: usize, t: usize) -> (GroupElement, GroupElement) {
        (
            self.xi[s].mul(&self.x.elements[t]).expect("same shape"),
            self.yi[s].mul(&self.y.elements[t]).expect("same shape"),
        )
    }

    fn mismatch(&self, s: usize, t: usize) -> f64 {
        let (a, b) = self.get(s, t);
        hnorm(&a.inverse().mul(&b).expect("same shape"))
    }
}

/// Homogeneous distance over all grid pairs.
pub fn dist_homog(x: &RoughPathRecord, y: &RoughPathRecord, flavor: Flavor) -> Result<f64> {
    dist_homog_on(x, y, flavor, PairSet::All)
}

/// Homogeneous distance with the Hölder sup restricted to a pair set.
pub fn dist_homog_on(x: &RoughPathRecord, y: &RoughPathRecord, flavor: Flavor, pairs: PairSet) -> Result<f64> {
    check_compatible(x, y)?;
    let inc = PairIncrements::new(x, y);
    match flavor {
        Flavor::Holder { beta } => Ok(pairs
            .pairs(x.grid.len())
            .into_iter()
            .map(|(s, t)| inc.mismatch(s, t) / (x.grid[t] - x.grid[s]).powf(beta))
            .fold(0.0, f64::max)),
        Flavor::PVar { p } => {
            if p < 1.0 {
                return Err(Error::BadExponent(format!("p = {p} < 1")));
            }
            let n = x.grid.len();
            Ok(pvar_dp(n, |s, t| inc.mismatch(s, t).powf(p)).powf(1.0 / p))
        }
    }
}

/// Inhomogeneous β-Hölder distance over all grid pairs.
pub fn dist_inhomog(x: &RoughPathRecord, y: &RoughPathRecord, beta: f64) -> Result<f64> {
    dist_inhomog_on(x, y, beta, PairSet::All)
}

pub fn dist_inhomog_on(x: &RoughPathRecord, y: &RoughPathRecord, beta: f64, pairs: PairSet) -> Result<f64> {
    check_compatible(x, y)?;
    let inc = PairIncrements::new(x, y);
    let depth = x.depth();
    let mut best = 0.0f64;
    for (s, t) in pairs.pairs(x.grid.len()) {
        let (a, b) = inc.get(s, t);
        let dt = x.grid[t] - x.grid[s];
        for i in 1..=depth {
            let diff = a.level(i).iter().zip(b.level(i)).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            best = best.max(diff / dt.powf(i as f64 * beta));
        }
    }
    Ok(best)
}

/// The constant path at the identity on a grid.
pub fn identity_record(grid: &[f64], d: usize, depth: usize) -> Result<RoughPathRecord> {
    let e = GroupElement::identity(d, depth)?;
    Ok(RoughPathRecord { grid: grid.to_vec(), elements: vec![e; grid.len()], beta: None })
}
