//! Rational points on a quadric and totally isotropic subspaces.
//!
//! A rational projective point is stored as a primitive integer vector
//! with the sign convention that the last nonzero coordinate is
//! positive. Three enumerators are provided:
//!
//! - [`enumerate_bruteforce`]: exhaustive scan of the height box with
//!   two-sided interval pruning and an exact quadratic solve for the
//!   first coordinate;
//! - [`enumerate_parametrized`]: lines through a base point, used as a
//!   cross-check oracle (the two must agree as sets);
//! - [`enumerate_near`]: scan restricted to a thin cone around a real
//!   direction, which is what makes high-height best-approximation
//!   scans feasible.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Rat};
use crate::quadform::QuadraticForm;

#[derive(Debug, Error, PartialEq)]
pub enum PointError {
    #[error("cannot canonicalize the zero vector")]
    ZeroVector,
    #[error("coordinate overflow while canonicalizing")]
    Overflow,
    #[error("base point invalid: must be isotropic, outside the kernel, on a nonsingular form")]
    BasePointInvalid,
    #[error("point {index} is not on the quadric: Q(v) = {value}")]
    NotOnQuadric { index: usize, value: i128 },
    #[error("points {i} and {j} are not B-orthogonal: B = {value}")]
    NotIsotropicPair { i: usize, j: usize, value: i128 },
    #[error("cone enumeration needs radius below {max_radius}, got {radius}")]
    ConeTooWide { radius: f64, max_radius: f64 },
}

/// A point of P^n(Q): primitive integer coordinates, last nonzero
/// coordinate positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RationalProjectivePoint {
    coords: Vec<i64>,
}

impl RationalProjectivePoint {
    pub fn canonicalize(v: Vec<i64>) -> Result<Self, PointError> {
        Self::canonicalize_i128(v.into_iter().map(i128::from).collect())
    }

    pub fn canonicalize_i128(mut v: Vec<i128>) -> Result<Self, PointError> {
        let mut g: i128 = 0;
        for &x in &v {
            g = g.gcd(&x);
        }
        if g == 0 {
            return Err(PointError::ZeroVector);
        }
        for x in v.iter_mut() {
            *x /= g;
        }
        let last_nonzero = v.iter().rposition(|&x| x != 0).expect("nonzero");
        if v[last_nonzero] < 0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        let coords: Option<Vec<i64>> = v.into_iter().map(|x| x.to_i64()).collect();
        Ok(Self { coords: coords.ok_or(PointError::Overflow)? })
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    /// H(v) = max |v_i| over the primitive representative.
    pub fn height(&self) -> i64 {
        self.coords.iter().map(|&x| x.abs()).max().unwrap_or(0)
    }

    /// Unit f64 representative (sign as stored).
    pub fn to_unit(&self) -> Vec<f64> {
        let norm =
            self.coords.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
        self.coords.iter().map(|&x| x as f64 / norm).collect()
    }
}

/// Basis of a totally isotropic rational subspace: independent primitive
/// isotropic vectors with all pairwise bilinear values zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsotropicSubspace {
    basis: Vec<RationalProjectivePoint>,
}

impl IsotropicSubspace {
    pub fn basis(&self) -> &[RationalProjectivePoint] {
        &self.basis
    }

    /// Linear dimension of the span (projective dimension plus one).
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QRankBounds {
    pub lower: usize,
    pub upper: usize,
    pub witness: Option<IsotropicSubspace>,
    pub obstruction: Option<u64>,
}

/// Exact integer square root; `None` if `n` is not a perfect square.
fn exact_isqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    if n == 0 {
        return Some(0);
    }
    let mut r = (n as f64).sqrt() as i128;
    while r > 0 && r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    (r * r == n).then_some(r)
}

/// Integer roots of a x^2 + b x + c = 0. When a = b = 0 and c = 0 every
/// integer is a root; that case is signalled by `None`.
fn integer_quadratic_roots(a: i128, b: i128, c: i128) -> Option<Vec<i128>> {
    if a == 0 {
        if b == 0 {
            return if c == 0 { None } else { Some(vec![]) };
        }
        return Some(if c % b == 0 { vec![-c / b] } else { vec![] });
    }
    let disc = b * b - 4 * a * c;
    let Some(s) = exact_isqrt(disc) else {
        return Some(vec![]);
    };
    let mut roots = Vec::with_capacity(2);
    for num in [-b + s, -b - s] {
        if num % (2 * a) == 0 {
            let r = num / (2 * a);
            if !roots.contains(&r) {
                roots.push(r);
            }
        }
    }
    Some(roots)
}

/// Exhaustive enumeration state for one branch of the coordinate tree.
struct BoxScan<'a> {
    gram: &'a [Vec<i64>],
    h_min: i64,
    h_max: i64,
    coords: Vec<i64>,
    /// lin[i] = 2 * sum over assigned j of A[i][j] v_j.
    lin: Vec<i128>,
    /// Partial value of Q on the assigned suffix.
    qs: i128,
    /// Two-sided bounds for the unassigned diagonal part, per depth.
    diag_lo: Vec<i128>,
    diag_hi: Vec<i128>,
    /// Bound on the unassigned cross terms, per depth.
    cross: Vec<i128>,
    out: Vec<Vec<i64>>,
}

impl<'a> BoxScan<'a> {
    fn new(form: &'a QuadraticForm, h_min: i64, h_max: i64) -> Self {
        let gram = form.gram();
        let n1 = gram.len();
        let h2 = h_max as i128 * h_max as i128;
        let mut diag_lo = vec![0i128; n1 + 1];
        let mut diag_hi = vec![0i128; n1 + 1];
        let mut cross = vec![0i128; n1 + 1];
        for k in 1..=n1 {
            let a = gram[k - 1][k - 1] as i128 * h2;
            diag_lo[k] = diag_lo[k - 1] + a.min(0);
            diag_hi[k] = diag_hi[k - 1] + a.max(0);
            let mut c = 0i128;
            for j in 0..k - 1 {
                c += 2 * (gram[k - 1][j] as i128).abs() * h2;
            }
            cross[k] = cross[k - 1] + c;
        }
        Self {
            gram,
            h_min,
            h_max,
            coords: vec![0; n1],
            lin: vec![0; n1],
            qs: 0,
            diag_lo,
            diag_hi,
            cross,
            out: Vec::new(),
        }
    }

    fn emit(&mut self) {
        let mut g: i64 = 0;
        let mut height: i64 = 0;
        for &x in &self.coords {
            g = g.gcd(&x);
            height = height.max(x.abs());
        }
        if g == 1 && height >= self.h_min {
            self.out.push(self.coords.clone());
        }
    }

    /// Assign index k; indices above k hold the suffix. `suffix_zero`
    /// tracks the sign convention (last nonzero coordinate positive).
    fn descend(&mut self, k: usize, suffix_zero: bool) {
        if k == 0 {
            self.solve_first(suffix_zero);
            return;
        }
        let lo = if suffix_zero { 0 } else { -self.h_max };
        for v in lo..=self.h_max {
            self.step(k, v, suffix_zero);
        }
    }

    fn step(&mut self, k: usize, v: i64, suffix_zero: bool) {
        let vi = v as i128;
        let qs_new =
            self.qs + self.gram[k][k] as i128 * vi * vi + self.lin[k] * vi;
        // Interval bound on what the unassigned prefix can contribute.
        let mut lin_bound = 0i128;
        let h = self.h_max as i128;
        for i in 0..k {
            lin_bound += (self.lin[i] + 2 * self.gram[i][k] as i128 * vi).abs() * h;
        }
        let lo = qs_new + self.diag_lo[k] - self.cross[k] - lin_bound;
        let hi = qs_new + self.diag_hi[k] + self.cross[k] + lin_bound;
        if lo > 0 || hi < 0 {
            return;
        }
        let saved_qs = self.qs;
        self.qs = qs_new;
        self.coords[k] = v;
        for i in 0..k {
            self.lin[i] += 2 * self.gram[i][k] as i128 * vi;
        }
        self.descend(k - 1, suffix_zero && v == 0);
        for i in 0..k {
            self.lin[i] -= 2 * self.gram[i][k] as i128 * vi;
        }
        self.qs = saved_qs;
    }

    fn solve_first(&mut self, suffix_zero: bool) {
        let a = self.gram[0][0] as i128;
        let b = self.lin[0];
        let c = self.qs;
        let range_lo = if suffix_zero { 1 } else { -self.h_max };
        match integer_quadratic_roots(a, b, c) {
            Some(roots) => {
                for r in roots {
                    if r >= range_lo as i128 && r <= self.h_max as i128 {
                        self.coords[0] = r as i64;
                        self.emit();
                    }
                }
            }
            None => {
                // Q does not involve the first coordinate on this branch.
                for v in range_lo..=self.h_max {
                    self.coords[0] = v;
                    self.emit();
                }
            }
        }
        self.coords[0] = 0;
    }
}

fn sort_points(mut pts: Vec<RationalProjectivePoint>) -> Vec<RationalProjectivePoint> {
    pts.sort_by(|a, b| {
        a.height().cmp(&b.height()).then_with(|| a.coords().cmp(b.coords()))
    });
    pts.dedup();
    pts
}

/// All canonical primitive v with Q(v) = 0 and h_min <= H(v) <= h_max,
/// sorted by height then lexicographically.
pub fn enumerate_band(
    form: &QuadraticForm,
    h_min: i64,
    h_max: i64,
) -> Vec<RationalProjectivePoint> {
    let n1 = form.ambient();
    let top = n1 - 1;
    // Parallel over the top (sign-fixed) coordinate.
    let points: Vec<Vec<i64>> = (0..=h_max)
        .into_par_iter()
        .map(|v| {
            let mut scan = BoxScan::new(form, h_min.max(1), h_max);
            if top == 0 {
                if v >= 1 {
                    scan.coords[0] = v;
                    if form.evaluate_unchecked(&scan.coords) == 0 {
                        scan.emit();
                    }
                }
            } else {
                scan.step(top, v, true);
            }
            scan.out
        })
        .flatten()
        .collect();
    sort_points(
        points
            .into_iter()
            .map(|c| RationalProjectivePoint { coords: c })
            .collect(),
    )
}

pub fn enumerate_bruteforce(form: &QuadraticForm, h_max: i64) -> Vec<RationalProjectivePoint> {
    enumerate_band(form, 1, h_max)
}

/// Enumeration by sweeping lines through `base`: for a direction w, the
/// second intersection of the line with X is Q(w) base - 2 B(base, w) w.
/// The direction box |w_i| <= 2 h_max (1 + max |base_i|) is a
/// conservative completeness bound, validated by set-equality with the
/// brute-force scan rather than proved sharp.
pub fn enumerate_parametrized(
    form: &QuadraticForm,
    base: &RationalProjectivePoint,
    h_max: i64,
) -> Result<Vec<RationalProjectivePoint>, PointError> {
    if !form.is_isotropic(base.coords())
        || form.in_kernel(base.coords())
        || !form.is_nonsingular()
    {
        return Err(PointError::BasePointInvalid);
    }
    let n1 = form.ambient();
    let bound = 2 * h_max * (1 + base.height());
    // Row vector c with B(base, w) = c . w.
    let c_row: Vec<i128> = (0..n1)
        .map(|j| {
            base.coords()
                .iter()
                .enumerate()
                .map(|(i, &b)| b as i128 * form.gram()[i][j] as i128)
                .sum()
        })
        .collect();

    let top = n1 - 1;
    let mut points: Vec<RationalProjectivePoint> = (0..=bound)
        .into_par_iter()
        .map(|w_top| {
            let mut scan = SecantScan {
                gram: form.gram(),
                base: base.coords(),
                c_row: &c_row,
                h_max,
                bound,
                w: vec![0i64; n1],
                lin: vec![0i128; n1],
                qs: 0,
                bs: 0,
                gs: 0,
                out: Vec::new(),
            };
            if top == 0 {
                if w_top >= 1 {
                    scan.leaf(w_top);
                }
            } else {
                scan.step(top, w_top, true);
            }
            scan.out
        })
        .flatten()
        .collect();
    if base.height() <= h_max {
        points.push(base.clone());
    }
    Ok(sort_points(points))
}

/// Incremental sweep over the direction box for the secant enumerator:
/// Q(w) and B(base, w) are maintained coordinate by coordinate, and the
/// hot leaf avoids any allocation unless a candidate survives the
/// height filter.
struct SecantScan<'a> {
    gram: &'a [Vec<i64>],
    base: &'a [i64],
    c_row: &'a [i128],
    h_max: i64,
    bound: i64,
    w: Vec<i64>,
    /// lin[i] = 2 * sum over assigned j of A[i][j] w_j.
    lin: Vec<i128>,
    /// Q on the assigned suffix.
    qs: i128,
    /// B(base, .) on the assigned suffix.
    bs: i128,
    /// gcd of the assigned suffix of w.
    gs: u64,
    out: Vec<RationalProjectivePoint>,
}

/// Binary gcd on u64; gcd(0, b) = b.
fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

impl SecantScan<'_> {
    fn step(&mut self, k: usize, v: i64, suffix_zero: bool) {
        let vi = v as i128;
        self.w[k] = v;
        let saved_qs = self.qs;
        let saved_bs = self.bs;
        let saved_gs = self.gs;
        self.qs += self.gram[k][k] as i128 * vi * vi + self.lin[k] * vi;
        self.bs += self.c_row[k] * vi;
        self.gs = gcd_u64(self.gs, v.unsigned_abs());
        for i in 0..k {
            self.lin[i] += 2 * self.gram[i][k] as i128 * vi;
        }
        let next_zero = suffix_zero && v == 0;
        if k == 1 {
            let lo = if next_zero { 1 } else { -self.bound };
            for u in lo..=self.bound {
                self.leaf(u);
            }
        } else {
            let lo = if next_zero { 0 } else { -self.bound };
            for u in lo..=self.bound {
                self.step(k - 1, u, next_zero);
            }
        }
        for i in 0..k {
            self.lin[i] -= 2 * self.gram[i][k] as i128 * vi;
        }
        self.qs = saved_qs;
        self.bs = saved_bs;
        self.gs = saved_gs;
        self.w[k] = 0;
    }

    /// Assign the first coordinate and emit the secant point if its
    /// primitive representative fits under the height cap.
    ///
    /// Only primitive directions are processed: a multiple lambda w maps
    /// to the same projective point as w, and the primitive representative
    /// lies in the same box. For primitive w (and primitive isotropic
    /// base) the content of q base - 2 b w divides gcd(q, 2b): any prime
    /// power p^e dividing every coordinate forces, modulo p^min(e, ...),
    /// either p | base (impossible), p | w (impossible), or w congruent to
    /// a multiple of base, whence p | Q(w) by isotropy. This lets the hot
    /// path reject with one cheap binary gcd instead of a full content
    /// computation of the candidate vector.
    fn leaf(&mut self, w0: i64) {
        if self.gs != 1 && gcd_u64(self.gs, w0.unsigned_abs()) != 1 {
            return;
        }
        let vi = w0 as i128;
        let q = self.qs + self.gram[0][0] as i128 * vi * vi + self.lin[0] * vi;
        let b = self.bs + self.c_row[0] * vi;
        self.w[0] = w0;
        if q == 0 {
            // The direction itself lies on X.
            if let Ok(p) = RationalProjectivePoint::canonicalize(self.w.clone()) {
                if p.height() <= self.h_max {
                    self.out.push(p);
                }
            }
        } else if b != 0 {
            let mut cand = [0i128; 16];
            let n1 = self.w.len();
            let mut m: i128 = 0;
            for i in 0..n1 {
                let c = q * self.base[i] as i128 - 2 * b * self.w[i] as i128;
                cand[i] = c;
                m = m.max(c.abs());
            }
            if m != 0 {
                let h = self.h_max as i128;
                let keep = if m <= h {
                    true
                } else if m > h * q.unsigned_abs().min((2 * b).unsigned_abs()) as i128 {
                    // The content divides both q and 2b, so it cannot
                    // reach m / h_max here.
                    false
                } else {
                    let qa = u64::try_from(q.unsigned_abs()).unwrap_or(u64::MAX);
                    let ba = u64::try_from((2 * b).unsigned_abs()).unwrap_or(u64::MAX);
                    let d = if qa == u64::MAX || ba == u64::MAX {
                        q.gcd(&(2 * b)).unsigned_abs()
                    } else {
                        gcd_u64(qa, ba) as u128
                    } as i128;
                    if m > d * h {
                        false
                    } else {
                        let mut g: i128 = 0;
                        for &c in &cand[..n1] {
                            g = g.gcd(&c);
                        }
                        m <= g * h
                    }
                };
                if keep {
                    let p = RationalProjectivePoint::canonicalize_i128(cand[..n1].to_vec())
                        .expect("nonzero candidate");
                    debug_assert!(p.height() <= self.h_max);
                    self.out.push(p);
                }
            }
        }
        self.w[0] = 0;
    }
}

/// Rational points on X within projective distance `radius` of the unit
/// direction `x`, with height in [h_min, h_max].
///
/// The scan anchors on the largest coordinate of x and restricts every
/// other coordinate to a window around the ray through x, so the cost
/// scales with (radius * h_max)^(n-1) rather than h_max^n. Complete for
/// radius below ~0.3 (checked against the brute-force scan in tests);
/// wider cones are rejected.
pub fn enumerate_near(
    form: &QuadraticForm,
    x: &[f64],
    h_min: i64,
    h_max: i64,
    radius: f64,
) -> Result<Vec<RationalProjectivePoint>, PointError> {
    let n1 = form.ambient();
    assert_eq!(x.len(), n1);
    const MAX_RADIUS: f64 = 0.35;
    if !(0.0..=MAX_RADIUS).contains(&radius) {
        return Err(PointError::ConeTooWide { radius, max_radius: MAX_RADIUS });
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut xu: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let anchor = (0..n1)
        .max_by(|&i, &j| xu[i].abs().partial_cmp(&xu[j].abs()).unwrap())
        .unwrap();
    if xu[anchor] < 0.0 {
        for v in xu.iter_mut() {
            *v = -*v;
        }
    }
    let xm = xu[anchor];
    let d = radius * 1.000_000_1 + 1e-12;
    let kappa = 1.01 * d / xm;
    if kappa >= 0.9 {
        return Err(PointError::ConeTooWide { radius, max_radius: 0.9 * xm / 1.01 });
    }

    // Solved coordinate: last non-anchor index with a nonzero diagonal
    // entry, falling back to the last non-anchor index.
    let solved = (0..n1)
        .rev()
        .find(|&j| j != anchor && form.gram()[j][j] != 0)
        .unwrap_or_else(|| (0..n1).rev().find(|&j| j != anchor).unwrap());
    let free: Vec<usize> = (0..n1).filter(|&j| j != anchor && j != solved).collect();

    let anchor_lo = ((h_min as f64) * xm * (1.0 - 2.0 * d) / 1.01 - 2.0)
        .floor()
        .max(0.0) as i64;

    let points: Vec<RationalProjectivePoint> = (anchor_lo..=h_max)
        .into_par_iter()
        .map(|va| {
            let mut out = Vec::new();
            let t = va as f64 / xm;
            let s_hi = t / (1.0 - kappa) + 1.0;
            let mut v = vec![0i64; n1];
            v[anchor] = va;
            cone_windows(
                form, &xu, t, s_hi, d, kappa, h_min, h_max, solved, &free, 0, &mut v,
                radius, &mut out,
            );
            out
        })
        .flatten()
        .collect();
    Ok(sort_points(points))
}

#[allow(clippy::too_many_arguments)]
fn cone_windows(
    form: &QuadraticForm,
    xu: &[f64],
    t: f64,
    s_hi: f64,
    d: f64,
    kappa: f64,
    h_min: i64,
    h_max: i64,
    solved: usize,
    free: &[usize],
    depth: usize,
    v: &mut Vec<i64>,
    radius: f64,
    out: &mut Vec<RationalProjectivePoint>,
) {
    if depth == free.len() {
        solve_cone_leaf(form, xu, t, s_hi, d, kappa, h_min, h_max, solved, v, radius, out);
        return;
    }
    let j = free[depth];
    let center = t * xu[j];
    let w = s_hi * (kappa * xu[j].abs() + 1.01 * d) + 1.0;
    let lo = ((center - w).ceil() as i64).max(-h_max);
    let hi = ((center + w).floor() as i64).min(h_max);
    for val in lo..=hi {
        v[j] = val;
        cone_windows(
            form, xu, t, s_hi, d, kappa, h_min, h_max, solved, free, depth + 1, v, radius,
            out,
        );
    }
    v[free[depth]] = 0;
}

#[allow(clippy::too_many_arguments)]
fn solve_cone_leaf(
    form: &QuadraticForm,
    xu: &[f64],
    t: f64,
    s_hi: f64,
    d: f64,
    kappa: f64,
    h_min: i64,
    h_max: i64,
    solved: usize,
    v: &mut Vec<i64>,
    radius: f64,
    out: &mut Vec<RationalProjectivePoint>,
) {
    let gram = form.gram();
    let a = gram[solved][solved] as i128;
    let mut b: i128 = 0;
    let mut c: i128 = 0;
    for (i, &vi) in v.iter().enumerate() {
        if i == solved || vi == 0 {
            continue;
        }
        b += 2 * gram[solved][i] as i128 * vi as i128;
        let mut row = 0i128;
        for (j, &vj) in v.iter().enumerate() {
            if j != solved {
                row += gram[i][j] as i128 * vj as i128;
            }
        }
        c += vi as i128 * row;
    }
    let center = t * xu[solved];
    let w = s_hi * (kappa * xu[solved].abs() + 1.01 * d) + 1.0;
    let roots = match integer_quadratic_roots(a, b, c) {
        Some(r) => r,
        None => return, // degenerate branch: outside the cone machinery's remit
    };
    for r in roots {
        if r.unsigned_abs() > h_max as u128 {
            continue;
        }
        let rf = r as f64;
        if rf < center - w || rf > center + w {
            continue;
        }
        v[solved] = r as i64;
        // The height band applies to the primitive representative:
        // a scanned vector can be a multiple of a much lower point.
        if let Ok(p) = RationalProjectivePoint::canonicalize(v.clone()) {
            if p.height() < h_min || p.height() > h_max {
                continue;
            }
            let unit = p.to_unit();
            let dot: f64 = unit.iter().zip(xu).map(|(a, b)| a * b).sum();
            let dist = (1.0 - dot * dot).max(0.0).sqrt();
            if dist <= radius * (1.0 + 1e-9) + 1e-12 {
                debug_assert!(form.is_isotropic(p.coords()));
                out.push(p);
            }
        }
    }
    v[solved] = 0;
}

/// Exact span of pairwise B-orthogonal isotropic points. Fails with the
/// first violating pair; by the identity Q(v +- w) = Q(v) + Q(w) +- 2B(v, w)
/// the pairwise criterion characterizes total isotropy of the span.
pub fn totally_isotropic_closure(
    form: &QuadraticForm,
    points: &[RationalProjectivePoint],
) -> Result<IsotropicSubspace, PointError> {
    for (idx, p) in points.iter().enumerate() {
        let q = form.evaluate_unchecked(p.coords());
        if q != 0 {
            return Err(PointError::NotOnQuadric { index: idx, value: q });
        }
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let b = form.bilinear_unchecked(points[i].coords(), points[j].coords());
            if b != 0 {
                return Err(PointError::NotIsotropicPair { i, j, value: b });
            }
        }
    }
    // Greedy independent subset, in input order.
    let mut basis: Vec<RationalProjectivePoint> = Vec::new();
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for p in points {
        let row: Vec<Rat> = p.coords().iter().map(|&x| linalg::rat_from_i64(x)).collect();
        rows.push(row);
        if linalg::rank(&rows) == basis.len() + 1 {
            basis.push(p.clone());
        } else {
            rows.pop();
        }
    }
    Ok(IsotropicSubspace { basis })
}

impl IsotropicSubspace {
    /// Validating constructor used where a subspace arrives from outside
    /// an enumeration (e.g. deserialized).
    pub fn new(
        form: &QuadraticForm,
        basis: Vec<RationalProjectivePoint>,
    ) -> Result<Self, PointError> {
        let sub = totally_isotropic_closure(form, &basis)?;
        if sub.dim() != basis.len() {
            return Err(PointError::BasePointInvalid);
        }
        Ok(sub)
    }
}

/// Scan of Q(v) = 0 mod m over all residue vectors that are not all
/// divisible by the prime of m. Returns the first modulus with no
/// solution; absence of a returned modulus proves nothing.
pub fn local_obstruction(form: &QuadraticForm, moduli: &[u64]) -> Option<u64> {
    let n1 = form.ambient();
    'next_modulus: for &m in moduli {
        let Some(p) = prime_power_radical(m) else {
            continue;
        };
        // Keep the residue scan at desk scale.
        if (m as f64).powi(n1 as i32) > 3e8 {
            continue;
        }
        let mut v = vec![0u64; n1];
        loop {
            if !v.iter().all(|&x| x % p == 0) {
                let q: i128 = {
                    let iv: Vec<i64> = v.iter().map(|&x| x as i64).collect();
                    form.evaluate_unchecked(&iv)
                };
                if q.rem_euclid(m as i128) == 0 {
                    continue 'next_modulus;
                }
            }
            // Increment the odometer.
            let mut i = 0;
            loop {
                if i == n1 {
                    return Some(m);
                }
                v[i] += 1;
                if v[i] < m {
                    break;
                }
                v[i] = 0;
                i += 1;
            }
        }
    }
    None
}

fn prime_power_radical(m: u64) -> Option<u64> {
    if m < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut q = m;
            while q % p == 0 {
                q /= p;
            }
            return (q == 1).then_some(p);
        }
        p += 1;
    }
    Some(m)
}

/// {4, 8, 9, 25, 49} plus p^2 for every prime p dividing det(gram).
pub fn default_obstruction_moduli(form: &QuadraticForm) -> Vec<u64> {
    let mut moduli: Vec<u64> = vec![4, 8, 9, 25, 49];
    let mut d = form.det();
    if d.is_negative() {
        d = -d;
    }
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(100_000u64);
    while &p * &p <= d && p <= limit {
        if (&d % &p).is_zero() {
            if let Some(pp) = p.to_u64() {
                let sq = pp * pp;
                if !moduli.contains(&sq) {
                    moduli.push(sq);
                }
            }
            while (&d % &p).is_zero() {
                d = &d / &p;
            }
        }
        p += 1;
    }
    if d > BigInt::from(1u32) {
        if let Some(pp) = d.to_u64() {
            if let Some(sq) = pp.checked_mul(pp) {
                if !moduli.contains(&sq) {
                    moduli.push(sq);
                }
            }
        }
    }
    moduli.sort_unstable();
    moduli
}

/// Bounded search for the Q-rank: `lower` from a greedy backtracking
/// search over enumerated points of height <= h_max, `upper` from the
/// real signature, cut to zero when a congruence obstruction certifies
/// that X(Q) is empty. Reported as bounds; they coincide on all the
/// regression forms.
pub fn qrank_bounds(form: &QuadraticForm, h_max: i64) -> QRankBounds {
    let inertia = form.inertia();
    let upper = inertia.isotropy_bound();
    if let Some(m) = local_obstruction(form, &default_obstruction_moduli(form)) {
        return QRankBounds { lower: 0, upper: 0, witness: None, obstruction: Some(m) };
    }
    if upper == 0 {
        return QRankBounds { lower: 0, upper: 0, witness: None, obstruction: None };
    }
    let mut candidates = enumerate_bruteforce(form, h_max);
    candidates.truncate(2000);
    let mut best: Vec<RationalProjectivePoint> = Vec::new();
    let mut current: Vec<RationalProjectivePoint> = Vec::new();
    let mut budget: u64 = 200_000;
    search_isotropic_set(form, &candidates, 0, upper, &mut current, &mut best, &mut budget);
    let lower = best.len();
    let witness = (!best.is_empty()).then(|| IsotropicSubspace { basis: best });
    QRankBounds { lower, upper, witness, obstruction: None }
}

fn search_isotropic_set(
    form: &QuadraticForm,
    candidates: &[RationalProjectivePoint],
    start: usize,
    cap: usize,
    current: &mut Vec<RationalProjectivePoint>,
    best: &mut Vec<RationalProjectivePoint>,
    budget: &mut u64,
) {
    if current.len() > best.len() {
        *best = current.clone();
    }
    if current.len() == cap || best.len() == cap || *budget == 0 {
        return;
    }
    for idx in start..candidates.len() {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        let cand = &candidates[idx];
        let compatible = current
            .iter()
            .all(|p| form.bilinear_unchecked(p.coords(), cand.coords()) == 0);
        if !compatible {
            continue;
        }
        current.push(cand.clone());
        let rows: Vec<Vec<Rat>> = current
            .iter()
            .map(|p| p.coords().iter().map(|&x| linalg::rat_from_i64(x)).collect())
            .collect();
        if linalg::rank(&rows) == current.len() {
            search_isotropic_set(form, candidates, idx + 1, cap, current, best, budget);
        }
        current.pop();
    }
}
