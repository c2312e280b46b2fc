//! Best-approximation records, Dirichlet constants, Diophantine
//! exponents, simplex-lemma verifiers, and cover counting.
//!
//! For a point x on the quadric, the record sequence lists the rational
//! points on X that successively improve the distance to x as the
//! height grows; it is strictly increasing in height and strictly
//! decreasing in distance. The Dirichlet constant and the exponent
//! estimate are read off that sequence. The simplex verifiers check
//! that all rational points of bounded height inside a small ball lie
//! in a common totally isotropic rational subspace, with every
//! arithmetic ingredient (membership heights, pairwise bilinear values)
//! exact.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::flow::DaniConstants;
use crate::geometry::RealProjectivePoint;
use crate::points::{
    enumerate_band, enumerate_bruteforce, enumerate_near, totally_isotropic_closure,
    PointError, RationalProjectivePoint,
};
use crate::quadform::QuadraticForm;

#[derive(Debug, Error, PartialEq)]
pub enum ApproxError {
    #[error("no rational points on X up to the requested height")]
    NoRationalPoints,
    #[error("a record has distance zero (x is rational)")]
    DegenerateRational,
    #[error("need at least {needed} records with positive distance, got {got}")]
    TooFewRecords { needed: usize, got: usize },
}

/// One entry of a best-approximation sequence.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxRecord {
    pub v: RationalProjectivePoint,
    pub h: i64,
    pub d: f64,
    pub quality: f64,
}

/// Least-squares estimate of the Diophantine exponent from a record
/// sequence: slope of -log d against log h.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentEstimate {
    pub beta_hat: f64,
    pub intercept: f64,
    pub sample_count: usize,
    pub h_cap: i64,
    /// Set when a record hits distance zero: x is rational and the
    /// exponent is infinite.
    pub infinite: bool,
}

/// Outcome of one simplex-lemma verification.
#[derive(Debug, Clone, Serialize)]
pub struct SimplexReport {
    pub pass: bool,
    pub cluster_size: usize,
    pub closure_dim: usize,
    /// On failure, the indices-free certificate: the violating pair and
    /// its exact bilinear value.
    pub counterexample: Option<(RationalProjectivePoint, RationalProjectivePoint, i128)>,
}

/// Fold height-sorted candidate points into a record sequence: within
/// each height level keep the closest point, and keep a level only when
/// it strictly improves on everything before it. Stops at distance zero.
fn fold_records(
    x: &RealProjectivePoint,
    sorted: &[RationalProjectivePoint],
    records: &mut Vec<ApproxRecord>,
) {
    let mut best = records.last().map_or(f64::INFINITY, |r| r.d);
    let mut i = 0;
    while i < sorted.len() {
        let h = sorted[i].height();
        let mut level_best: Option<(f64, &RationalProjectivePoint)> = None;
        while i < sorted.len() && sorted[i].height() == h {
            let d = x.dist_rational(&sorted[i]);
            let better = match level_best {
                None => true,
                Some((bd, _)) => d < bd,
            };
            if better {
                level_best = Some((d, &sorted[i]));
            }
            i += 1;
        }
        if let Some((d, v)) = level_best {
            if d < best {
                records.push(ApproxRecord { v: v.clone(), h, d, quality: h as f64 * d });
                best = d;
                if d == 0.0 {
                    return;
                }
            }
        }
    }
}

/// Record sequence of x against a height-sorted enumeration table.
pub fn records_from_table(
    table: &[RationalProjectivePoint],
    x: &RealProjectivePoint,
    h_max: i64,
) -> Result<Vec<ApproxRecord>, ApproxError> {
    let cut = table.partition_point(|p| p.height() <= h_max);
    if cut == 0 {
        return Err(ApproxError::NoRationalPoints);
    }
    let mut records = Vec::new();
    fold_records(x, &table[..cut], &mut records);
    Ok(records)
}

/// Height of the initial exhaustive scan in [`best_records`].
const SEED_HEIGHT: i64 = 200;
/// Cone scans wider than this are not cheaper than brute force and the
/// window bounds degrade, so the band radius is capped here.
const BAND_RADIUS_CAP: f64 = 0.3;

/// Best-approximation records of x up to height h_max.
///
/// An exhaustive scan seeds the sequence up to [`SEED_HEIGHT`]; beyond
/// that, each doubling height band is scanned only inside the cone of
/// radius equal to the current record distance (capped at
/// [`BAND_RADIUS_CAP`]), which is exactly where a new record can live.
pub fn best_records(
    form: &QuadraticForm,
    x: &RealProjectivePoint,
    h_max: i64,
) -> Result<Vec<ApproxRecord>, ApproxError> {
    let seed_h = SEED_HEIGHT.min(h_max);
    let seed = enumerate_bruteforce(form, seed_h);
    let mut records = Vec::new();
    fold_records(x, &seed, &mut records);
    let mut h_done = seed_h;
    // Sparse small forms: extend the exhaustive scan until a first
    // point appears (or the cap is reached).
    while records.is_empty() && h_done < h_max {
        let next = (h_done * 2).min(h_max);
        let band = enumerate_band(form, h_done + 1, next);
        fold_records(x, &band, &mut records);
        h_done = next;
    }
    if records.is_empty() {
        return Err(ApproxError::NoRationalPoints);
    }
    let norm = x.coords().iter().map(|v| v * v).sum::<f64>().sqrt();
    let xu_max = x.coords().iter().map(|v| v.abs() / norm).fold(0.0, f64::max);
    while h_done < h_max && records.last().unwrap().d > 0.0 {
        let radius = (records.last().unwrap().d * (1.0 + 1e-9)).min(BAND_RADIUS_CAP);
        // Shrink the doubling band toward the minimum ratio while the
        // cone scan exceeds the leaf budget, so a record found mid-band
        // shrinks the radius before the expensive tail of the band is
        // scanned at the stale one. Every sub-band rescans anchors from
        // ~0.7 h_lo, so the ratio floor keeps the overhead bounded.
        let floor_step = (h_done / 4).max(1);
        let mut next = (h_done * 2).min(h_max);
        while next - h_done > floor_step
            && cone_cost_estimate(form.ambient(), xu_max, h_done + 1, next, radius)
                > BAND_LEAF_BUDGET
        {
            next = (h_done + (next - h_done) / 2).max(h_done + floor_step);
        }
        let band = enumerate_near(form, x.coords(), h_done + 1, next, radius)
            .expect("radius within the cone cap");
        fold_records(x, &band, &mut records);
        h_done = next;
    }
    Ok(records)
}

/// Leaf budget per cone band in [`best_records`].
const BAND_LEAF_BUDGET: f64 = 2.0e7;

/// Upper estimate of the lattice leaves a cone band scan visits,
/// mirroring the window widths of the scan itself.
fn cone_cost_estimate(n1: usize, xu_max: f64, h_lo: i64, h_hi: i64, radius: f64) -> f64 {
    let d = radius * 1.000_000_1 + 1e-12;
    let kappa = 1.01 * d / xu_max;
    if kappa >= 0.9 {
        return f64::INFINITY;
    }
    let s_hi = (h_hi as f64) / xu_max / (1.0 - kappa) + 1.0;
    let w = s_hi * (kappa * xu_max + 1.01 * d) + 1.0;
    // The scan revisits anchors from ~xm * h_lo regardless of the band
    // width, so the anchor range, not the band width, drives the cost.
    let anchor_lo = ((h_lo as f64) * xu_max * (1.0 - 2.0 * d) / 1.01 - 2.0).max(0.0);
    ((h_hi as f64) - anchor_lo + 1.0) * (2.0 * w + 1.0).powi(n1 as i32 - 2)
}

/// Empirical Dirichlet constant: max over the sequence of d_k * h_{k+1}
/// (each record's distance held until the next record appears), closing
/// with d_last * h_cap. This predecessor-scale product is the standard
/// computable surrogate for the existence constant C_x.
pub fn dirichlet_constant(records: &[ApproxRecord], h_cap: i64) -> Result<f64, ApproxError> {
    if records.is_empty() {
        return Err(ApproxError::NoRationalPoints);
    }
    if records.iter().any(|r| r.d == 0.0) {
        return Err(ApproxError::DegenerateRational);
    }
    let mut c: f64 = 0.0;
    for w in records.windows(2) {
        c = c.max(w[0].d * w[1].h as f64);
    }
    c = c.max(records.last().unwrap().d * h_cap as f64);
    Ok(c)
}

/// Records with h below this are excluded from the regression: the
/// asymptotic slope is what is being estimated and the first few
/// records are pure noise.
const REGRESSION_MIN_HEIGHT: i64 = 10;

/// Regression estimate of the approximation exponent from a record
/// sequence scanned up to height `h_scan`.
///
/// A record's distance persists until the next record appears, so the
/// pairing that mirrors the Dirichlet product d_k * h_{k+1} is
/// -log d_k against log h_{k+1}, with the final record paired against
/// the scan cap. Pairing against h_k instead inflates the slope
/// whenever record gaps are large.
pub fn exponent(records: &[ApproxRecord], h_scan: i64) -> Result<ExponentEstimate, ApproxError> {
    let h_cap = records.iter().map(|r| r.h).max().unwrap_or(0).max(h_scan);
    if records.iter().any(|r| r.d == 0.0) {
        return Ok(ExponentEstimate {
            beta_hat: f64::INFINITY,
            intercept: 0.0,
            sample_count: records.len(),
            h_cap,
            infinite: true,
        });
    }
    let succ =
        |k: usize| if k + 1 < records.len() { records[k + 1].h } else { h_cap };
    let mut usable: Vec<usize> =
        (0..records.len()).filter(|&k| succ(k) >= REGRESSION_MIN_HEIGHT).collect();
    if usable.len() < 5 {
        usable = (0..records.len()).collect();
    }
    if usable.len() < 5 {
        return Err(ApproxError::TooFewRecords { needed: 5, got: usable.len() });
    }
    let n = usable.len() as f64;
    let xs: Vec<f64> = usable.iter().map(|&k| (succ(k) as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|&k| -records[k].d.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        // All successor heights equal: no usable log-height spread.
        return Err(ApproxError::TooFewRecords { needed: 5, got: 1 });
    }
    let beta_hat = sxy / sxx;
    Ok(ExponentEstimate {
        beta_hat,
        intercept: my - beta_hat * mx,
        sample_count: usable.len(),
        h_cap,
        infinite: false,
    })
}

fn cluster(
    table: &[RationalProjectivePoint],
    x: &RealProjectivePoint,
    keep: impl Fn(&RationalProjectivePoint, f64) -> bool,
) -> Vec<RationalProjectivePoint> {
    table
        .iter()
        .filter(|v| keep(v, x.dist_rational(v)))
        .cloned()
        .collect()
}

fn closure_report(form: &QuadraticForm, s: Vec<RationalProjectivePoint>) -> SimplexReport {
    match totally_isotropic_closure(form, &s) {
        Ok(sub) => SimplexReport {
            pass: true,
            cluster_size: s.len(),
            closure_dim: sub.dim(),
            counterexample: None,
        },
        Err(PointError::NotIsotropicPair { i, j, value }) => SimplexReport {
            pass: false,
            cluster_size: s.len(),
            closure_dim: 0,
            counterexample: Some((s[i].clone(), s[j].clone(), value)),
        },
        Err(other) => unreachable!("cluster points are enumerated on X: {other}"),
    }
}

/// Simplex lemma check at (x, rho): the rational points v on X with
/// dist(x, v) <= rho and H(v) <= c_small / rho must be contained in one
/// totally isotropic rational subspace. The pairwise bilinear test is
/// exact integer arithmetic; only dist is floating point. `table` must
/// be sorted by height.
pub fn simplex_verify(
    form: &QuadraticForm,
    table: &[RationalProjectivePoint],
    x: &RealProjectivePoint,
    rho: f64,
    consts: &DaniConstants,
) -> SimplexReport {
    let h_cap = consts.c_small / rho;
    let cut = table.partition_point(|v| (v.height() as f64) <= h_cap);
    let s = cluster(&table[..cut], x, |_, d| d <= rho);
    closure_report(form, s)
}

/// Strong simplex lemma check: membership H(v) <= c_small / rho and
/// dist(x, v) <= sqrt(rho / H(v)), a much wider ball at small heights.
pub fn strong_simplex_verify(
    form: &QuadraticForm,
    table: &[RationalProjectivePoint],
    x: &RealProjectivePoint,
    rho: f64,
    consts: &DaniConstants,
) -> SimplexReport {
    let h_cap = consts.c_small / rho;
    let cut = table.partition_point(|v| (v.height() as f64) <= h_cap);
    let s = cluster(&table[..cut], x, |v, d| d <= (rho / v.height() as f64).sqrt());
    closure_report(form, s)
}

/// Number of balls of radius 2^{-beta p} needed to cover the set of
/// points of X within 2^{-beta p} of a rational point of height in
/// [2^p, 2^{p+1}). Counted by merging qualifying rational centers:
/// greedy interval sweep in the angular coordinate for conics, grid
/// hashing of unit representatives in higher dimension. The dimension
/// diagnostic is log2(count) / (beta p), to be compared with the
/// ceiling delta - alpha (1 - 1/beta).
pub fn cover_count(
    table: &[RationalProjectivePoint],
    ambient: usize,
    beta: f64,
    p: u32,
    sample_budget: usize,
) -> usize {
    let h_lo = 1i64 << p;
    let h_hi = 1i64 << (p + 1);
    let mut qualifying: Vec<&RationalProjectivePoint> = table
        .iter()
        .filter(|v| v.height() >= h_lo && v.height() < h_hi)
        .collect();
    qualifying.truncate(sample_budget);
    if qualifying.is_empty() {
        return 0;
    }
    let r = 2f64.powf(-beta * p as f64);
    if ambient == 3 {
        // Conic: canonical representatives sweep an angle once; greedy
        // interval covering along the sorted angles.
        let mut angles: Vec<f64> = qualifying
            .iter()
            .map(|v| {
                let u = v.to_unit();
                u[1].atan2(u[0])
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // A dist-ball of radius r covers angles within delta of its center.
        let delta = (2.0 * (1.0 - r * r).max(0.0).sqrt() - 1.0).clamp(-1.0, 1.0).acos();
        let mut count = 0;
        let mut covered_up_to = f64::NEG_INFINITY;
        for &a in &angles {
            if a > covered_up_to {
                count += 1;
                covered_up_to = a + 2.0 * delta;
            }
        }
        count
    } else {
        let cells: BTreeSet<Vec<i64>> = qualifying
            .iter()
            .map(|v| v.to_unit().iter().map(|&c| (c / r).floor() as i64).collect())
            .collect();
        cells.len()
    }
}

/// log2(count) / (beta p); `None` for an empty cover.
pub fn cover_diagnostic(count: usize, beta: f64, p: u32) -> Option<f64> {
    (count > 0).then(|| (count as f64).log2() / (beta * p as f64))
}

/// Parallel sweep helper: apply a verifier at every (x, rho) pair and
/// count failures.
pub fn sweep_failures<F>(pairs: &[(RealProjectivePoint, f64)], verify: F) -> usize
where
    F: Fn(&RealProjectivePoint, f64) -> SimplexReport + Sync,
{
    pairs
        .par_iter()
        .filter(|(x, rho)| !verify(x, *rho).pass)
        .count()
}
