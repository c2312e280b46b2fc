//! The isotropic Schmidt game and badly-approximable certificates.
//!
//! Bob plays nested balls B_0 ⊇ B_1 ⊇ … on the quadric with radii
//! shrinking by the game parameter beta; at each round Alice deletes the
//! epsilon-neighborhood (epsilon = beta rho_i) of a totally isotropic
//! rational subspace of her choice, and Bob's next ball must avoid it.
//! Alice's explicit strategy deletes the isotropic closure of all
//! rational points of height at most c_small / rho_i in the doubled
//! ball 2B_i — the simplex lemma guarantees this closure exists — which
//! forces the intersection point to be badly approximable with constant
//! c_0 = c_small beta^2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::flow::DaniConstants;
use crate::geometry::{dist_to_subspace, QuadricSampler, RealProjectivePoint, SliceSampler};
use crate::points::{totally_isotropic_closure, PointError, RationalProjectivePoint};
use crate::quadform::QuadraticForm;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("beta must lie in (0, 1/3), got {0}")]
    BadBeta(f64),
    #[error("closure failure at round {round} (theorem violation): {source}")]
    ClosureFailure { round: usize, source: PointError },
    #[error("no feasible ball for Bob at round {round}")]
    NoFeasibleBall { round: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BobStrategy {
    /// Uniform feasible center.
    Random,
    /// Center as close as possible to a rational point of the next
    /// height scale (the adversarial choice).
    Greedy,
    /// Minimal displacement from the previous center.
    Stubborn,
}

/// What Alice deleted in one round.
#[derive(Debug, Clone, Serialize)]
pub enum Deletion {
    /// epsilon-neighborhood of a totally isotropic rational subspace.
    Subspace { basis: Vec<RationalProjectivePoint>, epsilon: f64 },
    /// Fallback when no rational point qualifies: the ball of radius
    /// epsilon around Bob's center, which still forces rho_i -> 0.
    CenterBall { epsilon: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Bob's ball at the start of the round.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Alice's height cap c_small / rho_i, clipped to the table.
    pub h_cap: f64,
    pub deletion: Deletion,
}

#[derive(Debug, Clone, Serialize)]
pub struct GameOutcome {
    pub x_final: Vec<f64>,
    pub beta: f64,
    pub rho0: f64,
    pub rho_last: f64,
    pub rounds: usize,
    pub transcript: Vec<RoundRecord>,
}

/// Badly-approximable certificate for a game output: min over the
/// checked heights of H(v) dist(x, v), compared against c0 = c_small
/// beta^2.
#[derive(Debug, Clone, Serialize)]
pub struct BaCertificate {
    pub x: Vec<f64>,
    pub c0: f64,
    pub h_cap: i64,
    pub min_quality: f64,
    pub valid: bool,
}

/// Where Bob's centers live: the whole quadric, or a diffuse subset
/// (a positive-dimensional slice).
pub enum BobDomain<'a> {
    Quadric(&'a QuadricSampler),
    Slice(&'a SliceSampler),
}

impl BobDomain<'_> {
    fn sample_near<R: Rng + ?Sized>(
        &self,
        center: &RealProjectivePoint,
        rho: f64,
        rng: &mut R,
    ) -> RealProjectivePoint {
        match self {
            BobDomain::Quadric(s) => s.sample_near(center, rho, rng),
            BobDomain::Slice(s) => s.sample_near(center, rho, rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RealProjectivePoint {
        match self {
            BobDomain::Quadric(s) => s.sample(rng),
            BobDomain::Slice(s) => s.sample(rng),
        }
    }
}

const BOB_ATTEMPTS: usize = 10_000;

/// Below this radius the ball is a single representable f64 point:
/// moves cannot be resolved, so Bob keeps his center while the
/// bookkeeping (radii, height windows) continues exactly. Rounds this
/// deep have height windows far beyond any enumeration table, so
/// neither the transcript check nor the certificate is affected.
const RESOLUTION_FLOOR: f64 = 1e-13;

/// Alice's move: the isotropic closure of the table points in the
/// doubled ball whose height falls in this round's window
/// [c_small / rho_{i-1}, c_small / rho_i] (every lower height was
/// already handled when it was in the window), or the center-ball
/// fallback. The table is sorted by height, so the window is a
/// contiguous slice.
fn alice_move(
    form: &QuadraticForm,
    table: &[RationalProjectivePoint],
    consts: &DaniConstants,
    center: &RealProjectivePoint,
    radius: f64,
    beta: f64,
    round: usize,
) -> Result<Deletion, GameError> {
    let h_cap = consts.c_small / radius;
    let h_lo = if round == 0 { 0.0 } else { consts.c_small * beta / radius };
    let epsilon = beta * radius;
    let window = height_window(table, h_lo, h_cap);
    let qualifying: Vec<RationalProjectivePoint> = window
        .iter()
        .filter(|v| center.dist_rational(v) <= 2.0 * radius)
        .cloned()
        .collect();
    if qualifying.is_empty() {
        return Ok(Deletion::CenterBall { epsilon });
    }
    match totally_isotropic_closure(form, &qualifying) {
        Ok(sub) => Ok(Deletion::Subspace { basis: sub.basis().to_vec(), epsilon }),
        Err(source) => Err(GameError::ClosureFailure { round, source }),
    }
}

/// Inclusive height window [h_lo, h_hi] of a height-sorted table.
fn height_window(table: &[RationalProjectivePoint], h_lo: f64, h_hi: f64) -> &[RationalProjectivePoint] {
    let lo = table.partition_point(|v| (v.height() as f64) < h_lo);
    let hi = table.partition_point(|v| (v.height() as f64) <= h_hi);
    &table[lo..hi.max(lo)]
}

/// The deleted subspace in unit coordinates, computed once per round.
fn deletion_basis(deletion: &Deletion) -> Option<Vec<Vec<f64>>> {
    match deletion {
        Deletion::Subspace { basis, .. } => Some(
            basis
                .iter()
                .map(|b| RealProjectivePoint::from_rational(b).coords().to_vec())
                .collect(),
        ),
        Deletion::CenterBall { .. } => None,
    }
}

/// Bob's move: a feasible center for the shrunken ball, picked per
/// strategy. Feasibility: the new ball stays inside the old one and
/// clears the deleted neighborhood by its own radius.
#[allow(clippy::too_many_arguments)]
fn bob_move(
    deletion: &Deletion,
    center: &RealProjectivePoint,
    radius: f64,
    beta: f64,
    strategy: BobStrategy,
    domain: &BobDomain,
    targets: &[&RationalProjectivePoint],
    rng: &mut ChaCha8Rng,
    round: usize,
) -> Result<RealProjectivePoint, GameError> {
    if radius < RESOLUTION_FLOOR {
        return Ok(center.clone());
    }
    let rho_next = beta * radius;
    let epsilon = match deletion {
        Deletion::Subspace { epsilon, .. } | Deletion::CenterBall { epsilon } => *epsilon,
    };
    let basis = deletion_basis(deletion);
    let feasible = |c: &RealProjectivePoint| -> bool {
        let clearance = match &basis {
            Some(b) => dist_to_subspace(c, b),
            None => c.dist(center),
        };
        c.dist(center) <= radius - rho_next && clearance >= epsilon + rho_next
    };
    // Stubborn Bob keeps his center whenever the deletion allows it.
    if strategy == BobStrategy::Stubborn && feasible(center) {
        return Ok(center.clone());
    }
    let want = match strategy {
        BobStrategy::Random => 1,
        BobStrategy::Greedy => 64,
        BobStrategy::Stubborn => 64,
    };
    let mut found: Vec<RealProjectivePoint> = Vec::new();
    for _ in 0..BOB_ATTEMPTS {
        let cand = domain.sample_near(center, radius - rho_next, rng);
        if feasible(&cand) {
            found.push(cand);
            if found.len() >= want {
                break;
            }
        }
    }
    if found.is_empty() {
        return Err(GameError::NoFeasibleBall { round });
    }
    let pick = match strategy {
        BobStrategy::Random => found.swap_remove(0),
        BobStrategy::Stubborn => found
            .into_iter()
            .min_by(|a, b| a.dist(center).partial_cmp(&b.dist(center)).unwrap())
            .unwrap(),
        BobStrategy::Greedy => {
            let score = |c: &RealProjectivePoint| -> f64 {
                targets
                    .iter()
                    .map(|v| c.dist_rational(v))
                    .fold(f64::INFINITY, f64::min)
            };
            found
                .into_iter()
                .min_by(|a, b| score(a).partial_cmp(&score(b)).unwrap())
                .unwrap()
        }
    };
    Ok(pick)
}

/// Play a full game. `table` is the read-only enumeration of rational
/// points on X, sorted by height; Alice's searches are silently capped
/// at its maximal height, which is accounted for in [`certify_ba`].
#[allow(clippy::too_many_arguments)]
pub fn play(
    form: &QuadraticForm,
    table: &[RationalProjectivePoint],
    consts: &DaniConstants,
    domain: &BobDomain,
    beta: f64,
    rho0: f64,
    rounds: usize,
    strategy: BobStrategy,
    seed: u64,
) -> Result<GameOutcome, GameError> {
    if !(0.0..1.0 / 3.0).contains(&beta) || beta == 0.0 {
        return Err(GameError::BadBeta(beta));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut center = domain.sample(&mut rng);
    let mut radius = rho0;
    let mut transcript = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let deletion =
            alice_move(form, table, consts, &center, radius, beta, round)?;
        transcript.push(RoundRecord {
            round,
            center: center.coords().to_vec(),
            radius,
            h_cap: consts.c_small / radius,
            deletion: deletion.clone(),
        });
        // Greedy Bob aims at the rational points of the next height
        // scale; an evenly-strided subsample keeps his scoring cheap on
        // dense tables without biasing a region.
        let next_cap = consts.c_small / (beta * radius);
        let pool = height_window(table, consts.c_small / radius, next_cap);
        let stride = (pool.len() / 512).max(1);
        let targets: Vec<&RationalProjectivePoint> = pool.iter().step_by(stride).collect();
        center = bob_move(
            &deletion, &center, radius, beta, strategy, domain, &targets, &mut rng, round,
        )?;
        radius *= beta;
    }
    Ok(GameOutcome {
        x_final: center.coords().to_vec(),
        beta,
        rho0,
        rho_last: radius,
        rounds,
        transcript,
    })
}

/// Check the badly-approximable property of the game output against the
/// enumeration table, over the height range the game actually controls:
/// H <= min(h_cap, c_small / rho_last, table height).
pub fn certify_ba(
    x_final: &RealProjectivePoint,
    table: &[RationalProjectivePoint],
    beta: f64,
    consts: &DaniConstants,
    h_cap: i64,
    rho_last: f64,
) -> BaCertificate {
    let c0 = consts.c_small * beta * beta;
    let dynamic_cap = consts.c_small / rho_last;
    let eff_cap = (h_cap as f64).min(dynamic_cap).floor() as i64;
    let mut min_quality = f64::INFINITY;
    for v in table {
        if v.height() > eff_cap {
            break;
        }
        min_quality = min_quality.min(v.height() as f64 * x_final.dist_rational(v));
    }
    let valid = min_quality >= c0 - 1e-9;
    BaCertificate {
        x: x_final.coords().to_vec(),
        c0,
        h_cap: eff_cap,
        min_quality,
        valid,
    }
}

/// Replay the proof chain on a transcript: for every round i >= 1 and
/// every table point v whose height falls in the round's window
/// [c_small / rho_{i-1}, c_small / rho_i], either v lies outside the
/// doubled ball 2B_i and dist(x_final, v) >= beta rho_{i-1}, or v lies
/// on the deleted subspace L_i and dist(x_final, v) >= beta^2 rho_{i-1}.
pub fn check_transcript(
    outcome: &GameOutcome,
    table: &[RationalProjectivePoint],
    consts: &DaniConstants,
) -> Result<(), String> {
    let beta = outcome.beta;
    let x_final = RealProjectivePoint::new(outcome.x_final.clone()).expect("final point");
    let table_cap = table.last().map_or(0, |v| v.height()) as f64;
    for i in 1..outcome.transcript.len() {
        let rec = &outcome.transcript[i];
        let prev = &outcome.transcript[i - 1];
        let lo = consts.c_small / prev.radius;
        let hi = (consts.c_small / rec.radius).min(table_cap);
        if lo > hi {
            continue;
        }
        let center = RealProjectivePoint::new(rec.center.clone()).expect("center");
        let subspace_real: Option<Vec<Vec<f64>>> = match &rec.deletion {
            Deletion::Subspace { basis, .. } => Some(
                basis
                    .iter()
                    .map(|b| RealProjectivePoint::from_rational(b).coords().to_vec())
                    .collect(),
            ),
            Deletion::CenterBall { .. } => None,
        };
        for v in height_window(table, lo, hi) {
            let d_final = x_final.dist_rational(v);
            let outside = center.dist_rational(v) > 2.0 * rec.radius;
            let branch1 = outside && d_final >= beta * prev.radius * (1.0 - 1e-9);
            let branch2 = match &subspace_real {
                Some(basis) => {
                    let on_l =
                        dist_to_subspace(&RealProjectivePoint::from_rational(v), basis)
                            < 1e-9;
                    on_l && d_final >= beta * beta * prev.radius * (1.0 - 1e-9)
                }
                None => false,
            };
            if !branch1 && !branch2 {
                return Err(format!(
                    "round {i}: point {:?} (H = {}) violates both branches: \
                     dist(x_final, v) = {d_final:.3e}, outside 2B = {outside}",
                    v.coords(),
                    v.height()
                ));
            }
        }
    }
    Ok(())
}
