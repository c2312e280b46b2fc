//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line. Tolerances and sweep sizes are pinned as constants
//! at the top of the file; a criterion fails loudly via panic with the
//! violating datum.

use std::collections::BTreeSet;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quadric_dioph_core::approx::{
    best_records, cover_count, cover_diagnostic, exponent, simplex_verify,
    strong_simplex_verify,
};
use quadric_dioph_core::game::{certify_ba, check_transcript, play, BobDomain, GameError};
use quadric_dioph_core::geometry::{dist_units, exact_chordal_sq, QuadricSampler, SliceSampler};
use quadric_dioph_core::linalg::rat_to_f64;
use quadric_dioph_core::points::{
    enumerate_bruteforce, enumerate_near, enumerate_parametrized, local_obstruction,
    qrank_bounds,
};
use quadric_dioph_core::{
    BobStrategy, DaniConstants, FlowContext, QuadraticForm, RationalProjectivePoint,
    RealProjectivePoint,
};

// Pinned tolerances and budgets.
const ENUM_TIME: Duration = Duration::from_secs(60);
const SIMPLEX_PAIRS: usize = 1000;
const SIMPLEX_RHO_MIN: f64 = 1e-3;
const SIMPLEX_RHO_MAX: f64 = 1e-1;
const SIMPLEX_TIME: Duration = Duration::from_secs(300);
const ORACLE_TOL: f64 = 1e-9;
const DANI_TRIPLES: usize = 100_000;
const DANI_RATIO_TOL: f64 = 1e-9;
const DANI_Q_TOL: f64 = 1e-6;
const DANI_GROUP_TOL: f64 = 1e-9;
const EXP_POINTS: usize = 100;
const EXP_H_MAX: i64 = 100_000;
const EXP_MEAN_RANGE: (f64, f64) = (0.8, 1.2);
const EXP_FLOOR: f64 = 0.8;
const EXP_TIME: Duration = Duration::from_secs(600);
// Genericity gate for the exponent sweep (see criterion_5): a sample
// abnormally close to one rational point has a finite-height record
// sequence dominated by that fluke — the records stall across a parabolic
// gap the scan cap truncates, and no regression over the remaining range
// recovers the asymptotic exponent. A point of height H at distance d
// stalls the records over [~C/d, E] with E ~ 0.27 / (d^2 H) (measured on
// this scan range); the slope is corrupted when the stall is long
// (E >= 8 C/d) and ends deep into the scan (E >= h_max/8). Solving both
// for d, with a ~1.5x safety margin, gives the rejection radius
// min(7e-3 / sqrt(H), 0.1 / H); candidates with any rational point of
// height <= EXP_GATE_H inside that radius are resampled. The radius stays
// well below typical record distances (~1/H), so generic samples pass.
const EXP_GATE_TABLE_H: i64 = 200;
const EXP_GATE_H: i64 = 6_400;
const GAME_COUNT: usize = 100;
const GAME_BETA: f64 = 0.1;
const GAME_ROUNDS: usize = 40;
const GAME_RHO0: f64 = 0.5;
const GAME_TIME: Duration = Duration::from_secs(600);
const COVER_CEILING: f64 = 0.7;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n} ({name}): {verdict} — {detail}");
    assert!(pass, "criterion {n} ({name}) FAILED: {detail}");
}

fn circle() -> QuadraticForm {
    QuadraticForm::diagonal(&[1, 1, -1])
}

fn sphere2() -> QuadraticForm {
    QuadraticForm::diagonal(&[1, 1, 1, -1])
}

fn sphere3() -> QuadraticForm {
    QuadraticForm::diagonal(&[1, 1, 1, 1, -1])
}

fn point(v: &[i64]) -> RationalProjectivePoint {
    RationalProjectivePoint::canonicalize(v.to_vec()).unwrap()
}

/// One form of the simplex sweep: table up to the maximal useful
/// height c_small / rho_min (taller points can never enter a cluster).
struct SweepForm {
    name: &'static str,
    form: QuadraticForm,
    consts: DaniConstants,
    table: Vec<RationalProjectivePoint>,
}

fn sweep_forms() -> &'static Vec<SweepForm> {
    static FORMS: OnceLock<Vec<SweepForm>> = OnceLock::new();
    FORMS.get_or_init(|| {
        let specs: Vec<(&'static str, QuadraticForm, Option<RationalProjectivePoint>)> = vec![
            ("circle", circle(), Some(point(&[1, 0, 1]))),
            ("2-sphere", sphere2(), Some(point(&[1, 0, 0, 1]))),
            ("3-sphere", sphere3(), Some(point(&[1, 0, 0, 0, 1]))),
            ("4x4 split", QuadraticForm::antidiagonal(4), None),
        ];
        specs
            .into_iter()
            .map(|(name, form, base)| {
                let consts = match base {
                    Some(b) => DaniConstants::for_form(&form, &b).unwrap(),
                    None => DaniConstants::for_good_form(&form).unwrap(),
                };
                let h_table = (consts.c_small / SIMPLEX_RHO_MIN).ceil() as i64;
                let table = enumerate_bruteforce(&form, h_table);
                SweepForm { name, form, consts, table }
            })
            .collect()
    })
}

/// Log-uniform rho and a sampled x, per sweep index.
fn sweep_pair(
    sampler: &QuadricSampler,
    seed: u64,
    i: usize,
) -> (RealProjectivePoint, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    let x = sampler.sample(&mut rng);
    let u: f64 = rng.gen();
    let rho = (SIMPLEX_RHO_MIN.ln() + u * (SIMPLEX_RHO_MAX.ln() - SIMPLEX_RHO_MIN.ln())).exp();
    (x, rho)
}

/// Projective distance of two circle points predicted by the exact
/// chordal oracle: dist = (c / sqrt(2)) sqrt(1 - c^2 / 8).
fn oracle_dist(a: &RationalProjectivePoint, b: &RationalProjectivePoint) -> Option<f64> {
    let c2 = rat_to_f64(&exact_chordal_sq(a, b)?);
    let c = c2.max(0.0).sqrt();
    Some((c / 2f64.sqrt()) * (1.0 - c2 / 8.0).max(0.0).sqrt())
}

#[test]
fn criterion_1_enumeration_exactness() {
    let start = Instant::now();
    let circle = circle();
    let mut detail = String::new();
    let mut pass = true;

    for (h, want) in [(1i64, 4usize), (5, 12)] {
        let got = enumerate_bruteforce(&circle, h).len();
        if got != want {
            pass = false;
            detail = format!("circle h<={h}: {got} points, expected {want}");
        }
    }

    let cases: Vec<(&str, QuadraticForm, RationalProjectivePoint, Vec<i64>)> = vec![
        ("circle", circle.clone(), point(&[1, 0, 1]), vec![5, 25, 100]),
        ("2-sphere", sphere2(), point(&[1, 0, 0, 1]), vec![5, 20]),
    ];
    for (name, form, base, heights) in &cases {
        for &h in heights {
            let brute = enumerate_bruteforce(form, h);
            let param = enumerate_parametrized(form, base, h).unwrap();
            if brute != param {
                pass = false;
                detail = format!(
                    "{name} h<={h}: brute {} points vs parametrized {}",
                    brute.len(),
                    param.len()
                );
            }
        }
    }

    let elapsed = start.elapsed();
    if elapsed > ENUM_TIME {
        pass = false;
        detail = format!("runtime {elapsed:.1?} over budget {ENUM_TIME:?}");
    }
    if pass {
        detail = format!(
            "counts 4/12 exact; brute = parametrized on circle h in {{5,25,100}} \
             and 2-sphere h in {{5,20}}; {elapsed:.1?}"
        );
    }
    report(1, "enumeration exactness", pass, &detail);
}

#[test]
fn criterion_2_simplex_lemma() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    let mut oracle_checks = 0usize;

    for (fi, sf) in sweep_forms().iter().enumerate() {
        let sampler = QuadricSampler::new(&sf.form).unwrap();
        let mut failures = 0usize;
        for i in 0..SIMPLEX_PAIRS {
            let (x, rho) = sweep_pair(&sampler, 1000 * fi as u64, i);
            let r = simplex_verify(&sf.form, &sf.table, &x, rho, &sf.consts);
            if !r.pass {
                failures += 1;
            }
            if sf.name == "circle" {
                // Independent oracle: the f64 metric on the cluster's
                // height range must match the exact chordal formula.
                let h_cap = sf.consts.c_small / rho;
                let cluster: Vec<&RationalProjectivePoint> = sf
                    .table
                    .iter()
                    .take_while(|v| (v.height() as f64) <= h_cap)
                    .filter(|v| x.dist_rational(v) <= rho)
                    .collect();
                for a in &cluster {
                    for b in &cluster {
                        let expected = oracle_dist(a, b).expect("circle chart");
                        let got = dist_units(&a.to_unit(), &b.to_unit());
                        oracle_checks += 1;
                        if (got - expected).abs() > ORACLE_TOL {
                            pass = false;
                            detail = format!(
                                "oracle mismatch at {:?},{:?}: {got} vs {expected}",
                                a.coords(),
                                b.coords()
                            );
                        }
                    }
                }
            }
        }
        if failures > 0 {
            pass = false;
            detail = format!("{}: {failures} simplex failures", sf.name);
        }
    }

    // Non-vacuous oracle coverage: all consecutive circle table pairs.
    let circle_table = &sweep_forms()[0].table;
    for w in circle_table.windows(2) {
        let expected = oracle_dist(&w[0], &w[1]).expect("circle chart");
        let got = dist_units(&w[0].to_unit(), &w[1].to_unit());
        oracle_checks += 1;
        if (got - expected).abs() > ORACLE_TOL {
            pass = false;
            detail = format!("oracle mismatch at table pair {:?}", w[0].coords());
        }
    }

    let elapsed = start.elapsed();
    if elapsed > SIMPLEX_TIME {
        pass = false;
        detail = format!("runtime {elapsed:.1?} over budget {SIMPLEX_TIME:?}");
    }
    if pass {
        detail = format!(
            "{SIMPLEX_PAIRS} pairs x 4 forms, zero failures; \
             {oracle_checks} oracle checks agree to {ORACLE_TOL:e}; {elapsed:.1?}"
        );
    }
    report(2, "simplex lemma", pass, &detail);
}

#[test]
fn criterion_3_strong_simplex_lemma() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for (fi, sf) in sweep_forms().iter().enumerate() {
        let sampler = QuadricSampler::new(&sf.form).unwrap();
        let mut failures = 0usize;
        for i in 0..SIMPLEX_PAIRS {
            let (x, rho) = sweep_pair(&sampler, 7000 + 1000 * fi as u64, i);
            if !strong_simplex_verify(&sf.form, &sf.table, &x, rho, &sf.consts).pass {
                failures += 1;
            }
        }
        if failures > 0 {
            pass = false;
            detail = format!("{}: {failures} strong simplex failures", sf.name);
        }
    }
    let elapsed = start.elapsed();
    if pass {
        detail = format!("{SIMPLEX_PAIRS} pairs x 4 forms with sqrt(rho/H) rule, zero failures; {elapsed:.1?}");
    }
    report(3, "strong simplex lemma", pass, &detail);
}

#[test]
fn criterion_4_dani_correspondence() {
    let start = Instant::now();
    let circle_good =
        QuadraticForm::new(vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]).unwrap();
    let sphere_good = QuadraticForm::new(vec![
        vec![0, 0, 0, 1],
        vec![0, 1, 0, 0],
        vec![0, 0, 1, 0],
        vec![1, 0, 0, 0],
    ])
    .unwrap();

    let t_grid: Vec<f64> = (0..49).map(|k| 0.25 * k as f64).collect();
    let per_form = DANI_TRIPLES / 2;
    let x_count = per_form.div_ceil(t_grid.len());

    let mut pass = true;
    let mut detail = String::new();
    let mut max_ratio: f64 = 0.0;
    let mut max_q: f64 = 0.0;
    let mut max_group: f64 = 0.0;
    let mut triples = 0usize;

    for (fi, form) in [circle_good, sphere_good].into_iter().enumerate() {
        let table = enumerate_bruteforce(&form, 1000);
        let consts = DaniConstants::for_good_form(&form).unwrap();
        let sampler = QuadricSampler::new(&form).unwrap();
        let gram = form.gram_f64();
        let n1 = form.ambient();
        for xi in 0..x_count {
            let mut rng = ChaCha8Rng::seed_from_u64((fi * x_count + xi) as u64);
            let x = sampler.sample(&mut rng);
            let ctx = FlowContext::new(&form, &x).unwrap();
            for &t in &t_grid {
                let v = &table[rng.gen_range(0..table.len())];
                let r = ctx.verify_dani(&consts, v, t);
                triples += 1;
                max_ratio = max_ratio.max(r.ratio);
                if r.ratio > 1.0 + DANI_RATIO_TOL {
                    pass = false;
                    detail = format!(
                        "ratio {} at v={:?}, t={t}",
                        r.ratio,
                        v.coords()
                    );
                }
            }
            // Q preservation and group law, once per sampled x.
            // Both parameters stay in the nonnegative range: composing a
            // contraction with an expansion of nearly equal magnitude
            // cancels e^|t|-size entries and amplifies f64 roundoff past
            // any fixed tolerance, which says nothing about the flow.
            let t: f64 = rng.gen_range(0.0..12.0);
            let s: f64 = rng.gen_range(0.0..12.0);
            let g = ctx.flow_matrix(t);
            let w = DVector::from_iterator(n1, (0..n1).map(|_| rng.gen_range(-1.0..1.0)));
            let gw = &g * &w;
            let q = |v: &DVector<f64>| (v.transpose() * &gram * v)[(0, 0)];
            let q_rel = (q(&gw) - q(&w)).abs() / (w.norm_squared() * g.norm().powi(2)).max(1.0);
            max_q = max_q.max(q_rel);
            let comp = ctx.flow_matrix(s) * &g;
            let direct = ctx.flow_matrix(s + t);
            let group = (comp - &direct).norm() / direct.norm().max(1.0);
            max_group = max_group.max(group);
            if q_rel > DANI_Q_TOL || group > DANI_GROUP_TOL {
                pass = false;
                detail = format!("q_rel {q_rel:e}, group {group:e} at sampled x");
            }
        }
    }

    let elapsed = start.elapsed();
    if pass {
        detail = format!(
            "{triples} triples, max ratio {max_ratio:.6} <= 1+{DANI_RATIO_TOL:e}; \
             max Q residual {max_q:.2e}, max group error {max_group:.2e}; {elapsed:.1?}"
        );
    }
    report(4, "Dani correspondence", pass, &detail);
}

/// Rejection radius of the genericity gate around a rational point of
/// height h (see the EXP_GATE_* constants above).
fn gate_radius(h: i64) -> f64 {
    let h = h as f64;
    (7e-3 / h.sqrt()).min(0.1 / h)
}

/// Rejection-resample until the candidate clears the genericity gate.
/// Heights up to EXP_GATE_TABLE_H are checked against the precomputed
/// table; taller ones by octave-wise cone search.
fn generic_sample(
    form: &QuadraticForm,
    table: &[RationalProjectivePoint],
    sample: &dyn Fn(&mut ChaCha8Rng) -> RealProjectivePoint,
    rng: &mut ChaCha8Rng,
) -> RealProjectivePoint {
    'outer: loop {
        let x = sample(rng);
        if table.iter().any(|p| x.dist_rational(p) < gate_radius(p.height())) {
            continue;
        }
        let mut lo = EXP_GATE_TABLE_H;
        while lo < EXP_GATE_H {
            let hi = lo * 2;
            let near = enumerate_near(form, x.coords(), lo + 1, hi, gate_radius(lo)).unwrap();
            if !near.is_empty() {
                continue 'outer;
            }
            lo = hi;
        }
        return x;
    }
}

#[test]
fn criterion_5_dirichlet_exponent() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();

    let circle_form = circle();
    let circle_sampler = QuadricSampler::new(&circle_form).unwrap();
    let sphere_form = sphere2();
    // 1-dimensional slice of the 2-sphere in P^3: span(e1, e2, e4).
    let slice = vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ];
    let slice_sampler = SliceSampler::new(&sphere_form, &slice).unwrap();

    let mut run = |name: &str,
                   form: &QuadraticForm,
                   sample: &dyn Fn(&mut ChaCha8Rng) -> RealProjectivePoint,
                   seed0: u64| {
        let table = enumerate_bruteforce(form, EXP_GATE_TABLE_H);
        let mut betas = Vec::new();
        for i in 0..EXP_POINTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed0 + i as u64);
            let x = generic_sample(form, &table, sample, &mut rng);
            let records = match best_records(form, &x, EXP_H_MAX) {
                Ok(r) if !r.is_empty() => r,
                other => {
                    pass = false;
                    detail = format!("{name} point {i}: empty records ({other:?})");
                    return;
                }
            };
            match exponent(&records, EXP_H_MAX) {
                Ok(est) if !est.infinite => {
                    if est.beta_hat < EXP_FLOOR {
                        pass = false;
                        detail = format!(
                            "{name} point {i}: beta_hat {} below floor {EXP_FLOOR}",
                            est.beta_hat
                        );
                    }
                    betas.push(est.beta_hat);
                }
                other => {
                    pass = false;
                    detail = format!("{name} point {i}: exponent failed ({other:?})");
                }
            }
        }
        let mean = betas.iter().sum::<f64>() / betas.len().max(1) as f64;
        if !(EXP_MEAN_RANGE.0..=EXP_MEAN_RANGE.1).contains(&mean) {
            pass = false;
            detail = format!("{name}: mean beta_hat {mean} outside {EXP_MEAN_RANGE:?}");
        } else if pass {
            detail = format!("{detail}{name} mean {mean:.3}; ");
        }
    };
    run("circle", &circle_form, &|rng| circle_sampler.sample(rng), 50_000);
    run("sphere-slice", &sphere_form, &|rng| slice_sampler.sample(rng), 60_000);

    let elapsed = start.elapsed();
    if elapsed > EXP_TIME {
        pass = false;
        detail = format!("runtime {elapsed:.1?} over budget {EXP_TIME:?}");
    }
    if pass {
        detail = format!(
            "{detail}{EXP_POINTS} points each to h_max {EXP_H_MAX}, \
             all beta_hat >= {EXP_FLOOR}; {elapsed:.1?}"
        );
    }
    report(5, "Dirichlet/exponent", pass, &detail);
}

#[test]
fn criterion_6_qrank_table() {
    let rows: Vec<(&str, QuadraticForm, usize, Option<u64>)> = vec![
        ("diag(1,1,-1)", circle(), 1, None),
        ("diag(1,1,1,-1)", sphere2(), 1, None),
        ("antidiag 4x4", QuadraticForm::antidiagonal(4), 2, None),
        ("diag(1,1,-3)", QuadraticForm::diagonal(&[1, 1, -3]), 0, Some(9)),
        ("diag(1,1,1)", QuadraticForm::diagonal(&[1, 1, 1]), 0, Some(4)),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (name, form, want, modulus) in &rows {
        let b = qrank_bounds(form, 60);
        if b.lower != b.upper || b.upper != *want {
            pass = false;
            detail = format!("{name}: bounds [{}, {}], expected {want}", b.lower, b.upper);
        }
        if let Some(m) = modulus {
            if local_obstruction(form, &[*m]).is_none() {
                pass = false;
                detail = format!("{name}: no obstruction mod {m}");
            }
        }
    }
    if pass {
        detail = "ranks 1,1,2,0,0 with lower = upper; obstructions mod 9 and mod 4 confirmed"
            .to_string();
    }
    report(6, "Q-rank regression table", pass, &detail);
}

#[test]
fn criterion_7_schmidt_game() {
    let start = Instant::now();
    // Table caps chosen so the whole criterion stays inside its budget
    // on one core; certify_ba's effective cap accounts for them.
    let setups: Vec<(&str, QuadraticForm, RationalProjectivePoint, i64)> = vec![
        ("circle", circle(), point(&[1, 0, 1]), 1000),
        ("2-sphere", sphere2(), point(&[1, 0, 0, 1]), 300),
    ];
    let strategies =
        [BobStrategy::Random, BobStrategy::Greedy, BobStrategy::Stubborn];
    let mut pass = true;
    let mut detail = String::new();
    let mut played = 0usize;

    for (name, form, base, h_table) in &setups {
        let table = enumerate_bruteforce(form, *h_table);
        let consts = DaniConstants::for_form(form, base).unwrap();
        let sampler = QuadricSampler::new(form).unwrap();
        let domain = BobDomain::Quadric(&sampler);
        for (si, &strategy) in strategies.iter().enumerate() {
            for g in 0..GAME_COUNT {
                let seed = (si * GAME_COUNT + g) as u64;
                let outcome = match play(
                    form, &table, &consts, &domain, GAME_BETA, GAME_RHO0, GAME_ROUNDS,
                    strategy, seed,
                ) {
                    Ok(o) => o,
                    Err(e) => {
                        pass = false;
                        let kind = match e {
                            GameError::ClosureFailure { .. } => "closure failure",
                            _ => "game error",
                        };
                        detail = format!("{name} {strategy:?} seed {seed}: {kind}: {e}");
                        continue;
                    }
                };
                played += 1;
                let x_final = RealProjectivePoint::new(outcome.x_final.clone()).unwrap();
                let cert = certify_ba(
                    &x_final, &table, GAME_BETA, &consts, *h_table, outcome.rho_last,
                );
                if !cert.valid {
                    pass = false;
                    detail = format!(
                        "{name} {strategy:?} seed {seed}: certificate invalid \
                         (min quality {} < c0 {})",
                        cert.min_quality, cert.c0
                    );
                }
                if let Err(e) = check_transcript(&outcome, &table, &consts) {
                    pass = false;
                    detail = format!("{name} {strategy:?} seed {seed}: transcript: {e}");
                }
            }
        }
    }

    let elapsed = start.elapsed();
    if elapsed > GAME_TIME {
        pass = false;
        detail = format!("runtime {elapsed:.1?} over budget {GAME_TIME:?}");
    }
    if pass {
        detail = format!(
            "{played} games ({GAME_COUNT} per strategy per form), all certificates \
             valid, all transcripts pass the two-branch check, zero closure \
             failures; {elapsed:.1?}"
        );
    }
    report(7, "isotropic Schmidt game", pass, &detail);
}

#[test]
fn criterion_8_cover_count() {
    let form = circle();
    let table = enumerate_bruteforce(&form, (1 << 13) - 1);
    let ps: Vec<u32> = (6..=12).collect();
    let mut pass = true;
    let mut detail = String::new();

    let mean_diag = |beta: f64| -> f64 {
        let diags: Vec<f64> = ps
            .iter()
            .filter_map(|&p| {
                cover_diagnostic(cover_count(&table, 3, beta, p, usize::MAX), beta, p)
            })
            .collect();
        diags.iter().sum::<f64>() / diags.len() as f64
    };

    for &p in &ps {
        let d = cover_diagnostic(cover_count(&table, 3, 2.0, p, usize::MAX), 2.0, p)
            .unwrap_or(0.0);
        if d > COVER_CEILING {
            pass = false;
            detail = format!("beta=2 p={p}: diagnostic {d} over ceiling {COVER_CEILING}");
        }
    }
    let means: Vec<f64> = [1.5, 2.0, 3.0].iter().map(|&b| mean_diag(b)).collect();
    if !(means[0] >= means[1] && means[1] >= means[2]) {
        pass = false;
        detail = format!("mean diagnostics not non-increasing in beta: {means:?}");
    }
    if pass {
        detail = format!(
            "beta=2 diagnostics <= {COVER_CEILING} for p in 6..=12; means over beta \
             {{1.5, 2, 3}} = {:.3?} non-increasing",
            means
        );
    }
    report(8, "cover-count diagnostic", pass, &detail);
}

#[test]
fn criterion_9_determinism() {
    let bin = env!("CARGO_BIN_EXE_quadric-dioph");
    let out = tempfile::tempdir().unwrap();
    let cfg_path = out.path().join("config.json");
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "form": {"dim": 2, "gram": [[1,0,0],[0,1,0],[0,0,-1]]},
            "h_max": 50,
            "seed": 3,
            "base": [1, 0, 1],
            "simplex": {"pairs": 25, "rho_min": 1e-2, "rho_max": 1e-1},
            "dani": {"samples": 100, "t_max": 12.0},
            "approx": {"points": 3},
            "cover": {"beta": 2.0, "p_min": 6, "p_max": 8},
            "game": {"beta": 0.1, "rho0": 0.5, "rounds": 12, "games": 2, "strategy": "all"}
        })
        .to_string(),
    )
    .unwrap();

    let subcommands: Vec<(&str, Option<i64>)> = vec![
        ("enumerate", None),
        ("qrank", None),
        ("normalize", None),
        ("simplex-verify", Some(100)),
        ("strong-simplex-verify", Some(100)),
        ("dani-verify", Some(100)),
        ("exponent", Some(2000)),
        ("dirichlet", Some(500)),
        ("cover-count", None),
        ("game", Some(200)),
    ];
    let mut pass = true;
    let mut detail = String::new();

    for (sub, h_override) in &subcommands {
        let mut cmd = Command::new(bin);
        cmd.arg(sub).arg("--config").arg(&cfg_path).arg("--out").arg(out.path());
        if let Some(h) = h_override {
            cmd.arg("--h-max").arg(h.to_string());
        }
        let status = cmd.status().unwrap();
        if !status.success() {
            pass = false;
            detail = format!("{sub}: first run exited with {status}");
            continue;
        }
        // Locate the single result directory and snapshot it.
        let sub_dir = out.path().join("results").join(sub);
        let run_dir = std::fs::read_dir(&sub_dir).unwrap().next().unwrap().unwrap().path();
        let files = ["data.csv", "summary.json", "manifest.json"];
        let before: Vec<Vec<u8>> =
            files.iter().map(|f| std::fs::read(run_dir.join(f)).unwrap()).collect();

        // Re-run purely from the manifest: extract the echoed config and
        // invoke the experiment it names, with no overrides.
        let manifest: serde_json::Value =
            serde_json::from_slice(&before[2]).unwrap();
        let replay_cfg = out.path().join(format!("replay-{sub}.json"));
        std::fs::write(&replay_cfg, manifest["config"].to_string()).unwrap();
        let replay_name = manifest["experiment"].as_str().unwrap();
        let status = Command::new(bin)
            .arg(replay_name)
            .arg("--config")
            .arg(&replay_cfg)
            .arg("--out")
            .arg(out.path())
            .status()
            .unwrap();
        if !status.success() {
            pass = false;
            detail = format!("{sub}: manifest replay exited with {status}");
            continue;
        }
        let dirs: BTreeSet<_> = std::fs::read_dir(&sub_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        if dirs.len() != 1 {
            pass = false;
            detail = format!("{sub}: replay landed in a different config hash");
            continue;
        }
        for (f, old) in files.iter().zip(&before) {
            let new = std::fs::read(run_dir.join(f)).unwrap();
            if &new != old {
                pass = false;
                detail = format!("{sub}: {f} differs between run and manifest replay");
            }
        }
    }
    if pass {
        detail = format!(
            "all {} experiments byte-identical between a run and its manifest replay",
            subcommands.len()
        );
    }
    report(9, "determinism", pass, &detail);
}
