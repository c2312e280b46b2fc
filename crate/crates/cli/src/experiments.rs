//! Experiment orchestration and result persistence.
//!
//! Every experiment follows the same shape: resolve the effective
//! config, hash it, take the per-results-directory lock, run the
//! checks, and write `data.csv` (bulk rows), `summary.json`
//! (`pass_count` / `fail_count` / `extremes`) and `manifest.json`
//! (config echo + library version + seed) under
//! `results/<experiment>/<config-hash>/`. All randomness is ChaCha8
//! seeded from the config, so repeated runs of the same config on the
//! same build produce byte-identical artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use quadric_dioph_core::approx::{
    best_records, cover_count, cover_diagnostic, dirichlet_constant, exponent,
    simplex_verify, strong_simplex_verify, SimplexReport,
};
use quadric_dioph_core::flow::FlowError;
use quadric_dioph_core::game::{check_transcript, play, BobDomain, Deletion};
use quadric_dioph_core::geometry::{QuadricSampler, SliceSampler};
use quadric_dioph_core::linalg::{congruence, int_matrix_to_rat};
use quadric_dioph_core::points::qrank_bounds;
use quadric_dioph_core::{
    game, BobStrategy, DaniConstants, FlowContext, QuadraticForm, RationalProjectivePoint,
    RealProjectivePoint,
};

use crate::cache::{self, CacheEvent};
use crate::config::{ConfigError, Experiment, ExperimentConfig, Manifest};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("results directory is locked by another run ({0})")]
    Locked(String),
}

/// Outcome of one experiment run.
#[derive(Debug)]
pub struct RunReport {
    pub experiment: Experiment,
    pub dir: PathBuf,
    pub pass: bool,
    pub summary: Value,
}

/// Exclusive lock on a results directory, released on drop.
struct Lock {
    path: PathBuf,
}

impl Lock {
    fn acquire(root: &Path) -> Result<Self, RunError> {
        let path = root.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(RunError::Locked(path.display().to_string()))
            }
            Err(source) => Err(RunError::Io { path: path.display().to_string(), source }),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// JSON integer that survives f64 consumers: decimal string above 2^53.
pub fn json_int(v: i128) -> Value {
    if v.abs() <= (1i128 << 53) {
        json!(v as i64)
    } else {
        json!(v.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Run one experiment end to end and persist its artifacts under
/// `out/results/`; the enumeration cache lives in `out/cache/`.
pub fn run(
    experiment: Experiment,
    raw: &ExperimentConfig,
    h_max_override: Option<i64>,
    seed_override: Option<u64>,
    out: &Path,
) -> Result<RunReport, RunError> {
    let cfg = raw.effective(h_max_override, seed_override)?;
    cfg.validate(experiment)?;
    let form = cfg.form.resolve()?;
    let hash = cfg.hash(experiment);

    let results_root = out.join("results");
    let dir = results_root.join(experiment.name()).join(&hash);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let cache_dir = out.join("cache");
    let _lock = Lock::acquire(&results_root)?;

    let mut body = Body {
        cfg: &cfg,
        form,
        cache_dir,
        rows: Vec::new(),
        header: Vec::new(),
    };
    let (pass, mut summary) = match experiment {
        Experiment::Enumerate => body.enumerate()?,
        Experiment::Qrank => body.qrank()?,
        Experiment::Normalize => body.normalize()?,
        Experiment::SimplexVerify => body.simplex(false)?,
        Experiment::StrongSimplexVerify => body.simplex(true)?,
        Experiment::DaniVerify => body.dani()?,
        Experiment::Exponent => body.approx_sweep(true)?,
        Experiment::Dirichlet => body.approx_sweep(false)?,
        Experiment::CoverCount => body.cover()?,
        Experiment::Game => body.game()?,
    };
    summary["pass"] = json!(pass);

    let csv_path = dir.join("data.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| RunError::Io {
        path: csv_path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    w.write_record(&body.header).and_then(|()| {
        body.rows.iter().try_for_each(|r| w.write_record(r))
    })
    .map_err(|e| RunError::Io {
        path: csv_path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    drop(w);

    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, pretty(&summary)).map_err(io_err(&summary_path))?;

    let manifest = Manifest {
        experiment: experiment.name().to_string(),
        config_hash: hash,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed(),
        config: cfg.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, pretty(&serde_json::to_value(&manifest).expect("manifest")))
        .map_err(io_err(&manifest_path))?;

    Ok(RunReport { experiment, dir, pass, summary })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Per-run working state: the resolved form plus the CSV being built.
struct Body<'a> {
    cfg: &'a ExperimentConfig,
    form: QuadraticForm,
    cache_dir: PathBuf,
    rows: Vec<Vec<String>>,
    header: Vec<String>,
}

impl Body<'_> {
    fn coord_header(&self, extra: &[&str]) -> Vec<String> {
        (0..self.form.ambient())
            .map(|i| format!("x{i}"))
            .chain(extra.iter().map(|s| s.to_string()))
            .collect()
    }

    fn table(&self, h_max: i64) -> Vec<RationalProjectivePoint> {
        let (table, events) =
            cache::get_or_build(&self.cache_dir, &self.form, h_max, self.cfg.seed());
        for e in &events {
            match e {
                CacheEvent::CorruptRebuilt => {
                    eprintln!("warning: corrupt enumeration cache, rebuilt from scratch")
                }
                CacheEvent::SpotCheckRebuilt => {
                    eprintln!("warning: enumeration cache failed its spot check, rebuilt")
                }
                _ => {}
            }
        }
        table
    }

    /// Dani constants for the form: computed directly on a good form,
    /// otherwise on the hyperbolic normal form at the first rational
    /// point of the table.
    fn constants(
        &self,
        table: &[RationalProjectivePoint],
    ) -> Result<DaniConstants, RunError> {
        let r = if self.form.is_good_form() {
            DaniConstants::for_good_form(&self.form)
        } else {
            match table.first() {
                Some(base) => DaniConstants::for_form(&self.form, base),
                None => {
                    return Err(ConfigError::Invalid(
                        "no rational base point on X for the Dani constants; \
                         increase h_max or check the form"
                            .into(),
                    )
                    .into())
                }
            }
        };
        r.map_err(|e: FlowError| ConfigError::Invalid(e.to_string()).into())
    }

    fn sampler(&self) -> Result<QuadricSampler, RunError> {
        QuadricSampler::new(&self.form)
            .map_err(|e| ConfigError::Invalid(format!("cannot sample on X: {e}")).into())
    }

    fn slice_sampler(&self, slice: &[Vec<f64>]) -> Result<SliceSampler, RunError> {
        SliceSampler::new(&self.form, slice)
            .map_err(|e| ConfigError::Invalid(format!("cannot sample on the slice: {e}")).into())
    }

    fn enumerate(&mut self) -> Result<(bool, Value), RunError> {
        let h_max = self.cfg.h_max()?;
        let table = self.table(h_max);
        self.header = self.coord_header(&["height"]);
        for p in &table {
            let mut row: Vec<String> =
                p.coords().iter().map(|c| c.to_string()).collect();
            row.push(p.height().to_string());
            self.rows.push(row);
        }
        let max_h = table.last().map_or(0, |p| p.height());
        let summary = json!({
            "pass_count": table.len(),
            "fail_count": 0,
            "extremes": { "count": table.len(), "max_height": json_int(max_h as i128) },
        });
        Ok((true, summary))
    }

    fn qrank(&mut self) -> Result<(bool, Value), RunError> {
        let h_max = self.cfg.h_max()?;
        let bounds = qrank_bounds(&self.form, h_max);
        self.header = self.coord_header(&["height"]);
        if let Some(w) = &bounds.witness {
            for p in w.basis() {
                let mut row: Vec<String> =
                    p.coords().iter().map(|c| c.to_string()).collect();
                row.push(p.height().to_string());
                self.rows.push(row);
            }
        }
        let pass = bounds.lower == bounds.upper;
        let summary = json!({
            "pass_count": usize::from(pass),
            "fail_count": usize::from(!pass),
            "extremes": {
                "lower": bounds.lower,
                "upper": bounds.upper,
                "obstruction_modulus": bounds.obstruction,
            },
        });
        Ok((pass, summary))
    }

    fn normalize(&mut self) -> Result<(bool, Value), RunError> {
        let base_coords = self.cfg.base.clone().expect("validated");
        let base = RationalProjectivePoint::canonicalize(base_coords)
            .map_err(|e| ConfigError::Invalid(format!("bad base point: {e}")))?;
        let hb = self
            .form
            .hyperbolic_normalize(&base)
            .map_err(|e| ConfigError::Invalid(format!("cannot normalize at base: {e}")))?;
        // Exact block-shape check: T^t A T must equal the good-form Gram
        // rebuilt from the residual.
        let a = int_matrix_to_rat(self.form.gram());
        let transformed = congruence(&a, &hb.basis);
        let pass = transformed == hb.good_form_gram();

        self.header = (0..self.form.ambient())
            .map(|i| format!("y{i}"))
            .collect();
        self.header.insert(0, "vector".to_string());
        let n1 = hb.basis.len();
        for j in 0..n1 {
            let mut row = vec![j.to_string()];
            row.extend((0..n1).map(|i| hb.basis[i][j].to_string()));
            self.rows.push(row);
        }
        let residual: Vec<Vec<String>> = hb
            .residual
            .iter()
            .map(|r| r.iter().map(|e| e.to_string()).collect())
            .collect();
        let summary = json!({
            "pass_count": usize::from(pass),
            "fail_count": usize::from(!pass),
            "extremes": { "residual": residual },
        });
        Ok((pass, summary))
    }

    fn simplex(&mut self, strong: bool) -> Result<(bool, Value), RunError> {
        let params = self.cfg.simplex.clone().expect("validated");
        let h_max = self.cfg.h_max()?;
        let table = self.table(h_max);
        let consts = self.constants(&table)?;
        let sampler = self.sampler()?;
        let seed = self.cfg.seed();
        let reports: Vec<(Vec<f64>, f64, SimplexReport)> = (0..params.pairs)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let x = sampler.sample(&mut rng);
                let u: f64 = rng.gen();
                let rho = (params.rho_min.ln()
                    + u * (params.rho_max.ln() - params.rho_min.ln()))
                .exp();
                let report = if strong {
                    strong_simplex_verify(&self.form, &table, &x, rho, &consts)
                } else {
                    simplex_verify(&self.form, &table, &x, rho, &consts)
                };
                (x.coords().to_vec(), rho, report)
            })
            .collect();

        self.header = self.coord_header(&["rho", "cluster_size", "closure_dim", "pass"]);
        let mut fail_count = 0usize;
        let mut max_cluster = 0usize;
        let mut max_dim = 0usize;
        for (x, rho, r) in &reports {
            let mut row: Vec<String> = x.iter().map(|&c| fmt_f64(c)).collect();
            row.push(fmt_f64(*rho));
            row.push(r.cluster_size.to_string());
            row.push(r.closure_dim.to_string());
            row.push(r.pass.to_string());
            self.rows.push(row);
            fail_count += usize::from(!r.pass);
            max_cluster = max_cluster.max(r.cluster_size);
            max_dim = max_dim.max(r.closure_dim);
        }
        let summary = json!({
            "pass_count": reports.len() - fail_count,
            "fail_count": fail_count,
            "extremes": {
                "max_cluster_size": max_cluster,
                "max_closure_dim": max_dim,
                "c_small": consts.c_small,
            },
        });
        Ok((fail_count == 0, summary))
    }

    fn dani(&mut self) -> Result<(bool, Value), RunError> {
        let params = self.cfg.dani.clone().expect("validated");
        let h_max = self.cfg.h_max()?;
        let table = self.table(h_max);
        if table.is_empty() {
            return Err(ConfigError::Invalid(
                "no rational points on X up to h_max; nothing to flow".into(),
            )
            .into());
        }
        let consts = self.constants(&table)?;
        let sampler = self.sampler()?;
        let seed = self.cfg.seed();
        let gram = self.form.gram_f64();
        let gram_norm = gram.norm();

        struct Sample {
            report: quadric_dioph_core::flow::DaniReport,
            q_rel: f64,
            group_err: f64,
        }
        let samples: Vec<Sample> = (0..params.samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let x = sampler.sample(&mut rng);
                let ctx = FlowContext::new(&self.form, &x)
                    .expect("sampled point lies on a nondegenerate quadric");
                let v = &table[rng.gen_range(0..table.len())];
                let t: f64 = rng.gen_range(0.0..=params.t_max);
                let report = ctx.verify_dani(&consts, v, t);
                let g = ctx.flow_matrix(t);
                // Forming g^t A g loses precision like eps |g|^2, so the
                // residual is measured relative to that scale.
                let q_rel = (g.transpose() * &gram * &g - &gram).norm()
                    / (gram_norm * g.norm().powi(2).max(1.0));
                let s: f64 = rng.gen_range(0.0..=params.t_max);
                let gs = ctx.flow_matrix(s);
                let gts = ctx.flow_matrix(t + s);
                let group_err = (&g * &gs - &gts).norm() / gts.norm().max(1.0);
                Sample { report, q_rel, group_err }
            })
            .collect();

        self.header = ["t", "height", "dist", "lhs", "rhs", "ratio", "q_rel", "group_err"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut max_ratio: f64 = 0.0;
        let mut max_q: f64 = 0.0;
        let mut max_group: f64 = 0.0;
        let mut fail_count = 0usize;
        for s in &samples {
            let r = &s.report;
            self.rows.push(vec![
                fmt_f64(r.t),
                r.height.to_string(),
                fmt_f64(r.dist),
                fmt_f64(r.lhs),
                fmt_f64(r.rhs),
                fmt_f64(r.ratio),
                fmt_f64(s.q_rel),
                fmt_f64(s.group_err),
            ]);
            let ok = r.ratio <= 1.0 + params.tolerance
                && s.q_rel <= 1e-6
                && s.group_err <= 1e-9;
            fail_count += usize::from(!ok);
            max_ratio = max_ratio.max(r.ratio);
            max_q = max_q.max(s.q_rel);
            max_group = max_group.max(s.group_err);
        }
        let summary = json!({
            "pass_count": samples.len() - fail_count,
            "fail_count": fail_count,
            "extremes": {
                "max_ratio": max_ratio,
                "max_q_residual": max_q,
                "max_group_error": max_group,
                "tolerance": params.tolerance,
            },
        });
        Ok((fail_count == 0, summary))
    }

    /// Shared driver for `exponent` (estimate beta_hat) and `dirichlet`
    /// (empirical Dirichlet constant) over sampled points.
    fn approx_sweep(&mut self, want_exponent: bool) -> Result<(bool, Value), RunError> {
        let params = self.cfg.approx.clone().expect("validated");
        let h_max = self.cfg.h_max()?;
        let sampler = self.sampler()?;
        let slice_sampler = match &params.slice {
            Some(rows) => Some(self.slice_sampler(rows)?),
            None => None,
        };
        let seed = self.cfg.seed();

        enum Row {
            Exp { x: Vec<f64>, est: quadric_dioph_core::ExponentEstimate, records: usize },
            Dir { x: Vec<f64>, constant: f64, records: usize },
            Fail { x: Vec<f64>, error: String },
        }
        let rows: Vec<Row> = (0..params.points)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let x = match &slice_sampler {
                    Some(s) => s.sample(&mut rng),
                    None => sampler.sample(&mut rng),
                };
                let xc = x.coords().to_vec();
                let records = match best_records(&self.form, &x, h_max) {
                    Ok(r) => r,
                    Err(e) => return Row::Fail { x: xc, error: e.to_string() },
                };
                if want_exponent {
                    match exponent(&records, h_max) {
                        Ok(est) => Row::Exp { x: xc, est, records: records.len() },
                        Err(e) => Row::Fail { x: xc, error: e.to_string() },
                    }
                } else {
                    match dirichlet_constant(&records, h_max) {
                        Ok(c) => Row::Dir { x: xc, constant: c, records: records.len() },
                        Err(e) => Row::Fail { x: xc, error: e.to_string() },
                    }
                }
            })
            .collect();

        let value_col = if want_exponent { "beta_hat" } else { "dirichlet_constant" };
        self.header = self.coord_header(&[value_col, "records", "error"]);
        let mut fail_count = 0usize;
        let mut values = Vec::new();
        for row in &rows {
            match row {
                Row::Exp { x, est, records } => {
                    let mut r: Vec<String> = x.iter().map(|&c| fmt_f64(c)).collect();
                    let b = if est.infinite { f64::INFINITY } else { est.beta_hat };
                    r.push(fmt_f64(b));
                    r.push(records.to_string());
                    r.push(String::new());
                    self.rows.push(r);
                    if !est.infinite {
                        values.push(est.beta_hat);
                    }
                }
                Row::Dir { x, constant, records } => {
                    let mut r: Vec<String> = x.iter().map(|&c| fmt_f64(c)).collect();
                    r.push(fmt_f64(*constant));
                    r.push(records.to_string());
                    r.push(String::new());
                    self.rows.push(r);
                    values.push(*constant);
                }
                Row::Fail { x, error } => {
                    let mut r: Vec<String> = x.iter().map(|&c| fmt_f64(c)).collect();
                    r.push(String::new());
                    r.push("0".to_string());
                    r.push(error.clone());
                    self.rows.push(r);
                    fail_count += 1;
                }
            }
        }
        let mean = if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let summary = json!({
            "pass_count": rows.len() - fail_count,
            "fail_count": fail_count,
            "extremes": {
                "mean": mean,
                "min": if values.is_empty() { Value::Null } else { json!(min) },
                "max": if values.is_empty() { Value::Null } else { json!(max) },
                "h_max": json_int(h_max as i128),
            },
        });
        Ok((fail_count == 0, summary))
    }

    fn cover(&mut self) -> Result<(bool, Value), RunError> {
        let params = self.cfg.cover.clone().expect("validated");
        let h_table = (1i64 << (params.p_max + 1)) - 1;
        let table = self.table(h_table);
        self.header = ["p", "count", "diagnostic"].iter().map(|s| s.to_string()).collect();
        let mut fail_count = 0usize;
        let mut max_diag: f64 = 0.0;
        let ambient = self.form.ambient();
        for p in params.p_min..=params.p_max {
            let count = cover_count(&table, ambient, params.beta, p, params.sample_budget);
            let diag = cover_diagnostic(count, params.beta, p);
            self.rows.push(vec![
                p.to_string(),
                count.to_string(),
                diag.map_or(String::new(), fmt_f64),
            ]);
            if let Some(d) = diag {
                max_diag = max_diag.max(d);
                if let Some(ceiling) = params.ceiling {
                    fail_count += usize::from(d > ceiling);
                }
            }
        }
        let total = (params.p_max - params.p_min + 1) as usize;
        let summary = json!({
            "pass_count": total - fail_count,
            "fail_count": fail_count,
            "extremes": { "max_diagnostic": max_diag, "ceiling": params.ceiling },
        });
        Ok((fail_count == 0, summary))
    }

    fn game(&mut self) -> Result<(bool, Value), RunError> {
        let params = self.cfg.game.clone().expect("validated");
        let h_max = self.cfg.h_max()?;
        let table = self.table(h_max);
        let consts = self.constants(&table)?;
        let sampler = self.sampler()?;
        let slice_sampler = match &params.slice {
            Some(rows) => Some(self.slice_sampler(rows)?),
            None => None,
        };
        let strategies: Vec<BobStrategy> = match params.strategy.as_str() {
            "random" => vec![BobStrategy::Random],
            "greedy" => vec![BobStrategy::Greedy],
            "stubborn" => vec![BobStrategy::Stubborn],
            _ => vec![BobStrategy::Random, BobStrategy::Greedy, BobStrategy::Stubborn],
        };
        let seed = self.cfg.seed();

        struct GameRow {
            strategy: &'static str,
            seed: u64,
            valid: bool,
            min_quality: f64,
            c0: f64,
            deleted_subspaces: usize,
            error: String,
        }
        let jobs: Vec<(BobStrategy, u64)> = strategies
            .iter()
            .enumerate()
            .flat_map(|(si, &s)| {
                (0..params.games)
                    .map(move |g| (s, seed.wrapping_add((si * params.games + g) as u64)))
            })
            .collect();
        let rows: Vec<GameRow> = jobs
            .par_iter()
            .map(|&(strategy, game_seed)| {
                let name = match strategy {
                    BobStrategy::Random => "random",
                    BobStrategy::Greedy => "greedy",
                    BobStrategy::Stubborn => "stubborn",
                };
                let domain = match &slice_sampler {
                    Some(s) => BobDomain::Slice(s),
                    None => BobDomain::Quadric(&sampler),
                };
                let outcome = match play(
                    &self.form,
                    &table,
                    &consts,
                    &domain,
                    params.beta,
                    params.rho0,
                    params.rounds,
                    strategy,
                    game_seed,
                ) {
                    Ok(o) => o,
                    Err(e) => {
                        return GameRow {
                            strategy: name,
                            seed: game_seed,
                            valid: false,
                            min_quality: 0.0,
                            c0: 0.0,
                            deleted_subspaces: 0,
                            error: e.to_string(),
                        }
                    }
                };
                let x_final = RealProjectivePoint::new(outcome.x_final.clone())
                    .expect("final center is a unit vector");
                let cert = game::certify_ba(
                    &x_final,
                    &table,
                    params.beta,
                    &consts,
                    h_max,
                    outcome.rho_last,
                );
                let transcript = check_transcript(&outcome, &table, &consts);
                let deleted = outcome
                    .transcript
                    .iter()
                    .filter(|r| matches!(r.deletion, Deletion::Subspace { .. }))
                    .count();
                GameRow {
                    strategy: name,
                    seed: game_seed,
                    valid: cert.valid && transcript.is_ok(),
                    min_quality: cert.min_quality,
                    c0: cert.c0,
                    deleted_subspaces: deleted,
                    error: transcript.err().unwrap_or_default(),
                }
            })
            .collect();

        self.header = ["strategy", "seed", "valid", "min_quality", "c0", "deleted_subspaces", "error"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut fail_count = 0usize;
        let mut min_quality = f64::INFINITY;
        for r in &rows {
            self.rows.push(vec![
                r.strategy.to_string(),
                r.seed.to_string(),
                r.valid.to_string(),
                fmt_f64(r.min_quality),
                fmt_f64(r.c0),
                r.deleted_subspaces.to_string(),
                r.error.clone(),
            ]);
            fail_count += usize::from(!r.valid);
            min_quality = min_quality.min(r.min_quality);
        }
        let summary = json!({
            "pass_count": rows.len() - fail_count,
            "fail_count": fail_count,
            "extremes": {
                "min_quality": min_quality,
                "c0_target": consts.c_small * params.beta * params.beta,
            },
        });
        Ok((fail_count == 0, summary))
    }
}
