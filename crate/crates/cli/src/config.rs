//! Experiment configuration: a single JSON document per run, strictly
//! validated (unknown keys rejected, numeric ranges checked) so that a
//! config file together with the library version pins an experiment
//! exactly. The effective config — after command-line overrides and
//! with any form file inlined — is what gets hashed and echoed into
//! the manifest, so a manifest always suffices to re-run the
//! experiment byte-for-byte.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use quadric_dioph_core::quadform::GramJson;
use quadric_dioph_core::QuadraticForm;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid quadratic form: {0}")]
    Form(String),
}

/// The experiments the driver knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Experiment {
    Enumerate,
    Qrank,
    Normalize,
    SimplexVerify,
    StrongSimplexVerify,
    DaniVerify,
    Exponent,
    Dirichlet,
    CoverCount,
    Game,
}

impl Experiment {
    /// Directory name under results/.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Enumerate => "enumerate",
            Experiment::Qrank => "qrank",
            Experiment::Normalize => "normalize",
            Experiment::SimplexVerify => "simplex-verify",
            Experiment::StrongSimplexVerify => "strong-simplex-verify",
            Experiment::DaniVerify => "dani-verify",
            Experiment::Exponent => "exponent",
            Experiment::Dirichlet => "dirichlet",
            Experiment::CoverCount => "cover-count",
            Experiment::Game => "game",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Experiment::Enumerate,
            Experiment::Qrank,
            Experiment::Normalize,
            Experiment::SimplexVerify,
            Experiment::StrongSimplexVerify,
            Experiment::DaniVerify,
            Experiment::Exponent,
            Experiment::Dirichlet,
            Experiment::CoverCount,
            Experiment::Game,
        ]
        .into_iter()
        .find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the Gram matrix comes from: inline (`dim` + `gram`) or an
/// external JSON file in the same `{"dim": n, "gram": [[..]]}` shape.
/// Exactly one of the two spellings must be used; `canonicalize`
/// inlines a file source so the echoed config is self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<i64>>>,
}

impl FormSource {
    pub fn resolve(&self) -> Result<QuadraticForm, ConfigError> {
        let j = self.gram_json()?;
        QuadraticForm::from_json(&j).map_err(|e| ConfigError::Form(e.to_string()))
    }

    fn gram_json(&self) -> Result<GramJson, ConfigError> {
        match (&self.file, &self.dim, &self.gram) {
            (Some(path), None, None) => {
                let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                    path: path.clone(),
                    message: e.to_string(),
                })
            }
            (None, Some(dim), Some(gram)) => {
                Ok(GramJson { dim: *dim, gram: gram.clone() })
            }
            _ => Err(ConfigError::Invalid(
                "form must give either `file` or both `dim` and `gram`".into(),
            )),
        }
    }

    /// Replace a file reference by its inline content.
    pub fn canonicalize(&self) -> Result<FormSource, ConfigError> {
        let j = self.gram_json()?;
        Ok(FormSource { file: None, dim: Some(j.dim), gram: Some(j.gram) })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexParams {
    /// Number of (x, rho) pairs to sweep.
    pub pairs: usize,
    pub rho_min: f64,
    pub rho_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaniParams {
    /// Number of (x, v, t) triples.
    pub samples: usize,
    pub t_max: f64,
    /// Relative tolerance on the correspondence ratio: pass iff
    /// max lhs/rhs <= 1 + tolerance.
    #[serde(default = "default_dani_tolerance")]
    pub tolerance: f64,
}

fn default_dani_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxParams {
    /// Number of sampled points x.
    pub points: usize,
    /// Optional slice: rows span a subspace; x is drawn from its
    /// intersection with X.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverParams {
    pub beta: f64,
    pub p_min: u32,
    pub p_max: u32,
    /// Pass ceiling on the diagnostic log2(count)/(beta p); omitted
    /// means report-only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ceiling: Option<f64>,
    #[serde(default = "default_cover_budget")]
    pub sample_budget: usize,
}

fn default_cover_budget() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParams {
    pub beta: f64,
    pub rho0: f64,
    pub rounds: usize,
    /// Number of independent games (seeds seed, seed+1, ...).
    pub games: usize,
    /// "random" | "greedy" | "stubborn" | "all".
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<Vec<Vec<f64>>>,
}

/// One experiment run, fully specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub form: FormSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_max: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Base rational point for `normalize` (integer coordinates).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex: Option<SimplexParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dani: Option<DaniParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameParams>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Apply command-line overrides and inline any form file, yielding
    /// the config that is hashed and echoed verbatim into the manifest.
    pub fn effective(
        &self,
        h_max: Option<i64>,
        seed: Option<u64>,
    ) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = self.clone();
        cfg.form = cfg.form.canonicalize()?;
        if h_max.is_some() {
            cfg.h_max = h_max;
        }
        if seed.is_some() {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    pub fn h_max(&self) -> Result<i64, ConfigError> {
        self.h_max
            .ok_or_else(|| ConfigError::Invalid("h_max is required for this experiment".into()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Range checks on everything present, plus per-experiment
    /// requirements.
    pub fn validate(&self, experiment: Experiment) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::Invalid(m));
        if let Some(h) = self.h_max {
            if h < 1 {
                return err(format!("h_max must be >= 1, got {h}"));
            }
        }
        if let Some(s) = &self.simplex {
            if s.pairs == 0 {
                return err("simplex.pairs must be positive".into());
            }
            if !(s.rho_min > 0.0 && s.rho_min <= s.rho_max && s.rho_max <= 0.5) {
                return err(format!(
                    "simplex rho range must satisfy 0 < rho_min <= rho_max <= 0.5, \
                     got [{}, {}]",
                    s.rho_min, s.rho_max
                ));
            }
        }
        if let Some(d) = &self.dani {
            if d.samples == 0 {
                return err("dani.samples must be positive".into());
            }
            if !(d.t_max > 0.0 && d.t_max.is_finite()) {
                return err(format!("dani.t_max must be positive, got {}", d.t_max));
            }
            if !(d.tolerance >= 0.0) {
                return err(format!("dani.tolerance must be >= 0, got {}", d.tolerance));
            }
        }
        if let Some(a) = &self.approx {
            if a.points == 0 {
                return err("approx.points must be positive".into());
            }
        }
        if let Some(c) = &self.cover {
            if !(c.beta > 0.0) {
                return err(format!("cover.beta must be positive, got {}", c.beta));
            }
            if c.p_min > c.p_max || c.p_max >= 62 {
                return err(format!(
                    "cover p range must satisfy p_min <= p_max < 62, got [{}, {}]",
                    c.p_min, c.p_max
                ));
            }
        }
        if let Some(g) = &self.game {
            if !(g.beta > 0.0 && g.beta < 1.0 / 3.0) {
                return err(format!("game.beta must lie in (0, 1/3), got {}", g.beta));
            }
            if !(g.rho0 > 0.0 && g.rho0 <= 1.0) {
                return err(format!("game.rho0 must lie in (0, 1], got {}", g.rho0));
            }
            if g.rounds == 0 || g.games == 0 {
                return err("game.rounds and game.games must be positive".into());
            }
            if !matches!(g.strategy.as_str(), "random" | "greedy" | "stubborn" | "all") {
                return err(format!(
                    "game.strategy must be random | greedy | stubborn | all, got {:?}",
                    g.strategy
                ));
            }
        }
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!(
                    "{} requires the `{what}` section",
                    experiment.name()
                )))
            }
        };
        match experiment {
            Experiment::Enumerate | Experiment::Qrank => self.h_max.map(|_| ()).ok_or_else(
                || ConfigError::Invalid(format!("{} requires h_max", experiment.name())),
            ),
            Experiment::Normalize => need(self.base.is_some(), "base"),
            Experiment::SimplexVerify | Experiment::StrongSimplexVerify => {
                self.h_max()?;
                need(self.simplex.is_some(), "simplex")
            }
            Experiment::DaniVerify => {
                self.h_max()?;
                need(self.dani.is_some(), "dani")
            }
            Experiment::Exponent | Experiment::Dirichlet => {
                self.h_max()?;
                need(self.approx.is_some(), "approx")
            }
            Experiment::CoverCount => need(self.cover.is_some(), "cover"),
            Experiment::Game => {
                self.h_max()?;
                need(self.game.is_some(), "game")
            }
        }
    }

    /// Hash of the effective config under its experiment name; names
    /// the results subdirectory.
    pub fn hash(&self, experiment: Experiment) -> String {
        let body =
            serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(experiment.name().as_bytes());
        hasher.update(b"\n");
        hasher.update(body.as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }
}

/// The manifest written next to each result: everything needed to
/// reproduce the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_hash: String,
    pub library_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}
