//! Run configuration: a flat `key=value` document whose keys double as
//! command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hyprec::curvature::{DeltaMode, Embedding};
use hyprec::eval::{Protocol, STRONG_CUTOFFS, WEAK_CUTOFFS};
use hyprec::models::Family;
use hyprec::optim::{AdamConfig, SecondMoment, TransportMode};
use hyprec::recdata::Format;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "HYPREC_SEED";

/// How the curvature of hyperbolic models is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CPolicy {
    Fixed(f64),
    /// From `curvature_file`, or estimated from the training matrix.
    Estimate,
}

/// Every key with a one-line description, in serialization order.
pub const KEYS: &[(&str, &str)] = &[
    ("data", "interaction file"),
    ("format", "movielens-dat | csv | tsv (default: by extension)"),
    ("min_user_items", "drop users with fewer items"),
    ("min_rating", "drop ratings below this value"),
    ("split_dir", "split artifact directory"),
    ("protocol", "weak | strong"),
    ("n_negatives", "sampled negatives per weak case"),
    ("weak_validation", "withhold a second item per user for validation"),
    ("val_users", "strong validation users (default 10%)"),
    ("test_users", "strong test users (default 10%)"),
    ("foldin_ratio", "fraction of an evaluation row used as input"),
    ("model", "ae | hae-h | hae-m | hvae | puresvd"),
    ("c", "curvature: a positive number or 'estimate'"),
    ("curvature_file", "estimate JSON read when c=estimate"),
    ("svd_rank", "rank of the SVD used for curvature estimation"),
    ("delta_sample", "points per delta trial"),
    ("delta_trials", "delta trials"),
    ("delta_mode", "relative | raw"),
    ("embedding", "vs | us | u | v"),
    ("dim", "latent dimension"),
    ("lr", "learning rate"),
    ("batch_size", "users per step"),
    ("epochs", "training epochs"),
    ("beta", "KL weight of the hvae objective"),
    ("tangent_tanh", "tanh between the hyperbolic layers"),
    ("eps_boundary", "relative margin to the ball boundary"),
    ("clip_norm", "global gradient-norm clip (0 disables)"),
    ("second_moment", "row-norm | per-coordinate"),
    ("pt", "exact | conformal-ratio"),
    ("puresvd_rank", "rank of the PureSVD baseline"),
    ("seed", "master seed"),
    ("out", "output directory"),
    ("cutoffs", "comma-separated ranking cutoffs"),
    ("trials", "random-search trials"),
    ("search_space", "search-space file"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub format: Option<Format>,
    pub min_user_items: usize,
    pub min_rating: Option<f64>,
    pub split_dir: Option<PathBuf>,
    pub protocol: Protocol,
    pub n_negatives: usize,
    pub weak_validation: bool,
    pub val_users: Option<usize>,
    pub test_users: Option<usize>,
    pub foldin_ratio: f64,
    pub model: Family,
    pub c: CPolicy,
    pub curvature_file: Option<PathBuf>,
    pub svd_rank: usize,
    pub delta_sample: usize,
    pub delta_trials: usize,
    pub delta_mode: DeltaMode,
    pub embedding: Embedding,
    pub dim: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta: f64,
    pub tangent_tanh: bool,
    pub eps_boundary: f64,
    pub clip_norm: f64,
    pub second_moment: SecondMoment,
    pub pt: TransportMode,
    pub puresvd_rank: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub cutoffs: Vec<usize>,
    pub trials: usize,
    pub search_space: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            format: None,
            min_user_items: 1,
            min_rating: None,
            split_dir: None,
            protocol: Protocol::Weak,
            n_negatives: 100,
            weak_validation: true,
            val_users: None,
            test_users: None,
            foldin_ratio: 0.8,
            model: Family::HaeM,
            c: CPolicy::Fixed(1.0),
            curvature_file: None,
            svd_rank: 100,
            delta_sample: 1500,
            delta_trials: 10,
            delta_mode: DeltaMode::Relative,
            embedding: Embedding::Vs,
            dim: 64,
            lr: 1e-3,
            batch_size: 256,
            epochs: 20,
            beta: 1.0,
            tangent_tanh: false,
            eps_boundary: 1e-3,
            clip_norm: 5.0,
            second_moment: SecondMoment::RowNorm,
            pt: TransportMode::Exact,
            puresvd_rank: 64,
            seed: 0,
            out: PathBuf::from("hyprec-out"),
            cutoffs: Vec::new(),
            trials: 40,
            search_space: None,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::usage(format!("{key}={value}: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse().map_err(|e| bad(key, v, e))
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn bool_value(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "expected true or false")),
    }
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn show_path(v: &Option<PathBuf>) -> String {
    v.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Defaults, with the seed taken from `HYPREC_SEED` when set.
    pub fn from_env() -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Ok(v) = std::env::var(SEED_ENV) {
            cfg.seed = num(SEED_ENV, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        let v = v.trim();
        match key {
            "data" => self.data = opt_path(v),
            "format" => self.format = if v.is_empty() { None } else { Some(num(key, v)?) },
            "min_user_items" => self.min_user_items = num(key, v)?,
            "min_rating" => self.min_rating = if v.is_empty() { None } else { Some(num(key, v)?) },
            "split_dir" => self.split_dir = opt_path(v),
            "protocol" => {
                self.protocol = match v {
                    "weak" => Protocol::Weak,
                    "strong" => Protocol::Strong,
                    _ => return Err(bad(key, v, "expected weak or strong")),
                }
            }
            "n_negatives" => self.n_negatives = num(key, v)?,
            "weak_validation" => self.weak_validation = bool_value(key, v)?,
            "val_users" => self.val_users = if v.is_empty() { None } else { Some(num(key, v)?) },
            "test_users" => self.test_users = if v.is_empty() { None } else { Some(num(key, v)?) },
            "foldin_ratio" => self.foldin_ratio = num(key, v)?,
            "model" => self.model = num(key, v)?,
            "c" => {
                self.c = if v == "estimate" {
                    CPolicy::Estimate
                } else {
                    CPolicy::Fixed(num(key, v)?)
                }
            }
            "curvature_file" => self.curvature_file = opt_path(v),
            "svd_rank" => self.svd_rank = num(key, v)?,
            "delta_sample" => self.delta_sample = num(key, v)?,
            "delta_trials" => self.delta_trials = num(key, v)?,
            "delta_mode" => {
                self.delta_mode = match v {
                    "relative" => DeltaMode::Relative,
                    "raw" => DeltaMode::Raw,
                    _ => return Err(bad(key, v, "expected relative or raw")),
                }
            }
            "embedding" => self.embedding = num(key, v)?,
            "dim" => self.dim = num(key, v)?,
            "lr" => self.lr = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "tangent_tanh" => self.tangent_tanh = bool_value(key, v)?,
            "eps_boundary" => self.eps_boundary = num(key, v)?,
            "clip_norm" => self.clip_norm = num(key, v)?,
            "second_moment" => {
                self.second_moment = match v {
                    "row-norm" => SecondMoment::RowNorm,
                    "per-coordinate" => SecondMoment::PerCoordinate,
                    _ => return Err(bad(key, v, "expected row-norm or per-coordinate")),
                }
            }
            "pt" => {
                self.pt = match v {
                    "exact" => TransportMode::Exact,
                    "conformal-ratio" => TransportMode::ConformalRatio,
                    _ => return Err(bad(key, v, "expected exact or conformal-ratio")),
                }
            }
            "puresvd_rank" => self.puresvd_rank = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "cutoffs" => {
                self.cutoffs = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|s| num(key, s)).collect::<Result<_, _>>()?
                }
            }
            "trials" => self.trials = num(key, v)?,
            "search_space" => self.search_space = opt_path(v),
            _ => return Err(CliError::usage(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// The value of `key` in the textual form accepted by [`Self::set`].
    pub fn get(&self, key: &str) -> String {
        match key {
            "data" => show_path(&self.data),
            "format" => self.format.map(format_name).unwrap_or_default().to_string(),
            "min_user_items" => self.min_user_items.to_string(),
            "min_rating" => show_opt(&self.min_rating),
            "split_dir" => show_path(&self.split_dir),
            "protocol" => protocol_name(self.protocol).into(),
            "n_negatives" => self.n_negatives.to_string(),
            "weak_validation" => self.weak_validation.to_string(),
            "val_users" => show_opt(&self.val_users),
            "test_users" => show_opt(&self.test_users),
            "foldin_ratio" => self.foldin_ratio.to_string(),
            "model" => self.model.to_string(),
            "c" => match self.c {
                CPolicy::Fixed(c) => c.to_string(),
                CPolicy::Estimate => "estimate".into(),
            },
            "curvature_file" => show_path(&self.curvature_file),
            "svd_rank" => self.svd_rank.to_string(),
            "delta_sample" => self.delta_sample.to_string(),
            "delta_trials" => self.delta_trials.to_string(),
            "delta_mode" => match self.delta_mode {
                DeltaMode::Relative => "relative".into(),
                DeltaMode::Raw => "raw".into(),
            },
            "embedding" => match self.embedding {
                Embedding::Vs => "vs",
                Embedding::Us => "us",
                Embedding::U => "u",
                Embedding::V => "v",
            }
            .into(),
            "dim" => self.dim.to_string(),
            "lr" => self.lr.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "epochs" => self.epochs.to_string(),
            "beta" => self.beta.to_string(),
            "tangent_tanh" => self.tangent_tanh.to_string(),
            "eps_boundary" => self.eps_boundary.to_string(),
            "clip_norm" => self.clip_norm.to_string(),
            "second_moment" => match self.second_moment {
                SecondMoment::RowNorm => "row-norm".into(),
                SecondMoment::PerCoordinate => "per-coordinate".into(),
            },
            "pt" => match self.pt {
                TransportMode::Exact => "exact".into(),
                TransportMode::ConformalRatio => "conformal-ratio".into(),
            },
            "puresvd_rank" => self.puresvd_rank.to_string(),
            "seed" => self.seed.to_string(),
            "out" => self.out.display().to_string(),
            "cutoffs" => self.cutoffs.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
            "trials" => self.trials.to_string(),
            "search_space" => show_path(&self.search_space),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Applies a `key=value` document. Blank lines and `#` comments are
    /// ignored; keys may use `-` or `_`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected key=value", n + 1)))?;
            self.set(&k.trim().replace('-', "_"), v)
                .map_err(|e| CliError::usage(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Canonical `key=value` text, one key per line in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, _) in KEYS {
            writeln!(s, "{k}={}", self.get(k)).expect("string write");
        }
        s
    }

    /// SHA-256 of [`Self::to_text`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// The configuration block embedded in every artifact.
    pub fn provenance(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = KEYS
            .iter()
            .map(|(k, _)| (k.to_string(), serde_json::Value::String(self.get(k))))
            .collect();
        serde_json::json!({ "config": map, "config_hash": self.hash(), "seed": self.seed })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: &str| Err(CliError::usage(m.to_string()));
        if self.dim == 0 {
            return fail("dim must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail("beta must be non-negative");
        }
        if !(self.foldin_ratio > 0.0 && self.foldin_ratio < 1.0) {
            return fail("foldin_ratio must lie in (0, 1)");
        }
        if let CPolicy::Fixed(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return fail("c must be positive");
            }
        }
        if !(self.eps_boundary > 0.0 && self.eps_boundary < 1.0) {
            return fail("eps_boundary must lie in (0, 1)");
        }
        if !(self.clip_norm >= 0.0) {
            return fail("clip_norm must be non-negative");
        }
        if self.min_user_items == 0 {
            return fail("min_user_items must be at least 1");
        }
        if self.cutoffs.contains(&0) {
            return fail("cutoffs must be positive");
        }
        if self.svd_rank == 0 || self.puresvd_rank == 0 {
            return fail("ranks must be positive");
        }
        if self.delta_sample < 4 || self.delta_trials == 0 {
            return fail("delta estimation needs at least 4 points and 1 trial");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            clip_norm: (self.clip_norm > 0.0).then_some(self.clip_norm),
            second_moment: self.second_moment,
            transport: self.pt,
            ..AdamConfig::default()
        }
    }

    /// Configured cutoffs, or the protocol defaults.
    pub fn cutoffs_for(&self, p: Protocol) -> Vec<usize> {
        if !self.cutoffs.is_empty() {
            let mut c = self.cutoffs.clone();
            c.sort_unstable();
            c.dedup();
            return c;
        }
        match p {
            Protocol::Weak => WEAK_CUTOFFS.to_vec(),
            Protocol::Strong => STRONG_CUTOFFS.to_vec(),
        }
    }
}

pub fn protocol_name(p: Protocol) -> &'static str {
    match p {
        Protocol::Weak => "weak",
        Protocol::Strong => "strong",
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::MovielensDat => "movielens-dat",
        Format::Csv => "csv",
        Format::Tsv => "tsv",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_preserves_every_key() {
        let mut a = RunConfig::default();
        a.apply_text("model = hvae\nc=estimate\ncutoffs=10,1,5\nmin-rating=4 # comment\nlr=0.01\npt=conformal-ratio", "t")
            .unwrap();
        let mut b = RunConfig::default();
        b.apply_text(&a.to_text(), "round").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(b.model, Family::Hvae);
        assert_eq!(b.c, CPolicy::Estimate);
        assert_eq!(b.min_rating, Some(4.0));
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = RunConfig::default();
        let mut other = RunConfig::default();
        for (k, _) in KEYS {
            other.set(k, &cfg.get(k)).unwrap();
        }
        assert_eq!(cfg, other);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("nonsense", "t").is_err());
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("dim", "-3").is_err());
        c.set("c", "0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let mut c = RunConfig::default();
        let h = c.hash();
        c.seed = 1;
        assert_ne!(h, c.hash());
    }
}
