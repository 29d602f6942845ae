//! Seeded random search over a key-value search space.

use std::fmt::Write as _;

use hyprec::models::Family;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::train::Trainer;
use super::{derive_seed, open_split, out_path, resolve_curvature, train_matrix, write_file, write_json};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const TRIALS_FILE: &str = "trials.csv";
pub const BEST_CONFIG_FILE: &str = "best.conf";
pub const SUMMARY_FILE: &str = "tune.json";

#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    LogUniform(f64, f64),
    Uniform(f64, f64),
    Choice(Vec<String>),
}

impl Dist {
    fn sample(&self, rng: &mut impl Rng) -> String {
        match self {
            Dist::LogUniform(lo, hi) => rng.random_range(lo.ln()..=hi.ln()).exp().to_string(),
            Dist::Uniform(lo, hi) => rng.random_range(*lo..=*hi).to_string(),
            Dist::Choice(v) => v[rng.random_range(0..v.len())].clone(),
        }
    }
}

/// Ordered `(key, distribution)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace(pub Vec<(String, Dist)>);

impl SearchSpace {
    /// Learning rate, width and batch size for every family; β for hvae;
    /// the rank for PureSVD.
    pub fn default_for(family: Family) -> Self {
        let choice = |v: &[&str]| Dist::Choice(v.iter().map(|s| s.to_string()).collect());
        if family == Family::Puresvd {
            return Self(vec![("puresvd_rank".into(), choice(&["16", "32", "64", "128", "256"]))]);
        }
        let mut v = vec![
            ("lr".to_string(), Dist::LogUniform(1e-4, 1e-1)),
            ("dim".to_string(), choice(&["32", "64", "128", "256"])),
            ("batch_size".to_string(), choice(&["128", "256", "512"])),
        ];
        if family == Family::Hvae {
            v.push(("beta".into(), choice(&["0.5", "1.0"])));
        }
        Self(v)
    }

    /// Parses lines `key = loguniform(lo, hi) | uniform(lo, hi) | choice(a, b, ...)`.
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let mut out = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| CliError::usage(format!("{origin}:{}: {m}", n + 1));
            let (k, rhs) = line.split_once('=').ok_or_else(|| err("expected key = distribution"))?;
            let rhs = rhs.trim();
            let (kind, args) = rhs
                .strip_suffix(')')
                .and_then(|s| s.split_once('('))
                .ok_or_else(|| err("expected name(arguments)"))?;
            let args: Vec<String> = args.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
            let range = || -> CliResult<(f64, f64)> {
                match args.as_slice() {
                    [a, b] => {
                        let lo: f64 = a.parse().map_err(|_| err("bad lower bound"))?;
                        let hi: f64 = b.parse().map_err(|_| err("bad upper bound"))?;
                        if lo < hi {
                            Ok((lo, hi))
                        } else {
                            Err(err("empty range"))
                        }
                    }
                    _ => Err(err("expected two bounds")),
                }
            };
            let dist = match kind.trim() {
                "loguniform" => {
                    let (lo, hi) = range()?;
                    if lo <= 0.0 {
                        return Err(err("loguniform needs positive bounds"));
                    }
                    Dist::LogUniform(lo, hi)
                }
                "uniform" => {
                    let (lo, hi) = range()?;
                    Dist::Uniform(lo, hi)
                }
                "choice" if !args.is_empty() => Dist::Choice(args),
                _ => return Err(err("unknown distribution")),
            };
            let key = k.trim().replace('-', "_");
            RunConfig::default()
                .set(&key, &dist.sample(&mut ChaCha8Rng::seed_from_u64(0)))
                .map_err(|e| err(&e.message))?;
            out.push((key, dist));
        }
        if out.is_empty() {
            return Err(CliError::usage(format!("{origin}: empty search space")));
        }
        Ok(Self(out))
    }
}

fn key_stream(key: &str) -> u64 {
    // FNV-1a, so each key draws from its own stream regardless of which
    // other keys are searched
    key.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// The configuration of trial `t`: sampled values on top of `base`, with a
/// per-trial seed that depends only on the master seed and `t`.
pub fn trial_config(base: &RunConfig, space: &SearchSpace, t: usize) -> CliResult<(RunConfig, Vec<String>)> {
    let mut cfg = base.clone();
    cfg.seed = derive_seed(base.seed, t as u64);
    let mut values = Vec::with_capacity(space.0.len());
    for (k, d) in &space.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, key_stream(k)));
        let v = d.sample(&mut rng);
        cfg.set(k, &v)?;
        values.push(v);
    }
    cfg.validate()?;
    Ok((cfg, values))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub values: Vec<String>,
    pub status: String,
    pub final_val_ndcg: Option<f64>,
    pub best_val_ndcg: Option<f64>,
    pub best_epoch: Option<usize>,
    pub final_train_loss: Option<f64>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn trials_csv(space: &SearchSpace, rows: &[TrialResult]) -> String {
    let mut s = String::from("trial,seed");
    for (k, _) in &space.0 {
        write!(s, ",{k}").expect("string write");
    }
    s.push_str(",status,final_val_ndcg,best_val_ndcg,best_epoch,final_train_loss\n");
    for r in rows {
        write!(s, "{},{}", r.trial, r.seed).expect("string write");
        for v in &r.values {
            write!(s, ",{v}").expect("string write");
        }
        writeln!(
            s,
            ",{},{},{},{},{}",
            r.status.replace(',', ";"),
            opt(&r.final_val_ndcg),
            opt(&r.best_val_ndcg),
            opt(&r.best_epoch),
            opt(&r.final_train_loss)
        )
        .expect("string write");
    }
    s
}

pub struct TuneOutcome {
    pub trials: Vec<TrialResult>,
    pub best: Option<(usize, RunConfig)>,
}

/// `tune`: `trials` random-search trials of `epochs` epochs each. Failed
/// trials are recorded; the command fails only if every trial failed.
pub fn run(cfg: &RunConfig) -> CliResult<TuneOutcome> {
    let space = match &cfg.search_space {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            SearchSpace::parse(&text, &p.display().to_string())?
        }
        None => SearchSpace::default_for(cfg.model),
    };
    if cfg.trials == 0 {
        return Err(CliError::usage("trials must be at least 1"));
    }
    let (split, _) = open_split(cfg)?;
    let (c, _) = resolve_curvature(cfg, train_matrix(&split))?;
    let mut results = Vec::with_capacity(cfg.trials);
    let mut best: Option<(usize, f64, RunConfig)> = None;
    for t in 0..cfg.trials {
        let (tcfg, values) = trial_config(cfg, &space, t)?;
        let start = std::time::Instant::now();
        let outcome = (|| -> CliResult<Trainer> {
            let mut tr = Trainer::new(&tcfg, c, &split)?;
            let epochs = if tcfg.model == Family::Puresvd { 1 } else { tcfg.epochs };
            for _ in 0..epochs {
                tr.epoch(&split)?;
            }
            Ok(tr)
        })();
        let row = match outcome {
            Ok(tr) => {
                let last = tr.history.last();
                TrialResult {
                    trial: t,
                    seed: tcfg.seed,
                    values,
                    status: "ok".into(),
                    final_val_ndcg: last.and_then(|r| r.val_ndcg),
                    best_val_ndcg: tr.best.map(|b| b.1).filter(|v| v.is_finite()),
                    best_epoch: tr.best.map(|b| b.0),
                    final_train_loss: last.and_then(|r| r.train_loss),
                }
            }
            Err(e) => TrialResult {
                trial: t,
                seed: tcfg.seed,
                values,
                status: format!("failed: {e}"),
                final_val_ndcg: None,
                best_val_ndcg: None,
                best_epoch: None,
                final_train_loss: None,
            },
        };
        eprintln!(
            "trial {:>3}/{}  {}  final val NDCG {}  ({:.1}s)",
            t + 1,
            cfg.trials,
            row.status,
            row.final_val_ndcg.map_or("-".into(), |v| format!("{v:.4}")),
            start.elapsed().as_secs_f64()
        );
        if let Some(v) = row.final_val_ndcg {
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((t, v, tcfg.clone()));
            }
        } else if row.status == "ok" && best.is_none() {
            best = Some((t, f64::NEG_INFINITY, tcfg.clone()));
        }
        results.push(row);
        write_file(&out_path(cfg, TRIALS_FILE), trials_csv(&space, &results).as_bytes())?;
    }
    if results.iter().all(|r| r.status != "ok") {
        return Err(CliError::numerical(format!("all {} trials failed", results.len())));
    }
    let best = best.map(|(t, _, c)| (t, c));
    if let Some((t, bcfg)) = &best {
        let text = format!(
            "# best of {} random-search trials (trial {t})\n{}",
            cfg.trials,
            bcfg.to_text()
        );
        write_file(&out_path(cfg, BEST_CONFIG_FILE), text.as_bytes())?;
    }
    let mut summary = cfg.provenance();
    summary["search"] = "random".into();
    summary["c"] = c.into();
    summary["space"] = space.0.iter().map(|(k, d)| serde_json::json!({ "key": k, "dist": format!("{d:?}") })).collect();
    summary["best_trial"] = serde_json::to_value(best.as_ref().map(|b| b.0))?;
    summary["trials"] = serde_json::to_value(&results)?;
    write_json(&out_path(cfg, SUMMARY_FILE), &summary)?;
    Ok(TuneOutcome { trials: results, best })
}
