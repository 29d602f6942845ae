//! The training loop, shared by `train` and `tune`.

use std::fmt::Write as _;

use hyprec::eval::{evaluate_strong, evaluate_weak, WeakCases};
use hyprec::models::{load_checkpoint, save_checkpoint, train_epoch, Checkpoint, EpochOptions, Family, Model, PureSvd};
use hyprec::optim::Optimizer;
use hyprec::recdata::{Group, SplitArtifact};
use hyprec::Curvature;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, open_split, out_path, resolve_curvature, train_matrix, write_file};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LAST_CHECKPOINT: &str = "last.ckpt";
pub const EPOCH_LOG: &str = "epochs.csv";

/// Seed stream used for model initialization; epochs use `1 + epoch`.
const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: Option<f64>,
    /// NDCG@10 (weak) or NDCG@100 (strong) on the validation users.
    pub val_ndcg: Option<f64>,
}

/// Validation target: NDCG@10 for the weak protocol, NDCG@100 for the strong.
pub fn validation_ndcg(model: &Model, split: &SplitArtifact) -> CliResult<Option<f64>> {
    match split {
        SplitArtifact::Weak(w) if w.validation.is_empty() => Ok(None),
        SplitArtifact::Weak(w) => Ok(evaluate_weak(model, w, WeakCases::Validation, &[10])?.get("NDCG", 10)),
        SplitArtifact::Strong(s) if s.validation.is_empty() => Ok(None),
        SplitArtifact::Strong(s) => Ok(evaluate_strong(model, s, Group::Val, &[100])?.get("NDCG", 100)),
    }
}

/// Model, optimizer and per-epoch history of one training run.
pub struct Trainer {
    pub model: Model,
    pub optimizer: Option<Optimizer>,
    pub history: Vec<EpochRecord>,
    pub best: Option<(usize, f64)>,
    seed: u64,
    opts: EpochOptions,
}

impl Trainer {
    pub fn new(cfg: &RunConfig, c: f64, split: &SplitArtifact) -> CliResult<Self> {
        let train = train_matrix(split);
        let (model, optimizer) = if cfg.model == Family::Puresvd {
            let rank = cfg.puresvd_rank.min(train.n_users()).min(train.n_items());
            (Model::PureSvd(PureSvd::fit(train, rank, cfg.seed)?), None)
        } else {
            let k = Curvature::with_eps(c, cfg.eps_boundary)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, INIT_STREAM));
            let mut model = Model::init(cfg.model, k, train.n_items(), cfg.dim, &mut rng)?;
            if let Model::Ae(m) = &mut model {
                m.tangent_tanh = cfg.tangent_tanh;
            }
            let opt = Optimizer::new(cfg.adam(), model.params());
            (model, Some(opt))
        };
        Ok(Self {
            model,
            optimizer,
            history: Vec::new(),
            best: None,
            seed: cfg.seed,
            opts: EpochOptions {
                batch_size: cfg.batch_size,
                beta: cfg.beta,
            },
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.history.len()
    }

    /// Runs one epoch; returns whether the validation metric improved.
    pub fn epoch(&mut self, split: &SplitArtifact) -> CliResult<bool> {
        let epoch = self.history.len() + 1;
        let train_loss = match &mut self.optimizer {
            None => None,
            Some(opt) => {
                let train = train_matrix(split);
                let rows: Vec<&[usize]> = (0..train.n_users()).map(|u| train.row(u)).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, epoch as u64));
                let loss = train_epoch(&mut self.model, opt, &rows, &self.opts, &mut rng)?;
                if !loss.is_finite() {
                    return Err(CliError::numerical(format!("training loss diverged at epoch {epoch}")));
                }
                Some(loss)
            }
        };
        let val_ndcg = validation_ndcg(&self.model, split)?;
        self.history.push(EpochRecord {
            epoch,
            train_loss,
            val_ndcg,
        });
        let improved = match (val_ndcg, self.best) {
            (Some(v), Some((_, b))) => v > b,
            (Some(_), None) => true,
            (None, _) => true,
        };
        if improved {
            self.best = Some((epoch, val_ndcg.unwrap_or(f64::NAN)));
        }
        Ok(improved)
    }

    fn state(&self) -> serde_json::Value {
        serde_json::json!({
            "history": self.history,
            "best_epoch": self.best.map(|b| b.0),
            "best_val_ndcg": self.best.and_then(|b| b.1.is_finite().then_some(b.1)),
        })
    }

    fn checkpoint(&self, provenance: &serde_json::Value, with_optimizer: bool) -> Checkpoint {
        let mut extra = provenance.clone();
        extra["epoch"] = self.history.len().into();
        extra["training"] = self.state();
        Checkpoint {
            model: self.model.clone(),
            optimizer: if with_optimizer { self.optimizer.clone() } else { None },
            seed: self.seed,
            extra,
        }
    }

    fn restore(cfg: &RunConfig, ck: Checkpoint) -> CliResult<Self> {
        let training = &ck.extra["training"];
        let history: Vec<EpochRecord> = serde_json::from_value(training["history"].clone())?;
        let best = match (training["best_epoch"].as_u64(), training["best_val_ndcg"].as_f64()) {
            (Some(e), Some(v)) => Some((e as usize, v)),
            (Some(e), None) => Some((e as usize, f64::NAN)),
            _ => None,
        };
        let mut optimizer = ck.optimizer;
        if let Some(o) = &mut optimizer {
            o.config = cfg.adam();
        }
        Ok(Self {
            model: ck.model,
            optimizer,
            history,
            best,
            seed: cfg.seed,
            opts: EpochOptions {
                batch_size: cfg.batch_size,
                beta: cfg.beta,
            },
        })
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn epoch_log(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_ndcg\n");
    for r in history {
        writeln!(s, "{},{},{}", r.epoch, fmt_opt(r.train_loss), fmt_opt(r.val_ndcg)).expect("string write");
    }
    s
}

pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best: Option<(usize, f64)>,
    pub completed: bool,
}

/// `train`: fits the configured model, logging every epoch and keeping the
/// best-validation checkpoint. `stop_after` ends the invocation early as if
/// interrupted; `resume` continues from `last.ckpt`.
pub fn run(cfg: &RunConfig, resume: bool, stop_after: Option<usize>) -> CliResult<TrainOutcome> {
    let (split, split_prov) = open_split(cfg)?;
    let last = out_path(cfg, LAST_CHECKPOINT);
    let best = out_path(cfg, BEST_CHECKPOINT);
    let log = out_path(cfg, EPOCH_LOG);

    let (mut trainer, provenance) = if resume {
        let ck = load_checkpoint(&last).map_err(|e| CliError::from(e).context("cannot resume"))?;
        if ck.extra["config_hash"].as_str() != Some(cfg.hash().as_str()) {
            return Err(CliError::usage(format!(
                "{} was written with a different configuration",
                last.display()
            )));
        }
        let prov = strip_training(&ck.extra);
        (Trainer::restore(cfg, ck)?, prov)
    } else {
        let (c, estimate) = resolve_curvature(cfg, train_matrix(&split))?;
        let mut prov = cfg.provenance();
        prov["c"] = c.into();
        prov["curvature_estimate"] = serde_json::to_value(&estimate)?;
        prov["split"] = split_prov;
        (Trainer::new(cfg, c, &split)?, prov)
    };

    let target = if cfg.model == Family::Puresvd { 1 } else { cfg.epochs };
    if !resume {
        write_file(&log, epoch_log(&[]).as_bytes())?;
        save_checkpoint(&last, &trainer.checkpoint(&provenance, true))?;
        save_checkpoint(&best, &trainer.checkpoint(&provenance, false))?;
    }
    let mut ran = 0;
    while trainer.epochs_done() < target {
        if stop_after.is_some_and(|n| ran >= n) {
            eprintln!("stopping after {ran} epochs; resume to continue");
            return Ok(TrainOutcome {
                history: trainer.history,
                best: trainer.best,
                completed: false,
            });
        }
        let start = std::time::Instant::now();
        let result = trainer.epoch(&split);
        // the log keeps every finished epoch even when this one failed
        write_file(&log, epoch_log(&trainer.history).as_bytes())?;
        let improved = result?;
        let r = trainer.history.last().expect("epoch recorded");
        eprintln!(
            "epoch {:>3}  loss {}  val NDCG {}  ({:.1}s){}",
            r.epoch,
            r.train_loss.map_or("-".into(), |l| format!("{l:.6}")),
            r.val_ndcg.map_or("-".into(), |v| format!("{v:.4}")),
            start.elapsed().as_secs_f64(),
            if improved { "  *" } else { "" }
        );
        if improved {
            save_checkpoint(&best, &trainer.checkpoint(&provenance, false))?;
        }
        save_checkpoint(&last, &trainer.checkpoint(&provenance, true))?;
        ran += 1;
    }
    Ok(TrainOutcome {
        history: trainer.history,
        best: trainer.best,
        completed: true,
    })
}

fn strip_training(extra: &serde_json::Value) -> serde_json::Value {
    let mut p = extra.clone();
    if let Some(map) = p.as_object_mut() {
        map.remove("training");
        map.remove("epoch");
    }
    p
}
