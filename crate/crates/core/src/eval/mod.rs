//! Ranking metrics and the two evaluation protocols.
//!
//! Per-user work runs in parallel over fixed chunks; per-user values are
//! gathered in user order and averaged with compensated summation, so the
//! result does not depend on scheduling.

mod metrics;
mod report;

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;

pub use metrics::{hr_at_n, ndcg_strong, ndcg_weak, recall_at_n, CompensatedSum};
pub use report::{EvalReport, Metric, Protocol};

use crate::error::{Error, Result};
use crate::graddiff::Tensor;
use crate::models::Model;
use crate::recdata::{Group, InteractionMatrix, StrongSplit, WeakSplit};

/// Users scored per call of [`Scorer::score_batch`].
pub const SCORE_CHUNK: usize = 256;

pub const WEAK_CUTOFFS: [usize; 3] = [1, 5, 10];
pub const STRONG_CUTOFFS: [usize; 2] = [50, 100];

/// Anything that maps input rows to item scores.
pub trait Scorer: Sync {
    /// One row of scores (length = item count) per input row.
    fn score_batch(&self, rows: &[&[usize]]) -> Result<Tensor>;

    fn describe(&self) -> String;
}

impl Scorer for Model {
    fn score_batch(&self, rows: &[&[usize]]) -> Result<Tensor> {
        self.score(rows)
    }

    fn describe(&self) -> String {
        let f = self.family();
        if f.is_hyperbolic() {
            format!("{f}(c={})", self.curvature().c())
        } else {
            f.to_string()
        }
    }
}

/// Scores every user with the same item-popularity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Popularity {
    pub counts: Vec<f64>,
}

impl Popularity {
    pub fn fit(train: &InteractionMatrix) -> Self {
        Self {
            counts: train.item_popularity().into_iter().map(|c| c as f64).collect(),
        }
    }
}

impl Scorer for Popularity {
    fn score_batch(&self, rows: &[&[usize]]) -> Result<Tensor> {
        let mut t = Tensor::zeros(rows.len(), self.counts.len());
        for i in 0..rows.len() {
            t.row_mut(i).copy_from_slice(&self.counts);
        }
        Ok(t)
    }

    fn describe(&self) -> String {
        "popularity".into()
    }
}

/// Wraps a per-row closure.
pub struct FnScorer<F> {
    pub name: String,
    pub f: F,
}

impl<F> Scorer for FnScorer<F>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    fn score_batch(&self, rows: &[&[usize]]) -> Result<Tensor> {
        let n = rows.len();
        let data: Vec<Vec<f64>> = rows.iter().map(|r| (self.f)(r)).collect();
        let cols = data.first().map_or(0, Vec::len);
        if data.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("scorer rows differ in length".into()));
        }
        Tensor::from_vec(n, cols, data.concat())
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Higher score first, then lower item index.
fn better(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.partial_cmp(&a.0).expect("finite scores").then(a.1.cmp(&b.1))
}

fn check_scores(s: &Tensor, n_items: usize) -> Result<()> {
    if s.cols() != n_items {
        return Err(Error::DimensionMismatch {
            expected: n_items,
            got: s.cols(),
        });
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("scorer output".into()));
    }
    Ok(())
}

fn validate_cutoffs(cutoffs: &[usize]) -> Result<Vec<usize>> {
    let mut c = cutoffs.to_vec();
    c.sort_unstable();
    c.dedup();
    if c.is_empty() || c[0] == 0 {
        return Err(Error::InvalidArgument("cutoffs must be positive and nonempty".into()));
    }
    Ok(c)
}

/// Per-user metric vectors, chunked and scored in parallel, in input order.
fn per_user<T, F>(scorer: &dyn Scorer, inputs: &[T], n_items: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    T: AsRef<[usize]> + Sync,
    F: Fn(usize, &[f64]) -> Result<Vec<f64>> + Sync,
{
    let chunks: Vec<Result<Vec<Vec<f64>>>> = inputs
        .par_chunks(SCORE_CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let rows: Vec<&[usize]> = chunk.iter().map(|r| r.as_ref()).collect();
            let scores = scorer.score_batch(&rows)?;
            check_scores(&scores, n_items)?;
            (0..rows.len()).map(|k| f(ci * SCORE_CHUNK + k, scores.row(k))).collect()
        })
        .collect();
    Ok(chunks.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

fn average(values: &[Vec<f64>], labels: Vec<(String, usize)>) -> Vec<Metric> {
    let n = values.len() as f64;
    labels
        .into_iter()
        .enumerate()
        .map(|(k, (name, cutoff))| Metric {
            name,
            cutoff,
            value: values.iter().map(|v| v[k]).collect::<CompensatedSum>().value() / n,
        })
        .collect()
}

/// Which weak cases to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakCases {
    Test,
    Validation,
}

/// Leave-one-out protocol: the held-out item is ranked among itself and
/// its sampled negatives.
pub fn evaluate_weak(scorer: &dyn Scorer, split: &WeakSplit, which: WeakCases, cutoffs: &[usize]) -> Result<EvalReport> {
    let start = Instant::now();
    let cutoffs = validate_cutoffs(cutoffs)?;
    let cases = match which {
        WeakCases::Test => &split.test,
        WeakCases::Validation => &split.validation,
    };
    if cases.is_empty() {
        return Err(Error::Data("split has no cases to evaluate".into()));
    }
    let inputs: Vec<Vec<usize>> = cases
        .iter()
        .map(|c| match which {
            WeakCases::Test => split.test_input(c.user),
            WeakCases::Validation => split.validation_input(c.user).to_vec(),
        })
        .collect();
    let values = per_user(scorer, &inputs, split.train.n_items(), |k, s| {
        let c = &cases[k];
        let target = (s[c.item], c.item);
        let rank = 1 + c
            .negatives
            .iter()
            .filter(|&&j| better((s[j], j), target) == Ordering::Less)
            .count();
        Ok(cutoffs
            .iter()
            .flat_map(|&n| [hr_at_n(rank, n), ndcg_weak(rank, n)])
            .collect())
    })?;
    let labels = cutoffs
        .iter()
        .flat_map(|&n| [("HR".to_string(), n), ("NDCG".to_string(), n)])
        .collect();
    Ok(EvalReport {
        protocol: Protocol::Weak,
        group: match which {
            WeakCases::Test => "test",
            WeakCases::Validation => "validation",
        }
        .into(),
        metrics: average(&values, labels),
        cutoffs,
        n_users: cases.len(),
        seed: Some(split.seed),
        model: scorer.describe(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        provenance: serde_json::Value::Null,
    })
}

/// Top-`k` items of `scores` outside the sorted `exclude`, best first.
pub fn top_k(scores: &[f64], exclude: &[usize], k: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..scores.len()).filter(|i| exclude.binary_search(i).is_err()).collect();
    let cmp = |a: &usize, b: &usize| better((scores[*a], *a), (scores[*b], *b));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    cand
}

/// Fold-in protocol: score from the fold-in items, exclude them from the
/// ranking, and compare the top of the list with the held-out items.
pub fn evaluate_strong(scorer: &dyn Scorer, split: &StrongSplit, group: Group, cutoffs: &[usize]) -> Result<EvalReport> {
    let start = Instant::now();
    let cutoffs = validate_cutoffs(cutoffs)?;
    let g = split.group(group);
    if g.is_empty() {
        return Err(Error::Data("evaluation group is empty".into()));
    }
    let kmax = *cutoffs.last().expect("nonempty");
    let values = per_user(scorer, &g.fold_in, split.train.n_items(), |k, s| {
        let ranked = top_k(s, &g.fold_in[k], kmax);
        let held = &g.held_out[k];
        cutoffs
            .iter()
            .map(|&n| Ok([recall_at_n(&ranked, held, n)?, ndcg_strong(&ranked, held, n)?]))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.concat())
    })?;
    let labels = cutoffs
        .iter()
        .flat_map(|&n| [("Recall".to_string(), n), ("NDCG".to_string(), n)])
        .collect();
    Ok(EvalReport {
        protocol: Protocol::Strong,
        group: match group {
            Group::Val => "validation",
            Group::Test => "test",
        }
        .into(),
        metrics: average(&values, labels),
        cutoffs,
        n_users: g.len(),
        seed: Some(split.seed),
        model: scorer.describe(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        provenance: serde_json::Value::Null,
    })
}
