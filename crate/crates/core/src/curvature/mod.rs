//! Curvature estimation: truncated SVD of the interaction matrix, sampled
//! base-point δ-hyperbolicity of the item embeddings, and the conversion
//! `c = (0.144/δ)²`.
//!
//! The δ fed into the conversion is either the raw δ of the embedding
//! ([`DeltaMode::Raw`]) or the scale-free `2δ/diam` ([`DeltaMode::Relative`],
//! the default). The relative value is at most 1 for any metric
//! space, so it can never yield `c < 0.144²`.

mod delta;
mod svd;

use serde::{Deserialize, Serialize};

pub use delta::{delta_basepoint, delta_trials, gromov_products, pairwise_distances, Trial};
pub use svd::{truncated_svd, LinearOp, SvdFactors, OVERSAMPLING, POWER_ITERATIONS};

use crate::error::{Error, Result};
use crate::graddiff::Tensor;
use crate::recdata::InteractionMatrix;

/// δ of the Poincaré disk relative to its diameter.
pub const POINCARE_DELTA: f64 = 0.144;

/// Which SVD factor combination provides the points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    /// Rows of `V diag(S)` (items).
    Vs,
    /// Rows of `U diag(S)` (users).
    Us,
    U,
    V,
}

impl std::str::FromStr for Embedding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vs" => Ok(Self::Vs),
            "us" => Ok(Self::Us),
            "u" => Ok(Self::U),
            "v" => Ok(Self::V),
            _ => Err(Error::InvalidArgument(format!("unknown embedding '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    Raw,
    Relative,
}

/// Rows of `V diag(S)`.
pub fn item_embeddings(f: &SvdFactors) -> Tensor {
    embeddings(f, Embedding::Vs)
}

pub fn embeddings(f: &SvdFactors, which: Embedding) -> Tensor {
    let (base, scaled) = match which {
        Embedding::Vs => (&f.v, true),
        Embedding::V => (&f.v, false),
        Embedding::Us => (&f.u, true),
        Embedding::U => (&f.u, false),
    };
    let mut out = base.clone();
    if scaled {
        for i in 0..out.rows() {
            for (x, s) in out.row_mut(i).iter_mut().zip(&f.s) {
                *x *= s;
            }
        }
    }
    out
}

/// `(0.144/δ)²`; `None` for δ = 0 (tree-like data has no finite c).
pub fn c_from_delta(delta: f64) -> Option<f64> {
    (delta > 0.0 && delta.is_finite()).then(|| (POINCARE_DELTA / delta).powi(2))
}

/// Result of a sampled δ estimate and the derived curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta_trials: Vec<f64>,
    pub diam_trials: Vec<f64>,
    /// Mean of `2δ/diam` over trials.
    pub delta_rel: f64,
    /// Mean raw δ over trials.
    pub delta_raw: f64,
    pub delta_mode: DeltaMode,
    pub c: Option<f64>,
    pub rank: Option<usize>,
    pub embedding: Option<Embedding>,
    pub n_points: usize,
    pub sample_size: usize,
    pub trials: usize,
    pub skipped_trials: usize,
    pub seed: u64,
}

/// Sampled δ over the rows of `points`; degenerate trials are skipped.
pub fn estimate_delta(
    points: &Tensor,
    sample_size: usize,
    trials: usize,
    seed: u64,
    mode: DeltaMode,
) -> Result<DeltaEstimate> {
    let raw = delta_trials(points, sample_size, trials, seed)?;
    let kept: Vec<Trial> = raw.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(Error::DegenerateGeometry("every trial sampled identical points".into()));
    }
    let n = kept.len() as f64;
    let delta_rel = kept.iter().map(|t| 2.0 * t.delta / t.diam).sum::<f64>() / n;
    let delta_raw = kept.iter().map(|t| t.delta).sum::<f64>() / n;
    let c = c_from_delta(match mode {
        DeltaMode::Raw => delta_raw,
        DeltaMode::Relative => delta_rel,
    });
    Ok(DeltaEstimate {
        delta_trials: kept.iter().map(|t| t.delta).collect(),
        diam_trials: kept.iter().map(|t| t.diam).collect(),
        delta_rel,
        delta_raw,
        delta_mode: mode,
        c,
        rank: None,
        embedding: None,
        n_points: points.rows(),
        sample_size,
        trials,
        skipped_trials: raw.len() - kept.len(),
        seed,
    })
}

/// Options of [`estimate_c`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureOptions {
    pub rank: usize,
    pub sample_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode: DeltaMode,
    pub embedding: Embedding,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        Self {
            rank: 100,
            sample_size: 1500,
            trials: 10,
            seed: 0,
            mode: DeltaMode::Relative,
            embedding: Embedding::Vs,
        }
    }
}

/// Full pipeline: SVD → embeddings → sampled δ → `c`.
pub fn estimate_c(matrix: &InteractionMatrix, opts: &CurvatureOptions) -> Result<DeltaEstimate> {
    let rank = opts.rank.min(matrix.n_users().min(matrix.n_items()));
    let f = truncated_svd(matrix, rank, opts.seed)?;
    let pts = embeddings(&f, opts.embedding);
    let mut est = estimate_delta(&pts, opts.sample_size, opts.trials, opts.seed, opts.mode)?;
    if est.c.is_none() {
        return Err(Error::DegenerateGeometry("δ = 0: curvature is unbounded".into()));
    }
    est.rank = Some(rank);
    est.embedding = Some(opts.embedding);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conversion_fixed_points() {
        assert!((c_from_delta(0.144).unwrap() - 1.0).abs() < 1e-12);
        assert!((c_from_delta(0.72).unwrap() - 0.04).abs() < 1e-12);
        assert!(c_from_delta(0.0).is_none());
    }

    #[test]
    fn embeddings_scale_columns() {
        let f = SvdFactors {
            u: Tensor::from_vec(2, 2, vec![1., 0., 0., 1.]).unwrap(),
            s: vec![1.0, 1.0],
            v: Tensor::from_vec(3, 2, vec![0.6, 0.0, 0.8, 0.0, 0.0, 1.0]).unwrap(),
        };
        assert_eq!(item_embeddings(&f), f.v);
        let g = SvdFactors { s: vec![2.0, 0.5], ..f };
        let e = item_embeddings(&g);
        assert_eq!(e.shape(), (3, 2));
        assert_eq!(e.row(1), &[1.6, 0.0]);
        assert_eq!(embeddings(&g, Embedding::U), g.u);
    }

    #[test]
    fn small_population_uses_every_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pts = Tensor::from_vec(100, 2, data).unwrap();
        let est = estimate_delta(&pts, 1500, 10, 4, DeltaMode::Relative).unwrap();
        let diam0 = est.diam_trials[0];
        assert!(est.diam_trials.iter().all(|&d| d == diam0));
        assert_eq!(est.delta_trials.len(), 10);
    }

    #[test]
    fn degenerate_trials_error_when_all_skipped() {
        let pts = Tensor::filled(10, 3, 0.5);
        assert!(matches!(
            estimate_delta(&pts, 5, 3, 0, DeltaMode::Raw),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(estimate_delta(&Tensor::zeros(3, 2), 5, 3, 0, DeltaMode::Raw).is_err());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows = (0..60)
            .map(|_| (0..40).filter(|_| rng.random_bool(0.2)).collect())
            .collect();
        let m = InteractionMatrix::from_rows(40, rows).unwrap();
        let opts = CurvatureOptions {
            rank: 10,
            sample_size: 30,
            trials: 3,
            seed: 5,
            ..Default::default()
        };
        let a = estimate_c(&m, &opts).unwrap();
        assert_eq!(a, estimate_c(&m, &opts).unwrap());
        assert!(a.c.unwrap() > 0.0 && a.delta_rel <= 1.0);
    }
}
