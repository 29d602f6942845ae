use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graddiff::Tensor;

/// Gromov products `G_ij = ½(D_iw + D_jw − D_ij)` with base point `w`.
pub fn gromov_products(d: &Tensor, w: usize) -> Tensor {
    let n = d.rows();
    let mut g = Tensor::zeros(n, n);
    for i in 0..n {
        let diw = d.get(i, w);
        let (drow, grow) = (d.row(i), g.row_mut(i));
        for j in 0..n {
            grow[j] = 0.5 * (diw + d.get(j, w) - drow[j]);
        }
    }
    g
}

fn validate(d: &Tensor, w: usize) -> Result<()> {
    let n = d.rows();
    if d.cols() != n || w >= n {
        return Err(Error::InvalidArgument("distance matrix must be square with w in range".into()));
    }
    for i in 0..n {
        if d.get(i, i) != 0.0 {
            return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
        }
        for j in 0..i {
            let x = d.get(i, j);
            if !(x >= 0.0) || x != d.get(j, i) {
                return Err(Error::InvalidArgument(format!(
                    "distance ({i},{j}) is negative, non-finite or asymmetric"
                )));
            }
        }
    }
    Ok(())
}

/// Base-point δ: `max_ij ((G ⊗ G)_ij − G_ij)` with the max–min product
/// `(G ⊗ G)_ij = max_k min(G_ik, G_kj)`.
pub fn delta_basepoint(d: &Tensor, w: usize) -> Result<f64> {
    validate(d, w)?;
    Ok(delta_unchecked(d, w))
}

pub(crate) fn delta_unchecked(d: &Tensor, w: usize) -> f64 {
    let g = gromov_products(d, w);
    let n = g.rows();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let gi = g.row(i);
            let mut acc = vec![f64::NEG_INFINITY; n];
            for (k, &a) in gi.iter().enumerate() {
                // branchy min/max so the loop vectorizes
                for (m, &b) in acc.iter_mut().zip(g.row(k)) {
                    let lo = if a < b { a } else { b };
                    if lo > *m {
                        *m = lo;
                    }
                }
            }
            acc.iter()
                .zip(gi)
                .map(|(m, gij)| m - gij)
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Euclidean pairwise distances between the rows of `points` selected by
/// `idx`.
pub fn pairwise_distances(points: &Tensor, idx: &[usize]) -> Tensor {
    let n = idx.len();
    let mut d = Tensor::zeros(n, n);
    for a in 0..n {
        for b in 0..a {
            let s: f64 = points
                .row(idx[a])
                .iter()
                .zip(points.row(idx[b]))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            let v = s.sqrt();
            d.set(a, b, v);
            d.set(b, a, v);
        }
    }
    d
}

/// δ and diameter of one sampled trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub delta: f64,
    pub diam: f64,
}

/// Per-trial seed, independent of evaluation order.
pub(crate) fn trial_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs `trials` sampled δ computations; the base point is the first
/// sampled index. Degenerate trials come back as `None`.
pub fn delta_trials(points: &Tensor, sample_size: usize, trials: usize, seed: u64) -> Result<Vec<Option<Trial>>> {
    let n = points.rows();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {n}")));
    }
    if trials == 0 || sample_size == 0 {
        return Err(Error::InvalidArgument("trials and sample size must be ≥ 1".into()));
    }
    let m = sample_size.min(n);
    Ok((0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t));
            let idx = index::sample(&mut rng, n, m).into_vec();
            let d = pairwise_distances(points, &idx);
            let diam = d.data().iter().copied().fold(0.0, f64::max);
            (diam > 0.0).then(|| Trial {
                delta: delta_unchecked(&d, 0),
                diam,
            })
        })
        .collect())
}
