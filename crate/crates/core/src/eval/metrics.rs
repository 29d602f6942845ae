use crate::error::{Error, Result};

/// `1[rank ≤ n]` for a 1-indexed rank.
pub fn hr_at_n(rank: usize, n: usize) -> f64 {
    debug_assert!(rank >= 1);
    if rank <= n {
        1.0
    } else {
        0.0
    }
}

/// `1[rank ≤ n] / log₂(rank + 1)`.
pub fn ndcg_weak(rank: usize, n: usize) -> f64 {
    if rank <= n {
        1.0 / ((rank + 1) as f64).log2()
    } else {
        0.0
    }
}

/// `|top_n ∩ heldout| / min(n, |heldout|)` where `ranked` is the ranked
/// list (at least its first `n` entries) and `heldout` is sorted.
pub fn recall_at_n(ranked: &[usize], heldout: &[usize], n: usize) -> Result<f64> {
    if heldout.is_empty() {
        return Err(Error::InvalidArgument("empty held-out set".into()));
    }
    let hits = ranked.iter().take(n).filter(|i| heldout.binary_search(i).is_ok()).count();
    Ok(hits as f64 / n.min(heldout.len()) as f64)
}

/// DCG of the first `n` ranked items over the ideal DCG of
/// `min(n, |heldout|)` hits; `heldout` is sorted.
pub fn ndcg_strong(ranked: &[usize], heldout: &[usize], n: usize) -> Result<f64> {
    if heldout.is_empty() {
        return Err(Error::InvalidArgument("empty held-out set".into()));
    }
    let dcg: f64 = ranked
        .iter()
        .take(n)
        .enumerate()
        .filter(|(_, i)| heldout.binary_search(i).is_ok())
        .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..n.min(heldout.len())).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    Ok(dcg / idcg)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}
