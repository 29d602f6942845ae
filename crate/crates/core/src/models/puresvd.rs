use crate::curvature::{truncated_svd, SvdFactors};
use crate::error::{Error, Result};
use crate::graddiff::Tensor;
use crate::recdata::{binary_batch, InteractionMatrix};

/// PureSVD: scores are the projection `x V Vᵀ` of the user row onto the
/// leading right singular subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct PureSvd {
    /// `items × r`, orthonormal columns.
    pub v: Tensor,
}

impl PureSvd {
    pub fn fit(train: &InteractionMatrix, rank: usize, seed: u64) -> Result<Self> {
        let f = truncated_svd(train, rank, seed)?;
        Ok(Self { v: f.v })
    }

    pub fn n_items(&self) -> usize {
        self.v.rows()
    }

    pub fn rank(&self) -> usize {
        self.v.cols()
    }

    pub fn score(&self, rows: &[&[usize]]) -> Result<Tensor> {
        if let Some(&bad) = rows.iter().flat_map(|r| r.iter()).find(|&&i| i >= self.n_items()) {
            return Err(Error::InvalidArgument(format!("item {bad} out of range")));
        }
        let p = binary_batch(rows, self.n_items()).matmul(&self.v);
        p.matmul(&self.v.transpose())
    }
}

/// `(x V) Vᵀ` for one binary user row.
pub fn puresvd_scores(f: &SvdFactors, user_row: &[usize]) -> Result<Vec<f64>> {
    Ok(PureSvd { v: f.v.clone() }.score(&[user_row])?.into_data())
}
