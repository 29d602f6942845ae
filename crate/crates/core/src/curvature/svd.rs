use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graddiff::Tensor;
use crate::recdata::InteractionMatrix;

/// Oversampling of the randomized range finder.
pub const OVERSAMPLING: usize = 10;
/// Power iterations of the randomized range finder.
pub const POWER_ITERATIONS: usize = 2;

/// A matrix available only through products with dense blocks.
pub trait LinearOp {
    fn shape(&self) -> (usize, usize);
    /// `A · M`.
    fn apply(&self, m: &Tensor) -> Tensor;
    /// `Aᵀ · M`.
    fn apply_t(&self, m: &Tensor) -> Tensor;
}

impl LinearOp for InteractionMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n_users(), self.n_items())
    }

    fn apply(&self, m: &Tensor) -> Tensor {
        self.matmul_dense(m)
    }

    fn apply_t(&self, m: &Tensor) -> Tensor {
        self.transpose_matmul_dense(m)
    }
}

impl LinearOp for Tensor {
    fn shape(&self) -> (usize, usize) {
        Tensor::shape(self)
    }

    fn apply(&self, m: &Tensor) -> Tensor {
        self.matmul(m).expect("operator shapes")
    }

    fn apply_t(&self, m: &Tensor) -> Tensor {
        self.transpose().matmul(m).expect("operator shapes")
    }
}

/// Truncated factorization `A ≈ U diag(S) Vᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    /// `users × r`.
    pub u: Tensor,
    /// Non-increasing, non-negative.
    pub s: Vec<f64>,
    /// `items × r`.
    pub v: Tensor,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U diag(S) Vᵀ`, dense.
    pub fn reconstruct(&self) -> Tensor {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (x, s) in us.row_mut(i).iter_mut().zip(&self.s) {
                *x *= s;
            }
        }
        us.matmul(&self.v.transpose()).expect("factor shapes")
    }
}

fn to_na(t: &Tensor) -> DMatrix<f64> {
    DMatrix::from_row_slice(t.rows(), t.cols(), t.data())
}

fn from_na(m: &DMatrix<f64>) -> Tensor {
    let mut t = Tensor::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            t.set(i, j, m[(i, j)]);
        }
    }
    t
}

fn orthonormal_basis(y: &Tensor) -> Tensor {
    from_na(&to_na(y).qr().q())
}

/// Randomized truncated SVD: Gaussian range finder with oversampling and
/// power iterations, then an exact SVD of the small projected matrix.
pub fn truncated_svd(a: &impl LinearOp, rank: usize, seed: u64) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    if rank == 0 || rank > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={} for a {m}×{n} matrix",
            m.min(n)
        )));
    }
    let l = (rank + OVERSAMPLING).min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega_data = (0..n * l).map(|_| StandardNormal.sample(&mut rng)).collect();
    let omega = Tensor::from_vec(n, l, omega_data)?;

    let mut q = orthonormal_basis(&a.apply(&omega));
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormal_basis(&a.apply_t(&q));
        q = orthonormal_basis(&a.apply(&z));
    }
    // Bᵀ = Aᵀ Q is n × l; its SVD gives B = Q_B S W_Bᵀ with roles swapped
    let bt = to_na(&a.apply_t(&q));
    if !bt.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("projected matrix in truncated SVD".into()));
    }
    let svd = bt.svd(true, true);
    let (vb, ub_t) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let s: Vec<f64> = svd.singular_values.iter().take(rank).copied().collect();
    if s.first().is_none_or(|&s0| s0 <= 0.0) {
        return Err(Error::DegenerateGeometry("matrix is zero".into()));
    }
    let v = from_na(&vb.columns(0, rank).into_owned());
    let ub = ub_t.rows(0, rank).transpose();
    let u = q.matmul(&from_na(&ub))?;
    let mut f = SvdFactors { u, s, v };
    normalize_signs(&mut f);
    Ok(f)
}

/// Makes the largest-magnitude entry of every column of V positive.
fn normalize_signs(f: &mut SvdFactors) {
    for j in 0..f.rank() {
        let mut best = (0.0f64, 1.0);
        for i in 0..f.v.rows() {
            let x = f.v.get(i, j);
            if x.abs() > best.0 {
                best = (x.abs(), x.signum());
            }
        }
        if best.1 < 0.0 {
            for i in 0..f.v.rows() {
                f.v.set(i, j, -f.v.get(i, j));
            }
            for i in 0..f.u.rows() {
                f.u.set(i, j, -f.u.get(i, j));
            }
        }
    }
}
