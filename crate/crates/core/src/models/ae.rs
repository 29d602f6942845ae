use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamTensor, Space};
use crate::error::{Error, Result};
use crate::geometry::scalar::tanh_ratio;
use crate::geometry::{poincare, BallPoint, Curvature};
use crate::graddiff::{kernels, NodeId, SparseRows, Tape, Tensor, UnaryFn};
use crate::recdata::normalized_batch;

/// How a hyperbolic layer stores its bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasMode {
    /// Euclidean bias `b`, used as the ball point `exp_0(b)`.
    Hyp,
    /// Bias stored as a ball point and optimized on the manifold.
    Moebius,
}

/// Hyperbolic feedforward layer on a single point: `(M ⊗ x) ⊕ bias`,
/// projected onto the ball. `m` is `out × in`.
pub fn hyp_linear(m: &Tensor, b: &[f64], x: &BallPoint, mode: BiasMode) -> Result<BallPoint> {
    let k = x.curvature();
    if m.cols() != x.dim() || b.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: b.len(),
        });
    }
    let mx = poincare::mobius_matvec(k, m.data(), m.rows(), x.coords())?;
    let bias = match mode {
        BiasMode::Hyp => poincare::expmap0(k, b),
        BiasMode::Moebius => b.to_vec(),
    };
    Ok(BallPoint::project(&poincare::mobius_add(k, &mx, &bias), k))
}

/// Parameter names in storage order.
pub const W_ENC: &str = "w_enc";
pub const B_ENC: &str = "b_enc";
pub const W_DEC: &str = "w_dec";
pub const B_DEC: &str = "b_dec";

/// Single-hidden-layer autoencoder, Euclidean or hyperbolic.
///
/// Weights use the row-vector convention: `W_e` is `items × d`, `W_d` is
/// `d × items`, and a batch of inputs is multiplied on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    /// `None` for the Euclidean baseline.
    pub hyperbolic: Option<BiasMode>,
    pub curvature: Curvature,
    pub n_items: usize,
    pub dim: usize,
    /// Optional `tanh` in the tangent space at the origin between layers.
    pub tangent_tanh: bool,
    params: Vec<ParamTensor>,
}

pub(crate) fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, bound: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::from_vec(rows, cols, data).expect("shape")
}

impl AeModel {
    /// Weights uniform in `±1/√fan_in`, biases zero.
    pub fn new(
        hyperbolic: Option<BiasMode>,
        curvature: Curvature,
        n_items: usize,
        dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if dim == 0 || n_items == 0 {
            return Err(Error::InvalidArgument("latent dim and item count must be ≥ 1".into()));
        }
        let w_enc = uniform(rng, n_items, dim, 1.0 / (n_items as f64).sqrt());
        let w_dec = uniform(rng, dim, n_items, 1.0 / (dim as f64).sqrt());
        Self::from_tensors(
            hyperbolic,
            curvature,
            [w_enc, Tensor::zeros(1, dim), w_dec, Tensor::zeros(1, n_items)],
        )
    }

    pub fn from_tensors(
        hyperbolic: Option<BiasMode>,
        curvature: Curvature,
        [w_enc, b_enc, w_dec, b_dec]: [Tensor; 4],
    ) -> Result<Self> {
        let (n_items, dim) = w_enc.shape();
        if b_enc.shape() != (1, dim) || w_dec.shape() != (dim, n_items) || b_dec.shape() != (1, n_items)
        {
            return Err(Error::InvalidArgument("inconsistent autoencoder shapes".into()));
        }
        if hyperbolic.is_some() && curvature.is_euclidean() {
            return Err(Error::InvalidArgument("hyperbolic model needs c > 0".into()));
        }
        let bias = |name: &str, t: Tensor| match hyperbolic {
            Some(BiasMode::Moebius) => ParamTensor::ball(name, t, curvature),
            _ => ParamTensor::euclidean(name, t),
        };
        let params = vec![
            ParamTensor::euclidean(W_ENC, w_enc),
            bias(B_ENC, b_enc),
            ParamTensor::euclidean(W_DEC, w_dec),
            bias(B_DEC, b_dec),
        ];
        if params.iter().any(|p| !p.values.is_finite()) {
            return Err(Error::NonFinite("autoencoder parameters".into()));
        }
        Ok(Self {
            hyperbolic,
            curvature,
            n_items,
            dim,
            tangent_tanh: false,
            params,
        })
    }

    pub fn params(&self) -> &[ParamTensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [ParamTensor] {
        &mut self.params
    }

    /// Same weights read as the Euclidean baseline.
    pub fn as_euclidean(&self) -> AeModel {
        let mut out = self.clone();
        out.hyperbolic = None;
        out.curvature = Curvature::euclidean();
        for p in &mut out.params {
            p.space = Space::Euclidean;
        }
        out
    }

    /// Input batch: rows L2-normalized, then mapped by `exp_0` (a pure
    /// rescaling because every row has unit norm).
    pub fn input_batch(&self, rows: &[&[usize]]) -> Result<Arc<SparseRows>> {
        let scale = match self.hyperbolic {
            Some(_) => tanh_ratio(self.curvature.sqrt_c()),
            None => 1.0,
        };
        normalized_batch(rows, self.n_items, scale)
    }

    /// Builds the logits node; `p` holds the four parameter nodes in
    /// storage order.
    pub fn logits_on_tape(&self, tape: &mut Tape, p: &[NodeId], x: Arc<SparseRows>) -> NodeId {
        let n = x.rows;
        let k = self.curvature;
        match self.hyperbolic {
            None => {
                let h = tape.sparse_matmul(x, p[0]);
                let mut z = tape.add(h, p[1]);
                if self.tangent_tanh {
                    z = tape.unary(UnaryFn::Tanh, z);
                }
                let y = tape.matmul(z, p[2]);
                tape.add(y, p[3])
            }
            Some(mode) => {
                let nx = tape.constant(Tensor::filled(n, 1, tanh_ratio(k.sqrt_c())));
                let mx = tape.sparse_matmul(x, p[0]);
                let mut z = self.hyp_layer(tape, mx, nx, p[1], mode);
                if self.tangent_tanh {
                    let t = kernels::logmap0(tape, k, z);
                    let t = tape.unary(UnaryFn::Tanh, t);
                    let e = kernels::expmap0(tape, k, t);
                    z = kernels::project(tape, k, e);
                }
                let mz = tape.matmul(z, p[2]);
                let nz = tape.row_norm(z);
                let y = self.hyp_layer(tape, mz, nz, p[3], mode);
                kernels::logmap0(tape, k, y)
            }
        }
    }

    fn hyp_layer(&self, tape: &mut Tape, mx: NodeId, nx: NodeId, b: NodeId, mode: BiasMode) -> NodeId {
        let k = self.curvature;
        let mv = kernels::mobius_matvec_from_product(tape, k, mx, nx);
        let bias = match mode {
            BiasMode::Hyp => kernels::expmap0(tape, k, b),
            BiasMode::Moebius => b,
        };
        let s = kernels::mobius_add(tape, k, mv, bias);
        kernels::project(tape, k, s)
    }

    /// Logits for a batch of item lists (`rows × items`).
    pub fn forward(&self, rows: &[&[usize]]) -> Result<Tensor> {
        let x = self.input_batch(rows)?;
        let mut tape = Tape::new();
        let p: Vec<NodeId> = self.params.iter().map(|t| tape.constant(t.values.clone())).collect();
        let out = self.logits_on_tape(&mut tape, &p, x);
        tape.check_finite()?;
        Ok(tape.value(out).clone())
    }
}

/// Logits of the hyperbolic autoencoder for one user row.
pub fn hae_forward(model: &AeModel, x_row: &[usize]) -> Result<Vec<f64>> {
    if model.hyperbolic.is_none() {
        return Err(Error::InvalidArgument("expected a hyperbolic autoencoder".into()));
    }
    Ok(model.forward(&[x_row])?.into_data())
}

/// Logits of the Euclidean autoencoder `(x̂ W_e + b_e) W_d + b_d`; a
/// hyperbolic model is read with its weights taken as Euclidean.
pub fn euclid_ae_forward(model: &AeModel, x_row: &[usize]) -> Result<Vec<f64>> {
    Ok(model.as_euclidean().forward(&[x_row])?.into_data())
}
