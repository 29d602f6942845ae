use std::sync::Arc;

use rand::Rng;

use super::ae::{uniform, B_DEC, B_ENC, W_DEC, W_ENC};
use super::params::ParamTensor;
use crate::error::{Error, Result};
use crate::geometry::Curvature;
use crate::graddiff::{NodeId, SparseRows, Tape, Tensor, UnaryFn};
use crate::recdata::normalized_batch;

/// Variational autoencoder with a wrapped-normal posterior on the Lorentz
/// model and a standard wrapped-normal prior at the origin.
///
/// The encoder `W_e` (`items × 2d`) produces `(μ_t, log σ)` side by side;
/// the decoder reads the spatial part of `log_o(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HvaeModel {
    pub curvature: Curvature,
    pub n_items: usize,
    pub dim: usize,
    params: Vec<ParamTensor>,
}

/// Tape nodes of one ELBO evaluation.
#[derive(Debug, Clone, Copy)]
pub struct HvaeNodes {
    pub logits: NodeId,
    /// `log q(z|x) - log p₀(z)` per row (`rows × 1`); absent without noise.
    pub kl: Option<NodeId>,
}

impl HvaeModel {
    pub fn new(curvature: Curvature, n_items: usize, dim: usize, rng: &mut impl Rng) -> Result<Self> {
        if dim == 0 || n_items == 0 {
            return Err(Error::InvalidArgument("latent dim and item count must be ≥ 1".into()));
        }
        let w_enc = uniform(rng, n_items, 2 * dim, 1.0 / (n_items as f64).sqrt());
        let w_dec = uniform(rng, dim, n_items, 1.0 / (dim as f64).sqrt());
        Self::from_tensors(
            curvature,
            [w_enc, Tensor::zeros(1, 2 * dim), w_dec, Tensor::zeros(1, n_items)],
        )
    }

    pub fn from_tensors(curvature: Curvature, [w_enc, b_enc, w_dec, b_dec]: [Tensor; 4]) -> Result<Self> {
        if curvature.is_euclidean() {
            return Err(Error::InvalidArgument("the Lorentz latent needs c > 0".into()));
        }
        let (n_items, two_d) = w_enc.shape();
        let dim = two_d / 2;
        if two_d % 2 != 0
            || b_enc.shape() != (1, two_d)
            || w_dec.shape() != (dim, n_items)
            || b_dec.shape() != (1, n_items)
        {
            return Err(Error::InvalidArgument("inconsistent H-VAE shapes".into()));
        }
        let params = vec![
            ParamTensor::euclidean(W_ENC, w_enc),
            ParamTensor::euclidean(B_ENC, b_enc),
            ParamTensor::euclidean(W_DEC, w_dec),
            ParamTensor::euclidean(B_DEC, b_dec),
        ];
        if params.iter().any(|p| !p.values.is_finite()) {
            return Err(Error::NonFinite("H-VAE parameters".into()));
        }
        Ok(Self {
            curvature,
            n_items,
            dim,
            params,
        })
    }

    pub fn params(&self) -> &[ParamTensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [ParamTensor] {
        &mut self.params
    }

    pub fn input_batch(&self, rows: &[&[usize]]) -> Result<Arc<SparseRows>> {
        normalized_batch(rows, self.n_items, 1.0)
    }

    /// Builds logits and the single-draw KL. Without `noise` the latent is
    /// the posterior mean, whose logarithmic map is `μ_t` itself.
    pub fn nodes_on_tape(
        &self,
        tape: &mut Tape,
        p: &[NodeId],
        x: Arc<SparseRows>,
        noise: Option<&Tensor>,
    ) -> HvaeNodes {
        let d = self.dim;
        let enc = tape.sparse_matmul(x, p[0]);
        let enc = tape.add(enc, p[1]);
        let mu_t = tape.col_slice(enc, 0, d);
        let Some(noise) = noise else {
            let y = tape.matmul(mu_t, p[2]);
            return HvaeNodes {
                logits: tape.add(y, p[3]),
                kl: None,
            };
        };
        let c = self.curvature.c();
        let sc = self.curvature.sqrt_c();
        let log_sigma = tape.col_slice(enc, d, d);
        let eps = tape.constant(noise.clone());

        // μ = exp_o(μ_t): spatial part μ_t·sinh(a)/a, α = cosh(a), a = √c‖μ_t‖
        let nm = tape.row_norm(mu_t);
        let a = tape.scale(nm, sc);
        let sra = tape.unary(UnaryFn::SinhRatio, a);
        let mu_s = tape.mul(mu_t, sra);
        let alpha = tape.unary(UnaryFn::Cosh, a);

        // v = σ∘ε, transported along o → μ, then z = exp_μ(u)
        let sigma = tape.unary(UnaryFn::Exp, log_sigma);
        let v = tape.mul(sigma, eps);
        let r = tape.row_norm(v);
        let sr = tape.scale(r, sc);
        let ch = tape.unary(UnaryFn::Cosh, sr);
        let shr = tape.unary(UnaryFn::SinhRatio, sr);
        let mv = tape.row_dot(mu_s, v);
        let cmv = tape.scale(mv, c);
        let one_alpha = tape.add_scalar(alpha, 1.0);
        let coef = tape.div(cmv, one_alpha);
        let shc = tape.mul(shr, coef);
        let w_mu = tape.add(ch, shc);
        let z1 = tape.mul(mu_s, w_mu);
        let z2 = tape.mul(v, shr);
        let z_s = tape.add(z1, z2);

        // h = log_o(z) spatial part
        let nz = tape.row_norm(z_s);
        let snz = tape.scale(nz, sc);
        let asr = tape.unary(UnaryFn::AsinhRatio, snz);
        let h = tape.mul(z_s, asr);
        let y = tape.matmul(h, p[2]);
        let logits = tape.add(y, p[3]);

        // KL sample: the Gaussian normalizers cancel between q and p₀
        let dm1 = d as f64 - 1.0;
        let e2 = noise.data().chunks(d).map(|r| -0.5 * r.iter().map(|e| e * e).sum::<f64>());
        let e2 = tape.constant(Tensor::column(e2.collect()));
        let sum_ls = tape.row_sum(log_sigma);
        let lq0 = tape.sub(e2, sum_ls);
        let lsr_q = tape.unary(UnaryFn::LogSinhRatio, sr);
        let lsr_q = tape.scale(lsr_q, dm1);
        let logq = tape.sub(lq0, lsr_q);
        let h2 = tape.row_norm_sq(h);
        let lp0 = tape.scale(h2, -0.5);
        let nh = tape.row_norm(h);
        let snh = tape.scale(nh, sc);
        let lsr_p = tape.unary(UnaryFn::LogSinhRatio, snh);
        let lsr_p = tape.scale(lsr_p, dm1);
        let logp = tape.sub(lp0, lsr_p);
        HvaeNodes {
            logits,
            kl: Some(tape.sub(logq, logp)),
        }
    }

    /// Posterior-mean logits for a batch.
    pub fn forward(&self, rows: &[&[usize]]) -> Result<Tensor> {
        let x = self.input_batch(rows)?;
        let mut tape = Tape::new();
        let p: Vec<NodeId> = self.params.iter().map(|t| tape.constant(t.values.clone())).collect();
        let out = self.nodes_on_tape(&mut tape, &p, x, None);
        tape.check_finite()?;
        Ok(tape.value(out.logits).clone())
    }
}

/// Logits and single-draw KL for one user row with fixed `noise`.
pub fn hvae_forward(model: &HvaeModel, x_row: &[usize], noise: &[f64]) -> Result<(Vec<f64>, f64)> {
    if noise.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: noise.len(),
        });
    }
    let x = model.input_batch(&[x_row])?;
    let mut tape = Tape::new();
    let p: Vec<NodeId> = model.params.iter().map(|t| tape.constant(t.values.clone())).collect();
    let eps = Tensor::row_vector(noise.to_vec());
    let out = model.nodes_on_tape(&mut tape, &p, x, Some(&eps));
    tape.check_finite()?;
    let kl = tape.value(out.kl.expect("noise given")).item();
    Ok((tape.value(out.logits).clone().into_data(), kl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{lorentz, HyperboloidPoint};
    use crate::models::WrappedNormal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn model(c: f64, items: usize, d: usize) -> HvaeModel {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = HvaeModel::new(Curvature::new(c).unwrap(), items, d, &mut rng).unwrap();
        let be: Vec<f64> = (0..2 * d).map(|i| 0.5 * (i as f64 / d as f64 - 1.0)).collect();
        m.params_mut()[1].values = Tensor::row_vector(be);
        m
    }

    #[test]
    fn matches_wrapped_normal_path() {
        let m = model(0.7, 9, 3);
        let row = [0usize, 4, 8];
        let noise = [0.4, -1.1, 0.25];
        let (logits, kl) = hvae_forward(&m, &row, &noise).unwrap();

        let k = m.curvature;
        let p = m.params();
        let mut enc = p[1].values.data().to_vec();
        for &i in &row {
            for (e, w) in enc.iter_mut().zip(p[0].values.row(i)) {
                *e += w / 3f64.sqrt();
            }
        }
        let (mu_t, log_sigma) = enc.split_at(3);
        let mut lifted = mu_t.to_vec();
        lifted.push(0.0);
        let mu = lorentz::expmap(k, &lorentz::origin(k, 3), &lifted);
        let q = WrappedNormal::new(
            HyperboloidPoint::new(mu, k).unwrap(),
            log_sigma.iter().map(|l| l.exp()).collect(),
        )
        .unwrap();
        let (z, logq) = q.sample(&noise).unwrap();
        let prior = WrappedNormal::new(HyperboloidPoint::origin(3, k).unwrap(), vec![1.0; 3]).unwrap();
        let expect_kl = logq - prior.logpdf(&z).unwrap();
        assert!((kl - expect_kl).abs() < 1e-9, "{kl} vs {expect_kl}");

        let h = lorentz::logmap(k, &lorentz::origin(k, 3), z.coords());
        for (j, l) in logits.iter().enumerate() {
            let e: f64 = (0..3).map(|a| h[a] * p[2].values.get(a, j)).sum::<f64>() + p[3].values.get(0, j);
            assert!((l - e).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_noise_zero_mean_decodes_origin() {
        let mut m = model(1.0, 5, 2);
        m.params_mut()[0].values = Tensor::zeros(5, 4);
        m.params_mut()[1].values = Tensor::zeros(1, 4);
        let (logits, kl) = hvae_forward(&m, &[1, 2], &[0.0, 0.0]).unwrap();
        assert_eq!(logits, m.params()[3].values.data());
        assert!(kl.abs() < 1e-12);
    }

    #[test]
    fn posterior_equal_to_prior_gives_zero_mean_kl() {
        let mut m = model(1.0, 5, 4);
        m.params_mut()[0].values = Tensor::zeros(5, 8);
        m.params_mut()[1].values = Tensor::zeros(1, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let e: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
            sum += hvae_forward(&m, &[0], &e).unwrap().1;
        }
        assert!((sum / n as f64).abs() < 0.05);
    }

    #[test]
    fn mc_kl_nonnegative_in_expectation() {
        let m = model(0.5, 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 10_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let e: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
                hvae_forward(&m, &[1, 3], &e).unwrap().1
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean > -3.0 * (var / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn outputs_finite_on_corners() {
        for c in [1e-6, 0.0016, 0.04, 1.0] {
            for d in [2, 32, 256] {
                let m = model(c, 20, d);
                let noise = vec![0.3; d];
                let (l, kl) = hvae_forward(&m, &[0, 19], &noise).unwrap();
                assert!(l.iter().all(|v| v.is_finite()) && kl.is_finite());
                assert!(m.forward(&[&[3]]).unwrap().is_finite());
            }
        }
    }
}
