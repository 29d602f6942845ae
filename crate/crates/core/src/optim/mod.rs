//! Adam for Euclidean tensors and Riemannian Adam for ball-constrained ones.
//!
//! [`Optimizer`] owns one [`OptimState`] per parameter and dispatches on the
//! [`Space`] tag of each [`ParamTensor`]. Manifold rows are updated with the
//! exact exponential map, clipped back onto the ball, and their first moment
//! is parallel-transported to the new point.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{poincare, Curvature};
use crate::graddiff::Tensor;
use crate::models::{ParamTensor, Space};

/// How the second moment of a manifold row is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecondMoment {
    /// One scalar per row: the squared Riemannian norm of the gradient.
    RowNorm,
    /// One value per coordinate.
    PerCoordinate,
}

/// Momentum transport used after a manifold step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransportMode {
    /// `(λ_x/λ_y) gyr[y, -x] m`.
    Exact,
    /// `(λ_x/λ_y) m`.
    ConformalRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip applied before every step.
    pub clip_norm: Option<f64>,
    pub second_moment: SecondMoment,
    pub transport: TransportMode,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(5.0),
            second_moment: SecondMoment::RowNorm,
            transport: TransportMode::Exact,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Moments and step count for one parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub m: Tensor,
    pub v: Tensor,
    pub t: u64,
}

impl OptimState {
    /// Fresh state for `param` under `cfg`.
    pub fn for_param(param: &ParamTensor, cfg: &AdamConfig) -> Self {
        let (r, c) = param.values.shape();
        let v = match (param.space, cfg.second_moment) {
            (Space::ManifoldBall(_), SecondMoment::RowNorm) => Tensor::zeros(r, 1),
            _ => Tensor::zeros(r, c),
        };
        Self {
            m: Tensor::zeros(r, c),
            v,
            t: 0,
        }
    }
}

fn check_grad(param: &ParamTensor, grad: &Tensor) -> Result<()> {
    if grad.shape() != param.values.shape() {
        return Err(Error::DimensionMismatch {
            expected: param.values.len(),
            got: grad.len(),
        });
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite(format!("gradient of {}", param.name)));
    }
    Ok(())
}

/// Bias-corrected Adam step on a Euclidean tensor. A non-finite gradient
/// rejects the step and leaves `param` and `state` untouched.
pub fn adam_step(
    param: &mut ParamTensor,
    grad: &Tensor,
    state: &mut OptimState,
    cfg: &AdamConfig,
) -> Result<()> {
    check_grad(param, grad)?;
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    let p = param.values.data_mut();
    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for i in 0..p.len() {
        let g = grad.data()[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let mh = m[i] / bc1;
        let vh = v[i] / bc2;
        p[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Riemannian Adam step on a tensor whose rows are ball points.
pub fn radam_step(
    param: &mut ParamTensor,
    egrad: &Tensor,
    state: &mut OptimState,
    cfg: &AdamConfig,
) -> Result<()> {
    let Space::ManifoldBall(k) = param.space else {
        return Err(Error::InvalidArgument(format!(
            "{} is not a manifold parameter",
            param.name
        )));
    };
    check_grad(param, egrad)?;
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    // a single-column second moment is the per-row variant (for one-column
    // parameters both variants coincide)
    let row_norm_v = state.v.cols() == 1;
    for r in 0..param.values.rows() {
        let p = param.values.row(r).to_vec();
        let lam = poincare::lambda(k, &p);
        let inv_metric = 1.0 / (lam * lam);
        let rgrad: Vec<f64> = egrad.row(r).iter().map(|g| g * inv_metric).collect();
        let m = state.m.row_mut(r);
        for (mi, gi) in m.iter_mut().zip(&rgrad) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
        }
        let update: Vec<f64> = if row_norm_v {
            let rnorm2 = lam * lam * rgrad.iter().map(|g| g * g).sum::<f64>();
            let v = &mut state.v.row_mut(r)[0];
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * rnorm2;
            let denom = (*v / bc2).sqrt() + cfg.eps;
            state.m.row(r).iter().map(|mi| -cfg.lr * (mi / bc1) / denom).collect()
        } else {
            let v = state.v.row_mut(r);
            for (vi, gi) in v.iter_mut().zip(&rgrad) {
                let g = lam * gi;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
            }
            state
                .m
                .row(r)
                .iter()
                .zip(state.v.row(r))
                .map(|(mi, vi)| -cfg.lr * (mi / bc1) / ((vi / bc2).sqrt() + cfg.eps))
                .collect()
        };
        let mut next = poincare::expmap(k, &p, &update);
        poincare::project_in_place(k, &mut next);
        let moved = transport_momentum(k, state.m.row(r), &p, &next, cfg.transport);
        state.m.row_mut(r).copy_from_slice(&moved);
        param.values.row_mut(r).copy_from_slice(&next);
    }
    Ok(())
}

/// Moves a tangent vector `m` at `from` to the tangent space at `to`.
pub fn transport_momentum(
    k: Curvature,
    m: &[f64],
    from: &[f64],
    to: &[f64],
    mode: TransportMode,
) -> Vec<f64> {
    match mode {
        TransportMode::Exact => poincare::transport(k, from, to, m),
        TransportMode::ConformalRatio => {
            let ratio = poincare::lambda(k, from) / poincare::lambda(k, to);
            m.iter().map(|v| v * ratio).collect()
        }
    }
}

/// Rescales all gradients so that their joint norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_global_norm<'a>(grads: impl IntoIterator<Item = &'a mut Tensor>, max_norm: f64) -> f64 {
    let mut grads: Vec<&mut Tensor> = grads.into_iter().collect();
    let total = grads.iter().map(|g| g.norm_sq()).sum::<f64>().sqrt();
    if total > max_norm && total.is_finite() {
        let s = max_norm / total;
        for g in grads.iter_mut() {
            g.scale_in_place(s);
        }
    }
    total
}

/// Optimizer facade over a fixed, ordered set of parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub config: AdamConfig,
    pub states: Vec<OptimState>,
}

impl Optimizer {
    pub fn new(config: AdamConfig, params: &[ParamTensor]) -> Self {
        Self {
            states: params.iter().map(|p| OptimState::for_param(p, &config)).collect(),
            config,
        }
    }

    /// One step for every parameter. Gradients are looked up by parameter
    /// name; a missing gradient is treated as zero. Nothing is modified if
    /// any gradient is non-finite.
    pub fn step(&mut self, params: &mut [ParamTensor], grads: &HashMap<String, Tensor>) -> Result<()> {
        if params.len() != self.states.len() {
            return Err(Error::DimensionMismatch {
                expected: self.states.len(),
                got: params.len(),
            });
        }
        let mut ordered: Vec<Tensor> = params
            .iter()
            .map(|p| {
                grads
                    .get(&p.name)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros(p.values.rows(), p.values.cols()))
            })
            .collect();
        for (p, g) in params.iter().zip(&ordered) {
            check_grad(p, g)?;
        }
        if let Some(max) = self.config.clip_norm {
            clip_global_norm(ordered.iter_mut(), max);
        }
        for ((p, g), s) in params.iter_mut().zip(&ordered).zip(self.states.iter_mut()) {
            match p.space {
                Space::Euclidean => adam_step(p, g, s, &self.config)?,
                Space::ManifoldBall(_) => radam_step(p, g, s, &self.config)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64) -> AdamConfig {
        AdamConfig {
            clip_norm: None,
            ..AdamConfig::with_lr(lr)
        }
    }

    #[test]
    fn zero_gradient_leaves_param_and_counts_step() {
        let mut p = ParamTensor::euclidean("w", Tensor::row_vector(vec![1.0, -2.0]));
        let mut s = OptimState::for_param(&p, &cfg(0.1));
        adam_step(&mut p, &Tensor::zeros(1, 2), &mut s, &cfg(0.1)).unwrap();
        assert_eq!(p.values.data(), &[1.0, -2.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_adam_step_is_sign_descent() {
        let mut p = ParamTensor::euclidean("w", Tensor::row_vector(vec![0.0, 0.0, 0.0]));
        let c = cfg(0.01);
        let mut s = OptimState::for_param(&p, &c);
        adam_step(&mut p, &Tensor::row_vector(vec![3.0, -0.5, 1e-3]), &mut s, &c).unwrap();
        for (got, want) in p.values.data().iter().zip([-0.01, 0.01, -0.01]) {
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
    }

    #[test]
    fn non_finite_gradient_rejected_without_mutation() {
        let mut p = ParamTensor::euclidean("w", Tensor::row_vector(vec![1.0]));
        let c = cfg(0.1);
        let mut s = OptimState::for_param(&p, &c);
        let before = (p.clone(), s.clone());
        assert!(adam_step(&mut p, &Tensor::row_vector(vec![f64::NAN]), &mut s, &c).is_err());
        assert_eq!((p, s), before);
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut p = ParamTensor::euclidean("w", Tensor::row_vector(vec![1.5, -2.0, 0.7]));
        let c = cfg(0.05);
        let mut s = OptimState::for_param(&p, &c);
        for _ in 0..500 {
            let g = p.values.map(|x| 2.0 * x);
            adam_step(&mut p, &g, &mut s, &c).unwrap();
        }
        assert!(p.values.norm_sq().sqrt() < 1e-3, "{:?}", p.values);
    }

    #[test]
    fn radam_first_step_at_origin() {
        let k = Curvature::new(1.0).unwrap();
        let mut p = ParamTensor::ball("b", Tensor::row_vector(vec![0.0, 0.0]), k);
        let c = cfg(0.01);
        let mut s = OptimState::for_param(&p, &c);
        let g = [3.0, -4.0];
        radam_step(&mut p, &Tensor::row_vector(g.to_vec()), &mut s, &c).unwrap();
        // rgrad = g/4, v = λ²‖rgrad‖² = ‖g‖²/4, u = -lr (g/4)/(‖g‖/2) = -lr g/(2‖g‖)
        let u: Vec<f64> = g.iter().map(|x| -0.01 * x / (2.0 * 5.0)).collect();
        let expected = poincare::expmap0(k, &u);
        for (a, b) in p.values.data().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn radam_zero_gradient_keeps_point() {
        let k = Curvature::new(1.0).unwrap();
        let mut p = ParamTensor::ball("b", Tensor::row_vector(vec![0.3, -0.1]), k);
        let c = cfg(0.1);
        let mut s = OptimState::for_param(&p, &c);
        radam_step(&mut p, &Tensor::zeros(1, 2), &mut s, &c).unwrap();
        assert_eq!(p.values.data(), &[0.3, -0.1]);
    }

    #[test]
    fn radam_geodesic_descent_fixture() {
        let k = Curvature::new(1.0).unwrap();
        let target = [0.3, -0.2];
        let mut p = ParamTensor::ball("b", Tensor::row_vector(vec![-0.5, 0.4]), k);
        let c = cfg(0.1);
        let mut s = OptimState::for_param(&p, &c);
        for _ in 0..300 {
            let x = p.values.row(0).to_vec();
            // ∇_x d² = 2 d ∇d; use the tape for the Euclidean gradient
            let mut tape = crate::graddiff::Tape::new();
            let xn = tape.param("b", Tensor::row_vector(x));
            let tn = tape.constant(Tensor::row_vector(target.to_vec()));
            let d = crate::graddiff::kernels::poincare_distance(&mut tape, k, xn, tn);
            let d2 = tape.mul(d, d);
            let l = tape.sum(d2);
            let g = tape.backward(l).unwrap();
            radam_step(&mut p, g.get("b").unwrap(), &mut s, &c).unwrap();
        }
        let d = poincare::distance(k, p.values.row(0), &target).unwrap();
        assert!(d < 1e-3, "distance {d}");
    }

    #[test]
    fn radam_is_continuous_in_curvature() {
        let g = Tensor::row_vector(vec![0.4, -1.2, 0.3]);
        let start = vec![0.2, 0.1, -0.3];
        let run = |c: f64| {
            let k = Curvature::new(c).unwrap();
            let mut p = ParamTensor::ball("b", Tensor::row_vector(start.clone()), k);
            let conf = cfg(0.05);
            let mut s = OptimState::for_param(&p, &conf);
            for _ in 0..5 {
                radam_step(&mut p, &g, &mut s, &conf).unwrap();
            }
            p.values.into_data()
        };
        let flat = run(0.0);
        let curved = run(1e-6);
        for (a, b) in flat.iter().zip(&curved) {
            assert!((a - b).abs() < 1e-6);
        }
        // c = 0: metric 4·I, so each step is Adam with a halved learning rate
        let mut e = ParamTensor::euclidean("b", Tensor::row_vector(start.clone()));
        let conf = AdamConfig {
            lr: 0.025,
            second_moment: SecondMoment::PerCoordinate,
            ..cfg(0.025)
        };
        let mut s = OptimState::for_param(&e, &conf);
        let mut b = ParamTensor::ball("b", Tensor::row_vector(start), Curvature::euclidean());
        let conf_b = AdamConfig {
            lr: 0.05,
            ..conf
        };
        let mut sb = OptimState::for_param(&b, &conf_b);
        for _ in 0..5 {
            adam_step(&mut e, &g, &mut s, &conf).unwrap();
            radam_step(&mut b, &g, &mut sb, &conf_b).unwrap();
        }
        for (a, x) in e.values.data().iter().zip(b.values.data()) {
            // the two ε terms sit on differently scaled denominators
            assert!((a - x).abs() < 1e-8, "{a} vs {x}");
        }
    }

    #[test]
    fn transport_identity_and_flat_limit() {
        let k = Curvature::new(1.0).unwrap();
        let m = [0.5, -0.25];
        let x = [0.2, 0.3];
        let same = transport_momentum(k, &m, &x, &x, TransportMode::Exact);
        assert!(same.iter().zip(&m).all(|(a, b)| (a - b).abs() < 1e-15));
        let flat = Curvature::new(1e-9).unwrap();
        let moved = transport_momentum(flat, &m, &x, &[-0.4, 0.1], TransportMode::Exact);
        assert!(moved.iter().zip(&m).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn facade_clips_and_dispatches() {
        let k = Curvature::new(1.0).unwrap();
        let mut params = vec![
            ParamTensor::euclidean("w", Tensor::row_vector(vec![1.0, 1.0])),
            ParamTensor::ball("b", Tensor::row_vector(vec![0.0, 0.0]), k),
        ];
        let mut opt = Optimizer::new(AdamConfig::with_lr(0.1), &params);
        let mut grads = HashMap::new();
        grads.insert("w".to_string(), Tensor::row_vector(vec![100.0, 0.0]));
        grads.insert("b".to_string(), Tensor::row_vector(vec![0.0, 100.0]));
        opt.step(&mut params, &grads).unwrap();
        assert!(params[0].values.get(0, 0) < 1.0);
        assert!(params[1].values.get(0, 1) < 0.0);
        assert_eq!(opt.states[1].v.shape(), (1, 1));
        grads.insert("w".to_string(), Tensor::row_vector(vec![f64::INFINITY, 0.0]));
        let before = params.clone();
        assert!(opt.step(&mut params, &grads).is_err());
        assert_eq!(params, before);
    }
}
