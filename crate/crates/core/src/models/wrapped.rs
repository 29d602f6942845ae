use crate::error::{Error, Result};
use crate::geometry::lorentz;
use crate::geometry::scalar::{log_sinh_ratio, norm};
use crate::geometry::HyperboloidPoint;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Wrapped normal on the Lorentz model: a diagonal Gaussian in the
/// tangent space at the origin, transported to `mean` and pushed through
/// `exp_mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedNormal {
    mean: HyperboloidPoint,
    sigma: Vec<f64>,
}

/// `log N(v; 0, diag σ²) - (d-1) log(sinh(√c r)/(√c r))`, `r = ‖v‖`.
pub fn wrapped_log_density(sqrt_c: f64, v: &[f64], sigma: &[f64]) -> f64 {
    let d = v.len() as f64;
    let gauss: f64 = v
        .iter()
        .zip(sigma)
        .map(|(x, s)| -0.5 * (x / s).powi(2) - s.ln())
        .sum::<f64>()
        - 0.5 * d * LN_2PI;
    gauss - (d - 1.0) * log_sinh_ratio(sqrt_c * norm(v))
}

impl WrappedNormal {
    pub fn new(mean: HyperboloidPoint, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != mean.dim() {
            return Err(Error::DimensionMismatch {
                expected: mean.dim(),
                got: sigma.len(),
            });
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("scale entries must be positive".into()));
        }
        Ok(Self { mean, sigma })
    }

    pub fn mean(&self) -> &HyperboloidPoint {
        &self.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Reparameterized draw from standard-normal `noise`; returns the
    /// sample and its log-density.
    pub fn sample(&self, noise: &[f64]) -> Result<(HyperboloidPoint, f64)> {
        let d = self.mean.dim();
        if noise.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: noise.len(),
            });
        }
        let k = self.mean.curvature();
        let v: Vec<f64> = noise.iter().zip(&self.sigma).map(|(e, s)| e * s).collect();
        let o = lorentz::origin(k, d);
        let mut lifted = v.clone();
        lifted.push(0.0);
        let u = lorentz::parallel_transport(k, &o, self.mean.coords(), &lifted);
        let z = lorentz::expmap(k, self.mean.coords(), &u);
        let logq = wrapped_log_density(k.sqrt_c(), &v, &self.sigma);
        Ok((HyperboloidPoint::new(z, k)?, logq))
    }

    /// Log-density at an on-sheet point, via the inverse path.
    pub fn logpdf(&self, z: &HyperboloidPoint) -> Result<f64> {
        let k = self.mean.curvature();
        k.ensure_same(&z.curvature())?;
        if z.dim() != self.mean.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.dim(),
                got: z.dim(),
            });
        }
        let d = self.mean.dim();
        let o = lorentz::origin(k, d);
        let u = lorentz::logmap(k, self.mean.coords(), z.coords());
        let v = lorentz::parallel_transport(k, self.mean.coords(), &o, &u);
        Ok(wrapped_log_density(k.sqrt_c(), &v[..d], &self.sigma))
    }
}
