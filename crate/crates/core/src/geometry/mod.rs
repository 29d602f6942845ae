//! Curvature-parameterized kernels for the Poincaré ball and the Lorentz
//! (hyperboloid) model.
//!
//! Conventions: the ball of curvature `-c` is `{x : c‖x‖² < 1}`, the
//! hyperboloid is `{x ∈ R^{n+1} : c⟨x,x⟩_L = -1, x_{n+1} > 0}` with the time
//! coordinate stored last. `c = 0` selects the Euclidean limit of every ball
//! kernel. All computations are done in `f64`.

pub mod lorentz;
pub mod poincare;
pub mod scalar;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lorentz::HyperboloidPoint;
pub use poincare::BallPoint;

/// Default relative margin kept between points and the ball boundary.
pub const DEFAULT_EPS_BOUNDARY: f64 = 1e-3;

/// Curvature parameter `c ≥ 0` (sectional curvature `-c`, ball radius `1/√c`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curvature {
    c: f64,
    eps_boundary: f64,
}

impl Curvature {
    pub fn new(c: f64) -> Result<Self> {
        Self::with_eps(c, DEFAULT_EPS_BOUNDARY)
    }

    pub fn with_eps(c: f64, eps_boundary: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "curvature must be finite and non-negative, got {c}"
            )));
        }
        if !(0.0..1.0).contains(&eps_boundary) {
            return Err(Error::InvalidArgument(format!(
                "eps_boundary must lie in [0, 1), got {eps_boundary}"
            )));
        }
        Ok(Self { c, eps_boundary })
    }

    /// Euclidean degenerate case.
    pub fn euclidean() -> Self {
        Self {
            c: 0.0,
            eps_boundary: DEFAULT_EPS_BOUNDARY,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sqrt_c(&self) -> f64 {
        self.c.sqrt()
    }

    pub fn eps_boundary(&self) -> f64 {
        self.eps_boundary
    }

    pub fn is_euclidean(&self) -> bool {
        self.c == 0.0
    }

    /// Largest norm a ball point may have after clipping; infinite when `c = 0`.
    pub fn max_norm(&self) -> f64 {
        if self.is_euclidean() {
            f64::INFINITY
        } else {
            (1.0 - self.eps_boundary) / self.sqrt_c()
        }
    }

    pub(crate) fn ensure_same(&self, other: &Curvature) -> Result<()> {
        if self.c != other.c {
            return Err(Error::CurvatureMismatch(self.c, other.c));
        }
        Ok(())
    }
}

/// Base point of a tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentBase {
    Ball(BallPoint),
    Hyperboloid(HyperboloidPoint),
}

/// A tangent vector together with the point it is attached to.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub coords: Vec<f64>,
    pub base: TangentBase,
}

impl TangentVector {
    /// Tangent vector at a hyperboloid point; checks `⟨base, v⟩_L = 0`.
    pub fn at_hyperboloid(base: HyperboloidPoint, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != base.coords().len() {
            return Err(Error::DimensionMismatch {
                expected: base.coords().len(),
                got: coords.len(),
            });
        }
        let ip = lorentz::lorentz_inner(base.coords(), &coords)?;
        let scale = 1.0 + scalar::norm(&coords) * scalar::norm(base.coords());
        if ip.abs() > 1e-8 * scale {
            return Err(Error::Domain(format!(
                "vector is not tangent at base point: <base, v>_L = {ip:e}"
            )));
        }
        Ok(Self {
            coords,
            base: TangentBase::Hyperboloid(base),
        })
    }

    pub fn at_ball(base: BallPoint, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != base.coords().len() {
            return Err(Error::DimensionMismatch {
                expected: base.coords().len(),
                got: coords.len(),
            });
        }
        Ok(Self {
            coords,
            base: TangentBase::Ball(base),
        })
    }
}

/// Target model for [`convert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Ball,
    Hyperboloid,
}

/// A point in either model.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Ball(BallPoint),
    Hyperboloid(HyperboloidPoint),
}

/// Converts between the ball and hyperboloid models via the stereographic
/// diffeomorphism. Identity when the point is already in the target model.
pub fn convert(point: &Point, target: Model) -> Result<Point> {
    match (point, target) {
        (Point::Ball(p), Model::Hyperboloid) => Ok(Point::Hyperboloid(p.to_hyperboloid()?)),
        (Point::Hyperboloid(x), Model::Ball) => Ok(Point::Ball(x.to_ball())),
        (p, _) => Ok(p.clone()),
    }
}
