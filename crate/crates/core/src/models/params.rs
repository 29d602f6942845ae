use serde::{Deserialize, Serialize};

use crate::geometry::Curvature;
use crate::graddiff::Tensor;

/// Where a parameter lives; drives optimizer dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Space {
    Euclidean,
    /// Each row is a point of the curvature-`c` Poincaré ball.
    ManifoldBall(Curvature),
}

/// A named dense parameter array with its space tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub values: Tensor,
    pub space: Space,
}

impl ParamTensor {
    pub fn euclidean(name: &str, values: Tensor) -> Self {
        Self {
            name: name.to_string(),
            values,
            space: Space::Euclidean,
        }
    }

    /// Manifold parameter; rows are clipped onto the ball on construction.
    pub fn ball(name: &str, mut values: Tensor, k: Curvature) -> Self {
        for i in 0..values.rows() {
            crate::geometry::poincare::project_in_place(k, values.row_mut(i));
        }
        Self {
            name: name.to_string(),
            values,
            space: Space::ManifoldBall(k),
        }
    }

    pub fn is_manifold(&self) -> bool {
        matches!(self.space, Space::ManifoldBall(_))
    }
}
