//! Lorentz (hyperboloid) model kernels. The time coordinate is stored last.

use super::poincare::BallPoint;
use super::scalar::{clamp_arccosh_arg, dot, norm_sq, sinh_ratio};
use super::{Curvature, TangentBase, TangentVector};
use crate::error::{Error, Result};

/// Minkowski inner product `Σ x_i y_i - x_{n+1} y_{n+1}`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(inner(x, y))
}

#[inline]
pub(crate) fn inner(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() - 1;
    dot(&x[..n], &y[..n]) - x[n] * y[n]
}

/// `√max(⟨u,u⟩_L, 0)`, the norm of a tangent (space-like) vector.
pub fn tangent_norm(u: &[f64]) -> f64 {
    inner(u, u).max(0.0).sqrt()
}

/// Origin `(0, …, 0, 1/√c)` of the curvature-`c` sheet in dimension `n`.
pub fn origin(k: Curvature, n: usize) -> Vec<f64> {
    let mut o = vec![0.0; n + 1];
    o[n] = 1.0 / k.sqrt_c();
    o
}

/// Recomputes the time coordinate so that `c⟨x,x⟩_L = -1` holds exactly
/// up to rounding.
pub fn project_to_sheet(k: Curvature, x: &mut [f64]) {
    let n = x.len() - 1;
    x[n] = (1.0 / k.c() + norm_sq(&x[..n])).sqrt();
}

/// Projects `v` onto the tangent space at `x`: `v + c⟨x,v⟩_L x`.
pub fn project_to_tangent(k: Curvature, x: &[f64], v: &[f64]) -> Vec<f64> {
    let ip = k.c() * inner(x, v);
    v.iter().zip(x).map(|(vi, xi)| vi + ip * xi).collect()
}

/// `d(x, y) = (1/√c) arccosh(-c⟨x,y⟩_L)`.
pub fn distance(k: Curvature, x: &[f64], y: &[f64]) -> f64 {
    clamp_arccosh_arg(-k.c() * inner(x, y)).acosh() / k.sqrt_c()
}

/// `exp_μ(u) = cosh(√c r) μ + sinh(√c r) u / (√c r)`, `r = ‖u‖_L`.
pub fn expmap(k: Curvature, mu: &[f64], u: &[f64]) -> Vec<f64> {
    let s = k.sqrt_c() * tangent_norm(u);
    let ch = s.cosh();
    let sr = sinh_ratio(s);
    let mut z: Vec<f64> = mu.iter().zip(u).map(|(m, v)| ch * m + sr * v).collect();
    project_to_sheet(k, &mut z);
    z
}

/// Inverse of [`expmap`].
pub fn logmap(k: Curvature, mu: &[f64], z: &[f64]) -> Vec<f64> {
    let alpha = clamp_arccosh_arg(-k.c() * inner(mu, z));
    let s = alpha.acosh();
    let scale = 1.0 / sinh_ratio(s);
    // u = z - α μ; ‖u‖_L = sinh(s)/√c on the sheet
    let u: Vec<f64> = z.iter().zip(mu).map(|(zi, mi)| zi - alpha * mi).collect();
    let u = project_to_tangent(k, mu, &u);
    u.into_iter().map(|v| v * scale).collect()
}

/// `PT_{a→b}(v) = v + c⟨b,v⟩_L / (1 - c⟨a,b⟩_L) (a + b)`.
pub fn parallel_transport(k: Curvature, a: &[f64], b: &[f64], v: &[f64]) -> Vec<f64> {
    let c = k.c();
    let coef = c * inner(b, v) / (1.0 - c * inner(a, b));
    v.iter()
        .zip(a.iter().zip(b))
        .map(|(vi, (ai, bi))| vi + coef * (ai + bi))
        .collect()
}

/// Ball coordinates of a hyperboloid point: `p = x_s / (1 + √c x_t)`.
pub fn to_ball(k: Curvature, x: &[f64]) -> Vec<f64> {
    let n = x.len() - 1;
    let den = 1.0 + k.sqrt_c() * x[n];
    x[..n].iter().map(|v| v / den).collect()
}

/// Hyperboloid coordinates of a ball point:
/// `x = (2p, (1 + c‖p‖²)/√c) / (1 - c‖p‖²)`.
pub fn from_ball(k: Curvature, p: &[f64]) -> Vec<f64> {
    let c = k.c();
    let p2 = norm_sq(p);
    let den = 1.0 - c * p2;
    let mut x: Vec<f64> = p.iter().map(|v| 2.0 * v / den).collect();
    x.push((1.0 + c * p2) / (k.sqrt_c() * den));
    x
}

/// A point on the curvature-`c` hyperboloid sheet (`c > 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperboloidPoint {
    coords: Vec<f64>,
    curvature: Curvature,
}

impl HyperboloidPoint {
    /// Validates `c⟨x,x⟩_L = -1` (relative tolerance 1e-9) and `x_{n+1} > 0`.
    pub fn new(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        if curvature.is_euclidean() {
            return Err(Error::InvalidArgument(
                "the hyperboloid model requires c > 0".into(),
            ));
        }
        if coords.len() < 2 {
            return Err(Error::InvalidArgument(
                "hyperboloid points need at least two coordinates".into(),
            ));
        }
        let n = coords.len() - 1;
        let residual = curvature.c() * inner(&coords, &coords) + 1.0;
        let scale = 1.0 + curvature.c() * coords[n] * coords[n];
        if !(coords[n] > 0.0) || residual.abs() > 1e-9 * scale {
            return Err(Error::Domain(format!(
                "point is off the sheet: c<x,x>_L + 1 = {residual:e}"
            )));
        }
        Ok(Self { coords, curvature })
    }

    pub fn origin(n: usize, curvature: Curvature) -> Result<Self> {
        Self::new(origin(curvature, n), curvature)
    }

    /// Builds a point from its space coordinates; the time coordinate is
    /// derived from the sheet constraint.
    pub fn from_space(space: &[f64], curvature: Curvature) -> Result<Self> {
        let mut coords = space.to_vec();
        coords.push(0.0);
        if curvature.is_euclidean() {
            return Err(Error::InvalidArgument(
                "the hyperboloid model requires c > 0".into(),
            ));
        }
        project_to_sheet(curvature, &mut coords);
        Ok(Self { coords, curvature })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn distance(&self, other: &HyperboloidPoint) -> Result<f64> {
        self.curvature.ensure_same(&other.curvature)?;
        lorentz_inner(&self.coords, &other.coords)?;
        Ok(distance(self.curvature, &self.coords, &other.coords))
    }

    pub fn expmap(&self, u: &TangentVector) -> Result<HyperboloidPoint> {
        self.check_tangent(u)?;
        Ok(Self {
            coords: expmap(self.curvature, &self.coords, &u.coords),
            curvature: self.curvature,
        })
    }

    pub fn logmap(&self, z: &HyperboloidPoint) -> Result<TangentVector> {
        self.curvature.ensure_same(&z.curvature)?;
        lorentz_inner(&self.coords, &z.coords)?;
        Ok(TangentVector {
            coords: logmap(self.curvature, &self.coords, &z.coords),
            base: TangentBase::Hyperboloid(self.clone()),
        })
    }

    /// Transports `v` (tangent here) to `to`.
    pub fn transport(&self, to: &HyperboloidPoint, v: &TangentVector) -> Result<TangentVector> {
        self.check_tangent(v)?;
        self.curvature.ensure_same(&to.curvature)?;
        Ok(TangentVector {
            coords: parallel_transport(self.curvature, &self.coords, &to.coords, &v.coords),
            base: TangentBase::Hyperboloid(to.clone()),
        })
    }

    fn check_tangent(&self, v: &TangentVector) -> Result<()> {
        match &v.base {
            TangentBase::Hyperboloid(b) if b == self => Ok(()),
            _ => Err(Error::Domain(
                "tangent vector is not attached to this point".into(),
            )),
        }
    }

    pub fn to_ball(&self) -> BallPoint {
        BallPoint::project(&to_ball(self.curvature, &self.coords), self.curvature)
    }

    pub fn from_ball(p: &BallPoint) -> Result<Self> {
        let k = p.curvature();
        if k.is_euclidean() {
            return Err(Error::InvalidArgument(
                "the hyperboloid model requires c > 0".into(),
            ));
        }
        Ok(Self {
            coords: from_ball(k, p.coords()),
            curvature: k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(c: f64) -> Curvature {
        Curvature::new(c).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let o = origin(k(1.0), 2);
        assert_eq!(lorentz_inner(&o, &o).unwrap(), -1.0);
        assert_eq!(lorentz_inner(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 0.0);
        let x = [3.0, 0.0, 10f64.sqrt()];
        assert!((lorentz_inner(&x, &x).unwrap() + 1.0).abs() < 1e-14);
        assert!(lorentz_inner(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let kk = k(1.0);
        let o = origin(kk, 2);
        assert_eq!(distance(kk, &o, &o), 0.0);
        let y = [1f64.sinh(), 0.0, 1f64.cosh()];
        assert!((distance(kk, &o, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expmap_at_origin() {
        let kk = k(1.0);
        let o = origin(kk, 2);
        let z = expmap(kk, &o, &[1.0, 0.0, 0.0]);
        assert!((z[0] - 1f64.sinh()).abs() < 1e-14);
        assert_eq!(z[1], 0.0);
        assert!((z[2] - 1f64.cosh()).abs() < 1e-14);
        assert_eq!(expmap(kk, &o, &[0.0; 3]), o);
    }

    #[test]
    fn conversion_examples() {
        let kk = k(1.0);
        let x = from_ball(kk, &[0.5, 0.0]);
        assert!((x[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(x[1], 0.0);
        assert!((x[2] - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(to_ball(kk, &origin(kk, 3)), vec![0.0; 3]);
        assert_eq!(from_ball(k(2.0), &[0.0, 0.0]), origin(k(2.0), 2));
    }

    #[test]
    fn typed_constructors_check_the_sheet() {
        assert!(HyperboloidPoint::new(vec![0.0, 1.0], k(1.0)).is_ok());
        assert!(HyperboloidPoint::new(vec![0.0, 2.0], k(1.0)).is_err());
        assert!(HyperboloidPoint::new(vec![0.0, -1.0], k(1.0)).is_err());
        assert!(HyperboloidPoint::new(vec![0.0, 1.0], k(0.0)).is_err());
        let p = HyperboloidPoint::from_space(&[0.3, -4.0], k(0.5)).unwrap();
        assert!(HyperboloidPoint::new(p.coords().to_vec(), k(0.5)).is_ok());
    }

    #[test]
    fn tangent_must_be_attached_to_base() {
        let kk = k(1.0);
        let o = HyperboloidPoint::origin(2, kk).unwrap();
        let other = HyperboloidPoint::from_space(&[0.5, 0.0], kk).unwrap();
        let v = TangentVector::at_hyperboloid(o.clone(), vec![0.1, 0.2, 0.0]).unwrap();
        assert!(other.expmap(&v).is_err());
        assert!(o.expmap(&v).is_ok());
        assert!(TangentVector::at_hyperboloid(o, vec![0.1, 0.2, 0.3]).is_err());
    }
}
