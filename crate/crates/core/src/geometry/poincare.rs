//! Poincaré ball kernels (gyrovector arithmetic, exp/log maps, distance).

use super::scalar::{self, artanh_ratio, clamp_arccosh_arg, dot, norm, norm_sq, tanh_ratio};
use super::{Curvature, TangentBase, TangentVector};
use crate::error::{Error, Result};

fn check_inside(k: Curvature, x: &[f64]) -> Result<()> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("point has non-finite coordinates".into()));
    }
    if k.c() * norm_sq(x) >= 1.0 {
        return Err(Error::Domain(format!(
            "point with c·‖x‖² = {} lies outside the ball",
            k.c() * norm_sq(x)
        )));
    }
    Ok(())
}

/// `λ_x^c = 2 / (1 - c‖x‖²)`.
pub fn conformal_factor(k: Curvature, x: &[f64]) -> Result<f64> {
    check_inside(k, x)?;
    Ok(lambda(k, x))
}

#[inline]
pub(crate) fn lambda(k: Curvature, x: &[f64]) -> f64 {
    2.0 / (1.0 - k.c() * norm_sq(x))
}

/// Möbius addition `x ⊕_c y`.
pub fn mobius_add(k: Curvature, x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    let c = k.c();
    if c == 0.0 {
        return x.iter().zip(y).map(|(a, b)| a + b).collect();
    }
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let a = 1.0 + 2.0 * c * xy + c * y2;
    let b = 1.0 - c * x2;
    let den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    x.iter().zip(y).map(|(xi, yi)| (a * xi + b * yi) / den).collect()
}

pub fn mobius_neg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

/// `gyr[a, b] v`, the rotation correcting non-associativity of `⊕_c`.
pub fn gyration(k: Curvature, a: &[f64], b: &[f64], v: &[f64]) -> Vec<f64> {
    let c = k.c();
    if c == 0.0 {
        return v.to_vec();
    }
    let a2 = norm_sq(a);
    let b2 = norm_sq(b);
    let ab = dot(a, b);
    let av = dot(a, v);
    let bv = dot(b, v);
    let c2 = c * c;
    let coef_a = -c2 * av * b2 + c * bv + 2.0 * c2 * ab * bv;
    let coef_b = -c2 * bv * a2 - c * av;
    let den = 1.0 + 2.0 * c * ab + c2 * a2 * b2;
    v.iter()
        .zip(a.iter().zip(b))
        .map(|(vi, (ai, bi))| vi + 2.0 * (coef_a * ai + coef_b * bi) / den)
        .collect()
}

/// Möbius matrix-vector product `M ⊗_c x`; `m` is row-major with `rows` rows
/// and `x.len()` columns. Returns the origin when `x = 0` or `Mx = 0`.
pub fn mobius_matvec(k: Curvature, m: &[f64], rows: usize, x: &[f64]) -> Result<Vec<f64>> {
    let cols = x.len();
    if m.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: m.len(),
        });
    }
    let mx: Vec<f64> = m.chunks_exact(cols).map(|row| dot(row, x)).collect();
    let sc = k.sqrt_c();
    let nx = norm(x);
    let nmx = norm(&mx);
    if nx == 0.0 || nmx == 0.0 {
        return Ok(vec![0.0; rows]);
    }
    // tanh(‖Mx‖/‖x‖ · artanh(√c‖x‖)) / (√c‖Mx‖), written without divisions by zero
    let a_r = artanh_ratio(sc * nx);
    let arg = sc * nmx * a_r;
    let scale = tanh_ratio(arg) * a_r;
    Ok(mx.into_iter().map(|v| v * scale).collect())
}

/// Geodesic distance on the curvature-`c` ball.
///
/// At `c = 0` this returns `2‖x - y‖`, the `c → 0` limit of the curved
/// distance (the conformal factor tends to 2, not 1).
pub fn distance(k: Curvature, x: &[f64], y: &[f64]) -> Result<f64> {
    check_inside(k, x)?;
    check_inside(k, y)?;
    let diff2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if k.is_euclidean() {
        return Ok(2.0 * diff2.sqrt());
    }
    let c = k.c();
    let arg = 1.0 + 2.0 * c * diff2 / ((1.0 - c * norm_sq(x)) * (1.0 - c * norm_sq(y)));
    Ok(clamp_arccosh_arg(arg).acosh() / k.sqrt_c())
}

/// `exp_0^c(v) = tanh(√c‖v‖) v / (√c‖v‖)`.
pub fn expmap0(k: Curvature, v: &[f64]) -> Vec<f64> {
    let s = tanh_ratio(k.sqrt_c() * norm(v));
    v.iter().map(|x| x * s).collect()
}

/// `log_0^c(y) = artanh(√c‖y‖) y / (√c‖y‖)`.
pub fn logmap0(k: Curvature, y: &[f64]) -> Vec<f64> {
    let s = artanh_ratio(k.sqrt_c() * norm(y));
    y.iter().map(|x| x * s).collect()
}

/// `exp_x^c(u) = x ⊕ tanh(√c λ_x ‖u‖ / 2) u / (√c‖u‖)`.
pub fn expmap(k: Curvature, x: &[f64], u: &[f64]) -> Vec<f64> {
    let nu = norm(u);
    let lam = lambda(k, x);
    let sc = k.sqrt_c();
    // tanh(√c λ ‖u‖/2)/(√c‖u‖) = (λ/2) · tanh_ratio(√c λ ‖u‖ / 2)
    let s = 0.5 * lam * tanh_ratio(0.5 * sc * lam * nu);
    let second: Vec<f64> = u.iter().map(|v| v * s).collect();
    mobius_add(k, x, &second)
}

/// `log_x^c(y) = (2/λ_x) artanh(√c‖-x ⊕ y‖) w / (√c‖w‖)`, `w = -x ⊕ y`.
pub fn logmap(k: Curvature, x: &[f64], y: &[f64]) -> Vec<f64> {
    let w = mobius_add(k, &mobius_neg(x), y);
    let lam = lambda(k, x);
    let s = 2.0 / lam * artanh_ratio(k.sqrt_c() * norm(&w));
    w.into_iter().map(|v| v * s).collect()
}

/// Norm clipping to `(1/√c)(1 - eps_boundary)`; the identity inside the bound.
pub fn project(k: Curvature, x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    project_in_place(k, &mut out);
    out
}

/// In-place [`project`]; returns `true` when the point was rescaled.
pub fn project_in_place(k: Curvature, x: &mut [f64]) -> bool {
    let max = k.max_norm();
    let n = norm(x);
    // a rescaled point may sit a few ulps above `max`; leave it there so the
    // projection is idempotent
    if n > max * (1.0 + 4.0 * f64::EPSILON) {
        let s = max / n;
        x.iter_mut().for_each(|v| *v *= s);
        true
    } else {
        false
    }
}

/// Exact parallel transport of `v` from `x` to `y`:
/// `(λ_x / λ_y) gyr[y, -x] v`.
pub fn transport(k: Curvature, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
    let ratio = lambda(k, x) / lambda(k, y);
    gyration(k, y, &mobius_neg(x), v)
        .into_iter()
        .map(|g| g * ratio)
        .collect()
}

/// A point strictly inside the curvature-`c` ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
    curvature: Curvature,
}

impl BallPoint {
    /// Validates `c‖x‖² < 1`.
    pub fn new(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        check_inside(curvature, &coords)?;
        Ok(Self { coords, curvature })
    }

    pub fn origin(dim: usize, curvature: Curvature) -> Self {
        Self {
            coords: vec![0.0; dim],
            curvature,
        }
    }

    /// Total constructor: clips `raw` onto the allowed ball.
    pub fn project(raw: &[f64], curvature: Curvature) -> Self {
        Self {
            coords: project(curvature, raw),
            curvature,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn conformal_factor(&self) -> f64 {
        lambda(self.curvature, &self.coords)
    }

    pub fn neg(&self) -> Self {
        Self {
            coords: mobius_neg(&self.coords),
            curvature: self.curvature,
        }
    }

    fn same_space(&self, other: &BallPoint) -> Result<()> {
        self.curvature.ensure_same(&other.curvature)?;
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn mobius_add(&self, other: &BallPoint) -> Result<BallPoint> {
        self.same_space(other)?;
        let sum = mobius_add(self.curvature, &self.coords, &other.coords);
        Ok(BallPoint::project(&sum, self.curvature))
    }

    pub fn gyration(&self, b: &BallPoint, v: &[f64]) -> Result<Vec<f64>> {
        self.same_space(b)?;
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(gyration(self.curvature, &self.coords, &b.coords, v))
    }

    pub fn distance(&self, other: &BallPoint) -> Result<f64> {
        self.same_space(other)?;
        distance(self.curvature, &self.coords, &other.coords)
    }

    /// `M ⊗_c self`, clipped onto the target ball.
    pub fn mobius_matvec(&self, m: &[f64], rows: usize) -> Result<BallPoint> {
        let out = mobius_matvec(self.curvature, m, rows, &self.coords)?;
        Ok(BallPoint::project(&out, self.curvature))
    }

    /// Tangent vector at the origin.
    pub fn logmap0(&self) -> TangentVector {
        TangentVector {
            coords: logmap0(self.curvature, &self.coords),
            base: TangentBase::Ball(BallPoint::origin(self.dim(), self.curvature)),
        }
    }

    /// Exponential map at the origin, clipped onto the allowed ball.
    pub fn expmap0(v: &[f64], curvature: Curvature) -> Self {
        Self::project(&expmap0(curvature, v), curvature)
    }

    pub fn to_hyperboloid(&self) -> Result<super::HyperboloidPoint> {
        super::lorentz::HyperboloidPoint::from_ball(self)
    }
}

/// `norm` re-exported for callers holding raw slices.
pub fn euclidean_norm(x: &[f64]) -> f64 {
    scalar::norm(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k(c: f64) -> Curvature {
        Curvature::new(c).unwrap()
    }

    fn random_in_ball(rng: &mut ChaCha8Rng, dim: usize, kk: Curvature, frac: f64) -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm(&v);
        let r = rng.random_range(0.0..frac) / kk.sqrt_c().max(1e-12);
        v.iter().map(|x| x / n * r).collect()
    }

    #[test]
    fn conformal_factor_examples() {
        assert_eq!(conformal_factor(k(1.0), &[0.0, 0.0]).unwrap(), 2.0);
        assert!((conformal_factor(k(1.0), &[0.5, 0.0]).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(conformal_factor(k(0.0), &[0.9, 0.0]).unwrap(), 2.0);
        assert!(matches!(conformal_factor(k(1.0), &[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn mobius_add_examples() {
        let out = mobius_add(k(1.0), &[0.3, 0.0], &[0.4, 0.0]);
        assert!((out[0] - 0.625).abs() < 1e-15 && out[1] == 0.0);
        assert_eq!(mobius_add(k(0.0), &[0.3, 1.5], &[0.4, -2.0]), vec![0.3 + 0.4, 1.5 - 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = random_in_ball(&mut rng, 4, k(1.0), 0.99);
            let right = mobius_add(k(1.0), &x, &[0.0; 4]);
            assert!(right.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-15));
            let inv = mobius_add(k(1.0), &mobius_neg(&x), &x);
            assert!(norm(&inv) < 1e-12);
        }
    }

    #[test]
    fn mobius_add_curvature_mismatch() {
        let a = BallPoint::new(vec![0.1], k(1.0)).unwrap();
        let b = BallPoint::new(vec![0.1], k(0.5)).unwrap();
        assert!(matches!(a.mobius_add(&b), Err(Error::CurvatureMismatch(..))));
    }

    #[test]
    fn gyration_matches_definition() {
        // gyr[a,b]v = ⊖(a⊕b) ⊕ (a ⊕ (b ⊕ v)), v scaled into the ball
        let kk = k(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = random_in_ball(&mut rng, 3, kk, 0.9);
            let b = random_in_ball(&mut rng, 3, kk, 0.9);
            let v = random_in_ball(&mut rng, 3, kk, 0.5);
            let ab = mobius_add(kk, &a, &b);
            let rhs = mobius_add(kk, &a, &mobius_add(kk, &b, &v));
            let def = mobius_add(kk, &mobius_neg(&ab), &rhs);
            let closed = gyration(kk, &a, &b, &v);
            for (x, y) in def.iter().zip(&closed) {
                assert!((x - y).abs() < 1e-9, "{def:?} vs {closed:?}");
            }
        }
    }

    #[test]
    fn gyration_identities() {
        let kk = k(1.0);
        let v = [0.3, -2.0, 5.0];
        assert_eq!(gyration(kk, &[0.0; 3], &[0.2, 0.1, -0.4], &v), v.to_vec());
        assert_eq!(gyration(k(0.0), &[0.2, 0.0, 0.0], &[0.0, 0.3, 0.0], &v), v.to_vec());
        let g = gyration(kk, &[0.5, 0.1, 0.0], &[-0.2, 0.6, 0.3], &v);
        assert!((norm(&g) - norm(&v)).abs() < 1e-9);
    }

    #[test]
    fn mobius_matvec_examples() {
        let kk = k(1.0);
        let x = [0.3, -0.2];
        let id = [1.0, 0.0, 0.0, 1.0];
        let out = mobius_matvec(kk, &id, 2, &x).unwrap();
        assert!(out.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(mobius_matvec(kk, &id, 2, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let out = mobius_matvec(kk, &[2.0], 1, &[0.5]).unwrap();
        assert!((out[0] - 0.8).abs() < 1e-14);
        // Mx = 0 → origin
        assert_eq!(mobius_matvec(kk, &[0.0, 0.0], 1, &x).unwrap(), vec![0.0]);
        assert!(mobius_matvec(kk, &[1.0], 2, &x).is_err());
    }

    #[test]
    fn distance_examples() {
        let d = distance(k(1.0), &[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert!((d - 2.0 * 0.5f64.atanh()).abs() < 1e-12);
        assert!((d - 1.098612).abs() < 1e-6);
        assert_eq!(distance(k(0.0), &[1.0, 2.0], &[4.0, 6.0]).unwrap(), 10.0);
        assert_eq!(distance(k(1.0), &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
        assert!(distance(k(1.0), &[1.2, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn exp_log_at_origin() {
        let e = expmap0(k(1.0), &[1.0, 0.0]);
        assert!((e[0] - 1f64.tanh()).abs() < 1e-15 && e[1] == 0.0);
        assert!((e[0] - 0.761594).abs() < 1e-6);
        assert_eq!(expmap0(k(1.0), &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(logmap0(k(1.0), &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(expmap0(k(0.0), &[3.0, 4.0]), vec![3.0, 4.0]);
    }

    #[test]
    fn project_examples() {
        assert_eq!(project(k(1.0), &[0.3, 0.4]), vec![0.3, 0.4]);
        let p = project(k(1.0), &[2.0, 0.0]);
        assert!((norm(&p) - 0.999).abs() < 1e-15);
        let p = project(k(0.04), &[0.0, 20.0]);
        assert!((norm(&p) - 4.995).abs() < 1e-12);
        let p = project(k(0.04), &[2.0, 0.0]);
        assert_eq!(p, vec![2.0, 0.0]);
        let twice = project(k(1.0), &project(k(1.0), &[3.0, -7.0]));
        assert_eq!(twice, project(k(1.0), &[3.0, -7.0]));
    }

    #[test]
    fn general_exp_log_roundtrip() {
        let kk = k(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_in_ball(&mut rng, 3, kk, 0.8);
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = expmap(kk, &x, &u);
            let back = logmap(kk, &x, &y);
            for (a, b) in back.iter().zip(&u) {
                assert!((a - b).abs() < 1e-8, "{back:?} vs {u:?}");
            }
            // d(x, exp_x(u)) = λ_x ‖u‖
            let d = distance(kk, &x, &y).unwrap();
            assert!((d - lambda(kk, &x) * norm(&u)).abs() < 1e-8);
        }
    }

    #[test]
    fn transport_preserves_riemannian_norm() {
        let kk = k(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = random_in_ball(&mut rng, 4, kk, 0.9);
            let y = random_in_ball(&mut rng, 4, kk, 0.9);
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = transport(kk, &x, &y, &v);
            let lhs = lambda(kk, &y) * norm(&t);
            let rhs = lambda(kk, &x) * norm(&v);
            assert!((lhs - rhs).abs() < 1e-8 * rhs.max(1.0));
        }
        let v = [0.3, -0.1, 0.0, 0.2];
        let w = transport(kk, &[0.1, 0.2, 0.0, 0.0], &[0.1, 0.2, 0.0, 0.0], &v);
        assert!(w.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-15));
    }
}
