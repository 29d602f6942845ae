//! Geometry kernels expressed as tape operations, row-batched.
//!
//! Every builder mirrors the corresponding function in
//! [`crate::geometry::poincare`]; rows of the input nodes are independent
//! points and unit-row operands broadcast.

use super::tape::{NodeId, Tape, UnaryFn};
use crate::geometry::Curvature;

/// `exp_0^c` applied to each row.
pub fn expmap0(tape: &mut Tape, k: Curvature, v: NodeId) -> NodeId {
    let n = tape.row_norm(v);
    let arg = tape.scale(n, k.sqrt_c());
    let s = tape.unary(UnaryFn::TanhRatio, arg);
    tape.mul(v, s)
}

/// `log_0^c` applied to each row.
pub fn logmap0(tape: &mut Tape, k: Curvature, y: NodeId) -> NodeId {
    let n = tape.row_norm(y);
    let arg = tape.scale(n, k.sqrt_c());
    let s = tape.unary(UnaryFn::ArtanhRatio, arg);
    tape.mul(y, s)
}

/// Row-wise `x ⊕_c y`.
pub fn mobius_add(tape: &mut Tape, k: Curvature, x: NodeId, y: NodeId) -> NodeId {
    let c = k.c();
    let xy = tape.row_dot(x, y);
    let x2 = tape.row_norm_sq(x);
    let y2 = tape.row_norm_sq(y);
    // a = 1 + 2c⟨x,y⟩ + c‖y‖²
    let two_cxy = tape.scale(xy, 2.0 * c);
    let cy2 = tape.scale(y2, c);
    let a0 = tape.add(two_cxy, cy2);
    let a = tape.add_scalar(a0, 1.0);
    // b = 1 - c‖x‖²
    let cx2 = tape.scale(x2, -c);
    let b = tape.add_scalar(cx2, 1.0);
    // den = 1 + 2c⟨x,y⟩ + c²‖x‖²‖y‖²
    let x2y2 = tape.mul(x2, y2);
    let c2x2y2 = tape.scale(x2y2, c * c);
    let d0 = tape.add(two_cxy, c2x2y2);
    let den = tape.add_scalar(d0, 1.0);
    let ax = tape.mul(x, a);
    let by = tape.mul(y, b);
    let num = tape.add(ax, by);
    tape.div(num, den)
}

/// `M ⊗_c x` given the Euclidean product `mx` (rows of `Mx`) and the row
/// norms `nx` of the inputs. Smooth through `x = 0` and `Mx = 0`.
pub fn mobius_matvec_from_product(tape: &mut Tape, k: Curvature, mx: NodeId, nx: NodeId) -> NodeId {
    let sc = k.sqrt_c();
    let snx = tape.scale(nx, sc);
    let ar = tape.unary(UnaryFn::ArtanhRatio, snx);
    let nmx = tape.row_norm(mx);
    let snmx = tape.scale(nmx, sc);
    let arg = tape.mul(snmx, ar);
    let tr = tape.unary(UnaryFn::TanhRatio, arg);
    let scale = tape.mul(tr, ar);
    tape.mul(mx, scale)
}

/// Row-wise `M ⊗_c x` where the rows of `x` are multiplied by `w`
/// (`x · w`, i.e. `M = wᵀ`).
pub fn mobius_matvec(tape: &mut Tape, k: Curvature, x: NodeId, w: NodeId) -> NodeId {
    let mx = tape.matmul(x, w);
    let nx = tape.row_norm(x);
    mobius_matvec_from_product(tape, k, mx, nx)
}

/// Norm clipping onto the allowed ball.
pub fn project(tape: &mut Tape, k: Curvature, x: NodeId) -> NodeId {
    tape.project_ball(x, k.max_norm())
}

/// Row-wise geodesic distance (rows × 1).
pub fn poincare_distance(tape: &mut Tape, k: Curvature, x: NodeId, y: NodeId) -> NodeId {
    let diff = tape.sub(x, y);
    if k.is_euclidean() {
        let n = tape.row_norm(diff);
        return tape.scale(n, 2.0);
    }
    let c = k.c();
    let d2 = tape.row_norm_sq(diff);
    let x2 = tape.row_norm_sq(x);
    let y2 = tape.row_norm_sq(y);
    let cx2 = tape.scale(x2, -c);
    let fx = tape.add_scalar(cx2, 1.0);
    let cy2 = tape.scale(y2, -c);
    let fy = tape.add_scalar(cy2, 1.0);
    let den = tape.mul(fx, fy);
    let num = tape.scale(d2, 2.0 * c);
    let q = tape.div(num, den);
    let arg = tape.add_scalar(q, 1.0);
    let ac = tape.unary(UnaryFn::Acosh, arg);
    tape.scale(ac, 1.0 / k.sqrt_c())
}
