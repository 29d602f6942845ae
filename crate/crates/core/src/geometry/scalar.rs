//! Scalar helpers with removable singularities at the origin.
//!
//! Each `*_ratio` function is `f(s) / s` for an odd `f`, evaluated with a
//! short Taylor series near zero so that both the value and its derivative
//! stay finite at `s = 0`.

const SERIES_CUTOFF: f64 = 1e-3;

/// Largest argument accepted by `artanh` before clamping.
pub const ARTANH_MAX: f64 = 1.0 - 1e-12;

pub fn clamp_artanh_arg(s: f64) -> f64 {
    s.clamp(0.0, ARTANH_MAX)
}

pub fn clamp_arccosh_arg(s: f64) -> f64 {
    if s < 1.0 {
        1.0
    } else {
        s
    }
}

/// `tanh(s) / s`.
pub fn tanh_ratio(s: f64) -> f64 {
    if s.abs() < SERIES_CUTOFF {
        let s2 = s * s;
        1.0 - s2 / 3.0 + 2.0 * s2 * s2 / 15.0
    } else {
        s.tanh() / s
    }
}

pub fn tanh_ratio_deriv(s: f64) -> f64 {
    if s.abs() < SERIES_CUTOFF {
        -2.0 * s / 3.0 + 8.0 * s * s * s / 15.0
    } else {
        let t = s.tanh();
        ((1.0 - t * t) * s - t) / (s * s)
    }
}

/// `artanh(s) / s`, argument clamped to `[0, 1 - 1e-12]`.
pub fn artanh_ratio(s: f64) -> f64 {
    let s = clamp_artanh_arg(s);
    if s < SERIES_CUTOFF {
        let s2 = s * s;
        1.0 + s2 / 3.0 + s2 * s2 / 5.0
    } else {
        s.atanh() / s
    }
}

pub fn artanh_ratio_deriv(s: f64) -> f64 {
    if s > ARTANH_MAX {
        // clamped region: flat
        return 0.0;
    }
    let s = s.max(0.0);
    if s < SERIES_CUTOFF {
        2.0 * s / 3.0 + 4.0 * s * s * s / 5.0
    } else {
        (s / (1.0 - s * s) - s.atanh()) / (s * s)
    }
}

/// `sinh(s) / s`.
pub fn sinh_ratio(s: f64) -> f64 {
    if s.abs() < SERIES_CUTOFF {
        let s2 = s * s;
        1.0 + s2 / 6.0 + s2 * s2 / 120.0
    } else {
        s.sinh() / s
    }
}

pub fn sinh_ratio_deriv(s: f64) -> f64 {
    if s.abs() < SERIES_CUTOFF {
        s / 3.0 + s * s * s / 30.0
    } else {
        (s * s.cosh() - s.sinh()) / (s * s)
    }
}

/// `asinh(s) / s`.
pub fn asinh_ratio(s: f64) -> f64 {
    if s.abs() < SERIES_CUTOFF {
        let s2 = s * s;
        1.0 - s2 / 6.0 + 3.0 * s2 * s2 / 40.0
    } else {
        s.asinh() / s
    }
}

pub fn asinh_ratio_deriv(s: f64) -> f64 {
    if s.abs() < SERIES_CUTOFF {
        -s / 3.0 + 3.0 * s * s * s / 10.0
    } else {
        (s / (1.0 + s * s).sqrt() - s.asinh()) / (s * s)
    }
}

/// `ln(sinh(s) / s)` for `s >= 0`, stable for large `s`.
pub fn log_sinh_ratio(s: f64) -> f64 {
    let s = s.abs();
    if s < SERIES_CUTOFF {
        let s2 = s * s;
        s2 / 6.0 - s2 * s2 / 180.0
    } else if s > 20.0 {
        s - std::f64::consts::LN_2 + (-(-2.0 * s).exp()).ln_1p() - s.ln()
    } else {
        (s.sinh() / s).ln()
    }
}

/// Derivative of [`log_sinh_ratio`]: `coth(s) - 1/s`.
pub fn log_sinh_ratio_deriv(s: f64) -> f64 {
    let a = s.abs();
    let d = if a < SERIES_CUTOFF {
        a / 3.0 - a * a * a / 45.0
    } else {
        1.0 / a.tanh() - 1.0 / a
    };
    d * s.signum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}
