//! Arithmetic on the circle T = R/Z, represented in the fundamental domain [0, 1).

/// Reduction to [0, 1).
#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    // x - floor(x) rounds to 1.0 for tiny negative x
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `a - b` in [-1/2, 1/2).
#[inline]
pub fn signed_diff(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Length of the shortest arc between `a` and `b`.
#[inline]
pub fn dist(a: f64, b: f64) -> f64 {
    signed_diff(a, b).abs()
}

/// Distance on the annulus T x R: circle distance in theta, Euclidean overall.
#[inline]
pub fn annulus_dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    dist(p.0, q.0).hypot(p.1 - q.1)
}

/// Which one-sided limit to take at a point where a function is only piecewise smooth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}
