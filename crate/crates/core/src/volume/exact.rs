//! Closed-form cut volumes of balls and ellipsoids.

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, BodyKind, BodyModel, Hyperplane};
use crate::special::{ball_volume, inc_beta, split};

/// Volume of the part of the `N`-ball of radius `r` beyond a plane at signed
/// distance `t` from the center:
/// `cap(t) = V_N(r) / 2 * I_z((N + 1) / 2, 1 / 2)` with `z = 1 - (t / r)^2`
/// for `t >= 0`, and `V_N(r) - cap(-t)` for `t < 0`. Planes missing the ball
/// give `0` or the full volume.
pub fn exact_cap_volume(n: usize, r: f64, t: f64) -> Result<f64> {
    let (small, big) = cap_pair(n, r, t.abs())?;
    Ok(if t >= 0.0 { small } else { big })
}

/// `(cap(|t|), V_N(r) - cap(|t|))`, the second summing back to the total
/// exactly.
fn cap_pair(n: usize, r: f64, t_abs: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
    }
    if t_abs.is_nan() {
        return Err(Error::InvalidArgument("distance is NaN".into()));
    }
    let total = ball_volume(n, r);
    let small = if t_abs >= r {
        0.0
    } else {
        let q = t_abs / r;
        let z = (1.0 - q) * (1.0 + q);
        0.5 * total * inc_beta((n as f64 + 1.0) / 2.0, 0.5, z)?
    };
    Ok(split(total, small))
}

/// Splits `(small, big)` by the sign of `t`: the plus side is the part beyond
/// the plane when `t >= 0`.
fn oriented(t: f64, small: f64, big: f64) -> (f64, f64) {
    if t >= 0.0 {
        (small, big)
    } else {
        (big, small)
    }
}

/// `(plus, minus)` volumes cut from the ball `|x - c| <= r`.
pub fn ball_cut_volume(center: &[f64], radius: f64, plane: &Hyperplane) -> Result<(f64, f64)> {
    if center.len() != plane.dim() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: plane.dim(),
        });
    }
    let len = plane.normal_norm();
    if len == 0.0 {
        return Err(Error::DegenerateHyperplane);
    }
    // the plus side {a.x + b > 0} lies beyond the plane at t along a
    let t = -(dot(plane.normal(), center) + plane.offset()) / len;
    let (small, big) = cap_pair(center.len(), radius, t.abs())?;
    Ok(oriented(t, small, big))
}

/// `(plus, minus)` volumes cut from the ellipsoid `sum (x_i / s_i)^2 <= 1`,
/// by pulling the plane back to the unit ball through `x = diag(s) u`.
pub fn ellipsoid_cut_volume(semiaxes: &[f64], plane: &Hyperplane) -> Result<(f64, f64)> {
    let n = semiaxes.len();
    if n != plane.dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: plane.dim(),
        });
    }
    if semiaxes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidArgument("semiaxes must be positive".into()));
    }
    let pulled: Vec<f64> = plane.normal().iter().zip(semiaxes).map(|(a, s)| a * s).collect();
    let len = norm(&pulled);
    if len == 0.0 {
        return Err(Error::DegenerateHyperplane);
    }
    let t = -plane.offset() / len;
    let det: f64 = semiaxes.iter().product();
    let (small, _) = cap_pair(n, 1.0, t.abs())?;
    let (small, big) = split(ball_volume(n, 1.0) * det, small * det);
    Ok(oriented(t, small, big))
}

/// Exact `(plus, minus)` for bodies with a closed form (balls, ellipsoids).
pub fn exact_cut_volumes(body: &BodyModel, plane: &Hyperplane) -> Result<Option<(f64, f64)>> {
    match body.kind() {
        BodyKind::Ball { center, radius } => ball_cut_volume(center, *radius, plane).map(Some),
        BodyKind::Ellipsoid { semiaxes } => ellipsoid_cut_volume(semiaxes, plane).map(Some),
        _ => Ok(None),
    }
}
