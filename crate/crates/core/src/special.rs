//! Special functions for ball and cap volumes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^n` via `V_n = 2 pi / n * V_{n-2}`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let (mut v, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Volume of the ball of radius `r` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    unit_ball_volume(n) * r.powi(n as i32)
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    statrs::function::beta::checked_beta_reg(a, b, x)
        .map_err(|e| Error::InvalidArgument(format!("inc_beta({a}, {b}, {x}): {e}")))
}

/// Splits `total` into `(p, d)` with `p` within an ulp or two of `part` and
/// `p + d == total` in floating point, so a two-valued split sums back to
/// its total bit-exactly. When the rounding lattice admits no `d` for `part`
/// itself, `part` is nudged toward zero.
pub fn split(total: f64, part: f64) -> (f64, f64) {
    let mut p = part;
    for _ in 0..4 {
        let mut d = total - p;
        for _ in 0..4 {
            let s = p + d;
            if s == total {
                return (p, d);
            }
            d = if s < total { d.next_up() } else { d.next_down() };
        }
        if p == 0.0 {
            break;
        }
        p = if p > 0.0 { p.next_down() } else { p.next_up() };
    }
    (part, total - part)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn inc_beta_known_values() {
        assert_eq!(inc_beta(2.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(inc_beta(2.0, 3.0, 1.0).unwrap(), 1.0);
        assert!((inc_beta(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        // I_x(a, 1) = x^a
        assert!((inc_beta(2.5, 1.0, 0.7).unwrap() - 0.7f64.powf(2.5)).abs() < 1e-14);
        // I_x(1, 1/2) = 1 - sqrt(1 - x)
        assert!((inc_beta(1.0, 0.5, 0.64).unwrap() - 0.4).abs() < 1e-14);
        // I_x(2, 2) = 3x^2 - 2x^3
        let x: f64 = 0.35;
        assert!((inc_beta(2.0, 2.0, x).unwrap() - (3.0 * x * x - 2.0 * x.powi(3))).abs() < 1e-14);
        assert!(inc_beta(0.0, 1.0, 0.5).is_err());
        assert!(inc_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn split_is_exact() {
        let total = 4.0 * PI / 3.0;
        for k in 0..100_000 {
            let part = total * (k as f64 / 100_000.0).powi(3) * 0.5;
            let (p, d) = split(total, part);
            assert_eq!(p + d, total);
            assert!((p - part).abs() <= 4.0 * f64::EPSILON * total);
            assert!((d - (total - part)).abs() <= 4.0 * f64::EPSILON * total);
        }
    }
}
