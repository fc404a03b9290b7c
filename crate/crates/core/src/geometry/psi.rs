//! Transverse profile `psi: R^m -> R_+` of a tube body.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The profile function of a tube body. Both forms are even, vanish only at
/// the origin, have no other critical point and bounded sublevel sets.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiSpec {
    /// `psi(y) = sum_j w_j y_j^2` with all `w_j > 0`.
    QuadraticDiagonal { weights: Vec<f64> },
    /// `psi(y) = sum_k c_k |y|^(2k)`, `k = 1..=K`, for an `m`-dimensional `y`.
    /// `coeffs[k - 1]` holds `c_k`.
    Radial { m: usize, coeffs: Vec<f64> },
}

impl PsiSpec {
    pub fn quadratic(weights: Vec<f64>) -> Result<Self> {
        let psi = PsiSpec::QuadraticDiagonal { weights };
        psi.validate()?;
        Ok(psi)
    }

    pub fn radial(m: usize, coeffs: Vec<f64>) -> Result<Self> {
        let psi = PsiSpec::Radial { m, coeffs };
        psi.validate()?;
        Ok(psi)
    }

    pub fn m(&self) -> usize {
        match self {
            PsiSpec::QuadraticDiagonal { weights } => weights.len(),
            PsiSpec::Radial { m, .. } => *m,
        }
    }

    /// Checks the structural conditions on `psi`: even, minimum 0 at the
    /// origin, no other critical point, compact sublevel sets.
    pub fn validate(&self) -> Result<()> {
        match self {
            PsiSpec::QuadraticDiagonal { weights } => {
                if weights.is_empty() {
                    return Err(Error::InvalidPsi("m must be at least 1".into()));
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                    return Err(Error::InvalidPsi(format!(
                        "weight {w} is not positive; the unique critical point must be a minimum point at the origin"
                    )));
                }
                Ok(())
            }
            PsiSpec::Radial { m, coeffs } => {
                if *m == 0 {
                    return Err(Error::InvalidPsi("m must be at least 1".into()));
                }
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidPsi(
                        "radial coefficients must be finite and non-empty".into(),
                    ));
                }
                let lead = *coeffs.last().unwrap();
                if lead <= 0.0 {
                    return Err(Error::InvalidPsi(format!(
                        "leading coefficient {lead} must be positive (sublevel sets must be compact)"
                    )));
                }
                if let Some(s) = derivative_factor_root(coeffs) {
                    return Err(Error::InvalidPsi(format!(
                        "psi has a critical point at |y| = {:.6}; the unique critical point must be a minimum point at the origin",
                        s.sqrt()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            PsiSpec::QuadraticDiagonal { weights } => weights.iter().zip(y).map(|(w, v)| w * v * v).sum(),
            PsiSpec::Radial { coeffs, .. } => {
                let s: f64 = y.iter().map(|v| v * v).sum();
                radial_poly(coeffs, s)
            }
        }
    }

    pub fn gradient(&self, y: &[f64]) -> DVector<f64> {
        match self {
            PsiSpec::QuadraticDiagonal { weights } => {
                DVector::from_iterator(y.len(), weights.iter().zip(y).map(|(w, v)| 2.0 * w * v))
            }
            PsiSpec::Radial { coeffs, .. } => {
                let s: f64 = y.iter().map(|v| v * v).sum();
                // d/dy psi = 2 q(s) y with q(s) = sum k c_k s^(k-1)
                let q = derivative_factor(coeffs, s);
                DVector::from_iterator(y.len(), y.iter().map(|v| 2.0 * q * v))
            }
        }
    }

    pub fn hessian(&self, y: &[f64]) -> DMatrix<f64> {
        let m = y.len();
        match self {
            PsiSpec::QuadraticDiagonal { weights } => {
                DMatrix::from_diagonal(&DVector::from_iterator(m, weights.iter().map(|w| 2.0 * w)))
            }
            PsiSpec::Radial { coeffs, .. } => {
                let s: f64 = y.iter().map(|v| v * v).sum();
                let q = derivative_factor(coeffs, s);
                // q'(s) = sum k (k-1) c_k s^(k-2)
                let dq = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| {
                        let k = (i + 1) as f64;
                        k * (k - 1.0) * c * s.powi(i as i32 - 1)
                    })
                    .sum::<f64>();
                let yv = DVector::from_column_slice(y);
                DMatrix::identity(m, m) * (2.0 * q) + &yv * yv.transpose() * (4.0 * dq)
            }
        }
    }

    /// Radius `r*` of the sublevel set `{psi <= level}` along its widest
    /// direction.
    pub fn sublevel_radius(&self, level: f64) -> f64 {
        match self {
            PsiSpec::QuadraticDiagonal { weights } => {
                let wmin = weights.iter().copied().fold(f64::INFINITY, f64::min);
                (level / wmin).sqrt()
            }
            PsiSpec::Radial { coeffs, .. } => radial_sublevel_radius(coeffs, level),
        }
    }

    /// Per-coordinate half-widths of the axis-aligned box of `{psi <= level}`.
    pub fn sublevel_half_widths(&self, level: f64) -> Vec<f64> {
        match self {
            PsiSpec::QuadraticDiagonal { weights } => weights.iter().map(|w| (level / w).sqrt()).collect(),
            PsiSpec::Radial { m, coeffs } => vec![radial_sublevel_radius(coeffs, level); *m],
        }
    }
}

fn radial_poly(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c) * s
}

/// Value of the profile as a function of `r = |y|` (for the radial form) or
/// of the whitened radius (quadratic form).
pub(crate) fn radial_profile(psi: &PsiSpec, r: f64) -> f64 {
    match psi {
        PsiSpec::QuadraticDiagonal { .. } => r * r,
        PsiSpec::Radial { coeffs, .. } => radial_poly(coeffs, r * r),
    }
}

fn derivative_factor(coeffs: &[f64], s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, c)| acc * s + (i + 1) as f64 * c)
}

fn radial_sublevel_radius(coeffs: &[f64], level: f64) -> f64 {
    if level <= 0.0 {
        return 0.0;
    }
    // psi is strictly increasing in r, so bisection on [0, hi] is safe
    let mut hi = 1.0;
    while radial_poly(coeffs, hi * hi) < level {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if radial_poly(coeffs, mid * mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest real root `s >= 0` of `q(s) = sum k c_k s^(k-1)`, if any.
/// `psi'(r) = 2 r q(r^2)`, so such a root is a critical point of `psi` away
/// from the origin, or (at `s = 0` with `c_1 < 0`) a non-minimum at the
/// origin.
fn derivative_factor_root(coeffs: &[f64]) -> Option<f64> {
    let q: Vec<f64> = coeffs.iter().enumerate().map(|(i, c)| (i + 1) as f64 * c).collect();
    if q[0] < 0.0 {
        return Some(0.0);
    }
    // strip zero low-order terms: q(s) = s^j q~(s), s^j > 0 on s > 0
    let start = q.iter().position(|&c| c != 0.0)?;
    let q = &q[start..];
    let deg = q.len() - 1;
    if deg == 0 {
        return None;
    }
    // roots of q via the companion matrix of the monic polynomial
    let lead = q[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -q[i] / lead;
    }
    let roots = comp.complex_eigenvalues();
    roots
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()) && z.re > 0.0)
        .map(|z| z.re)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))))
}
