use crate::error::{Error, Result};

/// An affine hyperplane `a_1 x_1 + ... + a_N x_N + b = 0` in homogeneous
/// coordinates `(a_1, ..., a_N, b)`.
///
/// The representative is arbitrary until [`Hyperplane::normalize`] picks the
/// canonical one (unit normal, first nonzero normal coefficient positive).
/// Tube-body quantities read the right-hand side as `gamma = -b`, i.e. the
/// plane is written `sum a_i x_i = gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    coeffs: Vec<f64>,
}

impl Hyperplane {
    /// Builds a hyperplane from `N + 1` homogeneous coefficients, the last
    /// one being the constant term `b`.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "hyperplane needs at least 2 coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("hyperplane coefficients must be finite".into()));
        }
        if coeffs[..coeffs.len() - 1].iter().all(|&a| a == 0.0) {
            return Err(Error::DegenerateHyperplane);
        }
        Ok(Self { coeffs })
    }

    pub fn new(normal: &[f64], offset: f64) -> Result<Self> {
        let mut coeffs = normal.to_vec();
        coeffs.push(offset);
        Self::from_coeffs(coeffs)
    }

    /// Plane `sum alpha_i x_i + sum beta_j y_j = gamma` in the split
    /// `R^3_x + R^m_y` used by tube bodies.
    pub fn from_split(alpha: &[f64], beta: &[f64], gamma: f64) -> Result<Self> {
        let mut normal = alpha.to_vec();
        normal.extend_from_slice(beta);
        Self::new(&normal, -gamma)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn normal(&self) -> &[f64] {
        &self.coeffs[..self.dim()]
    }

    pub fn offset(&self) -> f64 {
        self.coeffs[self.dim()]
    }

    /// Right-hand side of `sum a_i x_i = gamma`.
    pub fn gamma(&self) -> f64 {
        -self.offset()
    }

    pub fn normal_norm(&self) -> f64 {
        norm(self.normal())
    }

    /// `a . p + b`; positive on the "plus" side.
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.dim());
        self.normal()
            .iter()
            .zip(p)
            .fold(self.offset(), |acc, (a, x)| acc + a * x)
    }

    /// Euclidean signed distance from `p` to the plane.
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        self.evaluate(p) / self.normal_norm()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.signed_distance(p).abs() <= tol
    }

    /// Canonical representative: unit normal, first nonzero normal
    /// coefficient positive. Idempotent bit-for-bit: a normal whose norm is
    /// already within a few ulps of one is not rescaled again.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.dim();
        let first = self.coeffs[..n]
            .iter()
            .find(|&&a| a != 0.0)
            .copied()
            .ok_or(Error::DegenerateHyperplane)?;
        let len = self.normal_norm();
        let sign = first.signum();
        // a normal that is unit up to a power of two is rescaled exactly
        let pow2 = 2f64.powi(len.log2().round() as i32);
        let coeffs = if (len / pow2 - 1.0).abs() <= 4.0 * f64::EPSILON {
            let scale = sign / pow2;
            self.coeffs.iter().map(|c| c * scale).collect()
        } else {
            let scale = sign / len;
            self.coeffs.iter().map(|c| c * scale).collect()
        };
        Ok(Self { coeffs })
    }

    /// Same plane with the opposite orientation (plus and minus sides swap).
    pub fn flipped(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    /// Parallel plane moved by `distance` along the unit normal (toward the
    /// plus side for positive distance).
    pub fn shifted(&self, distance: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        let n = self.dim();
        coeffs[n] -= distance * self.normal_norm();
        Self { coeffs }
    }

    /// Distance from the origin of `R^k_x` to the plane `X ∩ R^k_x`, i.e.
    /// `|gamma| / |alpha|` where `alpha` are the first `x_dim` coefficients.
    pub fn subspace_distance(&self, x_dim: usize) -> Result<f64> {
        Ok(self.signed_subspace_offset(x_dim)?.abs())
    }

    /// `b / |alpha|`: positive when the origin lies on the plus side.
    pub fn signed_subspace_offset(&self, x_dim: usize) -> Result<f64> {
        let alpha = self.alpha(x_dim)?;
        let len = norm(alpha);
        if len == 0.0 {
            return Err(Error::VerticalDegenerate);
        }
        Ok(self.offset() / len)
    }

    /// Angle in `[0, pi/2]` between the normal and the subspace spanned by the
    /// first `x_dim` coordinates.
    pub fn angle_to_x_subspace(&self, x_dim: usize) -> Result<f64> {
        let alpha = norm(self.alpha(x_dim)?);
        let beta = norm(&self.normal()[x_dim..]);
        Ok(beta.atan2(alpha))
    }

    fn alpha(&self, x_dim: usize) -> Result<&[f64]> {
        if x_dim == 0 || x_dim > self.dim() {
            return Err(Error::InvalidArgument(format!(
                "x-subspace dimension {x_dim} out of range for R^{}",
                self.dim()
            )));
        }
        Ok(&self.coeffs[..x_dim])
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
