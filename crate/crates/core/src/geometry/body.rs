use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::psi::PsiSpec;
use crate::error::{Error, Result};

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn centered(center: &[f64], half: &[f64]) -> Self {
        Self {
            lo: center.iter().zip(half).map(|(c, h)| c - h).collect(),
            hi: center.iter().zip(half).map(|(c, h)| c + h).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (h - l)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    /// Box scaled about its center by `factor` along every axis.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        let h: Vec<f64> = self.half_widths().iter().map(|h| h * factor).collect();
        Self::centered(&c, &h)
    }
}

/// A term `coef * prod x_i^{e_i}` of an implicit polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<u32>,
}

/// A polynomial in `N` variables; the body is `{p < 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitPolynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl ImplicitPolynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidBody("implicit polynomial has no terms".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.exps.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: t.exps.len(),
            });
        }
        Ok(Self { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.exps.iter().zip(p).map(|(&e, &x)| ipow(x, e)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, p: &[f64]) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for t in &self.terms {
            for i in 0..self.dim {
                if t.exps[i] == 0 {
                    continue;
                }
                let mut v = t.coef * t.exps[i] as f64;
                for (j, (&e, &x)) in t.exps.iter().zip(p).enumerate() {
                    v *= if j == i { ipow(x, e - 1) } else { ipow(x, e) };
                }
                g[i] += v;
            }
        }
        g
    }

    pub fn hessian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut h = DMatrix::zeros(n, n);
        for t in &self.terms {
            for i in 0..n {
                for k in i..n {
                    let mut exps = t.exps.clone();
                    let mut c = t.coef;
                    if exps[i] == 0 {
                        continue;
                    }
                    c *= exps[i] as f64;
                    exps[i] -= 1;
                    if exps[k] == 0 {
                        continue;
                    }
                    c *= exps[k] as f64;
                    exps[k] -= 1;
                    let v = c * exps.iter().zip(p).map(|(&e, &x)| ipow(x, e)).product::<f64>();
                    h[(i, k)] += v;
                    if i != k {
                        h[(k, i)] += v;
                    }
                }
            }
        }
        h
    }
}

fn ipow(x: f64, e: u32) -> f64 {
    if e == 0 {
        1.0
    } else {
        x.powi(e as i32)
    }
}

/// Tube body `(|x| - 1)^2 + psi(y) <= eps^2` in `R^3_x + R^m_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeBody {
    pub psi: PsiSpec,
    pub eps: f64,
}

impl TubeBody {
    pub fn m(&self) -> usize {
        self.psi.m()
    }
}

/// The shape of a body.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Ball { center: Vec<f64>, radius: f64 },
    Ellipsoid { semiaxes: Vec<f64> },
    Implicit(ImplicitPolynomial),
    Tube(TubeBody),
}

/// A smooth bounded body in `R^N` given by a defining function `f`:
/// negative inside, zero on the boundary, positive outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    kind: BodyKind,
    bbox: BoundingBox,
}

impl BodyModel {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::InvalidBody(format!("dimension {} < 2", center.len())));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBody(format!("radius {radius} must be positive")));
        }
        let bbox = BoundingBox::centered(&center, &vec![radius; center.len()]);
        Ok(Self {
            kind: BodyKind::Ball { center, radius },
            bbox,
        })
    }

    pub fn ellipsoid(semiaxes: Vec<f64>) -> Result<Self> {
        if semiaxes.len() < 2 {
            return Err(Error::InvalidBody(format!("dimension {} < 2", semiaxes.len())));
        }
        if semiaxes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidBody("semiaxes must be positive".into()));
        }
        let bbox = BoundingBox::centered(&vec![0.0; semiaxes.len()], &semiaxes);
        Ok(Self {
            kind: BodyKind::Ellipsoid { semiaxes },
            bbox,
        })
    }

    pub fn tube(psi: PsiSpec, eps: f64) -> Result<Self> {
        psi.validate()?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidBody(format!("eps = {eps} must satisfy 0 < eps < 1")));
        }
        let mut half = vec![1.0 + eps; 3];
        half.extend(psi.sublevel_half_widths(eps * eps).iter().map(|h| h * 1.01));
        let bbox = BoundingBox::centered(&vec![0.0; half.len()], &half);
        Ok(Self {
            kind: BodyKind::Tube(TubeBody { psi, eps }),
            bbox,
        })
    }

    /// Implicit polynomial body. With `bound = Some(r)` the box is the cube
    /// `[-r, r]^N`; otherwise it is located by marching seeded rays from the
    /// origin.
    pub fn implicit(poly: ImplicitPolynomial, bound: Option<f64>) -> Result<Self> {
        let n = poly.dim();
        if n < 2 {
            return Err(Error::InvalidBody(format!("dimension {n} < 2")));
        }
        let half = match bound {
            Some(r) if r.is_finite() && r > 0.0 => r,
            Some(r) => return Err(Error::InvalidBody(format!("bound {r} must be positive"))),
            None => ray_march_extent(&poly)? * 1.1,
        };
        let bbox = BoundingBox::centered(&vec![0.0; n], &vec![half; n]);
        Ok(Self {
            kind: BodyKind::Implicit(poly),
            bbox,
        })
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn diameter(&self) -> f64 {
        self.bbox.diameter()
    }

    /// Defining function `f(p)`.
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.dim());
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                let d2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                d2 - radius * radius
            }
            BodyKind::Ellipsoid { semiaxes } => {
                p.iter().zip(semiaxes).map(|(x, s)| (x / s) * (x / s)).sum::<f64>() - 1.0
            }
            BodyKind::Implicit(poly) => poly.value(p),
            BodyKind::Tube(t) => {
                let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                (rho - 1.0) * (rho - 1.0) + t.psi.value(&p[3..]) - t.eps * t.eps
            }
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.evaluate(p) < 0.0
    }

    pub fn gradient(&self, p: &[f64]) -> Result<DVector<f64>> {
        let n = self.dim();
        Ok(match &self.kind {
            BodyKind::Ball { center, .. } => {
                DVector::from_iterator(n, p.iter().zip(center).map(|(x, c)| 2.0 * (x - c)))
            }
            BodyKind::Ellipsoid { semiaxes } => {
                DVector::from_iterator(n, p.iter().zip(semiaxes).map(|(x, s)| 2.0 * x / (s * s)))
            }
            BodyKind::Implicit(poly) => poly.gradient(p),
            BodyKind::Tube(t) => {
                let rho = tube_rho(p)?;
                let mut g = DVector::zeros(n);
                let k = 2.0 * (rho - 1.0) / rho;
                for i in 0..3 {
                    g[i] = k * p[i];
                }
                g.rows_mut(3, n - 3).copy_from(&t.psi.gradient(&p[3..]));
                g
            }
        })
    }

    /// Gradient and Hessian of the defining function at `p`.
    pub fn derivatives(&self, p: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let g = self.gradient(p)?;
        let h = match &self.kind {
            BodyKind::Ball { .. } => DMatrix::identity(n, n) * 2.0,
            BodyKind::Ellipsoid { semiaxes } => {
                DMatrix::from_diagonal(&DVector::from_iterator(n, semiaxes.iter().map(|s| 2.0 / (s * s))))
            }
            BodyKind::Implicit(poly) => poly.hessian(p),
            BodyKind::Tube(t) => {
                let rho = tube_rho(p)?;
                let mut h = DMatrix::zeros(n, n);
                // 2 x x^T / rho^2 + 2 (rho - 1) / rho (I - x x^T / rho^2)
                let radial = 2.0 / (rho * rho);
                let tangential = 2.0 * (rho - 1.0) / rho;
                for i in 0..3 {
                    for j in 0..3 {
                        let xx = p[i] * p[j];
                        let id = if i == j { 1.0 } else { 0.0 };
                        h[(i, j)] = radial * xx + tangential * (id - xx / (rho * rho));
                    }
                }
                h.view_mut((3, 3), (n - 3, n - 3)).copy_from(&t.psi.hessian(&p[3..]));
                h
            }
        };
        Ok((g, h))
    }
}

fn tube_rho(p: &[f64]) -> Result<f64> {
    let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if rho < 1e-12 {
        return Err(Error::NonSmoothPoint { point: p.to_vec() });
    }
    Ok(rho)
}

/// Largest radius along 2048 seeded rays (plus the coordinate axes) at which
/// the polynomial is non-positive.
fn ray_march_extent(poly: &ImplicitPolynomial) -> Result<f64> {
    const RAYS: usize = 2048;
    const R_MIN: f64 = 1e-3;
    const R_MAX: f64 = 1e4;
    const GROWTH: f64 = 1.02;
    let n = poly.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b0d1);
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(RAYS + 2 * n);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
    }
    for _ in 0..RAYS {
        let d: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        dirs.push(d.iter().map(|x| x / len).collect());
    }
    let mut extent: f64 = 0.0;
    let mut found = poly.value(&vec![0.0; n]) <= 0.0;
    let mut p = vec![0.0; n];
    for d in &dirs {
        let mut r = R_MIN;
        while r <= R_MAX {
            for (pi, di) in p.iter_mut().zip(d) {
                *pi = r * di;
            }
            if poly.value(&p) <= 0.0 {
                extent = extent.max(r);
                found = true;
            }
            r *= GROWTH;
        }
    }
    if !found {
        return Err(Error::InvalidBody("implicit body appears empty; pass bound=<r>".into()));
    }
    if extent * GROWTH > R_MAX {
        return Err(Error::InvalidBody("implicit body appears unbounded".into()));
    }
    Ok((extent * GROWTH).max(R_MIN))
}
