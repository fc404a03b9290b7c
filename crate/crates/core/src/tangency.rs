//! Tangent hyperplanes of a body in a given direction and the local lacuna
//! criterion at Morse tangencies.
//!
//! Near a tangency `u`, the boundary is a graph `y1 = chi(y2, ..., yN)` over
//! the tangent hyperplane. The side of the tangent plane on which `y1 > 0`
//! is a local lacuna iff the positive inertia index of `Hess chi(u)` is even.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, BodyModel};
use crate::rng::{self, Purpose};
use crate::volume::mc::plane_frame;

/// Tolerances and budgets of the tangency solver.
#[derive(Debug, Clone, PartialEq)]
pub struct TangencyOptions {
    /// Multistart count.
    pub starts: usize,
    /// Relative eigenvalue threshold below which a tangency is not Morse.
    pub morse_tol: f64,
    /// Newton stops once the scaled residual is at most this.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Candidates closer than this fraction of the diameter are merged.
    pub dedup: f64,
}

impl Default for TangencyOptions {
    fn default() -> Self {
        Self {
            starts: 64,
            morse_tol: 1e-8,
            residual_tol: 1e-12,
            max_iter: 100,
            dedup: 1e-8,
        }
    }
}

/// A Morse tangency and its local lacuna verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct TangencyReport {
    pub u: Vec<f64>,
    pub direction: Vec<f64>,
    /// Critical value `<v, u>` of the height function.
    pub offset: f64,
    /// Positive inertia index with `y1` pointing toward larger offsets.
    pub index_plus: usize,
    /// Same with `y1` pointing toward smaller offsets.
    pub index_minus: usize,
    pub verdict_plus: bool,
    pub verdict_minus: bool,
    /// Smallest `|eigenvalue|` of the `chi` Hessian.
    pub morse_margin: f64,
}

/// A tangency rejected by the Morse check.
#[derive(Debug, Clone, PartialEq)]
pub struct NonMorsePoint {
    pub u: Vec<f64>,
    pub offset: f64,
    pub margin: f64,
    pub threshold: f64,
}

/// Result of a multistart tangency search.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TangencySearch {
    pub reports: Vec<TangencyReport>,
    pub non_morse: Vec<NonMorsePoint>,
    /// Starts whose Newton iteration failed.
    pub non_converged: usize,
    /// Starts that ran into a non-smooth point of the defining function.
    pub non_smooth: usize,
}

/// Eigenvalue signature of a nondegenerate symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    /// Smallest `|eigenvalue|`.
    pub margin: f64,
}

/// Counts eigenvalues of the symmetric `m` above and below zero. Fails with
/// `NonMorseTangency` if some `|eigenvalue| <= tol * max |eigenvalue|`.
pub fn inertia(m: &DMatrix<f64>, tol: f64) -> Result<Inertia> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let margin = eig.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
    let threshold = tol * scale;
    if margin.partial_cmp(&threshold) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NonMorseTangency { margin, threshold });
    }
    Ok(Inertia {
        positive: eig.iter().filter(|l| **l > 0.0).count(),
        negative: eig.iter().filter(|l| **l < 0.0).count(),
        margin,
    })
}

/// Number of positive eigenvalues of the symmetric `m`; see [`inertia`].
pub fn positive_inertia_index(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    Ok(inertia(m, tol)?.positive)
}

/// A side is a local lacuna iff its positive inertia index is even.
pub fn local_lacuna_verdicts(index_plus: usize, index_minus: usize) -> (bool, bool) {
    (index_plus.is_multiple_of(2), index_minus.is_multiple_of(2))
}

const ALIGN_TOL: f64 = 1e-6;

/// Hessian of the local graph `y1 = chi(...)` of the boundary at the
/// tangency `u` with normal direction `v`, in the tangent basis of `v`.
///
/// `side = +1` points `y1` toward increasing `<v, x>`, `side = -1` toward
/// decreasing. With `e = side * v`, implicit differentiation of
/// `f(u + chi e + P z) = 0` gives `Hess chi = -P^T Hess f P / <grad f, e>`.
pub fn chi_hessian(body: &BodyModel, u: &[f64], v: &[f64], side: i8) -> Result<DMatrix<f64>> {
    if side != 1 && side != -1 {
        return Err(Error::InvalidArgument(format!("side must be +1 or -1, got {side}")));
    }
    let n = body.dim();
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if u.len() != n { u.len() } else { v.len() },
        });
    }
    let v_len = norm(v);
    if v_len == 0.0 {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let (g, h) = body.derivatives(u)?;
    let g_len = g.norm();
    let unit: Vec<f64> = v.iter().map(|x| x / v_len).collect();
    let along = dot(g.as_slice(), &unit);
    let misalignment = if g_len == 0.0 {
        f64::INFINITY
    } else {
        (g_len * g_len - along * along).max(0.0).sqrt() / g_len
    };
    if misalignment.is_nan() || misalignment > ALIGN_TOL {
        return Err(Error::NotATangency { misalignment });
    }
    let (_, tangents) = plane_frame(&unit);
    let p = DMatrix::from_fn(n, n - 1, |i, j| tangents[j][i]);
    let reduced = p.transpose() * h * &p / along;
    let sym = (&reduced + reduced.transpose()) * 0.5;
    Ok(sym * -f64::from(side))
}

fn unit_direction(v: &[f64], n: usize) -> Result<Vec<f64>> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let len = norm(v);
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::InvalidArgument("direction must be nonzero and finite".into()));
    }
    Ok(v.iter().map(|x| x / len).collect())
}

enum Outcome {
    Converged(Vec<f64>),
    Failed,
    NonSmooth,
}

/// Critical points of the height function `<v, x>` on the boundary, by
/// damped Newton on `{f(u) = 0, grad f(u) = mu v}` from `opts.starts` points
/// drawn uniformly in the bounding box and projected onto the boundary.
pub fn find_tangencies(body: &BodyModel, v: &[f64], seed: u64, opts: &TangencyOptions) -> Result<TangencySearch> {
    let n = body.dim();
    let v = unit_direction(v, n)?;
    let diam = body.diameter();
    let bbox = body.bounding_box();

    let outcomes: Vec<Outcome> = (0..opts.starts)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, Purpose::TangencyStarts, k as u64);
            let start: Vec<f64> = bbox
                .lo
                .iter()
                .zip(&bbox.hi)
                .map(|(l, h)| l + r.random::<f64>() * (h - l))
                .collect();
            solve_from(body, &v, start, diam, opts)
        })
        .collect();

    let mut search = TangencySearch::default();
    let mut found = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Converged(u) => found.push(u),
            Outcome::Failed => search.non_converged += 1,
            Outcome::NonSmooth => search.non_smooth += 1,
        }
    }
    found.sort_by(|a, b| dot(a, &v).total_cmp(&dot(b, &v)).then_with(|| lexicographic(a, b)));
    let radius = opts.dedup * diam;
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for u in found {
        if !unique.iter().any(|w| dist(w, &u) <= radius) {
            unique.push(u);
        }
    }
    // merging may break the offset order only among near-equal offsets
    unique.sort_by(|a, b| dot(a, &v).total_cmp(&dot(b, &v)).then_with(|| lexicographic(a, b)));

    for u in unique {
        let offset = dot(&u, &v);
        let hess = match chi_hessian(body, &u, &v, 1) {
            Ok(h) => h,
            Err(Error::NonSmoothPoint { .. }) => {
                search.non_smooth += 1;
                continue;
            }
            Err(Error::NotATangency { .. }) => {
                search.non_converged += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        match inertia(&hess, opts.morse_tol) {
            Ok(i) => {
                let (verdict_plus, verdict_minus) = local_lacuna_verdicts(i.positive, i.negative);
                search.reports.push(TangencyReport {
                    u,
                    direction: v.clone(),
                    offset,
                    index_plus: i.positive,
                    index_minus: i.negative,
                    verdict_plus,
                    verdict_minus,
                    morse_margin: i.margin,
                });
            }
            Err(Error::NonMorseTangency { margin, threshold }) => {
                search.non_morse.push(NonMorsePoint {
                    u,
                    offset,
                    margin,
                    threshold,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(search)
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Newton projection of `p` onto the boundary along the gradient.
pub(crate) fn project_to_boundary(body: &BodyModel, mut p: Vec<f64>, diam: f64) -> Result<Option<Vec<f64>>> {
    for _ in 0..100 {
        let f = body.evaluate(&p);
        let g = body.gradient(&p)?;
        let g2 = g.norm_squared();
        if g2 == 0.0 || !g2.is_finite() {
            return Ok(None);
        }
        if f.abs() <= 1e-15 * g2.sqrt() * diam {
            return Ok(Some(p));
        }
        // cap the step to keep the iteration inside the box scale
        let mut scale = f / g2;
        let step = scale.abs() * g2.sqrt();
        if step > 0.25 * diam {
            scale *= 0.25 * diam / step;
        }
        for (pi, gi) in p.iter_mut().zip(g.iter()) {
            *pi -= scale * gi;
        }
    }
    Ok(None)
}

fn solve_from(body: &BodyModel, v: &[f64], start: Vec<f64>, diam: f64, opts: &TangencyOptions) -> Outcome {
    match newton(body, v, start, diam, opts) {
        Ok(Some(u)) => Outcome::Converged(u),
        Ok(None) => Outcome::Failed,
        Err(Error::NonSmoothPoint { .. }) => Outcome::NonSmooth,
        Err(_) => Outcome::Failed,
    }
}

/// Residual, its scaled size, gradient and Hessian at a Newton iterate.
type NewtonState = (DVector<f64>, f64, DVector<f64>, DMatrix<f64>);

/// Residual vector and its scaled size `max(|f| / (|grad f| diam), |grad f - mu v| / |grad f|)`.
fn system(body: &BodyModel, v: &[f64], x: &[f64], diam: f64) -> Result<NewtonState> {
    let n = v.len();
    let u = &x[..n];
    let mu = x[n];
    let (g, h) = body.derivatives(u)?;
    let f = body.evaluate(u);
    let mut res = DVector::zeros(n + 1);
    res[0] = f;
    for i in 0..n {
        res[i + 1] = g[i] - mu * v[i];
    }
    let g_len = g.norm();
    let scaled = if g_len == 0.0 {
        f64::INFINITY
    } else {
        (f.abs() / (g_len * diam)).max(res.rows(1, n).norm() / g_len)
    };
    Ok((res, scaled, g, h))
}

fn newton(body: &BodyModel, v: &[f64], start: Vec<f64>, diam: f64, opts: &TangencyOptions) -> Result<Option<Vec<f64>>> {
    let n = v.len();
    let Some(u0) = project_to_boundary(body, start, diam)? else {
        return Ok(None);
    };
    let g0 = body.gradient(&u0)?;
    let mut x = u0;
    x.push(dot(g0.as_slice(), v));

    let (mut res, mut scaled, mut g, mut h) = system(body, v, &x, diam)?;
    // once converged, a few full steps polish the root down to rounding
    let mut polish = 0;
    for _ in 0..opts.max_iter {
        if scaled <= opts.residual_tol {
            if polish == 3 {
                break;
            }
            polish += 1;
        }
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for j in 0..n {
            jac[(0, j)] = g[j];
            for i in 0..n {
                jac[(i + 1, j)] = h[(i, j)];
            }
            jac[(j + 1, n)] = -v[j];
        }
        let Some(delta) = jac.lu().solve(&(-&res)) else {
            return Ok(None);
        };
        let merit = res.norm();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + t * d).collect();
            if let Ok(next) = system(body, v, &trial, diam) {
                if next.0.norm() < merit || (polish == 0 && next.1 <= opts.residual_tol) {
                    x = trial;
                    (res, scaled, g, h) = next;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if scaled <= opts.residual_tol {
        x.truncate(n);
        return Ok(Some(x));
    }
    Ok(None)
}

/// Outcome of an integrability scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanVerdict {
    /// Odd `N`: some tangency has an odd index, so the body is not
    /// algebraically integrable.
    Obstructed,
    /// Odd `N`: every index found was even. This is not a proof of
    /// integrability.
    NoObstructionFound,
    /// Even `N`: every tangency has exactly one local-lacuna side.
    AlternationConsistent,
    /// Even `N`: some tangency violates the alternation (numerical failure).
    AlternationViolated,
}

impl fmt::Display for ScanVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanVerdict::Obstructed => "obstructed",
            ScanVerdict::NoObstructionFound => "no obstruction found by this scan",
            ScanVerdict::AlternationConsistent => "consistent: every tangency has exactly one local-lacuna side",
            ScanVerdict::AlternationViolated => {
                "inconsistent: some tangency does not have exactly one local-lacuna side"
            }
        })
    }
}

/// Summary of tangency classifications over random directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSummary {
    pub dim: usize,
    pub directions: usize,
    /// Number of Morse tangencies found with each `(index_plus, index_minus)`.
    pub index_counts: BTreeMap<(usize, usize), usize>,
    pub tangencies: usize,
    pub skipped_non_morse: usize,
    pub non_converged: usize,
    pub verdict: ScanVerdict,
}

/// Random unit direction `k` of the scan stream.
pub fn scan_direction(dim: usize, seed: u64, k: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, Purpose::Directions, k as u64);
    loop {
        let d: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
        let len = norm(&d);
        if len > 1e-12 {
            return d.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Classifies the tangencies of `directions` random directions. For odd `N`
/// an odd index anywhere obstructs algebraic integrability; for even `N` the
/// scan checks that the two sides of every tangency disagree.
pub fn integrability_scan(
    body: &BodyModel,
    directions: usize,
    seed: u64,
    opts: &TangencyOptions,
) -> Result<ScanSummary> {
    if directions == 0 {
        return Err(Error::InvalidArgument("need at least one direction".into()));
    }
    let dim = body.dim();
    let mut index_counts = BTreeMap::new();
    let (mut tangencies, mut skipped, mut failed) = (0, 0, 0);
    let mut odd = false;
    let mut violated = false;
    for k in 0..directions {
        let v = scan_direction(dim, seed, k);
        let s = find_tangencies(body, &v, seed.wrapping_add(k as u64), opts)?;
        skipped += s.non_morse.len();
        failed += s.non_converged;
        for r in &s.reports {
            tangencies += 1;
            *index_counts.entry((r.index_plus, r.index_minus)).or_insert(0) += 1;
            odd |= r.index_plus % 2 == 1 || r.index_minus % 2 == 1;
            violated |= r.verdict_plus == r.verdict_minus;
        }
    }
    let verdict = match (dim % 2 == 1, odd, violated) {
        (true, true, _) => ScanVerdict::Obstructed,
        (true, false, _) => ScanVerdict::NoObstructionFound,
        (false, _, false) => ScanVerdict::AlternationConsistent,
        (false, _, true) => ScanVerdict::AlternationViolated,
    };
    Ok(ScanSummary {
        dim,
        directions,
        index_counts,
        tangencies,
        skipped_non_morse: skipped,
        non_converged: failed,
        verdict,
    })
}
