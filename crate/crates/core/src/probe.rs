//! Numerical search for a polynomial relation `F(a_1, ..., a_N, b, V) = 0`
//! satisfied by the cut volume on a region of transversal hyperplanes.
//!
//! Volumes are sampled at random planes near a base plane; the monomials of
//! `(a, b, V)` up to degree `d` are evaluated at the samples, and a tiny
//! smallest singular value of the (column-normalized) evaluation matrix
//! signals a relation of degree `d`.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, BodyKind, BodyModel, Hyperplane};
use crate::rng::{self, Purpose};
use crate::special::ball_volume;
use crate::volume::exact::exact_cut_volumes;
use crate::volume::mc::{mc_cut_volumes, mc_volume, plane_frame, McOptions};
use crate::volume::tube::{tube_constants, tube_cut_volumes_with, TubeConstants};

/// A ball of hyperplanes around a base plane in coefficient space.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub base: Hyperplane,
    pub radius: f64,
    pub count: usize,
}

/// Knobs of the sampler and the relation search.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub d_max: usize,
    pub rank_tol: f64,
    /// Smallest admissible angle (radians) between `grad f` and the plane
    /// normal along `X ∩ ∂W`.
    pub min_angle: f64,
    /// Boundary points checked per sampled plane.
    pub boundary_points: usize,
    /// Monte Carlo samples per volume when no closed form applies.
    pub mc_samples: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            d_max: 8,
            rank_tol: 1e-9,
            min_angle: 1e-3,
            boundary_points: 1000,
            mc_samples: 1_000_000,
        }
    }
}

/// One sampled plane (canonically normalized) and its `V_plus`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub coeffs: Vec<f64>,
    pub value: f64,
    /// Zero for closed-form values.
    pub std_error: f64,
}

/// Samples of one region together with `vol(W)`, which sets the scale of
/// `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSamples {
    pub samples: Vec<Sample>,
    pub volume: f64,
}

enum Oracle {
    Closed,
    Tube(TubeConstants),
    MonteCarlo,
}

/// Volume of the body: exact where available, Monte Carlo otherwise.
pub fn body_volume(body: &BodyModel, mc_samples: u64, seed: u64) -> Result<f64> {
    Ok(match body.kind() {
        BodyKind::Ball { radius, center } => ball_volume(center.len(), *radius),
        BodyKind::Ellipsoid { semiaxes } => ball_volume(semiaxes.len(), 1.0) * semiaxes.iter().product::<f64>(),
        BodyKind::Tube(_) => tube_constants(body)?.c,
        BodyKind::Implicit(_) => mc_volume(body, mc_samples, seed, &McOptions::default())?.value,
    })
}

/// Draws `spec.count` planes uniformly from the coefficient ball of radius
/// `spec.radius` around the normalized base, normalizes them, checks
/// transversality and evaluates `V_plus` with the best available oracle.
pub fn sample_domain(body: &BodyModel, spec: &DomainSpec, seed: u64, opts: &ProbeOptions) -> Result<DomainSamples> {
    let n = body.dim();
    if spec.base.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spec.base.dim(),
        });
    }
    if !(spec.radius.is_finite() && spec.radius >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius {} must be non-negative",
            spec.radius
        )));
    }
    let base = spec.base.normalize()?;
    let oracle = match body.kind() {
        BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. } => Oracle::Closed,
        BodyKind::Tube(_) => Oracle::Tube(tube_constants(body)?),
        BodyKind::Implicit(_) => Oracle::MonteCarlo,
    };
    let volume = body_volume(body, opts.mc_samples, seed)?;
    transversality(body, &base, usize::MAX, seed, opts)?;

    let samples = (0..spec.count)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, Purpose::DomainSamples, k as u64);
            let dim = n + 1;
            let dir: Vec<f64> = (0..dim).map(|_| r.sample(StandardNormal)).collect();
            let len = norm(&dir);
            let rad = spec.radius * r.random::<f64>().powf(1.0 / dim as f64);
            let coeffs: Vec<f64> = base.coeffs().iter().zip(&dir).map(|(c, d)| c + rad * d / len).collect();
            let plane = Hyperplane::from_coeffs(coeffs)?.normalize()?;
            transversality(body, &plane, k, seed, opts)?;
            let (value, std_error) = match &oracle {
                Oracle::Closed => (exact_cut_volumes(body, &plane)?.expect("closed form").0, 0.0),
                Oracle::Tube(consts) => {
                    let cut = tube_cut_volumes_with(body, consts, &plane)?;
                    if cut.valid {
                        (cut.plus, 0.0)
                    } else {
                        mc_value(body, &plane, seed, k, opts)?
                    }
                }
                Oracle::MonteCarlo => mc_value(body, &plane, seed, k, opts)?,
            };
            Ok(Sample {
                coeffs: plane.coeffs().to_vec(),
                value,
                std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DomainSamples { samples, volume })
}

fn mc_value(body: &BodyModel, plane: &Hyperplane, seed: u64, k: usize, opts: &ProbeOptions) -> Result<(f64, f64)> {
    let sub = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
    let cut = mc_cut_volumes(
        body,
        plane,
        opts.mc_samples,
        sub,
        &McOptions {
            workers: 1,
            ..Default::default()
        },
    )?;
    Ok((cut.plus.value, cut.plus.std_error))
}

/// Projects random in-plane points onto `X ∩ ∂W` and fails if `grad f` is
/// within `min_angle` of the normal at any of them.
fn transversality(body: &BodyModel, plane: &Hyperplane, index: usize, seed: u64, opts: &ProbeOptions) -> Result<()> {
    let (unit, tangents) = plane_frame(plane.normal());
    let offset = -plane.offset() / plane.normal_norm();
    let center = body.bounding_box().center();
    let half = body.bounding_box().half_widths();
    let diam = body.diameter();
    let extents: Vec<(f64, f64)> = tangents
        .iter()
        .map(|t| {
            let c = dot(t, &center);
            let h: f64 = t.iter().zip(&half).map(|(ti, hi)| ti.abs() * hi).sum();
            (c - h, 2.0 * h)
        })
        .collect();
    let stream_index = if index == usize::MAX { u64::MAX } else { index as u64 };
    let mut r = rng::stream(seed, Purpose::BoundarySamples, stream_index);
    let mut p = vec![0.0; unit.len()];
    let mut worst = f64::INFINITY;
    for _ in 0..opts.boundary_points {
        for (i, pi) in p.iter_mut().enumerate() {
            *pi = offset * unit[i];
        }
        for (t, (lo, w)) in tangents.iter().zip(&extents) {
            let c = lo + r.random::<f64>() * w;
            for (pi, ti) in p.iter_mut().zip(t) {
                *pi += c * ti;
            }
        }
        if let Some(angle) = in_plane_projection(body, &mut p, &unit, diam) {
            worst = worst.min(angle);
        }
    }
    if worst <= opts.min_angle {
        return Err(Error::TangencyInRegion { index, angle: worst });
    }
    Ok(())
}

/// Newton projection onto `{f = 0}` inside the plane with unit normal
/// `unit`; returns the angle between `grad f` and the normal at the limit.
fn in_plane_projection(body: &BodyModel, p: &mut [f64], unit: &[f64], diam: f64) -> Option<f64> {
    for _ in 0..60 {
        let f = body.evaluate(p);
        let g = body.gradient(p).ok()?;
        let along = dot(g.as_slice(), unit);
        let gt: Vec<f64> = g.iter().zip(unit).map(|(gi, ui)| gi - along * ui).collect();
        let gt2 = dot(&gt, &gt);
        let g_len = g.norm();
        if f.abs() <= 1e-13 * g_len * diam {
            return Some(gt2.sqrt().atan2(along.abs()));
        }
        if gt2 == 0.0 {
            return None;
        }
        let mut scale = f / gt2;
        let step = scale.abs() * gt2.sqrt();
        if step > 0.1 * diam {
            scale *= 0.1 * diam / step;
        }
        for (pi, gi) in p.iter_mut().zip(&gt) {
            *pi -= scale * gi;
        }
    }
    None
}

/// Exponent vectors of all monomials of total degree `<= d` in `vars`
/// variables, by degree, each degree in lexicographic order with the first
/// variable's exponent descending.
pub fn monomial_exponents(vars: usize, d: usize) -> Vec<Vec<u32>> {
    fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e;
            fill(out, cur, pos + 1, left - e);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    for k in 0..=d as u32 {
        let mut cur = vec![0; vars];
        fill(&mut out, &mut cur, 0, k);
    }
    out
}

/// Evaluation matrix of monomials in `(a_1, ..., a_N, b, v_scale * V)` with
/// columns normalized to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialMatrix {
    pub matrix: DMatrix<f64>,
    pub exponents: Vec<Vec<u32>>,
    /// Original column norms (1 for all-zero columns, which stay zero).
    pub scales: Vec<f64>,
}

fn variables(s: &Sample, v_scale: f64) -> Vec<f64> {
    let mut z = s.coeffs.clone();
    z.push(s.value * v_scale);
    z
}

fn eval_monomial(z: &[f64], exps: &[u32]) -> f64 {
    z.iter()
        .zip(exps)
        .fold(1.0, |acc, (x, &e)| if e == 0 { acc } else { acc * x.powi(e as i32) })
}

fn check_samples(samples: &[Sample]) -> Result<usize> {
    let first = samples.first().ok_or(Error::InsufficientSamples {
        rows: 0,
        columns: 0,
        required: 1,
    })?;
    let len = first.coeffs.len();
    if let Some(s) = samples.iter().find(|s| s.coeffs.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: s.coeffs.len(),
        });
    }
    Ok(len + 1)
}

fn build(samples: &[Sample], exponents: Vec<Vec<u32>>, v_scale: f64) -> Result<MonomialMatrix> {
    let rows = samples.len();
    let cols = exponents.len();
    if rows < 2 * cols {
        return Err(Error::InsufficientSamples {
            rows,
            columns: cols,
            required: 2 * cols,
        });
    }
    let mut matrix = DMatrix::zeros(rows, cols);
    for (i, s) in samples.iter().enumerate() {
        let z = variables(s, v_scale);
        for (j, e) in exponents.iter().enumerate() {
            matrix[(i, j)] = eval_monomial(&z, e);
        }
    }
    let mut scales = Vec::with_capacity(cols);
    for j in 0..cols {
        let nrm = matrix.column(j).norm();
        if nrm > 0.0 {
            matrix.column_mut(j).scale_mut(1.0 / nrm);
            scales.push(nrm);
        } else {
            scales.push(1.0);
        }
    }
    Ok(MonomialMatrix {
        matrix,
        exponents,
        scales,
    })
}

/// All `C(N + 2 + d, d)` monomials of degree `<= d` in `(a, b, v_scale V)`,
/// evaluated at the samples.
pub fn monomial_matrix(samples: &[Sample], degree: usize, v_scale: f64) -> Result<MonomialMatrix> {
    if degree == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let vars = check_samples(samples)?;
    build(samples, monomial_exponents(vars, degree), v_scale)
}

/// Monomials that stay linearly independent on the sphere `sum a_i^2 = 1`:
/// those with `a_N` exponent below 2.
fn reduced_exponents(vars: usize, d: usize) -> Vec<Vec<u32>> {
    let last_a = vars - 3;
    monomial_exponents(vars, d)
        .into_iter()
        .filter(|e| e[last_a] < 2)
        .collect()
}

/// Outcome of a relation search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    RelationFound(usize),
    NoRelationUpTo(usize),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::RelationFound(d) => write!(f, "relation-found({d})"),
            Verdict::NoRelationUpTo(d) => write!(f, "no-relation-up-to({d})"),
        }
    }
}

/// Singular-value evidence at one degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeRecord {
    pub degree: usize,
    pub columns: usize,
    /// `sigma_min / sigma_max` of the column-normalized matrix.
    pub sigma_ratio: f64,
    /// Unit-norm coefficients of the best near-relation on the unscaled
    /// monomials listed in `exponents`.
    pub candidate: Vec<f64>,
    pub exponents: Vec<Vec<u32>>,
    /// Largest `|F(z)| / |m(z)|` over the fitting samples.
    pub in_sample_residual: f64,
    /// Same over the held-out samples.
    pub held_out_residual: f64,
}

/// Per-degree evidence and the resulting verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraicityReport {
    pub records: Vec<DegreeRecord>,
    pub verdict: Verdict,
    pub rank_tol: f64,
    pub d_max: usize,
    /// `10 * max std_error / vol(W)`; zero for closed-form samples.
    pub noise_floor: f64,
}

impl AlgebraicityReport {
    /// Record of the degree named by the verdict, if a relation was found.
    pub fn relation(&self) -> Option<&DegreeRecord> {
        match self.verdict {
            Verdict::RelationFound(d) => self.records.iter().find(|r| r.degree == d),
            Verdict::NoRelationUpTo(_) => None,
        }
    }
}

fn renormalized(samples: &[Sample]) -> Result<Vec<Sample>> {
    samples
        .iter()
        .map(|s| {
            let h = Hyperplane::from_coeffs(s.coeffs.clone())?.normalize()?;
            Ok(Sample {
                coeffs: h.coeffs().to_vec(),
                ..s.clone()
            })
        })
        .collect()
}

fn max_residual(samples: &[Sample], exps: &[Vec<u32>], coef: &[f64], v_scale: f64) -> f64 {
    samples
        .iter()
        .map(|s| {
            let z = variables(s, v_scale);
            let m: Vec<f64> = exps.iter().map(|e| eval_monomial(&z, e)).collect();
            dot(&m, coef).abs() / norm(&m)
        })
        .fold(0.0, f64::max)
}

/// Tests degrees `1..=d_max` for a relation among `(a, b, V / vol(W))`.
///
/// Sample coefficients are canonically normalized first. Monomials that
/// vanish identically on `sum a_i^2 = 1` are removed so that only genuine
/// relations show up as null directions. The verdict is `RelationFound(d)` at
/// the smallest `d` whose singular-value ratio is below `rank_tol`.
pub fn relation_search(
    fit: &DomainSamples,
    held_out: &DomainSamples,
    d_max: usize,
    rank_tol: f64,
) -> Result<AlgebraicityReport> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance {rank_tol} must lie in (0, 1)"
        )));
    }
    if d_max == 0 {
        return Err(Error::InvalidArgument("d_max must be at least 1".into()));
    }
    if fit.volume.is_nan() || fit.volume <= 0.0 {
        return Err(Error::InvalidArgument("body volume must be positive".into()));
    }
    let max_err = fit
        .samples
        .iter()
        .chain(&held_out.samples)
        .map(|s| s.std_error)
        .fold(0.0, f64::max);
    let noise_floor = 10.0 * max_err / fit.volume;
    if noise_floor > 0.0 && rank_tol <= noise_floor {
        return Err(Error::NoiseFloor {
            rank_tol,
            floor: noise_floor,
        });
    }
    let train = renormalized(&fit.samples)?;
    let test = renormalized(&held_out.samples)?;
    let vars = check_samples(&train)?;
    if !test.is_empty() && check_samples(&test)? != vars {
        return Err(Error::DimensionMismatch {
            expected: vars - 1,
            got: test[0].coeffs.len(),
        });
    }
    let v_scale = 1.0 / fit.volume;

    let mut records = Vec::with_capacity(d_max);
    for d in 1..=d_max {
        let mm = build(&train, reduced_exponents(vars, d), v_scale)?;
        let svd = mm.matrix.clone().svd(false, true);
        let v_t = svd.v_t.as_ref().expect("right singular vectors");
        let sv = &svd.singular_values;
        let (imin, smin) = sv
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |a, (i, &s)| if s < a.1 { (i, s) } else { a });
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        let mut coef: Vec<f64> = v_t.row(imin).iter().zip(&mm.scales).map(|(w, s)| w / s).collect();
        let len = norm(&coef);
        coef.iter_mut().for_each(|c| *c /= len);
        // fix the sign so the first sizable coefficient is positive
        if let Some(c) = coef.iter().find(|c| c.abs() > 1e-12) {
            if *c < 0.0 {
                coef.iter_mut().for_each(|c| *c = -*c);
            }
        }
        let in_sample = max_residual(&train, &mm.exponents, &coef, v_scale);
        let held = max_residual(&test, &mm.exponents, &coef, v_scale);
        records.push(DegreeRecord {
            degree: d,
            columns: mm.exponents.len(),
            sigma_ratio: ratio,
            candidate: coef,
            exponents: mm.exponents,
            in_sample_residual: in_sample,
            held_out_residual: held,
        });
    }
    let verdict = records
        .iter()
        .find(|r| r.sigma_ratio < rank_tol)
        .map(|r| Verdict::RelationFound(r.degree))
        .unwrap_or(Verdict::NoRelationUpTo(d_max));
    Ok(AlgebraicityReport {
        records,
        verdict,
        rank_tol,
        d_max,
        noise_floor,
    })
}

/// Number of samples the relation search needs at degree `d_max` for a body
/// in `R^dim`.
pub fn required_samples(dim: usize, d_max: usize) -> usize {
    2 * reduced_exponents(dim + 2, d_max).len()
}

/// Samples a region twice (fit and held-out sets from independent seeds)
/// and runs [`relation_search`].
pub fn probe(body: &BodyModel, spec: &DomainSpec, seed: u64, opts: &ProbeOptions) -> Result<AlgebraicityReport> {
    let fit = sample_domain(body, spec, seed, opts)?;
    let held = sample_domain(body, spec, seed ^ 0xA5A5_A5A5_5A5A_5A5A, opts)?;
    relation_search(&fit, &held, opts.d_max, opts.rank_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn exponent_counts_and_order() {
        let e = monomial_exponents(4, 1);
        assert_eq!(
            e,
            vec![
                vec![0, 0, 0, 0],
                vec![1, 0, 0, 0],
                vec![0, 1, 0, 0],
                vec![0, 0, 1, 0],
                vec![0, 0, 0, 1]
            ]
        );
        for d in 1..6 {
            assert_eq!(monomial_exponents(4, d).len(), binom(4 + d, d));
            assert_eq!(monomial_exponents(5, d).len(), binom(5 + d, d));
        }
    }

    #[test]
    fn first_degree_row() {
        let s = Sample {
            coeffs: vec![1.0, 0.0, -0.5],
            value: 0.3,
            std_error: 0.0,
        };
        let rows: Vec<Sample> = (0..10).map(|_| s.clone()).collect();
        let mm = monomial_matrix(&rows, 1, 1.0).unwrap();
        let raw: Vec<f64> = (0..5).map(|j| mm.matrix[(0, j)] * mm.scales[j]).collect();
        for (a, b) in raw.iter().zip([1.0, 1.0, 0.0, -0.5, 0.3]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(mm.matrix[(0, 2)], 0.0);
        assert!(matches!(
            monomial_matrix(&rows[..9], 1, 1.0),
            Err(Error::InsufficientSamples {
                rows: 9,
                columns: 5,
                required: 10
            })
        ));
        let rows: Vec<Sample> = (0..30).map(|_| s.clone()).collect();
        assert_eq!(monomial_matrix(&rows, 2, 1.0).unwrap().exponents.len(), 15);
    }

    #[test]
    fn empty_region_gives_v_equals_zero() {
        let b = BodyModel::ball(vec![0.0; 3], 1.0).unwrap();
        let base = Hyperplane::from_coeffs(vec![1.0, 0.0, 0.0, -2.0]).unwrap();
        let spec = DomainSpec {
            base,
            radius: 0.05,
            count: 60,
        };
        let opts = ProbeOptions {
            d_max: 1,
            boundary_points: 50,
            ..Default::default()
        };
        let r = probe(&b, &spec, 0, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::RelationFound(1));
        let rel = r.relation().unwrap();
        let v_index = rel.exponents.iter().position(|e| e == &vec![0, 0, 0, 0, 1]).unwrap();
        assert!((rel.candidate[v_index].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_floor_refusal() {
        let s = |v: f64| Sample {
            coeffs: vec![1.0, 0.0, v],
            value: v,
            std_error: 1e-3,
        };
        let fit = DomainSamples {
            samples: (0..20).map(|k| s(k as f64 * 0.01)).collect(),
            volume: 1.0,
        };
        let e = relation_search(&fit, &fit, 1, 1e-9).unwrap_err();
        assert!(matches!(e, Error::NoiseFloor { .. }));
    }

    #[test]
    fn tangent_region_is_rejected() {
        let b = BodyModel::ball(vec![0.0; 3], 1.0).unwrap();
        let base = Hyperplane::from_coeffs(vec![1.0, 0.0, 0.0, -0.999_999_9]).unwrap();
        let spec = DomainSpec {
            base,
            radius: 0.0,
            count: 1,
        };
        let e = sample_domain(&b, &spec, 0, &ProbeOptions::default()).unwrap_err();
        assert!(matches!(e, Error::TangencyInRegion { .. }), "{e:?}");
    }
}
