//! Monte Carlo estimators for cut volumes and section volumes.
//!
//! Samples are drawn in fixed-size chunks; chunk `k` reads its own
//! counter-based stream, and per-chunk results are integer hit counts, so
//! the result is bit-identical for any worker count.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dot, BodyModel, BoundingBox, Hyperplane};
use crate::rng::{self, Purpose, GENERATOR};

/// Samples per chunk.
pub const CHUNK: u64 = 1 << 14;

/// Largest supported sample count; keeps every `count * weight` product
/// exact in `f64`.
pub const MAX_SAMPLES: u64 = 1 << 34;

/// Significant bits kept in the per-sample weight.
const WEIGHT_BITS: i32 = 18;

/// Source of points in `[0, 1)^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointStream {
    /// Independent uniforms from the counter-based generator.
    #[default]
    Uniform,
    /// Additive recurrence with golden-ratio generalisation (R_d sequence),
    /// randomly shifted by the seed. Error bars are still the uniform-stream
    /// bound, which overstates its error.
    Kronecker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct McOptions {
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub stream: PointStream,
}

/// A Monte Carlo volume measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub generator: &'static str,
}

/// Both sides of a cut and the same-stream estimate of `vol(W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutVolumes {
    pub plus: VolumeEstimate,
    pub minus: VolumeEstimate,
    pub total: VolumeEstimate,
}

/// Section estimate at slab width `delta`, with the `2 delta` check.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionEstimate {
    pub estimate: VolumeEstimate,
    pub slab: f64,
    pub wide: VolumeEstimate,
    /// The two widths disagree by more than three combined standard errors.
    pub curvature_warning: bool,
}

pub(crate) fn run_chunks<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let job = || {
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let len = CHUNK.min(n - k * CHUNK);
                f(k, len)
            })
            .collect::<Vec<T>>()
    };
    if workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool")
            .install(job)
    }
}

/// Fills `out` with the next point in `[0,1)^N` of chunk `chunk`.
struct UnitPoints {
    rng: rand_chacha::ChaCha8Rng,
    kind: PointStream,
    shift: Vec<u64>,
    alpha: Vec<u64>,
    index: u64,
}

impl UnitPoints {
    fn new(seed: u64, purpose: Purpose, chunk: u64, dim: usize, kind: PointStream) -> Self {
        let (shift, alpha) = match kind {
            PointStream::Uniform => (Vec::new(), Vec::new()),
            PointStream::Kronecker => {
                let mut srng = rng::stream(seed, Purpose::Shift, purpose as u64);
                let shift = (0..dim).map(|_| srng.random::<u64>()).collect();
                (shift, kronecker_steps(dim))
            }
        };
        Self {
            rng: rng::stream(seed, purpose, chunk),
            kind,
            shift,
            alpha,
            index: chunk * CHUNK,
        }
    }

    fn fill(&mut self, out: &mut [f64]) {
        match self.kind {
            PointStream::Uniform => {
                for u in out.iter_mut() {
                    *u = self.rng.random::<f64>();
                }
            }
            PointStream::Kronecker => {
                const INV_2_64: f64 = 1.0 / 18_446_744_073_709_551_616.0;
                for (j, u) in out.iter_mut().enumerate() {
                    let frac = self.shift[j].wrapping_add(self.index.wrapping_mul(self.alpha[j]));
                    // top 53 bits, so the value stays below 1
                    *u = (frac >> 11) as f64 * (INV_2_64 * 2048.0);
                }
                self.index += 1;
            }
        }
    }
}

/// Fixed-point steps `frac(1 / phi_d^(j+1))` of the R_d sequence, where
/// `phi_d` is the positive root of `x^(d+1) = x + 1`.
fn kronecker_steps(dim: usize) -> Vec<u64> {
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    (1..=dim)
        .map(|j| {
            let a = (1.0 / phi).powi(j as i32).fract();
            (a * 18_446_744_073_709_551_616.0) as u64
        })
        .collect()
}

/// Per-half-sample weight rounded up to `WEIGHT_BITS` significant bits and
/// the sampling box inflated to match it.
fn weighted_box(bbox: &BoundingBox, n: u64) -> (BoundingBox, f64) {
    let base = bbox.volume();
    let w = base / (2.0 * n as f64);
    let e = w.log2().floor() as i32;
    let scale = 2f64.powi(WEIGHT_BITS - 1 - e);
    let w_short = (w * scale).ceil() / scale;
    let factor = (w_short / w).powf(1.0 / bbox.dim() as f64);
    (bbox.scaled(factor), w_short)
}

fn check_samples(n: u64) -> Result<()> {
    if n == 0 || n > MAX_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "sample count {n} must be in 1..={MAX_SAMPLES}"
        )));
    }
    Ok(())
}

fn estimate(count: f64, fraction: f64, region: f64, n: u64, seed: u64) -> VolumeEstimate {
    VolumeEstimate {
        value: count,
        std_error: region * (fraction * (1.0 - fraction) / n as f64).sqrt(),
        samples: n,
        seed,
        generator: GENERATOR,
    }
}

/// Monte Carlo estimate of the two volumes cut from `body` by `plane`.
///
/// `plus` is `vol(W ∩ {a.x + b > 0})`. Points exactly on the plane count
/// half to each side, so `plus.value + minus.value == total.value` exactly
/// and flipping the plane swaps the two sides exactly.
pub fn mc_cut_volumes(body: &BodyModel, plane: &Hyperplane, n: u64, seed: u64, opts: &McOptions) -> Result<CutVolumes> {
    check_samples(n)?;
    check_dim(body, plane)?;
    let (sbox, w_half) = weighted_box(body.bounding_box(), n);
    let dim = body.dim();
    let lo = &sbox.lo;
    let width: Vec<f64> = sbox.lo.iter().zip(&sbox.hi).map(|(l, h)| h - l).collect();

    let counts = run_chunks(n, opts.workers, |k, len| {
        let mut pts = UnitPoints::new(seed, Purpose::CutVolume, k, dim, opts.stream);
        let mut p = vec![0.0; dim];
        let (mut plus2, mut minus2) = (0u64, 0u64);
        for _ in 0..len {
            pts.fill(&mut p);
            for ((x, l), w) in p.iter_mut().zip(lo).zip(&width) {
                *x = l + *x * w;
            }
            if body.contains(&p) {
                let s = plane.evaluate(&p);
                if s > 0.0 {
                    plus2 += 2;
                } else if s < 0.0 {
                    minus2 += 2;
                } else {
                    plus2 += 1;
                    minus2 += 1;
                }
            }
        }
        (plus2, minus2)
    });
    let (plus2, minus2) = counts.iter().fold((0u64, 0u64), |acc, c| (acc.0 + c.0, acc.1 + c.1));

    let region = 2.0 * n as f64 * w_half;
    let half_n = 2.0 * n as f64;
    let make = |c2: u64| estimate(c2 as f64 * w_half, c2 as f64 / half_n, region, n, seed);
    Ok(CutVolumes {
        plus: make(plus2),
        minus: make(minus2),
        total: make(plus2 + minus2),
    })
}

/// Monte Carlo estimate of `vol(W)`.
pub fn mc_volume(body: &BodyModel, n: u64, seed: u64, opts: &McOptions) -> Result<VolumeEstimate> {
    // any plane works; the total does not depend on it
    let mut normal = vec![0.0; body.dim()];
    normal[0] = 1.0;
    let plane = Hyperplane::new(&normal, 0.0)?;
    Ok(mc_cut_volumes(body, &plane, n, seed, opts)?.total)
}

/// Orthonormal frame `(unit normal, tangent basis)` of a hyperplane, built
/// from a Householder reflection.
pub(crate) fn plane_frame(normal: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = normal.len();
    let len = dot(normal, normal).sqrt();
    let u: Vec<f64> = normal.iter().map(|a| a / len).collect();
    let k = (0..n).max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
    // H = I - 2 w w^T / |w|^2 with w = u + sign(u_k) e_k maps e_k to -sign(u_k) u
    let mut w = u.clone();
    w[k] += u[k].signum();
    let ww = dot(&w, &w);
    let tangents = (0..n)
        .filter(|&j| j != k)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - 2.0 * w[i] * w[j] / ww
                })
                .collect()
        })
        .collect();
    (u, tangents)
}

/// Monte Carlo estimate of the `(N-1)`-volume of `X ∩ W` as the volume of
/// the slab `{|dist(x, X)| < delta / 2} ∩ W` divided by `delta`.
///
/// Points are drawn directly in the slab: the normal coordinate is uniform
/// across the slab and the tangential coordinates are uniform over the
/// projection of the bounding box. `delta` defaults to `1e-3` times the
/// bounding-box diameter. A second estimate at `2 delta` flags curvature
/// bias.
pub fn mc_section_volume(
    body: &BodyModel,
    plane: &Hyperplane,
    delta: Option<f64>,
    n: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<SectionEstimate> {
    check_samples(n)?;
    check_dim(body, plane)?;
    let delta = delta.unwrap_or(1e-3 * body.diameter());
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("slab width {delta} must be positive")));
    }
    let estimate = slab_estimate(body, plane, delta, n, seed, Purpose::Section, opts);
    let wide = slab_estimate(body, plane, 2.0 * delta, n, seed, Purpose::SectionWide, opts);
    let spread = 3.0 * (estimate.std_error.powi(2) + wide.std_error.powi(2)).sqrt();
    let curvature_warning = (estimate.value - wide.value).abs() > spread;
    Ok(SectionEstimate {
        estimate,
        slab: delta,
        wide,
        curvature_warning,
    })
}

fn slab_estimate(
    body: &BodyModel,
    plane: &Hyperplane,
    delta: f64,
    n: u64,
    seed: u64,
    purpose: Purpose,
    opts: &McOptions,
) -> VolumeEstimate {
    let dim = body.dim();
    let (unit, tangents) = plane_frame(plane.normal());
    let offset = -plane.offset() / plane.normal_norm();
    let center = body.bounding_box().center();
    let half = body.bounding_box().half_widths();
    // support of the box along each tangent direction
    let extents: Vec<(f64, f64)> = tangents
        .iter()
        .map(|t| {
            let c = dot(t, &center);
            let h: f64 = t.iter().zip(&half).map(|(ti, hi)| ti.abs() * hi).sum();
            (c - h, 2.0 * h)
        })
        .collect();
    let area: f64 = extents.iter().map(|e| e.1).product();

    let counts = run_chunks(n, opts.workers, |k, len| {
        let mut pts = UnitPoints::new(seed, purpose, k, dim, opts.stream);
        let mut u = vec![0.0; dim];
        let mut p = vec![0.0; dim];
        let mut hits = 0u64;
        for _ in 0..len {
            pts.fill(&mut u);
            let s = offset + (u[0] - 0.5) * delta;
            for (i, pi) in p.iter_mut().enumerate() {
                *pi = s * unit[i];
            }
            for (j, t) in tangents.iter().enumerate() {
                let c = extents[j].0 + u[j + 1] * extents[j].1;
                for (pi, ti) in p.iter_mut().zip(t) {
                    *pi += c * ti;
                }
            }
            if body.contains(&p) {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.iter().sum();
    let frac = hits as f64 / n as f64;
    estimate(frac * area, frac, area, n, seed)
}

fn check_dim(body: &BodyModel, plane: &Hyperplane) -> Result<()> {
    if body.dim() != plane.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: plane.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ball3() -> BodyModel {
        BodyModel::ball(vec![0.0; 3], 1.0).unwrap()
    }

    fn hp(c: &[f64]) -> Hyperplane {
        Hyperplane::from_coeffs(c.to_vec()).unwrap()
    }

    #[test]
    fn weight_has_short_mantissa() {
        let bb = BoundingBox::centered(&[0.0; 3], &[1.3, 1.3, 0.303]);
        for n in [1u64, 7, 1000, 1_000_000, 4_000_000, 12_345_678] {
            let (sbox, w) = weighted_box(&bb, n);
            let m = w / 2f64.powi(w.log2().floor() as i32);
            let bits = (m * 2f64.powi(WEIGHT_BITS - 1)).fract();
            assert_eq!(bits, 0.0);
            let rel = (sbox.volume() - 2.0 * n as f64 * w).abs() / sbox.volume();
            assert!(rel < 1e-14);
            assert!(sbox.volume() >= bb.volume());
            assert!(sbox.volume() <= bb.volume() * (1.0 + 1e-5));
        }
    }

    #[test]
    fn halves_of_ball() {
        let r = mc_cut_volumes(&ball3(), &hp(&[1.0, 0.0, 0.0, 0.0]), 400_000, 0, &McOptions::default()).unwrap();
        let half = 2.0 * PI / 3.0;
        assert!((r.plus.value - half).abs() < 3.0 * r.plus.std_error);
        assert!((r.minus.value - half).abs() < 3.0 * r.minus.std_error);
        assert_eq!(r.plus.value + r.minus.value, r.total.value);
        assert_eq!(r.plus.generator, GENERATOR);
    }

    #[test]
    fn plane_missing_ball() {
        let r = mc_cut_volumes(&ball3(), &hp(&[1.0, 0.0, 0.0, -2.0]), 200_000, 3, &McOptions::default()).unwrap();
        assert_eq!(r.plus.value, 0.0);
        assert_eq!(r.plus.std_error, 0.0);
        assert!((r.minus.value - 4.0 * PI / 3.0).abs() < 3.0 * r.minus.std_error);
    }

    #[test]
    fn flipping_swaps_exactly() {
        let h = hp(&[0.3, -0.7, 0.2, 0.1]);
        let a = mc_cut_volumes(&ball3(), &h, 100_000, 11, &McOptions::default()).unwrap();
        let b = mc_cut_volumes(&ball3(), &h.flipped(), 100_000, 11, &McOptions::default()).unwrap();
        assert_eq!(a.plus, b.minus);
        assert_eq!(a.minus, b.plus);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let h = hp(&[1.0, 1.0, 0.0, -0.2]);
        let one = McOptions {
            workers: 1,
            ..Default::default()
        };
        let many = McOptions {
            workers: 5,
            ..Default::default()
        };
        let a = mc_cut_volumes(&ball3(), &h, 150_001, 9, &one).unwrap();
        let b = mc_cut_volumes(&ball3(), &h, 150_001, 9, &many).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kronecker_stream_estimates_ball() {
        let opts = McOptions {
            stream: PointStream::Kronecker,
            ..Default::default()
        };
        let r = mc_cut_volumes(&ball3(), &hp(&[0.0, 0.0, 1.0, -0.5]), 200_000, 1, &opts).unwrap();
        let cap = PI * 0.25 * 2.5 / 3.0;
        assert!((r.plus.value - cap).abs() < r.plus.std_error);
        let a = mc_cut_volumes(
            &ball3(),
            &hp(&[0.0, 0.0, 1.0, -0.5]),
            200_000,
            1,
            &McOptions { workers: 1, ..opts },
        )
        .unwrap();
        assert_eq!(a, r);
    }

    #[test]
    fn frame_is_orthonormal() {
        for normal in [vec![1.0, 0.0, 0.0], vec![0.3, -2.0, 0.5, 1.0], vec![0.0, 0.0, -1.0]] {
            let (u, t) = plane_frame(&normal);
            let mut all = vec![u];
            all.extend(t);
            for i in 0..all.len() {
                for j in 0..all.len() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&all[i], &all[j]) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn section_of_ball() {
        let s = mc_section_volume(
            &ball3(),
            &hp(&[1.0, 0.0, 0.0, 0.0]),
            None,
            400_000,
            0,
            &McOptions::default(),
        )
        .unwrap();
        assert!((s.estimate.value - PI).abs() < 3.0 * s.estimate.std_error + 1e-5);
        let s = mc_section_volume(
            &ball3(),
            &hp(&[1.0, 0.0, 0.0, -1.5]),
            None,
            100_000,
            0,
            &McOptions::default(),
        )
        .unwrap();
        assert_eq!(s.estimate.value, 0.0);
        assert!(!s.curvature_warning);
    }
}
