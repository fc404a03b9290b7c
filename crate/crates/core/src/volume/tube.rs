//! Closed-form cut and section volumes of tube bodies
//! `(|x| - 1)^2 + psi(y) <= eps^2` in `R^3_x + R^m_y`.
//!
//! With `s(y) = sqrt(eps^2 - psi(y))`, the body's `x`-fibre over `y` is the
//! spherical layer `1 - s <= |x| <= 1 + s`, so
//! `C = ∫ (8 pi s + 8 pi s^3 / 3) dy` and the section by a plane through the
//! origin containing `R^m_y` has volume `Ω = 4 pi ∫ s dy`.

use rand::Rng;

use super::mc::{run_chunks, VolumeEstimate, CHUNK};
use crate::error::{Error, Result};
use crate::geometry::{norm, radial_profile, BodyKind, BodyModel, Hyperplane, PsiSpec, TubeBody, TUBE_X_DIM};
use crate::quad::integrate;
use crate::rng::{self, Purpose, GENERATOR};
use crate::special::unit_ball_volume;

const QUAD_TOL: f64 = 1e-13;

/// Volume `c` of the tube body and `(N-1)`-volume `omega` of its section by
/// a plane through the origin containing `R^m_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeConstants {
    pub c: f64,
    pub omega: f64,
    /// Relative quadrature error estimate (largest of the two integrals).
    pub quadrature_error: f64,
}

/// Cut volumes of a tube body together with the domain check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeCut {
    pub plus: f64,
    pub minus: f64,
    /// The plane passes the conservative closeness check, under which the
    /// formula is proven.
    pub valid: bool,
}

pub(crate) fn as_tube(body: &BodyModel) -> Result<&TubeBody> {
    match body.kind() {
        BodyKind::Tube(t) => Ok(t),
        _ => Err(Error::InvalidArgument("operation requires a tube body".into())),
    }
}

/// `C` and `Ω` by one-dimensional radial quadrature.
///
/// A diagonal quadratic `psi` is whitened to `|z|^2` (Jacobian
/// `1 / sqrt(prod w)`); a radial `psi` integrates over spheres directly. The
/// radius is substituted as `r = r* sin(theta)` to tame the square-root
/// endpoint at `psi = eps^2`.
pub fn tube_constants(body: &BodyModel) -> Result<TubeConstants> {
    let tube = as_tube(body)?;
    let m = tube.m();
    let eps2 = tube.eps * tube.eps;
    let (r_star, jac) = match &tube.psi {
        PsiSpec::QuadraticDiagonal { weights } => (tube.eps, 1.0 / weights.iter().product::<f64>().sqrt()),
        PsiSpec::Radial { .. } => (tube.psi.sublevel_radius(eps2), 1.0),
    };
    let sphere = m as f64 * unit_ball_volume(m);
    let psi = &tube.psi;
    let layer = |theta: f64, f: &dyn Fn(f64) -> f64| {
        let (sin, cos) = theta.sin_cos();
        let r = r_star * sin;
        let s = (eps2 - radial_profile(psi, r)).max(0.0).sqrt();
        f(s) * r.powi(m as i32 - 1) * r_star * cos
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let weight = sphere * jac;
    let c = integrate(
        |th| layer(th, &|s| 8.0 * std::f64::consts::PI * (s + s * s * s / 3.0)),
        0.0,
        half_pi,
        QUAD_TOL,
        0.0,
    );
    let o = integrate(
        |th| layer(th, &|s| 4.0 * std::f64::consts::PI * s),
        0.0,
        half_pi,
        QUAD_TOL,
        0.0,
    );
    Ok(TubeConstants {
        c: c.value * weight,
        omega: o.value * weight,
        quadrature_error: (c.abs_error / c.value).max(o.abs_error / o.value),
    })
}

/// Monte Carlo `C` and `Ω` from uniform samples of the box around
/// `{psi <= eps^2}`, with standard errors from the sample variance.
pub fn tube_constants_mc(body: &BodyModel, n: u64, seed: u64) -> Result<(VolumeEstimate, VolumeEstimate)> {
    let tube = as_tube(body)?;
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let eps2 = tube.eps * tube.eps;
    let half = tube.psi.sublevel_half_widths(eps2);
    let box_vol: f64 = half.iter().map(|h| 2.0 * h).product();
    let sums = run_chunks(n, 0, |k, len| {
        let mut r = rng::stream(seed, Purpose::TubeConstants, k);
        let mut y = vec![0.0; half.len()];
        let mut acc = [0.0f64; 4];
        for _ in 0..len {
            for (yi, h) in y.iter_mut().zip(&half) {
                *yi = (2.0 * r.random::<f64>() - 1.0) * h;
            }
            let s = (eps2 - tube.psi.value(&y)).max(0.0).sqrt();
            let fc = 8.0 * std::f64::consts::PI * (s + s * s * s / 3.0);
            let fo = 4.0 * std::f64::consts::PI * s;
            acc[0] += fc;
            acc[1] += fc * fc;
            acc[2] += fo;
            acc[3] += fo * fo;
        }
        acc
    });
    let mut tot = [0.0f64; 4];
    for a in &sums {
        for (t, v) in tot.iter_mut().zip(a) {
            *t += v;
        }
    }
    debug_assert!(sums.len() as u64 == n.div_ceil(CHUNK));
    let nf = n as f64;
    let make = |sum: f64, sq: f64| {
        let mean = sum / nf;
        let var = ((sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        VolumeEstimate {
            value: mean * box_vol,
            std_error: box_vol * (var / nf).sqrt(),
            samples: n,
            seed,
            generator: GENERATOR,
        }
    };
    Ok((make(tot[0], tot[1]), make(tot[2], tot[3])))
}

/// Conservative domain check for the linear cut-volume formula: the
/// `x`-section over every `y` of `{psi <= eps^2}` must stay inside the inner
/// sphere of its layer, i.e. `dist + tan(angle) * r*(eps^2) < 1 - eps`.
pub fn tube_validity(body: &BodyModel, plane: &Hyperplane) -> Result<bool> {
    let tube = as_tube(body)?;
    check_dim(body, plane)?;
    let dist = match plane.subspace_distance(TUBE_X_DIM) {
        Ok(d) => d,
        Err(Error::VerticalDegenerate) => return Ok(false),
        Err(e) => return Err(e),
    };
    let tan = plane.angle_to_x_subspace(TUBE_X_DIM)?.tan();
    let reach = tube.psi.sublevel_radius(tube.eps * tube.eps);
    Ok(dist + tan * reach < 1.0 - tube.eps)
}

/// `(C/2 + Ω d, C/2 - Ω d)` with `d = b / |alpha|` the signed distance of
/// `X ∩ R^3_x` from the origin, positive when the origin is on the plus side.
/// The values never read the `beta` coefficients.
pub fn tube_cut_volumes(body: &BodyModel, plane: &Hyperplane) -> Result<TubeCut> {
    let consts = tube_constants(body)?;
    tube_cut_volumes_with(body, &consts, plane)
}

/// [`tube_cut_volumes`] with precomputed constants.
pub fn tube_cut_volumes_with(body: &BodyModel, consts: &TubeConstants, plane: &Hyperplane) -> Result<TubeCut> {
    let valid = tube_validity(body, plane)?;
    let d = plane.signed_subspace_offset(TUBE_X_DIM)?;
    let half = 0.5 * consts.c;
    Ok(TubeCut {
        plus: half + consts.omega * d,
        minus: half - consts.omega * d,
        valid,
    })
}

/// `Ω / cos(angle)`: the section volume for planes in the valid domain
/// (check with [`tube_validity`]).
pub fn tube_section_volume(body: &BodyModel, plane: &Hyperplane) -> Result<f64> {
    let consts = tube_constants(body)?;
    tube_section_volume_with(body, &consts, plane)
}

/// [`tube_section_volume`] with precomputed constants.
pub fn tube_section_volume_with(body: &BodyModel, consts: &TubeConstants, plane: &Hyperplane) -> Result<f64> {
    as_tube(body)?;
    check_dim(body, plane)?;
    let alpha = norm(&plane.normal()[..TUBE_X_DIM]);
    if alpha == 0.0 {
        return Err(Error::VerticalDegenerate);
    }
    Ok(consts.omega * plane.normal_norm() / alpha)
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

    fn tube(eps: f64) -> BodyModel {
        BodyModel::tube(PsiSpec::quadratic(vec![1.0]).unwrap(), eps).unwrap()
    }

    #[test]
    fn closed_forms_for_quadratic_line() {
        for eps in [0.05, 0.3, 0.7] {
            let k = tube_constants(&tube(eps)).unwrap();
            let e2 = eps * eps;
            assert!((k.omega / (2.0 * PI * PI * e2) - 1.0).abs() < 1e-12);
            assert!((k.c / (4.0 * PI * PI * e2 + PI * PI * e2 * e2) - 1.0).abs() < 1e-12);
            assert!(k.quadrature_error < 1e-10);
        }
    }

    #[test]
    fn radial_quadratic_matches_diagonal() {
        for m in 1..=4 {
            let a = BodyModel::tube(PsiSpec::quadratic(vec![1.0; m]).unwrap(), 0.4).unwrap();
            let b = BodyModel::tube(PsiSpec::radial(m, vec![1.0]).unwrap(), 0.4).unwrap();
            let (ka, kb) = (tube_constants(&a).unwrap(), tube_constants(&b).unwrap());
            assert!((ka.c / kb.c - 1.0).abs() < 1e-12);
            assert!((ka.omega / kb.omega - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_scale_constants() {
        let a = BodyModel::tube(PsiSpec::quadratic(vec![1.0, 1.0]).unwrap(), 0.3).unwrap();
        let b = BodyModel::tube(PsiSpec::quadratic(vec![4.0, 9.0]).unwrap(), 0.3).unwrap();
        let (ka, kb) = (tube_constants(&a).unwrap(), tube_constants(&b).unwrap());
        assert!((ka.c / kb.c - 6.0).abs() < 1e-11);
        assert!((ka.omega / kb.omega - 6.0).abs() < 1e-11);
    }

    #[test]
    fn mc_constants_agree() {
        let b = BodyModel::tube(PsiSpec::radial(2, vec![1.0, -1.2, 0.5]).unwrap(), 0.8).unwrap();
        let k = tube_constants(&b).unwrap();
        let (c, o) = tube_constants_mc(&b, 400_000, 2).unwrap();
        assert!((c.value - k.c).abs() < 4.0 * c.std_error);
        assert!((o.value - k.omega).abs() < 4.0 * o.std_error);
    }

    #[test]
    fn degenerating_tube() {
        let k = tube_constants(&tube(1e-6)).unwrap();
        assert!(k.c < 1e-9 && k.omega < 1e-9);
    }

    #[test]
    fn orientation_and_beta() {
        let b = tube(0.3);
        let k = tube_constants(&b).unwrap();
        // gamma = -b = 0.1: the plane x1 = 0.1, the plus side is the smaller one
        let h = Hyperplane::from_split(&[1.0, 0.0, 0.0], &[0.0], 0.1).unwrap();
        let cut = tube_cut_volumes_with(&b, &k, &h).unwrap();
        assert_eq!(cut.plus, 0.5 * k.c - 0.1 * k.omega);
        assert_eq!(cut.minus, 0.5 * k.c + 0.1 * k.omega);
        assert!(cut.valid);
        for beta in [-0.2, 0.05, 0.2] {
            let hb = Hyperplane::from_split(&[1.0, 0.0, 0.0], &[beta], 0.1).unwrap();
            let other = tube_cut_volumes_with(&b, &k, &hb).unwrap();
            assert_eq!((other.plus, other.minus), (cut.plus, cut.minus));
        }
        let through = Hyperplane::from_split(&[0.3, 0.2, 0.1], &[0.0], 0.0).unwrap();
        let c0 = tube_cut_volumes_with(&b, &k, &through).unwrap();
        assert_eq!((c0.plus, c0.minus), (0.5 * k.c, 0.5 * k.c));
    }

    #[test]
    fn validity_boundaries() {
        let b = tube(0.3);
        let near = Hyperplane::from_split(&[1.0, 0.0, 0.0], &[0.0], 0.69).unwrap();
        let far = Hyperplane::from_split(&[1.0, 0.0, 0.0], &[0.0], 0.71).unwrap();
        assert!(tube_validity(&b, &near).unwrap());
        assert!(!tube_validity(&b, &far).unwrap());
        let vertical = Hyperplane::from_split(&[0.0, 0.0, 0.0], &[1.0], 0.0).unwrap();
        assert!(!tube_validity(&b, &vertical).unwrap());
        assert_eq!(tube_section_volume(&b, &vertical), Err(Error::VerticalDegenerate));
    }

    #[test]
    fn section_scales_with_angle() {
        let b = tube(0.3);
        let k = tube_constants(&b).unwrap();
        let flat = Hyperplane::from_split(&[1.0, 0.0, 0.0], &[0.0], 0.0).unwrap();
        assert_eq!(tube_section_volume_with(&b, &k, &flat).unwrap(), k.omega);
        let tilted = Hyperplane::from_split(&[1.0, 0.0, 0.0], &[1.0], 0.0).unwrap();
        let v = tube_section_volume_with(&b, &k, &tilted).unwrap();
        assert!((v - k.omega * 2f64.sqrt()).abs() < 1e-14);
    }
}
