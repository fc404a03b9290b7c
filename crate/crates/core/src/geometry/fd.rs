//! Central finite differences for defining functions without analytic
//! derivatives.

use nalgebra::{DMatrix, DVector};

/// Gradient and Hessian of `f` at `p` by central differences.
///
/// The gradient uses `h_i = cbrt(eps) * s_i` and the Hessian
/// `h_i = eps^(1/4) * s_i`, where `s_i = max(|p_i|, floor)`.
pub fn derivatives<F>(f: F, p: &[f64], floor: f64) -> (DVector<f64>, DMatrix<f64>)
where
    F: Fn(&[f64]) -> f64,
{
    let n = p.len();
    let scale: Vec<f64> = p.iter().map(|x| x.abs().max(floor)).collect();
    let mut q = p.to_vec();

    let mut grad = DVector::zeros(n);
    for i in 0..n {
        let h = f64::EPSILON.cbrt() * scale[i];
        q[i] = p[i] + h;
        let fp = f(&q);
        q[i] = p[i] - h;
        let fm = f(&q);
        q[i] = p[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }

    let hs: Vec<f64> = scale.iter().map(|s| f64::EPSILON.powf(0.25) * s).collect();
    let f0 = f(p);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        q[i] = p[i] + hs[i];
        let fp = f(&q);
        q[i] = p[i] - hs[i];
        let fm = f(&q);
        q[i] = p[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (hs[i] * hs[i]);
        for j in (i + 1)..n {
            let mut corner = |si: f64, sj: f64| {
                q[i] = p[i] + si * hs[i];
                q[j] = p[j] + sj * hs[j];
                let v = f(&q);
                q[i] = p[i];
                q[j] = p[j];
                v
            };
            let v =
                (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hs[i] * hs[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    (grad, hess)
}
