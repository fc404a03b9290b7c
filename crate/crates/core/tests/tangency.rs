use lacuna_core::geometry::bodyfile::parse_body;
use lacuna_core::tangency::*;
use lacuna_core::{BodyModel, PsiSpec};
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> TangencyOptions {
    TangencyOptions::default()
}

#[test]
fn ellipsoid_inertia_law() {
    let mut r = ChaCha8Rng::seed_from_u64(42);
    let mut total = 0;
    for k in 0..10 {
        let n = 2 + k % 5;
        let semi: Vec<f64> = (0..n).map(|_| 0.5 + 1.5 * r.random::<f64>()).collect();
        let body = BodyModel::ellipsoid(semi).unwrap();
        for j in 0..5 {
            let v = scan_direction(n, k as u64, j);
            let s = find_tangencies(&body, &v, j as u64, &opts()).unwrap();
            assert_eq!(s.reports.len(), 2);
            for rep in &s.reports {
                assert_eq!(rep.index_plus + rep.index_minus, n - 1);
                if n % 2 == 0 {
                    assert_ne!(rep.verdict_plus, rep.verdict_minus);
                } else {
                    assert_eq!(rep.verdict_plus, rep.verdict_minus);
                }
                total += 1;
            }
            // convex: the interior side carries the full index
            assert_eq!((s.reports[0].index_plus, s.reports[0].index_minus), (n - 1, 0));
            assert_eq!((s.reports[1].index_plus, s.reports[1].index_minus), (0, n - 1));
        }
    }
    assert_eq!(total, 100);
}

#[test]
fn ball_is_umbilic_and_has_two_tangencies() {
    let body = BodyModel::ball(vec![0.5, -0.25, 0.0], 1.5).unwrap();
    for k in 0..100 {
        let v = scan_direction(3, 9, k);
        let s = find_tangencies(&body, &v, k as u64, &opts()).unwrap();
        assert_eq!(s.reports.len(), 2, "direction {k}");
        for rep in &s.reports {
            let h = chi_hessian(&body, &rep.u, &v, 1).unwrap();
            let eig = SymmetricEigen::new(h).eigenvalues;
            let (lo, hi) = eig
                .iter()
                .fold((f64::INFINITY, 0.0f64), |a, l| (a.0.min(l.abs()), a.1.max(l.abs())));
            assert!((hi / lo - 1.0).abs() < 1e-6);
        }
        assert!((s.reports[1].offset - s.reports[0].offset - 3.0).abs() < 1e-10);
    }
}

#[test]
fn reversing_direction_swaps_sides() {
    let body = parse_body("body tube m=2 eps=0.8 psi=radial coeffs=1,-1.2,0.5").unwrap();
    let v = scan_direction(5, 1, 0);
    let w: Vec<f64> = v.iter().map(|x| -x).collect();
    let a = find_tangencies(&body, &v, 5, &opts()).unwrap();
    let b = find_tangencies(&body, &w, 5, &opts()).unwrap();
    assert!(!a.reports.is_empty());
    for ra in &a.reports {
        let rb = b
            .reports
            .iter()
            .find(|rb| rb.u.iter().zip(&ra.u).all(|(x, y)| (x - y).abs() < 1e-8))
            .expect("same tangency for the opposite direction");
        assert!((rb.offset + ra.offset).abs() < 1e-10);
        assert_eq!((rb.index_plus, rb.index_minus), (ra.index_minus, ra.index_plus));
        assert_eq!((rb.verdict_plus, rb.verdict_minus), (ra.verdict_minus, ra.verdict_plus));
    }
}

#[test]
fn side_flip_negates_exactly() {
    let body = parse_body("body tube m=1 eps=0.3 psi=quadratic diag=1").unwrap();
    let v = [1.0, 0.0, 0.0, 0.0];
    for u in [[1.3, 0.0, 0.0, 0.0], [0.7, 0.0, 0.0, 0.0], [-1.3, 0.0, 0.0, 0.0]] {
        let p = chi_hessian(&body, &u, &v, 1).unwrap();
        let m = chi_hessian(&body, &u, &v, -1).unwrap();
        assert_eq!(p, -m);
    }
}

#[test]
fn inner_equator_has_mixed_curvature() {
    // at u = (1 - eps, 0, 0, 0, 0) with v = e1: grad f = -2 eps e1 and
    // Hess f restricted to (x2, x3, y1, y2) is diag(-2eps/(1-eps), ., 2 c1, 2 c1)
    let eps = 0.8;
    let body = BodyModel::tube(PsiSpec::radial(2, vec![1.0, -1.2, 0.5]).unwrap(), eps).unwrap();
    let v = [1.0, 0.0, 0.0, 0.0, 0.0];
    let h = chi_hessian(&body, &[1.0 - eps, 0.0, 0.0, 0.0, 0.0], &v, 1).unwrap();
    let mut eig: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let expect = [-1.0 / (1.0 - eps), -1.0 / (1.0 - eps), 1.0 / eps, 1.0 / eps];
    for (e, x) in eig.iter().zip(expect) {
        assert!((e - x).abs() < 1e-12, "{eig:?}");
    }
}

#[test]
fn scans() {
    let ball = parse_body("body ball radius=1 center=0,0,0").unwrap();
    let s = integrability_scan(&ball, 50, 0, &opts()).unwrap();
    assert_eq!(s.verdict, ScanVerdict::NoObstructionFound);
    assert!(s.index_counts.keys().all(|(p, m)| p % 2 == 0 && m % 2 == 0));

    let disk = parse_body("body ball radius=1 center=0,0").unwrap();
    let s = integrability_scan(&disk, 20, 0, &opts()).unwrap();
    assert_eq!(s.verdict, ScanVerdict::AlternationConsistent);

    let tube = parse_body("body tube m=2 eps=0.8 psi=radial coeffs=1,-1.2,0.5").unwrap();
    let s = integrability_scan(&tube, 50, 0, &opts()).unwrap();
    assert_eq!(s.verdict, ScanVerdict::Obstructed);
}
