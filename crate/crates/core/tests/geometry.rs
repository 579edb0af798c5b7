//! Stiefel operations against independent constructions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use svrrg_core::stiefel::objective;
use svrrg_core::{
    make_test_matrix, procrustes_align, project_tangent, retract, riemannian_gradient, vector_transport, Mat,
    StiefelPoint,
};

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal basis of `T_X St(n, k)` in the Frobenius inner product:
/// `X⊥ e_i e_jᵀ` plus `X (e_a e_bᵀ − e_b e_aᵀ)/√2`.
fn tangent_basis(x: &Mat, rng: &mut ChaCha8Rng) -> Vec<Mat> {
    let (n, k) = x.shape();
    // Gram-Schmidt on [X | random] to complete X.
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| x.column(j)).collect();
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(vi, ci)| *vi -= d * ci);
            }
        }
        let nv = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        v.iter_mut().for_each(|t| *t /= nv);
        cols.push(v);
    }
    let mut basis = Vec::new();
    for c in &cols[k..] {
        for j in 0..k {
            basis.push(Mat::from_fn(n, k, |r, cc| if cc == j { c[r] } else { 0.0 }));
        }
    }
    for a in 0..k {
        for b in (a + 1)..k {
            let mut w = Mat::zeros(k, k);
            w[(a, b)] = 1.0 / 2f64.sqrt();
            w[(b, a)] = -1.0 / 2f64.sqrt();
            basis.push(x.matmul(&w));
        }
    }
    basis
}

#[test]
fn projection_matches_explicit_basis_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = StiefelPoint::random(6, 2, &mut rng).unwrap();
    let basis = tangent_basis(x.matrix(), &mut rng);
    assert_eq!(basis.len(), 6 * 2 - 3);
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((bi.inner(bj) - expected).abs() < 1e-12);
        }
    }
    for _ in 0..10 {
        let z = gaussian(6, 2, &mut rng);
        let mut oracle = Mat::zeros(6, 2);
        for b in &basis {
            oracle.axpy(z.inner(b), b);
        }
        let got = project_tangent(&x, &z).unwrap();
        assert!(got.matrix().sub(&oracle).frobenius() < 1e-12);
    }
}

fn givens(theta: f64, reflect: bool) -> Mat {
    let (s, c) = theta.sin_cos();
    if reflect {
        Mat::from_rows(&[&[c, s], &[s, -c]])
    } else {
        Mat::from_rows(&[&[c, -s], &[s, c]])
    }
}

#[test]
fn procrustes_attains_sampled_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let x = StiefelPoint::random(8, 2, &mut rng).unwrap();
        let xt = StiefelPoint::random(8, 2, &mut rng).unwrap();
        let b = procrustes_align(&x, &xt).unwrap().rotation;
        let got = x.matrix().sub(&xt.matrix().matmul(&b)).frobenius_sq();
        let mut best = f64::INFINITY;
        for i in 0..10_000 {
            let b = givens(2.0 * std::f64::consts::PI * (i / 2) as f64 / 5000.0, i % 2 == 1);
            best = best.min(x.matrix().sub(&xt.matrix().matmul(&b)).frobenius_sq());
        }
        assert!(got <= best + 1e-12, "{got} > {best}");
        assert!(best - got <= 1e-6, "{best} vs {got}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let (a, _) = make_test_matrix(30, 3, 0.3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = StiefelPoint::random(30, 3, &mut rng).unwrap();
    let g = riemannian_gradient(&a, &x).unwrap();
    let f0 = objective(&a, x.matrix());
    let t = 1e-6;
    for _ in 0..20 {
        let xi = project_tangent(&x, &gaussian(30, 3, &mut rng)).unwrap();
        let xi = xi.scaled(1.0 / xi.matrix().frobenius());
        let fd = (objective(&a, retract(&x, &xi.scaled(t)).unwrap().matrix()) - f0) / t;
        let exact = g.matrix().inner(xi.matrix());
        assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1e-3), "fd {fd} exact {exact}");
    }
}

fn spectral_norm(m: &Mat) -> f64 {
    svrrg_core::theory::spectral_norm(m).unwrap()
}

#[test]
fn transport_round_trip_error_shrinks_with_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = StiefelPoint::random(12, 3, &mut rng).unwrap();
    let xi = project_tangent(&a, &gaussian(12, 3, &mut rng)).unwrap();
    let eta = project_tangent(&a, &gaussian(12, 3, &mut rng)).unwrap();
    let mut previous = f64::INFINITY;
    for t in [1.0, 1e-1, 1e-2, 1e-3, 1e-4] {
        let b = retract(&a, &eta.scaled(t)).unwrap();
        let there = vector_transport(&a, &b, &xi).unwrap();
        let back = vector_transport(&b, &a, &there).unwrap();
        let err = back.matrix().sub(xi.matrix()).frobenius();
        let gap = spectral_norm(&a.matrix().tr_matmul(b.matrix()).sub(&Mat::identity(3)));
        assert!(err <= 2.0 * xi.matrix().frobenius() * gap + 1e-12, "t={t}: {err} vs {gap}");
        assert!(err <= previous + 1e-15);
        previous = err;
    }
    assert!(previous < 1e-6);
}

#[test]
fn retraction_is_first_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = StiefelPoint::random(10, 2, &mut rng).unwrap();
    let xi = project_tangent(&x, &gaussian(10, 2, &mut rng)).unwrap();
    for t in [1e-2, 1e-3, 1e-4] {
        let r = retract(&x, &xi.scaled(t)).unwrap();
        let lin = x.matrix().add(&xi.matrix().scaled(t));
        assert!(r.matrix().sub(&lin).frobenius() <= 10.0 * t * t * xi.matrix().frobenius_sq());
    }
}
