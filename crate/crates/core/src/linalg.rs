//! Small dense kernels: cyclic Jacobi for symmetric matrices, one-sided
//! Jacobi SVD, inverse square roots and thin QR.

use alloc::format;
use alloc::vec::Vec;

// Float supplies sqrt/abs/ln when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::dense::{dot, Mat};
use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: Mat,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm is at most `rel_tol · ‖A‖_F`
/// or a sweep makes no rotation. Rotations whose pivot is negligible against
/// both diagonal entries are replaced by an exact zero.
pub fn jacobi_eigh(a: &Mat, rel_tol: f64, max_sweeps: usize) -> Result<SymEig> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::DimensionMismatch(format!("jacobi_eigh needs a square matrix, got {n}x{m}")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut a = a.sym();
    let mut v = Mat::identity(n);
    let scale = a.frobenius();
    let target = rel_tol * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target || off == 0.0 {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::NoConvergence { sweeps, residual: off });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                // A <- J^T A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEig { values, vectors, sweeps })
}

/// `S^{-1/2}` of a symmetric positive definite matrix via its eigendecomposition.
pub fn inv_sqrt_spd(s: &Mat) -> Result<Mat> {
    let (n, m) = s.shape();
    if n != m {
        return Err(Error::DimensionMismatch(format!("inv_sqrt_spd needs a square matrix, got {n}x{m}")));
    }
    let eig = jacobi_eigh(s, 0.0, 100)?;
    let min = eig.values.last().copied().unwrap_or(1.0);
    if !(min > 0.0) {
        return Err(Error::NotSpd { min_eigenvalue: min });
    }
    let q = &eig.vectors;
    let inv_roots: Vec<f64> = eig.values.iter().map(|&l| 1.0 / l.sqrt()).collect();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (p, w) in inv_roots.iter().enumerate() {
                acc += q[(i, p)] * w * q[(j, p)];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
    }
    Ok(out)
}

/// Thin SVD `M = U Σ Vᵀ` of a square matrix, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
    /// Numerical rank (singular values above `n·ε·σ_max`).
    pub rank: usize,
}

/// One-sided (Hestenes) Jacobi SVD of a small square matrix.
///
/// Left singular vectors for zero singular values are completed to an
/// orthonormal basis, so `u` and `v` are always orthogonal.
pub fn svd_square(m: &Mat) -> Result<Svd> {
    let (n, c) = m.shape();
    if n != c {
        return Err(Error::DimensionMismatch(format!("svd_square needs a square matrix, got {n}x{c}")));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    // Work on columns: store U and V transposed so each column is a contiguous row.
    let mut ut = m.transpose();
    let mut vt = Mat::identity(n);
    let eps = f64::EPSILON;
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = dot(ut.row(i), ut.row(i));
                let beta = dot(ut.row(j), ut.row(j));
                let gamma = dot(ut.row(i), ut.row(j));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut ut, &mut vt] {
                    for k in 0..n {
                        let a = mat[(i, k)];
                        let b = mat[(j, k)];
                        mat[(i, k)] = cs * a - sn * b;
                        mat[(j, k)] = sn * a + cs * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|i| dot(ut.row(i), ut.row(i)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let cutoff = (n as f64) * eps * smax;
    let rank = sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count();

    let mut u = Mat::zeros(n, n);
    let mut v = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            v[(k, col)] = vt[(src, k)];
        }
        if col < rank {
            for k in 0..n {
                u[(k, col)] = ut[(src, k)] / norms[src];
            }
        }
    }
    // Re-orthonormalize the retained left vectors, then complete the basis.
    complete_orthonormal_columns(&mut u, rank);
    Ok(Svd { u, sigma, v, rank })
}

/// Makes columns `0..n` of the square `u` orthonormal, keeping the span of
/// the first `keep` columns and filling the rest from coordinate vectors.
fn complete_orthonormal_columns(u: &mut Mat, keep: usize) {
    let n = u.rows();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..keep {
        let mut c = u.column(j);
        for _ in 0..2 {
            for prev in &cols {
                let d = dot(&c, prev);
                c.iter_mut().zip(prev).for_each(|(x, p)| *x -= d * p);
            }
        }
        let nrm = dot(&c, &c).sqrt();
        c.iter_mut().for_each(|x| *x /= nrm);
        cols.push(c);
    }
    let mut e = 0;
    while cols.len() < n && e < n {
        let mut c = alloc::vec![0.0; n];
        c[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for prev in &cols {
                let d = dot(&c, prev);
                c.iter_mut().zip(prev).for_each(|(x, p)| *x -= d * p);
            }
        }
        let nrm = dot(&c, &c).sqrt();
        if nrm > 1e-8 {
            c.iter_mut().for_each(|x| *x /= nrm);
            cols.push(c);
        }
    }
    for (j, c) in cols.iter().enumerate() {
        u.set_column(j, c);
    }
}

/// Thin QR orthonormalization (modified Gram–Schmidt, two passes) of the
/// columns of a tall matrix. Returns the `Q` factor.
pub fn orthonormalize(a: &Mat) -> Result<Mat> {
    let (n, k) = a.shape();
    if k > n {
        return Err(Error::DimensionMismatch(format!("cannot orthonormalize {k} columns in dimension {n}")));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut c = a.column(j);
        let orig = dot(&c, &c).sqrt();
        for _ in 0..2 {
            for prev in &cols {
                let d = dot(&c, prev);
                c.iter_mut().zip(prev).for_each(|(x, p)| *x -= d * p);
            }
        }
        let nrm = dot(&c, &c).sqrt();
        if !(nrm > 1e-12 * orig.max(f64::MIN_POSITIVE)) {
            return Err(Error::InvalidArgument(format!("column {j} is linearly dependent on earlier columns")));
        }
        c.iter_mut().for_each(|x| *x /= nrm);
        cols.push(c);
    }
    let mut q = Mat::zeros(n, k);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    Ok(q)
}
