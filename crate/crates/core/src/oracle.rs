//! Ground truth for benchmarking: dense symmetric eigendecomposition,
//! synthetic matrices with a prescribed spectrum, and the subspace potential.

use alloc::format;
use alloc::vec::Vec;

// Float supplies sqrt/powi when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigh, orthonormalize};
use crate::matrix::SymmetricSparseMatrix;
use crate::stiefel::StiefelPoint;

/// Largest dimension accepted by [`dense_eigh`].
pub const DENSE_EIGH_MAX_N: usize = 5000;

/// Known eigenvalues (descending) and the leading eigenvector block `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenReference {
    eigenvalues: Vec<f64>,
    v: Mat,
    tau: Option<f64>,
}

impl EigenReference {
    /// `eigenvalues` must be sorted descending and cover at least the
    /// `v.cols()` retained pairs.
    pub fn new(eigenvalues: Vec<f64>, v: Mat) -> Result<Self> {
        if eigenvalues.len() < v.cols() {
            return Err(Error::InvalidArgument(format!(
                "{} eigenvalues cannot describe {} eigenvectors",
                eigenvalues.len(),
                v.cols()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("eigenvalues must be sorted descending".into()));
        }
        let k = v.cols();
        let tau = eigenvalues.get(k).map(|next| eigenvalues[k - 1] - next);
        Ok(EigenReference { eigenvalues, v, tau })
    }

    /// Replaces the computed gap by the exact value known from a construction.
    pub fn with_exact_gap(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    /// Keeps only the leading `k` eigenvectors (all eigenvalues are kept).
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.v.cols() {
            return Err(Error::InvalidArgument(format!("cannot keep {k} of {} eigenvectors", self.v.cols())));
        }
        EigenReference::new(self.eigenvalues.clone(), self.v.columns(0, k))
    }

    pub fn n(&self) -> usize {
        self.v.rows()
    }

    pub fn k(&self) -> usize {
        self.v.cols()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Leading eigenvector block `V` (`n × k`).
    pub fn vectors(&self) -> &Mat {
        &self.v
    }

    /// Eigen-gap `λ_k − λ_{k+1}`, when `λ_{k+1}` is known.
    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    /// Optimal objective `½ Σ_{i≤k} λᵢ`.
    pub fn trace_top_k(&self) -> f64 {
        0.5 * self.eigenvalues[..self.k()].iter().sum::<f64>()
    }

    /// Same subspace for the matrix multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        EigenReference {
            eigenvalues: self.eigenvalues.iter().map(|l| l * factor).collect(),
            v: self.v.clone(),
            tau: self.tau.map(|t| t * factor),
        }
    }
}

/// All eigenpairs of a dense symmetric matrix by cyclic Jacobi.
///
/// Stops once the off-diagonal Frobenius norm is ≤ `1e-13 ‖A‖_F`.
pub fn dense_eigh(a: &Mat, sweeps: usize) -> Result<EigenReference> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::DimensionMismatch(format!("dense_eigh needs a square matrix, got {n}x{m}")));
    }
    if n > DENSE_EIGH_MAX_N {
        return Err(Error::InvalidArgument(format!("n = {n} exceeds the dense limit {DENSE_EIGH_MAX_N}")));
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if a.asymmetry() > 1e-12 * scale {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let eig = jacobi_eigh(a, 1e-13, sweeps)?;
    EigenReference::new(eig.values, eig.vectors)
}

/// Prescribed spectrum used by the synthetic generators: the top `k` values
/// descend from 1 in steps of `0.1/k`, then `λ_{k+1} = λ_k − gap`, and the
/// tail falls linearly by at most 1 without going below −1.
pub fn test_spectrum(n: usize, k: usize, gap: f64) -> Result<Vec<f64>> {
    if k == 0 || n < k + 1 {
        return Err(Error::InvalidArgument(format!("need n >= k + 1 and k >= 1, got n = {n}, k = {k}")));
    }
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::InvalidArgument(format!("eigen-gap must be positive, got {gap}")));
    }
    let mut spectrum: Vec<f64> = (0..k).map(|i| 1.0 - 0.1 * i as f64 / k as f64).collect();
    let next = spectrum[k - 1] - gap;
    if next < -1.0 {
        return Err(Error::InvalidArgument(format!("gap {gap} pushes lambda_(k+1) below -1")));
    }
    let floor = (next - 1.0).max(-1.0);
    let tail = n - k;
    for j in 0..tail {
        let frac = if tail > 1 { j as f64 / (tail - 1) as f64 } else { 0.0 };
        spectrum.push(next - (next - floor) * frac);
    }
    Ok(spectrum)
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Result<Mat> {
    let g = Mat::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    orthonormalize(&g)
}

/// `A = Q D Qᵀ` with a Haar-like random orthogonal `Q` and [`test_spectrum`]
/// `D`, so `‖A‖₂ ≤ 1` and `λ_k − λ_{k+1} = gap`. The reference is taken
/// from the construction.
pub fn make_test_matrix(n: usize, k: usize, gap: f64, seed: u64) -> Result<(SymmetricSparseMatrix, EigenReference)> {
    let spectrum = test_spectrum(n, k, gap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthogonal(n, &mut rng)?;
    let mut entries = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        let qi = q.row(i);
        for j in 0..=i {
            let qj = q.row(j);
            let v: f64 = spectrum.iter().zip(qi.iter().zip(qj)).map(|(d, (a, b))| d * a * b).sum();
            entries.push((i, j, v));
        }
    }
    let a = SymmetricSparseMatrix::from_triplets(n, entries)?;
    let reference = EigenReference::new(spectrum, q.columns(0, k))?.with_exact_gap(gap);
    Ok((a, reference))
}

/// Sparse analogue of [`make_test_matrix`]: `Q` is block diagonal with
/// random orthogonal blocks of size `cluster` on randomly permuted index
/// sets, and the spectrum is shuffled across blocks. The matrix has about
/// `n · cluster` nonzeros.
pub fn make_sparse_test_matrix(
    n: usize,
    k: usize,
    gap: f64,
    cluster: usize,
    seed: u64,
) -> Result<(SymmetricSparseMatrix, EigenReference)> {
    clustered(n, k, gap, cluster, seed)
}

/// `A = VΛVᵀ + A_rest` with the top `k` eigenpairs planted on a random
/// index set of size `support` and a clustered sparse `A_rest` (as in
/// [`make_sparse_test_matrix`]) on the complement.
///
/// The other `support − k` eigenvalues on the planted set are zero, so
/// `λ_k − gap` must be non-negative. Since `A⁽ˡ⁾V` stays in the span of
/// `V` for every column block, sampling noise vanishes at the solution.
pub fn make_planted_test_matrix(
    n: usize,
    k: usize,
    gap: f64,
    support: usize,
    cluster: usize,
    seed: u64,
) -> Result<(SymmetricSparseMatrix, EigenReference)> {
    if cluster == 0 {
        return Err(Error::InvalidArgument("cluster size must be positive".into()));
    }
    if support < k || support >= n {
        return Err(Error::InvalidArgument(format!("planted support {support} must lie in [k, n) = [{k}, {n})")));
    }
    let full = test_spectrum(n - support + k, k, gap)?;
    let (top, tail) = full.split_at(k);
    if tail[0] < 0.0 {
        return Err(Error::InvalidArgument(format!("gap {gap} pushes lambda_(k+1) below zero")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let (planted, rest) = perm.split_at(support);

    let mut entries = Vec::new();
    let q = random_orthogonal(support, &mut rng)?;
    let mut v = Mat::zeros(n, k);
    for a in 0..support {
        for j in 0..k {
            v[(planted[a], j)] = q[(a, j)];
        }
        for b in 0..=a {
            let val: f64 = (0..k).map(|j| top[j] * q[(a, j)] * q[(b, j)]).sum();
            entries.push((planted[a], planted[b], val));
        }
    }
    let mut order: Vec<usize> = (0..tail.len()).collect();
    order.shuffle(&mut rng);
    for (c, idx) in rest.chunks(cluster).enumerate() {
        let q = random_orthogonal(idx.len(), &mut rng)?;
        let lambdas: Vec<f64> = (0..idx.len()).map(|p| tail[order[c * cluster + p]]).collect();
        push_cluster(&mut entries, idx, &lambdas, &q);
    }

    let mut spectrum: Vec<f64> = full.clone();
    spectrum.extend(core::iter::repeat_n(0.0, support - k));
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let a = SymmetricSparseMatrix::from_triplets(n, entries)?;
    let reference = EigenReference::new(spectrum, v)?.with_exact_gap(gap);
    Ok((a, reference))
}

fn push_cluster(entries: &mut Vec<(usize, usize, f64)>, idx: &[usize], lambdas: &[f64], q: &Mat) {
    for a in 0..idx.len() {
        for b in 0..=a {
            let val: f64 = (0..idx.len()).map(|p| lambdas[p] * q[(a, p)] * q[(b, p)]).sum();
            if val != 0.0 {
                entries.push((idx[a], idx[b], val));
            }
        }
    }
}

fn clustered(
    n: usize,
    k: usize,
    gap: f64,
    cluster: usize,
    seed: u64,
) -> Result<(SymmetricSparseMatrix, EigenReference)> {
    if cluster == 0 {
        return Err(Error::InvalidArgument("cluster size must be positive".into()));
    }
    let spectrum = test_spectrum(n, k, gap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    // slot s holds spectrum[rank[s]]
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut rng);

    let mut entries = Vec::new();
    let mut v = Mat::zeros(n, k);
    for (c, idx) in perm.chunks(cluster).enumerate() {
        let size = idx.len();
        let q = random_orthogonal(size, &mut rng)?;
        let lambdas: Vec<f64> = (0..size).map(|p| spectrum[rank[c * cluster + p]]).collect();
        push_cluster(&mut entries, idx, &lambdas, &q);
        for p in 0..size {
            let r = rank[c * cluster + p];
            if r < k {
                for a in 0..size {
                    v[(idx[a], r)] = q[(a, p)];
                }
            }
        }
    }
    let a = SymmetricSparseMatrix::from_triplets(n, entries)?;
    let reference = EigenReference::new(spectrum, v)?.with_exact_gap(gap);
    Ok((a, reference))
}

/// Leading `k` eigenpairs (plus `λ_{k+1}` for the gap) of a large sparse
/// matrix by shifted subspace iteration with Rayleigh–Ritz.
///
/// Iterates on `A + ‖A‖₁ I` with `2k + 8` columns and stops once every one
/// of the leading `k + 1` Ritz residuals `‖Ax − θx‖` is at most
/// `tol · ‖A‖₁`. Convergence is geometric in the ratio of shifted
/// eigenvalues, so a tiny gap needs many iterations.
pub fn subspace_reference(
    a: &SymmetricSparseMatrix,
    k: usize,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<EigenReference> {
    let n = a.n();
    if k == 0 || k + 1 > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    let p = (2 * k + 8).min(n);
    let shift = a.one_norm();
    let scale = shift.max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = random_orthogonal_columns(n, p, &mut rng)?;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let ax = a.matvec(&x);
        let h = x.tr_matmul(&ax).sym();
        let eig = jacobi_eigh(&h, 1e-15, 100)?;
        let ritz = x.matmul(&eig.vectors);
        let a_ritz = ax.matmul(&eig.vectors);
        residual = (0..=k)
            .map(|j| {
                let r: f64 = (0..n).map(|i| (a_ritz[(i, j)] - eig.values[j] * ritz[(i, j)]).powi(2)).sum();
                r.sqrt()
            })
            .fold(0.0, f64::max);
        if residual <= tol * scale {
            let mut values = eig.values;
            values.truncate(k + 1);
            return EigenReference::new(values, ritz.columns(0, k));
        }
        let mut y = a_ritz;
        y.axpy(shift, &ritz);
        x = orthonormalize(&y)?;
    }
    Err(Error::NoConvergence { sweeps: max_iters, residual: residual / scale })
}

fn random_orthogonal_columns(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Result<Mat> {
    let g = Mat::from_fn(n, p, |_, _| StandardNormal.sample(rng));
    orthonormalize(&g)
}

/// Subspace potential `Θ(X) = k − ‖VᵀX‖²_F`.
///
/// Evaluated as `‖X − V(VᵀX)‖²_F`, which is the same quantity for
/// orthonormal `X` but keeps full relative accuracy as `Θ → 0`.
pub fn potential(reference: &EigenReference, x: &StiefelPoint) -> Result<f64> {
    let v = reference.vectors();
    if v.shape() != x.matrix().shape() {
        return Err(Error::DimensionMismatch(format!(
            "reference is {}x{} but X is {}x{}",
            v.rows(),
            v.cols(),
            x.n(),
            x.k()
        )));
    }
    let coeffs = v.tr_matmul(x.matrix());
    let residual = x.matrix().sub(&v.matmul(&coeffs));
    Ok(residual.frobenius_sq().clamp(0.0, x.k() as f64))
}
