//! The symmetric data matrix, its column-block decomposition into sampled
//! components, and the norm estimates built on top of them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

// Float supplies sqrt/abs/ln when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::Mat;
use crate::error::{Error, Result};

/// A square linear map applied to blocks of column vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `M · X` for an `n × k` block `X`.
    fn apply(&self, x: &Mat) -> Mat;

    /// `Mᵀ · X`. Defaults to [`apply`](Self::apply) for symmetric operators.
    fn apply_transpose(&self, x: &Mat) -> Mat {
        self.apply(x)
    }
}

impl LinearOperator for Mat {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols(), "dense operator must be square");
        self.rows()
    }

    fn apply(&self, x: &Mat) -> Mat {
        self.matmul(x)
    }

    fn apply_transpose(&self, x: &Mat) -> Mat {
        self.tr_matmul(x)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &Mat) -> Mat {
        (**self).apply(x)
    }
    fn apply_transpose(&self, x: &Mat) -> Mat {
        (**self).apply_transpose(x)
    }
}

/// Real symmetric sparse matrix.
///
/// Entries are ingested for one triangle and mirrored into a full
/// compressed-sparse-row structure, so row `j` doubles as column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseMatrix {
    n: usize,
    /// Canonical lower-triangle entries `(row ≥ col)`, sorted by (row, col).
    lower: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricSparseMatrix {
    /// Assembles from triangle entries. Entries given above the diagonal are
    /// mirrored to their lower-triangle position before duplicate detection.
    pub fn from_triplets<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut lower: Vec<(usize, usize, f64, usize)> = Vec::new();
        for (position, (i, j, v)) in entries.into_iter().enumerate() {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, dim: n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, dim: n });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { position });
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            lower.push((r, c, v, position));
        }
        lower.sort_by_key(|a| (a.0, a.1, a.3));
        for w in lower.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::DuplicateEntry { row: w[1].0, col: w[1].1, position: w[1].3 });
            }
        }
        let lower: Vec<(usize, usize, f64)> = lower.into_iter().map(|(r, c, v, _)| (r, c, v)).collect();

        let mut counts = vec![0usize; n];
        for &(r, c, _) in &lower {
            counts[r] += 1;
            if r != c {
                counts[c] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let nnz = row_ptr[n];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut fill = row_ptr.clone();
        for &(r, c, v) in &lower {
            col_idx[fill[r]] = c;
            values[fill[r]] = v;
            fill[r] += 1;
            if r != c {
                col_idx[fill[c]] = r;
                values[fill[c]] = v;
                fill[c] += 1;
            }
        }
        // Rows are filled in (row, col) order of the lower triangle; sort each
        // row by column so traversal order is canonical.
        for i in 0..n {
            let range = row_ptr[i]..row_ptr[i + 1];
            let mut pairs: Vec<(usize, f64)> =
                col_idx[range.clone()].iter().copied().zip(values[range.clone()].iter().copied()).collect();
            pairs.sort_by_key(|p| p.0);
            for (slot, (c, v)) in range.zip(pairs) {
                col_idx[slot] = c;
                values[slot] = v;
            }
        }
        Ok(SymmetricSparseMatrix { n, lower, row_ptr, col_idx, values })
    }

    /// Lower triangle of a dense symmetric matrix; exact zeros are dropped.
    pub fn from_dense(a: &Mat) -> Result<Self> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::DimensionMismatch(format!("expected square matrix, got {n}x{m}")));
        }
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                if a[(i, j)] != 0.0 {
                    entries.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0))).expect("identity is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored (one-triangle) entry count.
    pub fn nnz_stored(&self) -> usize {
        self.lower.len()
    }

    /// Nonzeros of the full mirrored matrix.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Canonical lower-triangle entries, sorted by (row, col).
    pub fn lower_entries(&self) -> &[(usize, usize, f64)] {
        &self.lower
    }

    /// Row `i` of the full matrix as (column, value) slices.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn to_dense(&self) -> Mat {
        let mut d = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// `A · X` by rows of the CSR structure.
    pub fn matvec(&self, x: &Mat) -> Mat {
        assert_eq!(x.rows(), self.n, "matvec dimension mismatch");
        let k = x.cols();
        let mut y = Mat::zeros(self.n, k);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let out = y.row_mut(i);
            for (&j, &a) in cols.iter().zip(vals) {
                for (o, &xv) in out.iter_mut().zip(x.row(j)) {
                    *o += a * xv;
                }
            }
        }
        y
    }

    /// `Aᵀ · X` by scattering rows as columns. Equal to [`matvec`](Self::matvec)
    /// by symmetry; kept separate so the symmetry contract is checkable.
    pub fn matvec_transpose(&self, x: &Mat) -> Mat {
        assert_eq!(x.rows(), self.n, "matvec dimension mismatch");
        let k = x.cols();
        let mut y = Mat::zeros(self.n, k);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let xi: Vec<f64> = x.row(i).to_vec();
            for (&j, &a) in cols.iter().zip(vals) {
                for (o, &xv) in y.row_mut(j).iter_mut().zip(&xi) {
                    *o += a * xv;
                }
            }
        }
        y
    }

    /// Matrix 1-norm: largest absolute column sum.
    pub fn one_norm(&self) -> f64 {
        // Column j equals row j by symmetry.
        (0..self.n).map(|j| self.row(j).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

impl LinearOperator for SymmetricSparseMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &Mat) -> Mat {
        self.matvec(x)
    }
    fn apply_transpose(&self, x: &Mat) -> Mat {
        self.matvec_transpose(x)
    }
}

/// Largest absolute column sum of the assembled matrix.
pub fn matrix_one_norm(a: &SymmetricSparseMatrix) -> f64 {
    a.one_norm()
}

/// Decomposition `A = (1/L) Σ_l A⁽ˡ⁾` where `A⁽ˡ⁾` is `L` times column block
/// `l` of `A` (zero elsewhere), optionally divided through by a norm bound `r`.
///
/// Components are implicit views over the shared CSR storage.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    matrix: SymmetricSparseMatrix,
    block_size: usize,
    blocks: usize,
    /// Divisor applied to every component (and so to the operator as a whole).
    norm_bound: f64,
}

/// Splits `A` into `⌈n / block_size⌉` column blocks; the last may be short.
pub fn partition_column_blocks(a: SymmetricSparseMatrix, block_size: usize) -> Result<BlockPartition> {
    let n = a.n();
    if block_size == 0 || block_size > n {
        return Err(Error::InvalidArgument(format!("block_size must lie in [1, {n}], got {block_size}")));
    }
    let blocks = n.div_ceil(block_size);
    Ok(BlockPartition { matrix: a, block_size, blocks, norm_bound: 1.0 })
}

impl BlockPartition {
    pub fn matrix(&self) -> &SymmetricSparseMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Number of components `L`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Column range owned by component `l`.
    pub fn block_range(&self, l: usize) -> Range<usize> {
        let start = l * self.block_size;
        start..(start + self.block_size).min(self.n())
    }

    /// Current divisor `r` (1 unless rescaled).
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Multiplier applied to column block `l` to form a component: `L / r`.
    pub fn scale(&self) -> f64 {
        self.blocks as f64 / self.norm_bound
    }

    /// Divides every component (and the averaged operator) by `r > 0`.
    pub fn with_norm_bound(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("norm bound must be positive and finite, got {r}")));
        }
        self.norm_bound = r;
        Ok(self)
    }

    /// Rescales by [`gershgorin_bound`] so every component has `‖A⁽ˡ⁾‖₂ ≤ 1`.
    /// A zero matrix is left unscaled.
    pub fn rescaled(self) -> Self {
        let r = gershgorin_bound(&self);
        if r > 0.0 {
            BlockPartition { norm_bound: self.norm_bound * r, ..self }
        } else {
            self
        }
    }

    fn check_block(&self, l: usize) -> Result<()> {
        if l >= self.blocks {
            return Err(Error::IndexOutOfRange { index: l, dim: self.blocks });
        }
        Ok(())
    }

    /// `A⁽ˡ⁾ · X`, touching only the nonzeros of block `l`.
    pub fn block_matvec(&self, l: usize, x: &Mat) -> Result<Mat> {
        self.check_block(l)?;
        if x.rows() != self.n() {
            return Err(Error::DimensionMismatch(format!("X has {} rows, expected {}", x.rows(), self.n())));
        }
        let scale = self.scale();
        let mut y = Mat::zeros(self.n(), x.cols());
        let mut xs = vec![0.0; x.cols()];
        for j in self.block_range(l) {
            // Column j of A is row j by symmetry.
            let (rows, vals) = self.matrix.row(j);
            xs.iter_mut().zip(x.row(j)).for_each(|(s, &v)| *s = scale * v);
            for (&i, &a) in rows.iter().zip(vals) {
                for (o, &xv) in y.row_mut(i).iter_mut().zip(&xs) {
                    *o += a * xv;
                }
            }
        }
        Ok(y)
    }

    /// `A⁽ˡ⁾ᵀ · X`: rows of block `l` of `A X`, other rows zero.
    pub fn block_matvec_transpose(&self, l: usize, x: &Mat) -> Result<Mat> {
        self.check_block(l)?;
        if x.rows() != self.n() {
            return Err(Error::DimensionMismatch(format!("X has {} rows, expected {}", x.rows(), self.n())));
        }
        let scale = self.scale();
        let mut y = Mat::zeros(self.n(), x.cols());
        for j in self.block_range(l) {
            let (cols, vals) = self.matrix.row(j);
            let out = y.row_mut(j);
            for (&i, &a) in cols.iter().zip(vals) {
                for (o, &xv) in out.iter_mut().zip(x.row(i)) {
                    *o += scale * a * xv;
                }
            }
        }
        Ok(y)
    }

    /// The averaged operator `(1/L) Σ_l A⁽ˡ⁾ · X = A X / r`, in one CSR pass.
    pub fn full_matvec(&self, x: &Mat) -> Mat {
        let mut y = self.matrix.matvec(x);
        if self.norm_bound != 1.0 {
            y.scale_in_place(1.0 / self.norm_bound);
        }
        y
    }

    /// Operator view of component `l`.
    pub fn component(&self, l: usize) -> Result<Component<'_>> {
        self.check_block(l)?;
        Ok(Component { partition: self, index: l })
    }
}

impl LinearOperator for BlockPartition {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &Mat) -> Mat {
        self.full_matvec(x)
    }
}

/// Borrowed view of one (non-symmetric) component `A⁽ˡ⁾`.
#[derive(Debug, Clone, Copy)]
pub struct Component<'a> {
    partition: &'a BlockPartition,
    index: usize,
}

impl LinearOperator for Component<'_> {
    fn dim(&self) -> usize {
        self.partition.n()
    }
    fn apply(&self, x: &Mat) -> Mat {
        self.partition.block_matvec(self.index, x).expect("component index validated at construction")
    }
    fn apply_transpose(&self, x: &Mat) -> Mat {
        self.partition.block_matvec_transpose(self.index, x).expect("component index validated at construction")
    }
}

/// Upper bound `r ≥ max_l ‖A⁽ˡ⁾‖₂` of the (unrescaled) components from the
/// bound `‖M‖₂ ≤ √(‖M‖₁ ‖M‖∞)` applied to each scaled column block.
pub fn gershgorin_bound(p: &BlockPartition) -> f64 {
    let a = p.matrix();
    let n = a.n();
    let l_count = p.blocks() as f64;
    let mut row_sums = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for l in 0..p.blocks() {
        row_sums.iter_mut().for_each(|s| *s = 0.0);
        let mut max_col: f64 = 0.0;
        for j in p.block_range(l) {
            let (rows, vals) = a.row(j);
            let mut col = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                row_sums[i] += v.abs();
                col += v.abs();
            }
            max_col = max_col.max(col);
        }
        let max_row = row_sums.iter().copied().fold(0.0, f64::max);
        worst = worst.max(l_count * (max_row * max_col).sqrt());
    }
    worst
}

/// Power iteration on `MᵀM`.
///
/// Returns the largest `‖M v‖` seen over unit iterates, a lower bound of
/// `‖M‖₂` that is nondecreasing in `iters`.
pub fn spectral_norm_estimate<M: LinearOperator + ?Sized>(m: &M, iters: usize, seed: u64) -> f64 {
    let n = m.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Mat::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng));
    let nv = v.frobenius();
    v.scale_in_place(1.0 / nv);
    let mut best: f64 = 0.0;
    for _ in 0..iters.max(1) {
        let w = m.apply(&v);
        let est = w.frobenius();
        best = best.max(est);
        if est == 0.0 {
            break;
        }
        let mut u = m.apply_transpose(&w);
        let nu = u.frobenius();
        if nu == 0.0 || !nu.is_finite() {
            break;
        }
        u.scale_in_place(1.0 / nu);
        v = u;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SymmetricSparseMatrix {
        let mut e = Vec::new();
        for i in 0..n {
            e.push((i, i, 2.0 + i as f64 * 0.1));
            if i > 0 {
                e.push((i, i - 1, -1.0));
            }
        }
        SymmetricSparseMatrix::from_triplets(n, e).unwrap()
    }

    #[test]
    fn assembly_mirrors_entries() {
        let a = SymmetricSparseMatrix::from_triplets(3, [(1, 0, 4.0), (2, 2, 1.0), (0, 2, -3.0)]).unwrap();
        let d = a.to_dense();
        assert_eq!(d[(0, 1)], 4.0);
        assert_eq!(d[(1, 0)], 4.0);
        assert_eq!(d[(2, 0)], -3.0);
        assert_eq!(d[(0, 2)], -3.0);
        assert_eq!(a.nnz_stored(), 3);
        assert_eq!(a.nnz(), 5);
    }

    #[test]
    fn one_by_one() {
        let a = SymmetricSparseMatrix::from_triplets(1, [(0, 0, 5.0)]).unwrap();
        assert_eq!(a.to_dense(), Mat::from_rows(&[&[5.0]]));
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(matches!(
            SymmetricSparseMatrix::from_triplets(2, [(2, 0, 1.0)]),
            Err(Error::IndexOutOfRange { index: 2, dim: 2 })
        ));
        assert!(matches!(
            SymmetricSparseMatrix::from_triplets(2, [(1, 0, 1.0), (0, 1, 2.0)]),
            Err(Error::DuplicateEntry { row: 1, col: 0, position: 1 })
        ));
        assert!(matches!(
            SymmetricSparseMatrix::from_triplets(2, [(0, 0, f64::NAN)]),
            Err(Error::NonFinite { position: 0 })
        ));
    }

    #[test]
    fn one_norm_examples() {
        let a = SymmetricSparseMatrix::from_triplets(2, [(0, 0, 2.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        assert_eq!(matrix_one_norm(&a), 3.0);
        let z = SymmetricSparseMatrix::from_triplets(3, core::iter::empty()).unwrap();
        assert_eq!(matrix_one_norm(&z), 0.0);
        assert_eq!(matrix_one_norm(&SymmetricSparseMatrix::identity(5)), 1.0);
    }

    #[test]
    fn block_counts() {
        let a = tridiag(10);
        assert_eq!(partition_column_blocks(a.clone(), 3).unwrap().blocks(), 4);
        assert_eq!(partition_column_blocks(a.clone(), 10).unwrap().blocks(), 1);
        assert_eq!(partition_column_blocks(a.clone(), 3).unwrap().block_range(3), 9..10);
        assert!(partition_column_blocks(a.clone(), 0).is_err());
        assert!(partition_column_blocks(a, 11).is_err());
    }

    #[test]
    fn single_block_equals_matrix() {
        let a = tridiag(4);
        let p = partition_column_blocks(a.clone(), 4).unwrap();
        let x = Mat::from_fn(4, 2, |i, j| (i + 3 * j) as f64);
        assert_eq!(p.block_matvec(0, &x).unwrap(), a.matvec(&x));
    }

    #[test]
    fn scaled_block_of_diagonal() {
        let a = SymmetricSparseMatrix::from_triplets(4, (0..4).map(|i| (i, i, (i + 1) as f64))).unwrap();
        let p = partition_column_blocks(a, 2).unwrap();
        let e1 = Mat::from_fn(4, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let y = p.block_matvec(0, &e1).unwrap();
        assert_eq!(y.as_slice(), &[2.0, 0.0, 0.0, 0.0]);
        assert!(p.block_matvec(1, &e1).unwrap().is_zero());
        assert!(p.block_matvec(2, &e1).is_err());
    }

    #[test]
    fn identity_partition_reconstructs() {
        let p = partition_column_blocks(SymmetricSparseMatrix::identity(4), 2).unwrap();
        let v = Mat::from_rows(&[&[1.0], &[-2.0], &[3.0], &[0.5]]);
        let mut sum = Mat::zeros(4, 1);
        for l in 0..p.blocks() {
            sum.axpy(1.0 / p.blocks() as f64, &p.block_matvec(l, &v).unwrap());
        }
        assert_eq!(sum, v);
    }

    #[test]
    fn zero_block_gives_zero() {
        let a = SymmetricSparseMatrix::from_triplets(4, [(0, 0, 1.0), (1, 0, 2.0)]).unwrap();
        let p = partition_column_blocks(a, 2).unwrap();
        let x = Mat::from_fn(4, 2, |i, j| 1.0 + i as f64 - j as f64);
        assert!(p.block_matvec(1, &x).unwrap().is_zero());
    }

    #[test]
    fn transpose_component_matches_dense() {
        let a = tridiag(7);
        let p = partition_column_blocks(a.clone(), 3).unwrap();
        let dense = a.to_dense();
        let x = Mat::from_fn(7, 2, |i, j| (i as f64 - 2.0) * (j as f64 + 1.0));
        for l in 0..p.blocks() {
            let r = p.block_range(l);
            let comp = Mat::from_fn(7, 7, |i, j| if r.contains(&j) { p.scale() * dense[(i, j)] } else { 0.0 });
            assert!(comp.matmul(&x).sub(&p.block_matvec(l, &x).unwrap()).max_abs() < 1e-12);
            assert!(comp.tr_matmul(&x).sub(&p.block_matvec_transpose(l, &x).unwrap()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn gershgorin_examples() {
        let a = SymmetricSparseMatrix::from_triplets(2, [(0, 0, 2.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let p = partition_column_blocks(a, 2).unwrap();
        assert_eq!(gershgorin_bound(&p), 3.0);
        let p = partition_column_blocks(SymmetricSparseMatrix::identity(3), 3).unwrap();
        assert_eq!(gershgorin_bound(&p), 1.0);
    }

    #[test]
    fn spectral_estimates() {
        let d = Mat::from_diag(&[3.0, 1.0]);
        assert!((spectral_norm_estimate(&d, 50, 1) - 3.0).abs() < 1e-8);
        assert_eq!(spectral_norm_estimate(&Mat::zeros(3, 3), 10, 1), 0.0);
        assert!((spectral_norm_estimate(&Mat::identity(4), 5, 2) - 1.0).abs() < 1e-14);
        let a = tridiag(20);
        let mut prev = 0.0;
        for iters in [1, 2, 4, 8, 16, 32] {
            let est = spectral_norm_estimate(&a, iters, 9);
            assert!(est >= prev);
            prev = est;
        }
    }
}
