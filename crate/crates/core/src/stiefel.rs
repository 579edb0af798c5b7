//! Geometry of the Stiefel manifold `St(n,k) = {X : XᵀX = I}` under the
//! Euclidean metric `⟨ξ, η⟩ = tr(ξᵀη)`.

use alloc::format;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, svd_square};
use crate::matrix::LinearOperator;

/// Largest `‖XᵀX − I‖_F` accepted for a point on the manifold.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// `‖XᵀX − I‖_F` of an arbitrary `n × k` matrix.
pub fn orthonormality_residual(x: &Mat) -> f64 {
    x.tr_matmul(x).sub(&Mat::identity(x.cols())).frobenius()
}

/// An `n × k` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    x: Mat,
}

impl StiefelPoint {
    /// Wraps `x` after checking `‖XᵀX − I‖_F ≤ FEASIBILITY_TOL`.
    pub fn new(x: Mat) -> Result<Self> {
        if x.cols() == 0 || x.cols() > x.rows() {
            return Err(Error::DimensionMismatch(format!("St(n,k) needs 1 <= k <= n, got {}x{}", x.rows(), x.cols())));
        }
        let residual = orthonormality_residual(&x);
        if !(residual <= FEASIBILITY_TOL) {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(StiefelPoint { x })
    }

    /// Orthonormalizes the columns of `a` (thin QR) to land on the manifold.
    pub fn orthonormalized(a: &Mat) -> Result<Self> {
        StiefelPoint::new(orthonormalize(a)?)
    }

    /// Standard-normal `n × k` draw followed by thin QR.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        let a = Mat::from_fn(n, k, |_, _| StandardNormal.sample(rng));
        StiefelPoint::orthonormalized(&a)
    }

    /// First `k` columns of the identity.
    pub fn leading_coordinates(n: usize, k: usize) -> Result<Self> {
        StiefelPoint::new(Mat::from_fn(n, k, |i, j| if i == j { 1.0 } else { 0.0 }))
    }

    pub fn matrix(&self) -> &Mat {
        &self.x
    }

    pub fn into_matrix(self) -> Mat {
        self.x
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn k(&self) -> usize {
        self.x.cols()
    }

    pub fn feasibility(&self) -> f64 {
        orthonormality_residual(&self.x)
    }

    /// `X R` for an orthogonal `k × k` matrix `R`.
    pub fn rotated(&self, r: &Mat) -> Result<Self> {
        if r.shape() != (self.k(), self.k()) {
            return Err(Error::DimensionMismatch(format!("rotation must be {0}x{0}", self.k())));
        }
        StiefelPoint::new(self.x.matmul(r))
    }
}

/// A direction `Z` in the tangent space at some point `X`, so `XᵀZ` is skew.
///
/// Only produced by [`project_tangent`] and the routines built on it.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    z: Mat,
}

impl TangentVector {
    pub fn matrix(&self) -> &Mat {
        &self.z
    }

    pub fn into_matrix(self) -> Mat {
        self.z
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        TangentVector { z: Mat::zeros(n, k) }
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector { z: self.z.scaled(s) }
    }

    /// `‖XᵀZ + ZᵀX‖_F`, zero for an exact tangent vector at `x`.
    pub fn tangency_residual(&self, x: &StiefelPoint) -> f64 {
        let h = x.matrix().tr_matmul(&self.z);
        h.add(&h.transpose()).frobenius()
    }

    /// Wraps a matrix known to be tangent at `x` (e.g. a combination of
    /// tangent vectors at the same point).
    pub(crate) fn from_tangent_matrix(z: Mat) -> Self {
        TangentVector { z }
    }
}

fn check_shape(x: &StiefelPoint, z: &Mat) -> Result<()> {
    if x.matrix().shape() != z.shape() {
        return Err(Error::DimensionMismatch(format!(
            "point is {}x{} but direction is {}x{}",
            x.n(),
            x.k(),
            z.rows(),
            z.cols()
        )));
    }
    Ok(())
}

/// Orthogonal projection `P_X(Z) = (I − XXᵀ)Z + X skew(XᵀZ)`.
pub fn project_tangent(x: &StiefelPoint, z: &Mat) -> Result<TangentVector> {
    check_shape(x, z)?;
    let xm = x.matrix();
    // (I − XXᵀ)Z + X skew(XᵀZ) = Z − X sym(XᵀZ)
    let h = xm.tr_matmul(z).sym();
    let mut out = z.clone();
    out.axpy(-1.0, &xm.matmul(&h));
    Ok(TangentVector { z: out })
}

/// Retraction `R_X(ξ) = (X + ξ)(I + ξᵀξ)^{-1/2}`, the polar factor of
/// `Y = X + ξ`.
///
/// Evaluated as `Q · polar(R)` from a thin QR `Y = QR`, which gives the
/// same point as `Y(YᵀY)^{-1/2}` but stays orthonormal to working precision
/// even for long steps where `YᵀY` is badly conditioned.
pub fn retract(x: &StiefelPoint, xi: &TangentVector) -> Result<StiefelPoint> {
    check_shape(x, xi.matrix())?;
    if xi.matrix().is_zero() {
        return Ok(x.clone());
    }
    let y = x.matrix().add(xi.matrix());
    if !y.is_finite() {
        return Err(Error::InvalidArgument("retraction input is not finite".into()));
    }
    let q = orthonormalize(&y)?;
    let r = q.tr_matmul(&y);
    let svd = svd_square(&r)?;
    StiefelPoint::new(q.matmul(&svd.u.matmul_tr(&svd.v)))
}

/// Vector transport by projection onto the destination tangent space.
pub fn vector_transport(from: &StiefelPoint, to: &StiefelPoint, xi: &TangentVector) -> Result<TangentVector> {
    check_shape(from, xi.matrix())?;
    project_tangent(to, xi.matrix())
}

/// `(I − XXᵀ) M` for an `n × k` product `M` (e.g. `M = A X`).
pub(crate) fn complement_projection(x: &Mat, m: &Mat) -> Mat {
    let mut out = m.clone();
    out.axpy(-1.0, &x.matmul(&x.tr_matmul(m)));
    out
}

/// Riemannian gradient of `f(X) = ½ tr(XᵀAX)`: `(I − XXᵀ) A X`.
pub fn riemannian_gradient<A: LinearOperator + ?Sized>(a: &A, x: &StiefelPoint) -> Result<TangentVector> {
    if a.dim() != x.n() {
        return Err(Error::DimensionMismatch(format!("operator is {0}x{0} but X has {1} rows", a.dim(), x.n())));
    }
    let ax = a.apply(x.matrix());
    Ok(TangentVector { z: complement_projection(x.matrix(), &ax) })
}

/// Objective `f(X) = ½ tr(XᵀAX)`.
pub fn objective<A: LinearOperator + ?Sized>(a: &A, x: &Mat) -> f64 {
    0.5 * x.inner(&a.apply(x))
}

/// Result of aligning a snapshot to the current iterate.
#[derive(Debug, Clone)]
pub struct Alignment {
    /// Orthogonal `B = Q₂Q₁ᵀ` minimizing `‖X − X̃B‖_F`.
    pub rotation: Mat,
    /// Singular values of `XᵀX̃`, descending.
    pub singular_values: alloc::vec::Vec<f64>,
    /// `XᵀX̃` was numerically rank deficient; `rotation` is one of several minimizers.
    pub rank_deficient: bool,
}

/// Orthogonal Procrustes alignment: with `XᵀX̃ = Q₁ΩQ₂ᵀ`, returns `B = Q₂Q₁ᵀ`.
pub fn procrustes_align(x: &StiefelPoint, xtilde: &StiefelPoint) -> Result<Alignment> {
    if x.matrix().shape() != xtilde.matrix().shape() {
        return Err(Error::DimensionMismatch("procrustes_align needs points of equal shape".into()));
    }
    let m = x.matrix().tr_matmul(xtilde.matrix());
    let svd = svd_square(&m)?;
    let rotation = svd.v.matmul_tr(&svd.u);
    Ok(Alignment { rotation, rank_deficient: svd.rank < m.rows(), singular_values: svd.sigma })
}
