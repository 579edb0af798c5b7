//! Quality measures, the convergence theorem's constants and conditions,
//! and numerical checkers for the supporting lemmas.

use alloc::format;
use alloc::vec::Vec;

// Float supplies sqrt/abs/ln when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigh;
use crate::matrix::{BlockPartition, LinearOperator};
use crate::oracle::{potential, EigenReference};
use crate::solver::svrrg_gradient;
use crate::stiefel::{complement_projection, objective, riemannian_gradient, StiefelPoint};

/// Absolute slack granted to inequality checks for roundoff.
pub const CHECK_SLACK: f64 = 1e-10;

/// `‖XᵀX − I‖_F`.
pub fn feasibility(x: &Mat) -> f64 {
    x.tr_matmul(x).sub(&Mat::identity(x.cols())).frobenius()
}

/// `E(X) = 1 − ½tr(XᵀAX) / opt`, clamped at zero from below.
pub fn relative_error<A: LinearOperator + ?Sized>(a: &A, x: &Mat, opt_value: f64) -> Result<f64> {
    if !(opt_value > 0.0) {
        return Err(Error::InvalidArgument(format!("optimum must be positive, got {opt_value}")));
    }
    Ok((1.0 - objective(a, x) / opt_value).max(0.0))
}

/// Evaluated constants `c₀ … c₅`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl TheoremConstants {
    pub fn as_array(&self) -> [f64; 6] {
        [self.c0, self.c1, self.c2, self.c3, self.c4, self.c5]
    }

    /// Positivity of each constant, in order `c₀ … c₅`. `c₅` is NaN (and
    /// reported non-positive) when `c₄ < 0`.
    pub fn positive(&self) -> [bool; 6] {
        self.as_array().map(|c| c > 0.0)
    }

    pub fn all_positive(&self) -> bool {
        self.positive().iter().all(|&p| p)
    }
}

/// Evaluates the constants with `c₁` taken at the supplied `α`, then `c₀`
/// from that `c₁`.
pub fn theorem_constants(k: usize, tau: f64, alpha: f64) -> Result<TheoremConstants> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("eigen-gap must be positive, got {tau}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let kf = k as f64;
    let k2 = kf * kf;
    let grow = 1.0 + 2.0 * alpha;
    let c1 = (2.0 / tau) * (tau / 8.0 - 2.0 * alpha * grow * (1.0 + 24.0 * k2) - (118400.0 / 3.0) * alpha);
    let c2 = 96.0 * (k2 * grow + 823.0);
    let c3 = 4.0 * grow + 192.0 * (k2 * grow + 7400.0 / 9.0);

    let b = 118406.0 + 144.0 * k2;
    let disc = b * b + 18.0 * tau * (1.0 + 24.0 * k2);
    // (−b + √disc) / (24τ(1+24k²)) without the cancellation.
    let root = 0.75 / (b + disc.sqrt());
    let c0 = (1.0 / (32.0 * (3.0 * kf * tau * tau).sqrt())).min(1.0 / (c1 * tau * tau)).min(root);

    let c4 = 20.0 / (1.0 - 5.0 * c0 * tau) + c0 * c3 * tau;
    let c5 = (2.0 * c4).sqrt();
    Ok(TheoremConstants { c0, c1, c2, c3, c4, c5 })
}

/// One inequality of the theorem with both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub k: usize,
    pub tau: f64,
    pub alpha: f64,
    pub m: usize,
    pub phi: f64,
    pub eps: f64,
    pub theta0: f64,
    pub constants: TheoremConstants,
    /// `min{c₀τ, c₁τφ²/(8c₂)}`.
    pub alpha_max: f64,
    /// `3 log(2/φ) / (c₁ατ)`.
    pub m_min: f64,
    /// `T = ⌈log(1/ε) / log(2/φ)⌉`.
    pub epoch_budget: u64,
    /// `1 − c₁ατ`, the per-epoch contraction factor.
    pub contraction: f64,
    pub conditions: Vec<Condition>,
}

impl TheoremReport {
    pub fn all_satisfied(&self) -> bool {
        self.constants.all_positive() && self.conditions.iter().all(|c| c.satisfied)
    }
}

/// `T = ⌈log(1/ε) / log(2/φ)⌉`.
pub fn epoch_budget(eps: f64, phi: f64) -> u64 {
    ((1.0 / eps).ln() / (2.0 / phi).ln()).ceil() as u64
}

/// Evaluates every condition of the theorem for the given configuration.
pub fn check_theorem_conditions(
    k: usize,
    tau: f64,
    alpha: f64,
    m: usize,
    phi: f64,
    eps: f64,
    theta0: f64,
) -> Result<TheoremReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1), got {eps}")));
    }
    let phi_cap = 1.0 / (1.0 / eps).log2().ceil();
    if !(phi > 0.0 && phi < phi_cap) {
        return Err(Error::Precondition(format!("phi must lie in (0, {phi_cap}), got {phi}")));
    }
    if k == 0 || !(tau > 0.0) {
        return Err(Error::InvalidArgument("k must be at least 1 and tau positive".into()));
    }
    // α ≤ 0 fails the open interval but the report is still produced, with
    // the constants evaluated at the smallest positive α.
    let constants = theorem_constants(k, tau, if alpha > 0.0 { alpha } else { f64::MIN_POSITIVE })?;
    let TheoremConstants { c0, c1, c2, c3, c5, .. } = constants;
    let kf = k as f64;
    let mf = m as f64;
    let log_term = (2.0 / phi).ln();

    let alpha_max = (c0 * tau).min(c1 * tau * phi * phi / (8.0 * c2));
    let m_min = 3.0 * log_term / (c1 * alpha * tau);
    let drift = c3 * kf * mf * alpha * alpha + c5 * kf * (mf * alpha * alpha * log_term).sqrt();

    let conditions = alloc::vec![
        Condition { name: "theta0", satisfied: theta0 < 0.5, lhs: theta0, rhs: 0.5 },
        Condition { name: "alpha", satisfied: alpha > 0.0 && alpha < alpha_max, lhs: alpha, rhs: alpha_max },
        Condition { name: "epoch_length", satisfied: m_min > 0.0 && mf >= m_min, lhs: mf, rhs: m_min },
        Condition { name: "drift", satisfied: drift <= 0.5 - theta0, lhs: drift, rhs: 0.5 - theta0 },
    ];
    Ok(TheoremReport {
        k,
        tau,
        alpha,
        m,
        phi,
        eps,
        theta0,
        constants,
        alpha_max,
        m_min,
        epoch_budget: epoch_budget(eps, phi),
        contraction: 1.0 - c1 * alpha * tau,
        conditions,
    })
}

/// Largest singular value of an `n×k` matrix via the `k×k` Gram matrix.
pub fn spectral_norm(m: &Mat) -> Result<f64> {
    if m.cols() == 0 {
        return Ok(0.0);
    }
    let eig = jacobi_eigh(&m.tr_matmul(m), 1e-15, 100)?;
    Ok(eig.values.first().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Per-step potential change over a sequence of iterates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma6Report {
    pub steps: usize,
    pub max_delta: f64,
    /// `20kα / (1 − 5α)`.
    pub bound: f64,
    /// `max_delta / bound`; zero when both vanish.
    pub worst_ratio: f64,
    pub violations: usize,
}

/// `20kα / (1 − 5α)`.
pub fn lemma6_bound(k: usize, alpha: f64) -> Result<f64> {
    if !(0.0..0.2).contains(&alpha) {
        return Err(Error::Precondition(format!("the per-step bound needs 0 <= alpha < 1/5, got {alpha}")));
    }
    Ok(20.0 * k as f64 * alpha / (1.0 - 5.0 * alpha))
}

/// Checks `|‖VᵀX⁽ᵗ⁺¹⁾‖²_F − ‖VᵀX⁽ᵗ⁾‖²_F| ≤ 20kα/(1−5α)` on consecutive
/// iterates. The iterates must come from rescaled components.
pub fn lemma6_check(iterates: &[StiefelPoint], reference: &EigenReference, alpha: f64) -> Result<Lemma6Report> {
    let thetas = iterates.iter().map(|x| potential(reference, x)).collect::<Result<Vec<f64>>>()?;
    lemma6_check_potentials(&thetas, reference.k(), alpha)
}

/// [`lemma6_check`] on a recorded sequence of potentials `Θ(X⁽ᵗ⁾)`; since
/// `Θ = k − ‖VᵀX‖²_F`, consecutive differences are the same.
pub fn lemma6_check_potentials(thetas: &[f64], k: usize, alpha: f64) -> Result<Lemma6Report> {
    let bound = lemma6_bound(k, alpha)?;
    let mut max_delta: f64 = 0.0;
    let mut violations = 0;
    for w in thetas.windows(2) {
        let delta = (w[1] - w[0]).abs();
        if !(delta <= bound + CHECK_SLACK) {
            violations += 1;
        }
        max_delta = max_delta.max(delta);
    }
    let worst_ratio = if bound > 0.0 {
        max_delta / bound
    } else if max_delta == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Lemma6Report { steps: thetas.len().saturating_sub(1), max_delta, bound, worst_ratio, violations })
}

/// Both sides of `tr(XᵀVVᵀX⊥X⊥ᵀAX) ≥ τ(‖VᵀX‖²_F − ‖XᵀVVᵀX‖²_F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma10Report {
    pub lhs: f64,
    pub rhs: f64,
}

impl Lemma10Report {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs - CHECK_SLACK
    }
}

pub fn lemma10_check<A: LinearOperator + ?Sized>(
    a: &A,
    reference: &EigenReference,
    x: &StiefelPoint,
) -> Result<Lemma10Report> {
    let tau = reference
        .tau()
        .ok_or_else(|| Error::InvalidArgument("reference has no eigen-gap (needs k+1 eigenvalues)".into()))?;
    let v = reference.vectors();
    let xm = x.matrix();
    if v.rows() != xm.rows() {
        return Err(Error::DimensionMismatch("reference and X differ in n".into()));
    }
    let vtx = v.tr_matmul(xm);
    // X⊥X⊥ᵀ = I − XXᵀ.
    let perp_ax = complement_projection(xm, &a.apply(xm));
    let lhs = vtx.tr_matmul(&v.tr_matmul(&perp_ax)).trace();
    let xvvx = vtx.tr_matmul(&vtx);
    let rhs = tau * (vtx.frobenius_sq() - xvvx.frobenius_sq());
    Ok(Lemma10Report { lhs, rhs })
}

/// Bounds on the zero-mean term `W_l = G̃_l − Grad f(X)` over all blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma12Report {
    pub max_w_spectral: f64,
    pub max_w_frobenius_sq: f64,
    /// `κ₂ = 8`.
    pub kappa2: f64,
    /// `κ_F² = 96(Θ(X) + Θ(X̃))`.
    pub kappa_f_sq: f64,
    /// `‖(1/L) Σ_l W_l‖_max`.
    pub mean_residual: f64,
    pub violations: usize,
}

impl Lemma12Report {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.mean_residual <= CHECK_SLACK
    }
}

/// Evaluates `W_l` for every block. `b = None` means `B = I`; the bounds
/// assume rescaled components and the Procrustes `B`.
pub fn lemma12_check(
    p: &BlockPartition,
    x: &StiefelPoint,
    xtilde: &StiefelPoint,
    b: Option<&Mat>,
    reference: &EigenReference,
) -> Result<Lemma12Report> {
    let full_x = riemannian_gradient(p, x)?;
    let full_xt = riemannian_gradient(p, xtilde)?;
    let kappa2 = 8.0;
    let kappa_f_sq = 96.0 * (potential(reference, x)? + potential(reference, xtilde)?);
    let mut mean = Mat::zeros(x.n(), x.k());
    let mut max_w_spectral: f64 = 0.0;
    let mut max_w_frobenius_sq: f64 = 0.0;
    let mut violations = 0;
    let inv_l = 1.0 / p.blocks() as f64;
    for l in 0..p.blocks() {
        let mut w = svrrg_gradient(p, x, xtilde, &full_xt, l, b)?.into_matrix();
        w.axpy(-1.0, full_x.matrix());
        let s = spectral_norm(&w)?;
        let f = w.frobenius_sq();
        if s > kappa2 + CHECK_SLACK || f > kappa_f_sq + CHECK_SLACK {
            violations += 1;
        }
        max_w_spectral = max_w_spectral.max(s);
        max_w_frobenius_sq = max_w_frobenius_sq.max(f);
        mean.axpy(inv_l, &w);
    }
    Ok(Lemma12Report {
        max_w_spectral,
        max_w_frobenius_sq,
        kappa2,
        kappa_f_sq,
        mean_residual: mean.max_abs(),
        violations,
    })
}
