//! RG-EIGS, SRG-EIGS and SVRRG-EIGS iterations and the warm-started
//! benchmarking protocol that chains them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// Float supplies sqrt/abs/ln when std is not linked.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::matrix::{partition_column_blocks, BlockPartition, LinearOperator, SymmetricSparseMatrix};
use crate::oracle::{potential, EigenReference};
use crate::stiefel::{
    complement_projection, objective, procrustes_align, project_tangent, retract, riemannian_gradient, StiefelPoint,
    TangentVector,
};
use crate::theory::feasibility;

/// Heuristic step numerator used with `α = ζ / (‖A‖₁ √n)`.
pub const DEFAULT_ZETA: f64 = 4.442;

const INIT_STREAM: u64 = 0;
const SAMPLING_STREAM: u64 = 1;

/// How the snapshot is aligned to the inner iterate before forming the
/// control variate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BMode {
    /// `B = I`.
    #[default]
    Identity,
    /// `B = Q₂Q₁ᵀ` from the SVD of `XᵀX̃`, recomputed every inner step.
    Procrustes,
}

/// Fixed learning rate for RG and SVRRG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// `α = ζ / (‖A‖₁ √n)` evaluated on the (possibly rescaled) operator.
    Heuristic { zeta: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Heuristic { zeta: DEFAULT_ZETA }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rg,
    Srg,
    Svrrg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rg => "rg",
            Method::Srg => "srg",
            Method::Svrrg => "svrrg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub k: usize,
    pub step: StepRule,
    /// SRG decay numerator: `α_t = η / t`.
    pub eta: f64,
    /// SVRRG inner steps per epoch as a fraction of `L`.
    pub epoch_frac: f64,
    /// SRG steps per reporting epoch as a fraction of `L`.
    pub srg_epoch_frac: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub b_mode: BMode,
    /// Divide every component by its Gershgorin bound before solving.
    pub rescale: bool,
    /// Relative error at which the SRG warm start hands over to SVRRG.
    pub warm_start_tol: f64,
    /// Data passes the warm start may spend before handing over anyway.
    pub warm_budget: f64,
    /// Relative error at which a run is declared converged.
    pub target_tol: f64,
    /// Keep `Θ` after every SVRRG inner step (needs a reference).
    pub record_steps: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 3,
            step: StepRule::default(),
            eta: 1.0,
            epoch_frac: 0.5,
            srg_epoch_frac: 1.5,
            max_epochs: 20,
            seed: 0,
            b_mode: BMode::Identity,
            rescale: false,
            warm_start_tol: 1e-6,
            warm_budget: 200.0,
            target_tol: 1e-12,
            record_steps: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if let StepRule::Fixed(a) = self.step {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("alpha must be positive, got {a}")));
            }
        }
        if let StepRule::Heuristic { zeta } = self.step {
            if !(zeta > 0.0 && zeta.is_finite()) {
                return Err(Error::InvalidArgument(format!("zeta must be positive, got {zeta}")));
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.epoch_frac > 0.0) || !(self.srg_epoch_frac > 0.0) {
            return Err(Error::InvalidArgument("epoch fractions must be positive".into()));
        }
        if !(self.warm_budget >= 0.0) {
            return Err(Error::InvalidArgument("warm-start budget must be non-negative".into()));
        }
        Ok(())
    }

    /// Column-block partition of `a`, rescaled when `rescale` is set.
    pub fn partition(&self, a: SymmetricSparseMatrix, block_size: usize) -> Result<BlockPartition> {
        let p = partition_column_blocks(a, block_size)?;
        Ok(if self.rescale { p.rescaled() } else { p })
    }

    /// The fixed learning rate on the partition's (rescaled) operator.
    pub fn alpha(&self, p: &BlockPartition) -> f64 {
        match self.step {
            StepRule::Fixed(a) => a,
            StepRule::Heuristic { zeta } => {
                let norm = p.matrix().one_norm() / p.norm_bound();
                zeta / (norm * (p.n() as f64).sqrt())
            }
        }
    }

    /// SVRRG epoch length `m = round(epoch_frac · L)`, at least 1.
    pub fn epoch_length(&self, p: &BlockPartition) -> usize {
        steps_for(self.epoch_frac, p.blocks())
    }

    /// SRG steps per reporting epoch, at least 1.
    pub fn srg_epoch_length(&self, p: &BlockPartition) -> usize {
        steps_for(self.srg_epoch_frac, p.blocks())
    }
}

fn steps_for(frac: f64, blocks: usize) -> usize {
    ((frac * blocks as f64).round() as usize).max(1)
}

/// Shared random starting point: standard-normal entries, then thin QR.
pub fn initial_point(n: usize, k: usize, seed: u64) -> Result<StiefelPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    StiefelPoint::random(n, k, &mut rng)
}

/// RNG driving block sampling for a given seed.
pub fn sampling_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SAMPLING_STREAM);
    rng
}

/// One Riemannian gradient ascent step `R_X(α Grad f(X))`.
pub fn rg_step<A: LinearOperator + ?Sized>(a: &A, x: &StiefelPoint, alpha: f64) -> Result<StiefelPoint> {
    let g = riemannian_gradient(a, x)?;
    retract(x, &g.scaled(alpha))
}

/// Stochastic Riemannian gradient `G(l, X) = (I − XXᵀ) A⁽ˡ⁾ X`.
pub fn stochastic_gradient(p: &BlockPartition, l: usize, x: &StiefelPoint) -> Result<TangentVector> {
    let alx = p.block_matvec(l, x.matrix())?;
    Ok(TangentVector::from_tangent_matrix(complement_projection(x.matrix(), &alx)))
}

/// SRG step with the block already drawn.
pub fn srg_step_with_block(p: &BlockPartition, x: &StiefelPoint, alpha: f64, l: usize) -> Result<StiefelPoint> {
    let g = stochastic_gradient(p, l, x)?;
    retract(x, &g.scaled(alpha))
}

/// One SRG step with `α_t = η / t` on a uniformly sampled block.
pub fn srg_step<R: Rng + ?Sized>(
    p: &BlockPartition,
    x: &StiefelPoint,
    t: usize,
    eta: f64,
    rng: &mut R,
) -> Result<StiefelPoint> {
    if t == 0 {
        return Err(Error::InvalidArgument("SRG step index starts at 1".into()));
    }
    let l = rng.random_range(0..p.blocks());
    srg_step_with_block(p, x, eta / t as f64, l)
}

fn check_orthogonal(b: &Mat, k: usize) -> Result<()> {
    if b.shape() != (k, k) {
        return Err(Error::DimensionMismatch(format!("B must be {k}x{k}")));
    }
    let r = b.tr_matmul(b).sub(&Mat::identity(k)).frobenius();
    if !(r <= 1e-10) {
        return Err(Error::InvalidArgument(format!("B is not orthogonal: ||B^T B - I||_F = {r:e}")));
    }
    Ok(())
}

/// Variance-reduced direction
/// `G̃ = G(l, X) − T_{X̃→X}(G(l, X̃B) − Grad f(X̃B))`.
///
/// `full_grad` is `Grad f(X̃)`; since `X̃B(X̃B)ᵀ = X̃X̃ᵀ`, both snapshot
/// gradients at `X̃B` are the stored ones multiplied by `B`. `b = None`
/// means `B = I`.
pub fn svrrg_gradient(
    p: &BlockPartition,
    x: &StiefelPoint,
    xtilde: &StiefelPoint,
    full_grad: &TangentVector,
    l: usize,
    b: Option<&Mat>,
) -> Result<TangentVector> {
    if x.matrix().shape() != xtilde.matrix().shape() || full_grad.matrix().shape() != x.matrix().shape() {
        return Err(Error::DimensionMismatch("X, X~ and Grad f(X~) must share a shape".into()));
    }
    let g_x = stochastic_gradient(p, l, x)?;
    let mut control = stochastic_gradient(p, l, xtilde)?.into_matrix();
    control.axpy(-1.0, full_grad.matrix());
    if let Some(b) = b {
        check_orthogonal(b, x.k())?;
        control = control.matmul(b);
    }
    let transported = project_tangent(x, &control)?;
    let mut out = g_x.into_matrix();
    out.axpy(-1.0, transported.matrix());
    Ok(TangentVector::from_tangent_matrix(out))
}

/// Iterate, snapshot and snapshot gradient of an SVRRG run.
#[derive(Debug, Clone)]
pub struct SvrrgState {
    pub x: StiefelPoint,
    pub xtilde: StiefelPoint,
    /// `Grad f(X̃)`; recomputed at the start of every epoch.
    pub full_grad: TangentVector,
    pub epoch: usize,
    pub inner_step: usize,
    pub rng: ChaCha8Rng,
}

impl SvrrgState {
    pub fn new(p: &BlockPartition, start: StiefelPoint, rng: ChaCha8Rng) -> Result<Self> {
        let full_grad = riemannian_gradient(p, &start)?;
        Ok(SvrrgState { x: start.clone(), xtilde: start, full_grad, epoch: 0, inner_step: 0, rng })
    }
}

/// Inner-loop parameters of one SVRRG epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochParams {
    pub alpha: f64,
    pub m: usize,
    pub b_mode: BMode,
}

/// One SVRRG epoch: fresh full gradient at the snapshot, `m` sampled inner
/// steps with fixed `α`, then the last inner iterate becomes the snapshot.
pub fn svrrg_epoch(p: &BlockPartition, state: SvrrgState, params: EpochParams) -> Result<SvrrgState> {
    svrrg_epoch_observed(p, state, params, &mut |_: &StiefelPoint| {})
}

/// [`svrrg_epoch`] that reports every inner iterate `X⁽ᵗ⁾`, `t = 1..m`.
pub fn svrrg_epoch_observed(
    p: &BlockPartition,
    mut state: SvrrgState,
    params: EpochParams,
    observer: &mut dyn FnMut(&StiefelPoint),
) -> Result<SvrrgState> {
    if params.m == 0 {
        return Err(Error::InvalidArgument("epoch length m must be at least 1".into()));
    }
    if !(params.alpha >= 0.0 && params.alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {}", params.alpha)));
    }
    state.full_grad = riemannian_gradient(p, &state.xtilde)?;
    let mut x = state.xtilde.clone();
    for _ in 0..params.m {
        let l = state.rng.random_range(0..p.blocks());
        let rotation = match params.b_mode {
            BMode::Identity => None,
            BMode::Procrustes => Some(procrustes_align(&x, &state.xtilde)?.rotation),
        };
        let g = svrrg_gradient(p, &x, &state.xtilde, &state.full_grad, l, rotation.as_ref())?;
        x = retract(&x, &g.scaled(params.alpha))?;
        state.inner_step += 1;
        observer(&x);
    }
    state.xtilde = x.clone();
    state.x = x;
    state.epoch += 1;
    Ok(state)
}

/// Elapsed-time source for traces.
pub trait Clock {
    fn elapsed_ms(&mut self) -> f64;
}

/// Clock that always reads zero, for reproducible traces.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&mut self) -> f64 {
        0.0
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub epoch: usize,
    pub passes: f64,
    pub feasibility: f64,
    /// `E(X)`; NaN until a denominator is known.
    pub rel_error: f64,
    /// `Θ(X)/k`; NaN without a reference.
    pub potential_norm: f64,
    pub wall_ms: f64,
    /// `½ tr(XᵀAX)` on the original (unrescaled) matrix.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    pub method: Method,
    pub alpha: f64,
    pub eta: f64,
    pub epoch_length: usize,
    pub rows: Vec<MetricSample>,
    pub converged: bool,
    /// Rows (after the initial one) produced by the SRG warm start.
    pub warm_start_epochs: usize,
    /// `Θ(X̃⁽⁰⁾)` at hand-over, when a reference exists.
    pub warm_start_potential: Option<f64>,
    /// Relative errors are measured against a best-seen objective rather
    /// than a known optimum.
    pub rel_error_approximate: bool,
    /// `Θ(X̃⁽⁰⁾)` followed by `Θ` after every SVRRG inner step, when
    /// `record_steps` is set and a reference exists.
    pub step_potentials: Vec<f64>,
    pub warnings: Vec<String>,
    pub final_point: StiefelPoint,
}

impl ConvergenceTrace {
    pub fn last(&self) -> &MetricSample {
        self.rows.last().expect("trace has an initial row")
    }

    pub fn total_passes(&self) -> f64 {
        self.last().passes
    }
}

/// Fills `rel_error` of every row using the best objective seen across
/// `traces` as the optimum, and recomputes `converged`.
pub fn rebase_relative_error(traces: &mut [ConvergenceTrace], target_tol: f64) {
    let best = traces.iter().flat_map(|t| t.rows.iter().map(|r| r.objective)).fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return;
    }
    for t in traces.iter_mut() {
        for r in t.rows.iter_mut() {
            r.rel_error = (1.0 - r.objective / best).max(0.0);
        }
        t.rel_error_approximate = true;
        t.converged = t.last().rel_error <= target_tol;
    }
}

struct Recorder<'a, C: Clock> {
    p: &'a BlockPartition,
    reference: Option<&'a EigenReference>,
    clock: &'a mut C,
    rows: Vec<MetricSample>,
}

impl<C: Clock> Recorder<'_, C> {
    fn record(&mut self, epoch: usize, passes: f64, x: &StiefelPoint) -> Result<MetricSample> {
        let objective = objective(self.p, x.matrix()) * self.p.norm_bound();
        let (rel_error, potential_norm) = match self.reference {
            Some(r) => {
                let opt = r.trace_top_k();
                let e = if opt > 0.0 { (1.0 - objective / opt).max(0.0) } else { f64::NAN };
                (e, potential(r, x)? / x.k() as f64)
            }
            None => (f64::NAN, f64::NAN),
        };
        let sample = MetricSample {
            epoch,
            passes,
            feasibility: feasibility(x.matrix()),
            rel_error,
            potential_norm,
            wall_ms: self.clock.elapsed_ms(),
            objective,
        };
        self.rows.push(sample.clone());
        Ok(sample)
    }
}

/// Runs `method` from `x0` with the benchmarking protocol.
///
/// * `Rg`: one full-gradient step per epoch (1 pass each).
/// * `Srg`: epochs of `srg_epoch_frac · L` sampled steps with `α_t = η/t`.
/// * `Svrrg`: SRG warm start until `E ≤ warm_start_tol` (or the warm
///   budget is spent), then up to `max_epochs` SVRRG epochs, each costing
///   one full pass plus `m/L` sampled passes.
///
/// Metrics are recorded once per epoch after the snapshot update. Without
/// a reference, tolerances cannot be evaluated and every phase runs to its
/// budget; see [`rebase_relative_error`].
pub fn solve<C: Clock>(
    method: Method,
    p: &BlockPartition,
    cfg: &SolverConfig,
    x0: &StiefelPoint,
    reference: Option<&EigenReference>,
    clock: &mut C,
) -> Result<ConvergenceTrace> {
    cfg.validate()?;
    if x0.n() != p.n() || x0.k() != cfg.k {
        return Err(Error::DimensionMismatch(format!(
            "initial point is {}x{}, expected {}x{}",
            x0.n(),
            x0.k(),
            p.n(),
            cfg.k
        )));
    }
    if let Some(r) = reference {
        if r.n() != p.n() || r.k() != cfg.k {
            return Err(Error::DimensionMismatch("reference does not match the problem".into()));
        }
    }
    let blocks = p.blocks() as f64;
    let alpha = cfg.alpha(p);
    let m = cfg.epoch_length(p);
    let m_srg = cfg.srg_epoch_length(p);
    let mut rec = Recorder { p, reference, clock, rows: Vec::new() };
    let mut warnings = Vec::new();
    let hit = |s: &MetricSample, tol: f64| s.rel_error <= tol;

    let mut x = x0.clone();
    let mut passes = 0.0;
    let mut epoch = 0;
    let first = rec.record(epoch, passes, &x)?;
    let mut converged = hit(&first, cfg.target_tol);
    let mut warm_start_epochs = 0;
    let mut warm_start_potential = None;
    let mut rng = sampling_rng(cfg.seed);
    let mut step_potentials = Vec::new();

    match method {
        Method::Rg => {
            while !converged && epoch < cfg.max_epochs {
                x = rg_step(p, &x, alpha)?;
                epoch += 1;
                passes += 1.0;
                converged = hit(&rec.record(epoch, passes, &x)?, cfg.target_tol);
            }
        }
        Method::Srg => {
            let mut t = 0;
            while !converged && epoch < cfg.max_epochs {
                for _ in 0..m_srg {
                    t += 1;
                    x = srg_step(p, &x, t, cfg.eta, &mut rng)?;
                }
                epoch += 1;
                passes += m_srg as f64 / blocks;
                converged = hit(&rec.record(epoch, passes, &x)?, cfg.target_tol);
            }
        }
        Method::Svrrg => {
            let mut t = 0;
            let mut warm_done = hit(&first, cfg.warm_start_tol);
            while !converged && !warm_done && passes < cfg.warm_budget {
                for _ in 0..m_srg {
                    t += 1;
                    x = srg_step(p, &x, t, cfg.eta, &mut rng)?;
                }
                epoch += 1;
                warm_start_epochs += 1;
                passes += m_srg as f64 / blocks;
                let s = rec.record(epoch, passes, &x)?;
                converged = hit(&s, cfg.target_tol);
                warm_done = hit(&s, cfg.warm_start_tol);
            }
            if !warm_done && !converged && reference.is_some() {
                warnings.push(format!(
                    "warm start stopped at E = {:e} after {passes} passes without reaching {:e}",
                    rec.rows.last().map_or(f64::NAN, |r| r.rel_error),
                    cfg.warm_start_tol
                ));
            }
            if let Some(r) = reference {
                let theta = potential(r, &x)?;
                if !(theta < 0.5) {
                    warnings.push(format!("initial snapshot potential {theta:e} is not below 1/2"));
                }
                warm_start_potential = Some(theta);
            }
            let step_reference = reference.filter(|_| cfg.record_steps);
            if let Some(theta) = warm_start_potential.filter(|_| step_reference.is_some()) {
                step_potentials.push(theta);
            }
            let mut state = SvrrgState::new(p, x, rng)?;
            let params = EpochParams { alpha, m, b_mode: cfg.b_mode };
            let mut svrrg_epochs = 0;
            while !converged && svrrg_epochs < cfg.max_epochs {
                state = match step_reference {
                    Some(r) => svrrg_epoch_observed(p, state, params, &mut |x: &StiefelPoint| {
                        step_potentials.push(potential(r, x).unwrap_or(f64::NAN));
                    })?,
                    None => svrrg_epoch(p, state, params)?,
                };
                svrrg_epochs += 1;
                epoch += 1;
                passes += 1.0 + m as f64 / blocks;
                converged = hit(&rec.record(epoch, passes, &state.xtilde)?, cfg.target_tol);
            }
            x = state.xtilde;
        }
    }

    Ok(ConvergenceTrace {
        method,
        alpha,
        eta: cfg.eta,
        epoch_length: match method {
            Method::Rg => 1,
            Method::Srg => m_srg,
            Method::Svrrg => m,
        },
        rows: rec.rows,
        converged,
        warm_start_epochs,
        warm_start_potential,
        rel_error_approximate: false,
        step_potentials,
        warnings,
        final_point: x,
    })
}

/// Outcome of tuning the SRG decay numerator.
#[derive(Debug, Clone)]
pub struct EtaGrid {
    pub best_eta: f64,
    /// `(η, final relative error)` in ascending `η`.
    pub table: Vec<(f64, f64)>,
}

/// Runs SRG for each `η` under the same pass budget from the same start
/// and keeps the one with the smallest final relative error (ties go to
/// the smaller `η`). Without a reference the errors are relative to the
/// best objective reached on the grid.
pub fn grid_eta(
    p: &BlockPartition,
    cfg: &SolverConfig,
    x0: &StiefelPoint,
    reference: Option<&EigenReference>,
    etas: &[f64],
    pass_budget: f64,
) -> Result<EtaGrid> {
    if etas.is_empty() {
        return Err(Error::InvalidArgument("eta grid is empty".into()));
    }
    let mut etas: Vec<f64> = etas.to_vec();
    etas.sort_by(f64::total_cmp);
    let per_epoch = cfg.srg_epoch_length(p) as f64 / p.blocks() as f64;
    let epochs = (pass_budget / per_epoch).ceil() as usize;
    let mut traces = Vec::with_capacity(etas.len());
    for &eta in &etas {
        let run_cfg = SolverConfig { eta, max_epochs: epochs, target_tol: -1.0, ..cfg.clone() };
        traces.push(solve(Method::Srg, p, &run_cfg, x0, reference, &mut NoClock)?);
    }
    if reference.is_none() {
        rebase_relative_error(&mut traces, cfg.target_tol);
    }
    let table: Vec<(f64, f64)> = etas.iter().zip(&traces).map(|(&e, t)| (e, t.last().rel_error)).collect();
    let key = |e: f64| if e.is_nan() { f64::INFINITY } else { e };
    let mut best = 0;
    for (i, &(_, e)) in table.iter().enumerate() {
        if key(e) < key(table[best].1) {
            best = i;
        }
    }
    Ok(EtaGrid { best_eta: table[best].0, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::make_test_matrix;

    fn small_problem(seed: u64) -> (BlockPartition, EigenReference) {
        let (a, r) = make_test_matrix(30, 2, 0.4, seed).unwrap();
        (partition_column_blocks(a, 5).unwrap(), r)
    }

    #[test]
    fn rg_fixed_point_at_invariant_subspace() {
        let a = Mat::from_diag(&[3.0, 2.0, 1.0]);
        let x = StiefelPoint::leading_coordinates(3, 2).unwrap();
        assert_eq!(rg_step(&a, &x, 0.1).unwrap(), x);
    }

    #[test]
    fn rg_step_rotates_towards_top_eigenvector_in_2d() {
        let a = Mat::from_diag(&[3.0, 1.0]);
        for theta in [0.1, 0.5, 1.0, 1.5] {
            let x = StiefelPoint::new(Mat::from_rows(&[&[f64::cos(theta)], &[f64::sin(theta)]])).unwrap();
            let y = rg_step(&a, &x, 0.05).unwrap();
            assert!(y.matrix()[(0, 0)].abs() > x.matrix()[(0, 0)].abs(), "theta {theta}");
        }
    }

    #[test]
    fn srg_with_one_block_matches_rg() {
        let (a, _) = make_test_matrix(12, 2, 0.3, 1).unwrap();
        let p = partition_column_blocks(a, 12).unwrap();
        let x = initial_point(12, 2, 3).unwrap();
        let y_srg = srg_step(&p, &x, 4, 0.8, &mut sampling_rng(0)).unwrap();
        let y_rg = rg_step(&p, &x, 0.2).unwrap();
        assert!(y_srg.matrix().sub(y_rg.matrix()).max_abs() < 1e-14);
        assert!(srg_step(&p, &x, 0, 0.8, &mut sampling_rng(0)).is_err());
    }

    #[test]
    fn stochastic_gradient_is_unbiased() {
        let (p, _) = small_problem(2);
        let x = initial_point(30, 2, 5).unwrap();
        let mut mean = Mat::zeros(30, 2);
        for l in 0..p.blocks() {
            mean.axpy(1.0 / p.blocks() as f64, stochastic_gradient(&p, l, &x).unwrap().matrix());
        }
        let g = riemannian_gradient(&p, &x).unwrap();
        assert!(mean.sub(g.matrix()).max_abs() < 1e-10);
    }

    #[test]
    fn svrrg_gradient_at_snapshot_is_full_gradient() {
        let (p, _) = small_problem(3);
        let x = initial_point(30, 2, 1).unwrap();
        let g = riemannian_gradient(&p, &x).unwrap();
        for l in 0..p.blocks() {
            let gt = svrrg_gradient(&p, &x, &x, &g, l, None).unwrap();
            assert!(gt.matrix().sub(g.matrix()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn svrrg_gradient_rejects_non_orthogonal_b() {
        let (p, _) = small_problem(3);
        let x = initial_point(30, 2, 1).unwrap();
        let g = riemannian_gradient(&p, &x).unwrap();
        let b = Mat::from_diag(&[1.0, 2.0]);
        assert!(matches!(svrrg_gradient(&p, &x, &x, &g, 0, Some(&b)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn epoch_rejects_zero_length_and_null_step_keeps_snapshot() {
        let (p, _) = small_problem(4);
        let x = initial_point(30, 2, 2).unwrap();
        let state = SvrrgState::new(&p, x.clone(), sampling_rng(0)).unwrap();
        let bad = EpochParams { alpha: 0.1, m: 0, b_mode: BMode::Identity };
        assert!(svrrg_epoch(&p, state.clone(), bad).is_err());
        let null = EpochParams { alpha: 0.0, m: 7, b_mode: BMode::Identity };
        let next = svrrg_epoch(&p, state, null).unwrap();
        assert_eq!(next.xtilde, x);
        assert_eq!(next.inner_step, 7);
    }

    #[test]
    fn early_exit_when_target_met_during_warm_start() {
        let (p, r) = small_problem(5);
        let x0 = StiefelPoint::new(r.vectors().clone()).unwrap();
        let cfg = SolverConfig { k: 2, ..SolverConfig::default() };
        let trace = solve(Method::Svrrg, &p, &cfg, &x0, Some(&r), &mut NoClock).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.warm_start_epochs, 0);
    }

    #[test]
    fn rg_with_zero_epochs_records_only_start() {
        let (p, r) = small_problem(6);
        let x0 = initial_point(30, 2, 9).unwrap();
        let cfg = SolverConfig { k: 2, max_epochs: 0, ..SolverConfig::default() };
        let trace = solve(Method::Rg, &p, &cfg, &x0, Some(&r), &mut NoClock).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].passes, 0.0);
    }

    #[test]
    fn svrrg_epoch_pass_accounting() {
        let (p, r) = small_problem(7); // L = 6, m = 3
        let x0 = initial_point(30, 2, 9).unwrap();
        let cfg = SolverConfig { k: 2, warm_budget: 0.0, max_epochs: 4, target_tol: -1.0, ..SolverConfig::default() };
        let trace = solve(Method::Svrrg, &p, &cfg, &x0, Some(&r), &mut NoClock).unwrap();
        assert_eq!(trace.epoch_length, 3);
        assert_eq!(trace.rows.len(), 5);
        for (i, row) in trace.rows.iter().enumerate() {
            assert_eq!(row.passes, 1.5 * i as f64);
        }
    }

    #[test]
    fn grid_singleton_and_tie_break() {
        let (p, r) = small_problem(8);
        let x0 = initial_point(30, 2, 1).unwrap();
        let cfg = SolverConfig { k: 2, ..SolverConfig::default() };
        let g = grid_eta(&p, &cfg, &x0, Some(&r), &[0.7], 3.0).unwrap();
        assert_eq!(g.best_eta, 0.7);
        let g = grid_eta(&p, &cfg, &x0, Some(&r), &[2.0, 2.0, 0.5, 0.5], 3.0).unwrap();
        assert_eq!(g.table.len(), 4);
        assert!(grid_eta(&p, &cfg, &x0, Some(&r), &[], 3.0).is_err());
    }
}
