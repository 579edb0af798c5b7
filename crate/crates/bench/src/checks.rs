//! Randomized suites behind the `verify` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use svrrg_core::solver::{svrrg_epoch_observed, EpochParams};
use svrrg_core::theory::{lemma10_check, lemma12_check, lemma6_bound, lemma6_check_potentials};
use svrrg_core::{
    dense_eigh, make_test_matrix, partition_column_blocks, potential, procrustes_align, project_tangent, retract,
    sampling_rng, theorem_constants, BMode, EigenReference, Mat, Result, StiefelPoint, SvrrgState,
};

/// Result of one suite. `worst_margin` is the smallest `bound − value`
/// seen; negative means a violation.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub worst_margin: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &'static str, trials: usize, worst_margin: f64, violations: usize) -> Self {
        CheckOutcome { name, trials, worst_margin, passed: violations == 0 }
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// A point at a random distance from `V`, log-uniform between `1e-6` and
/// far away, so both the near-solution and the generic regime are covered.
pub fn perturbed_solution(v: &Mat, rng: &mut ChaCha8Rng) -> Result<StiefelPoint> {
    let base = StiefelPoint::new(v.clone())?;
    let dir = project_tangent(&base, &gaussian(v.rows(), v.cols(), rng))?;
    let scale = 10f64.powf(rng.random_range(-6.0..0.5)) / dir.matrix().frobenius().max(f64::MIN_POSITIVE);
    retract(&base, &dir.scaled(scale))
}

/// `steps` SVRRG inner steps with Procrustes alignment on a rescaled
/// `n = 50`, `k = 2` instance; checks the per-step potential bound.
pub fn lemma6_suite(steps: usize, seed: u64, alpha: f64) -> Result<CheckOutcome> {
    let bound = lemma6_bound(2, alpha)?;
    let (a, reference) = make_test_matrix(50, 2, 0.3, seed)?;
    let p = partition_column_blocks(a, 5)?.rescaled();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = StiefelPoint::random(50, 2, &mut rng)?;
    let mut thetas = vec![potential(&reference, &x0)?];
    let mut state = SvrrgState::new(&p, x0, sampling_rng(seed))?;
    let params = EpochParams { alpha, m: 5, b_mode: BMode::Procrustes };
    while thetas.len() <= steps {
        state = svrrg_epoch_observed(&p, state, params, &mut |x: &StiefelPoint| {
            thetas.push(potential(&reference, x).unwrap_or(f64::NAN));
        })?;
    }
    thetas.truncate(steps + 1);
    let report = lemma6_check_potentials(&thetas, 2, alpha)?;
    let margin = if steps == 0 { bound } else { bound - report.max_delta };
    Ok(CheckOutcome::new("lemma6", steps, margin, report.violations))
}

/// Random symmetric `A` (`n = 20`) and random `X` (`k = 3`) per trial.
pub fn lemma10_suite(trials: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let g = gaussian(20, 20, &mut rng);
        let a = g.add(&g.transpose()).scaled(0.5);
        let reference = dense_eigh(&a, 100)?.truncated(3)?;
        let x = StiefelPoint::random(20, 3, &mut rng)?;
        let r = lemma10_check(&a, &reference, &x)?;
        if !r.holds() {
            violations += 1;
        }
        worst = worst.min(r.lhs - r.rhs);
    }
    Ok(CheckOutcome::new("lemma10", trials, worst, violations))
}

/// Random `(X, X̃)` pairs around the solution of a rescaled `n = 40`,
/// `k = 2` instance with `L = 8`; checks every `W_l` with Procrustes `B`.
pub fn lemma12_suite(trials: usize, seed: u64) -> Result<CheckOutcome> {
    let (a, reference) = make_test_matrix(40, 2, 0.3, seed)?;
    let p = partition_column_blocks(a, 5)?.rescaled();
    lemma12_suite_on(&p, &reference, trials, seed)
}

pub fn lemma12_suite_on(
    p: &svrrg_core::BlockPartition,
    reference: &EigenReference,
    trials: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let x = perturbed_solution(reference.vectors(), &mut rng)?;
        let xt = perturbed_solution(reference.vectors(), &mut rng)?;
        let b = procrustes_align(&x, &xt)?.rotation;
        let r = lemma12_check(p, &x, &xt, Some(&b), reference)?;
        if !r.holds() {
            violations += 1;
        }
        worst = worst.min(r.kappa2 - r.max_w_spectral).min(r.kappa_f_sq - r.max_w_frobenius_sq);
    }
    Ok(CheckOutcome::new("lemma12", trials, worst, violations))
}

/// Closed-form spot values of the theorem constants.
pub fn constants_smoke() -> Result<CheckOutcome> {
    let c = theorem_constants(3, 0.3, 1e-300)?;
    let c3 = 4.0 + 192.0 * (9.0 + 7400.0 / 9.0);
    let worst = 1e-9 - (c.c2 - 79872.0).abs().max((c.c3 - c3).abs());
    let flagged = theorem_constants(2, 0.1, 1e-3)?;
    let ok = worst >= 0.0 && flagged.c1 < 0.0;
    Ok(CheckOutcome::new("theorem_constants", 2, worst, usize::from(!ok)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_small_sizes() {
        assert!(lemma6_suite(40, 1, 0.1).unwrap().passed);
        assert!(lemma10_suite(20, 2).unwrap().passed);
        assert!(lemma12_suite(10, 3).unwrap().passed);
        assert!(constants_smoke().unwrap().passed);
    }

    #[test]
    fn lemma6_rejects_large_alpha() {
        assert!(lemma6_suite(10, 1, 0.3).is_err());
    }
}
