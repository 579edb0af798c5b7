//! End-to-end acceptance suite. Runs without the libtest harness so each
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any FAIL.

use std::fs;
use std::process::ExitCode;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use svrrg_bench::checks::{lemma10_suite, lemma6_suite, perturbed_solution};
use svrrg_bench::cli::main_with_args;
use svrrg_core::solver::svrrg_epoch_observed;
use svrrg_core::stiefel::objective;
use svrrg_core::theory::{epoch_budget, lemma12_check, CHECK_SLACK};
use svrrg_core::{
    check_theorem_conditions, grid_eta, initial_point, make_planted_test_matrix, make_test_matrix,
    partition_column_blocks, potential, procrustes_align, project_tangent, retract, rg_step, riemannian_gradient,
    sampling_rng, solve, srg_step, BMode, EpochParams, Mat, Method, NoClock, SolverConfig, StiefelPoint, SvrrgState,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Synthetic stand-in for the Schenk matrix: `n = 2000`, `τ = 0.9`, run
/// with the published protocol.
fn protocol_reproduction() -> Outcome {
    let (a, reference) = make_planted_test_matrix(2000, 3, 0.9, 5, 5, 3).map_err(err)?;
    let tau = reference.tau().unwrap_or(0.0);
    let p = partition_column_blocks(a, 100).map_err(err)?;
    let base = SolverConfig { k: 3, seed: 3, ..SolverConfig::default() };
    let x0 = initial_point(2000, 3, base.seed).map_err(err)?;
    let grid = grid_eta(&p, &base, &x0, Some(&reference), &[0.1, 1.0, 10.0], 30.0).map_err(err)?;
    let cfg = SolverConfig { eta: grid.best_eta, ..base };
    let t = solve(Method::Svrrg, &p, &cfg, &x0, Some(&reference), &mut NoClock).map_err(err)?;
    let handover = &t.rows[t.warm_start_epochs];
    let epochs = t.rows.len() - 1 - t.warm_start_epochs;
    let extra = t.total_passes() - handover.passes;
    let last = t.last();
    let detail = format!(
        "n=2000 tau={tau} L={} m={} eta={} warm E={:.2e} after {} passes; svrrg {epochs} epochs, +{extra} passes, E={:.2e}",
        p.blocks(),
        t.epoch_length,
        cfg.eta,
        handover.rel_error,
        handover.passes,
        last.rel_error
    );
    ensure(
        tau >= 0.1
            && handover.rel_error <= 1e-6
            && t.converged
            && last.rel_error <= 1e-12
            && epochs <= 20
            && extra <= 30.0,
        detail,
    )
}

fn exponential_rate() -> Outcome {
    let (a, reference) = make_test_matrix(200, 3, 0.3, 1).map_err(err)?;
    let p = partition_column_blocks(a, 10).map_err(err)?;
    let cfg = SolverConfig {
        k: 3,
        eta: 10.0,
        warm_start_tol: 1e-2,
        target_tol: 1e-10,
        max_epochs: 40,
        seed: 1,
        ..SolverConfig::default()
    };
    let x0 = initial_point(200, 3, cfg.seed).map_err(err)?;
    let t = solve(Method::Svrrg, &p, &cfg, &x0, Some(&reference), &mut NoClock).map_err(err)?;
    let theta0 = t.warm_start_potential.unwrap_or(f64::NAN);
    let rows = &t.rows[t.warm_start_epochs..];
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.potential_norm > 0.0).map(|r| (r.passes, r.potential_norm.ln())).collect();
    let mut ratios: Vec<f64> = rows.windows(2).map(|w| w[1].potential_norm / w[0].potential_norm).collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios.get(ratios.len() / 2).copied().unwrap_or(f64::NAN);
    let r2 = r_squared(&pts);

    let budget = t.total_passes();
    let srg = grid_eta(&p, &cfg, &x0, Some(&reference), &[0.1, 1.0, 10.0], budget).map_err(err)?;
    let srg_best = srg.table.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    let detail = format!(
        "theta0={theta0:.3} svrrg E={:.2e} in {budget} passes, median ratio {median:.3}, R^2 {r2:.4}; srg best eta {} E={srg_best:.2e}",
        t.last().rel_error,
        srg.best_eta
    );
    ensure(theta0 < 0.5 && t.converged && median <= 0.7 && r2 >= 0.95 && srg_best > 1e-10, detail)
}

/// Coefficient of determination of the least-squares line through `pts`.
fn r_squared(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn feasibility_everywhere() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut iterates = 0usize;
    for i in 0..20u64 {
        let n = 20 + 2 * i as usize;
        let k = 1 + (i % 3) as usize;
        let (a, _) = make_test_matrix(n, k, 0.3, 100 + i).map_err(err)?;
        let p = partition_column_blocks(a, 3 + (i % 5) as usize).map_err(err)?;
        let cfg = SolverConfig { k, ..SolverConfig::default() };
        let alpha = cfg.alpha(&p);
        let x0 = initial_point(n, k, i).map_err(err)?;
        let mut track = |x: &StiefelPoint| {
            worst = worst.max(x.feasibility());
            iterates += 1;
        };

        let mut x = x0.clone();
        for _ in 0..50 {
            x = rg_step(&p, &x, alpha).map_err(err)?;
            track(&x);
        }
        let mut rng = sampling_rng(i);
        let mut x = x0.clone();
        for t in 1..=200 {
            x = srg_step(&p, &x, t, 10.0, &mut rng).map_err(err)?;
            track(&x);
        }
        let b_mode = if i % 2 == 0 { BMode::Identity } else { BMode::Procrustes };
        let params = EpochParams { alpha, m: cfg.epoch_length(&p), b_mode };
        let mut state = SvrrgState::new(&p, x, sampling_rng(i + 1)).map_err(err)?;
        for _ in 0..20 {
            state = svrrg_epoch_observed(&p, state, params, &mut track).map_err(err)?;
        }
    }
    ensure(worst <= 1e-12, format!("{iterates} iterates on 20 instances, worst ||X^T X - I||_F = {worst:.2e}"))
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..10u64 {
        let n = 20 + 3 * i as usize;
        let k = 1 + (i % 3) as usize;
        let (a, constructed) = make_test_matrix(n, k, 0.3, 200 + i).map_err(err)?;
        let truth = svrrg_core::dense_eigh(&a.to_dense(), 100).map_err(err)?.truncated(k).map_err(err)?;
        let p = partition_column_blocks(a, 5).map_err(err)?;
        let cfg = SolverConfig {
            k,
            eta: 10.0,
            warm_start_tol: 1e-2,
            target_tol: 0.0,
            max_epochs: 150,
            seed: i,
            ..SolverConfig::default()
        };
        let x0 = initial_point(n, k, i).map_err(err)?;
        let t = solve(Method::Svrrg, &p, &cfg, &x0, Some(&constructed), &mut NoClock).map_err(err)?;
        worst = worst.max(potential(&truth, &t.final_point).map_err(err)?);
    }
    ensure(worst <= 1e-10, format!("10 instances n in [20, 47], k in {{1,2,3}}: worst theta = {worst:.2e}"))
}

fn variance_reduction() -> Outcome {
    let (a, reference) = make_test_matrix(40, 2, 0.3, 5).map_err(err)?;
    let p = partition_column_blocks(a, 5).map_err(err)?.rescaled();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut mean, mut spec, mut frob_margin, mut violations) = (0.0f64, 0.0f64, f64::INFINITY, 0);
    for _ in 0..100 {
        let x = perturbed_solution(reference.vectors(), &mut rng).map_err(err)?;
        let xt = perturbed_solution(reference.vectors(), &mut rng).map_err(err)?;
        let b = procrustes_align(&x, &xt).map_err(err)?.rotation;
        let r = lemma12_check(&p, &x, &xt, Some(&b), &reference).map_err(err)?;
        mean = mean.max(r.mean_residual);
        spec = spec.max(r.max_w_spectral);
        frob_margin = frob_margin.min(r.kappa_f_sq - r.max_w_frobenius_sq);
        violations += r.violations;
    }
    let x = initial_point(40, 2, 9).map_err(err)?;
    let same = lemma12_check(&p, &x, &x, None, &reference).map_err(err)?;
    let detail = format!(
        "100 pairs, L={}: max |mean W| {mean:.1e}, max ||W||_2 {spec:.3} (<= 8), min kappa_F^2 margin {frob_margin:.2e}, \
         violations {violations}; X = X~: max ||W||_2 {:.1e}",
        p.blocks(),
        same.max_w_spectral
    );
    ensure(mean <= 1e-10 && violations == 0 && same.max_w_spectral <= 1e-14, detail)
}

fn lemma6() -> Outcome {
    let o = lemma6_suite(500, 0, 0.1).map_err(err)?;
    ensure(o.passed, format!("{} steps at alpha=0.1, k=2: bound 20k*alpha/(1-5alpha) = 8, worst margin {:.3}", o.trials, o.worst_margin))
}

fn lemma10() -> Outcome {
    let o = lemma10_suite(1000, 0).map_err(err)?;
    ensure(o.passed && o.worst_margin >= -CHECK_SLACK, format!("{} trials, worst lhs - rhs = {:.3e}", o.trials, o.worst_margin))
}

fn gradient_check() -> Outcome {
    let (a, _) = make_test_matrix(50, 3, 0.3, 8).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = StiefelPoint::random(50, 3, &mut rng).map_err(err)?;
    let g = riemannian_gradient(&a, &x).map_err(err)?;
    let f0 = objective(&a, x.matrix());
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = Mat::from_fn(50, 3, |_, _| StandardNormal.sample(&mut rng));
        let xi = project_tangent(&x, &z).map_err(err)?;
        let xi = xi.scaled(1.0 / xi.matrix().frobenius());
        let t = 1e-6;
        let fd = (objective(&a, retract(&x, &xi.scaled(t)).map_err(err)?.matrix()) - f0) / t;
        let exact = g.matrix().inner(xi.matrix());
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    ensure(worst <= 1e-4, format!("20 directions, worst relative error {worst:.2e}"))
}

fn theorem_consistency() -> Outcome {
    // Hand evaluations of ⌈ln(1/ε) / ln(2/φ)⌉:
    // ln(1000)/ln(40) = 6.9078/3.6889 = 1.873 → 2
    // ln(1e8)/ln(66.67) = 18.421/4.1997 = 4.386 → 5
    // ln(2)/ln(2.222) = 0.6931/0.7985 = 0.868 → 1
    let spots = [(1e-3, 0.05, 2u64), (1e-8, 0.03, 5), (0.5, 0.9, 1)];
    let mut bad = Vec::new();
    for (eps, phi, expected) in spots {
        let r = check_theorem_conditions(2, 0.3, 1e-9, 10, phi, eps, 0.1).map_err(err)?;
        if r.epoch_budget != expected || epoch_budget(eps, phi) != expected {
            bad.push(format!("T({eps}, {phi}) = {} != {expected}", r.epoch_budget));
        }
    }
    let (mut passing, mut worst_lo, mut worst_hi) = (0, f64::INFINITY, f64::NEG_INFINITY);
    for k in 1..=4 {
        for tau in [0.05, 0.1, 0.3, 0.9] {
            for frac in [0.1, 0.5, 0.9] {
                for mult in [1.0, 2.0] {
                    let (eps, theta0): (f64, f64) = (1e-6, 0.2);
                    let phi = 0.9 / (1.0 / eps).log2().ceil();
                    let probe = check_theorem_conditions(k, tau, 1e-12, 1, phi, eps, theta0).map_err(err)?;
                    let alpha = frac * probe.alpha_max;
                    let m_min = check_theorem_conditions(k, tau, alpha, 1, phi, eps, theta0).map_err(err)?.m_min;
                    let m = (mult * m_min).ceil() as usize;
                    let r = check_theorem_conditions(k, tau, alpha, m, phi, eps, theta0).map_err(err)?;
                    if r.all_satisfied() {
                        passing += 1;
                        worst_lo = worst_lo.min(r.contraction);
                        worst_hi = worst_hi.max(r.contraction);
                        if !(r.contraction > 0.0 && r.contraction < 1.0) {
                            bad.push(format!("contraction {} outside (0,1)", r.contraction));
                        }
                    }
                }
            }
        }
    }
    if passing == 0 {
        bad.push("no passing configuration generated".into());
    }
    let detail = format!(
        "3 spot budgets; {passing} passing configs with 1 - c1*alpha*tau in [{worst_lo:.15}, {worst_hi:.15}]{}",
        if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
    );
    ensure(bad.is_empty(), detail)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let path = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let (m, r) = (path("a.mtx"), path("a.ref"));
    let gen = ["svrrg", "generate", "--kind", "dense", "--n", "60", "--k", "2", "--gap", "0.3", "--seed", "7"];
    let code = main_with_args(gen.iter().copied().chain(["--matrix", &m, "--reference", &r]));
    if code != 0 {
        return Err(format!("generate exited with {code}"));
    }
    for out in ["first", "second"] {
        let o = path(out);
        let args = ["svrrg", "run", "--matrix", &m, "--reference", &r, "--k", "2", "--block-size", "6"];
        let rest = ["--solvers", "rg,srg,svrrg", "--seed", "7", "--max-epochs", "10", "--warm-budget", "20", "--out", &o];
        let code = main_with_args(args.iter().chain(rest.iter()).copied());
        if code != 0 {
            return Err(format!("run exited with {code}"));
        }
    }
    let mut same = true;
    let mut bytes = 0;
    for s in ["rg", "srg", "svrrg"] {
        let a = fs::read(dir.path().join(format!("first/{s}.csv"))).map_err(err)?;
        let b = fs::read(dir.path().join(format!("second/{s}.csv"))).map_err(err)?;
        bytes += a.len();
        same &= a == b;
    }
    ensure(same, format!("3 solvers, seed 7: {bytes} CSV bytes compared, identical={same}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("protocol reproduction (synthetic n=2000)", protocol_reproduction),
        ("exponential rate vs SRG", exponential_rate),
        ("feasibility of every iterate", feasibility_everywhere),
        ("oracle equivalence with dense_eigh", oracle_equivalence),
        ("unbiasedness and variance bounds", variance_reduction),
        ("lemma 6 per-step bound", lemma6),
        ("lemma 10 inequality", lemma10),
        ("finite-difference gradient", gradient_check),
        ("theorem checker consistency", theorem_consistency),
        ("byte-identical traces", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
