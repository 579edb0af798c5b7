//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use svrrg_core::oracle::DENSE_EIGH_MAX_N;
use svrrg_core::solver::{rebase_relative_error, DEFAULT_ZETA};
use svrrg_core::{
    check_theorem_conditions, dense_eigh, grid_eta, initial_point, make_planted_test_matrix, make_sparse_test_matrix,
    make_test_matrix, solve, subspace_reference, BMode, ConvergenceTrace, EigenReference, Method, NoClock,
    SolverConfig, StepRule, SymmetricSparseMatrix, TheoremReport,
};

use crate::checks;
use crate::mm::{load_matrix_market, save_matrix_market};
use crate::refcache::{load_reference, matrix_digest, save_reference};
use crate::trace_io::{fmt_f64, write_steps_csv, write_trace_csv, Meta, WallClock};

/// Exit code for rejected arguments or configurations.
pub const USAGE_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "svrrg", version, about = "Top-k symmetric eigenvectors by Riemannian SVRG on the Stiefel manifold")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run solvers from a shared random start and write one CSV per solver.
    Run(RunArgs),
    /// Run the randomized lemma suites and constant spot checks.
    Verify(VerifyArgs),
    /// Tune the SRG decay numerator on a grid.
    GridEta(GridArgs),
    /// Evaluate the convergence theorem's constants and conditions.
    TheoremCheck(TheoremArgs),
    /// Write a synthetic matrix and its exact reference cache.
    Generate(GenerateArgs),
    /// Compute a reference cache for a matrix.
    Reference(ReferenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Rg,
    Srg,
    Svrrg,
}

impl From<Solver> for Method {
    fn from(s: Solver) -> Method {
        match s {
            Solver::Rg => Method::Rg,
            Solver::Srg => Method::Srg,
            Solver::Svrrg => Method::Svrrg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BModeArg {
    Identity,
    Procrustes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Problem and solver settings shared by `run` and `grid-eta`.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub block_size: usize,
    /// Heuristic step numerator, `alpha = zeta / (||A||_1 sqrt(n))`.
    #[arg(long, default_value_t = DEFAULT_ZETA)]
    pub zeta: f64,
    /// Fixed step for RG and SVRRG; overrides --zeta.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// SRG decay numerator, `alpha_t = eta / t`.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// SVRRG inner steps per epoch as a fraction of the block count.
    #[arg(long, default_value_t = 0.5)]
    pub epoch_frac: f64,
    /// SRG steps per reporting epoch as a fraction of the block count.
    #[arg(long, default_value_t = 1.5)]
    pub srg_epoch_frac: f64,
    #[arg(long, default_value_t = 20)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub warm_tol: f64,
    /// Data passes the SRG warm start may use before SVRRG starts anyway.
    #[arg(long, default_value_t = 200.0)]
    pub warm_budget: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub target_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = BModeArg::Identity)]
    pub b_mode: BModeArg,
    /// Divide components by their Gershgorin bound.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub rescale: Switch,
    /// Reference cache from `generate` or `reference`.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

impl ProblemArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            k: self.k,
            step: match self.alpha {
                Some(a) => StepRule::Fixed(a),
                None => StepRule::Heuristic { zeta: self.zeta },
            },
            eta: self.eta,
            epoch_frac: self.epoch_frac,
            srg_epoch_frac: self.srg_epoch_frac,
            max_epochs: self.max_epochs,
            seed: self.seed,
            b_mode: match self.b_mode {
                BModeArg::Identity => BMode::Identity,
                BModeArg::Procrustes => BMode::Procrustes,
            },
            rescale: self.rescale == Switch::On,
            warm_start_tol: self.warm_tol,
            warm_budget: self.warm_budget,
            target_tol: self.target_tol,
            record_steps: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "svrrg")]
    pub solvers: Vec<Solver>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Record wall-clock milliseconds (otherwise the column is 0).
    #[arg(long)]
    pub timing: bool,
    /// Also write the potential after every SVRRG inner step.
    #[arg(long)]
    pub record_steps: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step used by the per-step potential suite; must be below 1/5.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    pub etas: Vec<f64>,
    /// Data passes given to each candidate.
    #[arg(long, default_value_t = 30.0)]
    pub pass_budget: f64,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub phi: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub theta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Dense `Q D Qᵀ` with a Haar-like `Q`.
    Dense,
    /// Block-diagonal random clusters on permuted indices.
    Sparse,
    /// Top eigenpairs planted on a decoupled index set.
    Planted,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub gap: f64,
    #[arg(long, default_value_t = 5)]
    pub cluster: usize,
    /// Planted index-set size (planted kind only).
    #[arg(long, default_value_t = 5)]
    pub support: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefMethod {
    /// Dense Jacobi up to the dense size limit, subspace iteration beyond.
    Auto,
    Dense,
    Subspace,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = RefMethod::Auto)]
    pub method: RefMethod,
    /// Relative Ritz residual for subspace iteration.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A failure that should exit with [`USAGE_ERROR`].
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses `args`, runs the command, prints diagnostics and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                USAGE_ERROR
            } else {
                1
            }
        }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Run(a) => run(&a, &mut out),
        Command::Verify(a) => verify(&a, &mut out),
        Command::GridEta(a) => grid(&a, &mut out),
        Command::TheoremCheck(a) => theorem(&a, &mut out),
        Command::Generate(a) => generate(&a, &mut out),
        Command::Reference(a) => reference(&a, &mut out),
    }
}

struct Problem {
    a: SymmetricSparseMatrix,
    reference: Option<EigenReference>,
    name: String,
}

fn load_problem(p: &ProblemArgs) -> anyhow::Result<Problem> {
    let a = load_matrix_market(&p.matrix).with_context(|| format!("loading {}", p.matrix.display()))?;
    let reference = match &p.reference {
        Some(path) => {
            let digest = matrix_digest(&a);
            let (r, _) = load_reference(path, Some(&digest))
                .with_context(|| format!("loading reference {}", path.display()))?;
            if r.n() != a.n() || r.k() < p.k {
                bail!(usage(format!("reference holds {} vectors of length {}, need {} of length {}", r.k(), r.n(), p.k, a.n())));
            }
            Some(if r.k() > p.k { r.truncated(p.k)? } else { r })
        }
        None => None,
    };
    let name = p.matrix.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Problem { a, reference, name })
}

fn check_config(p: &ProblemArgs, cfg: &SolverConfig, n: usize) -> anyhow::Result<()> {
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if p.k >= n {
        bail!(usage(format!("k = {} must be below n = {n}", p.k)));
    }
    if p.block_size == 0 || p.block_size > n {
        bail!(usage(format!("block size {} must lie in 1..={n}", p.block_size)));
    }
    Ok(())
}

fn run(args: &RunArgs, out: &mut impl Write) -> anyhow::Result<i32> {
    if args.solvers.is_empty() {
        bail!(usage("select at least one solver"));
    }
    let prob = load_problem(&args.problem)?;
    let mut cfg = args.problem.config();
    cfg.record_steps = args.record_steps;
    check_config(&args.problem, &cfg, prob.a.n())?;
    let nnz = prob.a.nnz();
    let n = prob.a.n();
    let p = cfg.partition(prob.a, args.problem.block_size)?;
    let x0 = initial_point(n, cfg.k, cfg.seed)?;

    let mut traces: Vec<ConvergenceTrace> = Vec::new();
    for &s in &args.solvers {
        let trace = if args.timing {
            solve(s.into(), &p, &cfg, &x0, prob.reference.as_ref(), &mut WallClock::start())?
        } else {
            solve(s.into(), &p, &cfg, &x0, prob.reference.as_ref(), &mut NoClock)?
        };
        traces.push(trace);
    }
    if prob.reference.is_none() {
        rebase_relative_error(&mut traces, cfg.target_tol);
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for t in &traces {
        let name = t.method.name();
        let csv = args.out.join(format!("{name}.csv"));
        write_trace_csv(fs::File::create(&csv).with_context(|| format!("writing {}", csv.display()))?, t)?;
        let mut meta = Meta::default();
        meta.push("matrix", &prob.name);
        meta.push("n", n);
        meta.push("nnz", nnz);
        meta.push("k", cfg.k);
        meta.push("solver", name);
        meta.push("block_size", p.block_size());
        meta.push("blocks", p.blocks());
        meta.push("norm_bound", fmt_f64(p.norm_bound()));
        meta.push("rescale", cfg.rescale);
        meta.push("alpha", fmt_f64(t.alpha));
        meta.push("eta", fmt_f64(t.eta));
        meta.push("epoch_length", t.epoch_length);
        meta.push("b_mode", format!("{:?}", cfg.b_mode).to_lowercase());
        meta.push("max_epochs", cfg.max_epochs);
        meta.push("warm_tol", fmt_f64(cfg.warm_start_tol));
        meta.push("warm_budget", fmt_f64(cfg.warm_budget));
        meta.push("target_tol", fmt_f64(cfg.target_tol));
        meta.push("seed", cfg.seed);
        meta.push("warm_epochs", t.warm_start_epochs);
        meta.push("warm_start_potential", t.warm_start_potential.map_or("NaN".into(), fmt_f64));
        meta.push("rel_error_approximate", t.rel_error_approximate);
        meta.push("converged", t.converged);
        for w in &t.warnings {
            meta.push("warning", w);
        }
        let meta_path = args.out.join(format!("{name}.meta"));
        meta.write(fs::File::create(&meta_path)?)?;
        if cfg.record_steps && t.method == Method::Svrrg && !t.step_potentials.is_empty() {
            write_steps_csv(fs::File::create(args.out.join("svrrg_steps.csv"))?, &t.step_potentials)?;
        }
        for w in &t.warnings {
            eprintln!("warning: {name}: {w}");
        }
        let last = t.last();
        writeln!(
            out,
            "{name:<6} epochs={} passes={} rel_error={:.3e} potential_norm={:.3e} feasibility={:.3e} converged={}",
            last.epoch, last.passes, last.rel_error, last.potential_norm, last.feasibility, t.converged
        )?;
    }
    Ok(0)
}

fn verify(args: &VerifyArgs, out: &mut impl Write) -> anyhow::Result<i32> {
    if !(0.0..0.2).contains(&args.alpha) {
        bail!(usage(format!("lemma6 needs 0 <= alpha < 1/5, got {}", args.alpha)));
    }
    if args.trials == 0 {
        eprintln!("warning: --trials 0 makes every randomized check vacuous");
    }
    let outcomes = [
        checks::lemma6_suite(args.trials, args.seed, args.alpha)?,
        checks::lemma10_suite(args.trials, args.seed)?,
        checks::lemma12_suite(args.trials, args.seed)?,
        checks::constants_smoke()?,
    ];
    for o in &outcomes {
        writeln!(
            out,
            "{:<18} trials={:<6} worst_margin={:<12.4e} {}",
            o.name,
            o.trials,
            o.worst_margin,
            if o.passed { "PASS" } else { "FAIL" }
        )?;
    }
    Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 1 })
}

fn grid(args: &GridArgs, out: &mut impl Write) -> anyhow::Result<i32> {
    if args.etas.is_empty() {
        bail!(usage("eta grid is empty"));
    }
    let prob = load_problem(&args.problem)?;
    let cfg = args.problem.config();
    check_config(&args.problem, &cfg, prob.a.n())?;
    let n = prob.a.n();
    let p = cfg.partition(prob.a, args.problem.block_size)?;
    let x0 = initial_point(n, cfg.k, cfg.seed)?;
    let g = grid_eta(&p, &cfg, &x0, prob.reference.as_ref(), &args.etas, args.pass_budget)?;
    writeln!(out, "{:>12}  {:>24}", "eta", "final_rel_error")?;
    for (eta, e) in &g.table {
        writeln!(out, "{:>12}  {:>24}", eta, fmt_f64(*e))?;
    }
    writeln!(out, "best_eta={}", g.best_eta)?;
    Ok(0)
}

/// Aligned table followed by `key=value` lines.
pub fn format_theorem_report(r: &TheoremReport) -> String {
    let c = &r.constants;
    let mut s = String::new();
    let flags = c.positive();
    for (i, (v, ok)) in c.as_array().iter().zip(flags).enumerate() {
        s += &format!("c{i}  {:>24}  {}\n", fmt_f64(*v), if ok { "positive" } else { "NOT POSITIVE" });
    }
    s += &format!("alpha_max     {:>24}\n", fmt_f64(r.alpha_max));
    s += &format!("m_min         {:>24}\n", fmt_f64(r.m_min));
    s += &format!("epoch_budget  {:>24}\n", r.epoch_budget);
    s += &format!("contraction   {:>24}\n", fmt_f64(r.contraction));
    for cond in &r.conditions {
        s += &format!(
            "{:<14}{:>24} vs {:>24}  {}\n",
            cond.name,
            fmt_f64(cond.lhs),
            fmt_f64(cond.rhs),
            if cond.satisfied { "ok" } else { "FAIL" }
        );
    }
    for (i, v) in c.as_array().iter().enumerate() {
        s += &format!("c{i}={}\n", fmt_f64(*v));
    }
    s += &format!("tau={}\nalpha_max={}\nm_min={}\n", fmt_f64(r.tau), fmt_f64(r.alpha_max), fmt_f64(r.m_min));
    s += &format!("epoch_budget={}\ncontraction={}\n", r.epoch_budget, fmt_f64(r.contraction));
    for cond in &r.conditions {
        s += &format!(
            "condition.{}={} lhs={} rhs={}\n",
            cond.name,
            if cond.satisfied { "pass" } else { "fail" },
            fmt_f64(cond.lhs),
            fmt_f64(cond.rhs)
        );
    }
    s += &format!("all_satisfied={}\n", r.all_satisfied());
    s
}

fn theorem(args: &TheoremArgs, out: &mut impl Write) -> anyhow::Result<i32> {
    let r = check_theorem_conditions(args.k, args.tau, args.alpha, args.m, args.phi, args.eps, args.theta0)
        .map_err(|e| usage(e.to_string()))?;
    write!(out, "{}", format_theorem_report(&r))?;
    Ok(0)
}

fn write_problem(a: &SymmetricSparseMatrix, r: &EigenReference, matrix: &Path, reference: &Path) -> anyhow::Result<()> {
    for path in [matrix, reference] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
    }
    save_matrix_market(matrix, a).with_context(|| format!("writing {}", matrix.display()))?;
    save_reference(reference, &matrix_digest(a), r).with_context(|| format!("writing {}", reference.display()))?;
    Ok(())
}

fn generate(args: &GenerateArgs, out: &mut impl Write) -> anyhow::Result<i32> {
    let made = match args.kind {
        Kind::Dense => make_test_matrix(args.n, args.k, args.gap, args.seed),
        Kind::Sparse => make_sparse_test_matrix(args.n, args.k, args.gap, args.cluster, args.seed),
        Kind::Planted => make_planted_test_matrix(args.n, args.k, args.gap, args.support, args.cluster, args.seed),
    };
    let (a, r) = made.map_err(|e| usage(e.to_string()))?;
    write_problem(&a, &r, &args.matrix, &args.reference)?;
    writeln!(out, "n={} nnz={} k={} tau={}", a.n(), a.nnz(), r.k(), r.tau().map_or("none".into(), fmt_f64))?;
    Ok(0)
}

fn reference(args: &ReferenceArgs, out: &mut impl Write) -> anyhow::Result<i32> {
    let a = load_matrix_market(&args.matrix).with_context(|| format!("loading {}", args.matrix.display()))?;
    if args.k == 0 || args.k >= a.n() {
        bail!(usage(format!("k = {} must lie in 1..{}", args.k, a.n())));
    }
    let dense = match args.method {
        RefMethod::Auto => a.n() <= 1000,
        RefMethod::Dense => true,
        RefMethod::Subspace => false,
    };
    let r = if dense {
        if a.n() > DENSE_EIGH_MAX_N {
            bail!(usage(format!("n = {} exceeds the dense limit {DENSE_EIGH_MAX_N}", a.n())));
        }
        dense_eigh(&a.to_dense(), 100)?.truncated(args.k)?
    } else {
        subspace_reference(&a, args.k, args.tol, args.max_iters, args.seed)?
    };
    save_reference(&args.out, &matrix_digest(&a), &r).with_context(|| format!("writing {}", args.out.display()))?;
    writeln!(out, "n={} k={} tau={} method={}", a.n(), r.k(), r.tau().map_or("none".into(), fmt_f64), if dense { "dense" } else { "subspace" })?;
    Ok(0)
}
