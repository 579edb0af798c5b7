//! Top-k symmetric eigenvectors by Riemannian gradient ascent on the
//! Stiefel manifold, with deterministic (RG), stochastic (SRG) and
//! stochastic variance-reduced (SVRRG) iterations.
//!
//! The crate is `no_std` and needs only `alloc`. It maximizes
//! `f(X) = ½ tr(XᵀAX)` subject to `XᵀX = I` for a sparse symmetric `A`
//! split into column blocks `A = (1/L) Σ_l A⁽ˡ⁾`.
//!
//! ```
//! use svrrg_core::{initial_point, make_test_matrix, partition_column_blocks, solve};
//! use svrrg_core::{Method, NoClock, SolverConfig};
//!
//! let (a, reference) = make_test_matrix(40, 2, 0.4, 7).unwrap();
//! let p = partition_column_blocks(a, 10).unwrap();
//! let cfg = SolverConfig { k: 2, max_epochs: 200, target_tol: 1e-10, ..SolverConfig::default() };
//! let x0 = initial_point(40, 2, cfg.seed).unwrap();
//! let trace = solve(Method::Svrrg, &p, &cfg, &x0, Some(&reference), &mut NoClock).unwrap();
//! assert!(trace.converged);
//! ```

#![no_std]
// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dense;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod oracle;
pub mod solver;
pub mod stiefel;
pub mod theory;

pub use dense::Mat;
pub use error::{Error, Result};
pub use matrix::{
    gershgorin_bound, partition_column_blocks, spectral_norm_estimate, BlockPartition, LinearOperator,
    SymmetricSparseMatrix,
};
pub use oracle::{
    dense_eigh, make_planted_test_matrix, make_sparse_test_matrix, make_test_matrix, potential, subspace_reference,
    EigenReference,
};
pub use solver::{
    grid_eta, initial_point, rg_step, sampling_rng, solve, srg_step, svrrg_epoch, svrrg_gradient, BMode, Clock,
    ConvergenceTrace, EpochParams, Method, MetricSample, NoClock, SolverConfig, StepRule, SvrrgState,
};
pub use stiefel::{
    procrustes_align, project_tangent, retract, riemannian_gradient, vector_transport, StiefelPoint, TangentVector,
};
pub use theory::{
    check_theorem_conditions, feasibility, relative_error, theorem_constants, TheoremConstants, TheoremReport,
};
