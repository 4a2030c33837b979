//! Sparse randomized Kaczmarz solvers for single and multiple measurement
//! vectors.
//!
//! The crate covers the Kaczmarz family (cyclic, randomized, sparse
//! randomized and its joint-sparse MMV extension), synthetic problem
//! generation, a deterministic Monte Carlo harness for recovery
//! experiments, and sparse-representation classification on top of the
//! joint solver.
//!
//! ```
//! use srkmmv_core::sampling::SeededRng;
//! use srkmmv_core::solvers::{solve, SolverConfig, Variant};
//! use srkmmv_core::synth::generate_problem;
//! use srkmmv_core::metrics::relative_error;
//!
//! let p = generate_problem(200, 50, 3, 4, &mut SeededRng::new(1)).unwrap();
//! let cfg = SolverConfig::new(Variant::SparseMmv, 10, 10, 7);
//! let r = solve(&p.a, &p.b, &cfg).unwrap();
//! assert!(relative_error(&p.x_true, &r.solution).unwrap() < 1e-6);
//! ```

pub mod classify;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod linalg;
pub mod metrics;
pub mod sampling;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Vector};
pub use solvers::{SolveResult, SolverConfig, SupportSet, Variant};
