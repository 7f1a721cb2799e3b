//! Truncated multidimensional Stieltjes-type moment problems.
//!
//! The crate checks positivity (moment and localizing matrices) and growth
//! (Stieltjes / Carleman series) conditions on finite moment data, recovers
//! atomic representing measures, and reduces moment problems on
//! semi-algebraic sets `K(f) = {x : f_j(x) ≥ 0}` to Stieltjes problems in the
//! image of `τ(x) = (f_1(x), …, f_m(x))`.

// `!(x <= tol)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod exec;
pub mod matrices;
pub mod moments;
pub mod oracle;
pub mod pipeline;
pub mod poly;
pub mod rational;
pub mod reduction;
pub mod solver1d;
pub mod solvermd;

pub use error::{Error, Result};
pub use exec::Execution;
pub use moments::{riesz_eval, riesz_eval_exact, Atom, AtomicMeasure, Moment, MomentSequence};
pub use poly::{poly_eval, poly_mul, MultiIndex, Polynomial};
