//! Numerical toolkit for almost periodic functions of several real variables.
//!
//! The crate builds functions `ℝⁿ → ℂᵈ` ([`field`], [`exprlang`],
//! [`trigpoly`]), estimates their invariants ([`meanvalue`], [`periods`]),
//! applies periodicity-preserving operators ([`operators`]), solves
//! contraction-type integral equations ([`solvers`]) and runs the
//! Vallée-Poussin and sampling experiments of [`approx`].
//!
//! All suprema and limits over unbounded domains are evaluated on explicit
//! finite grids; reports always carry the grids they were computed on.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod approx;
pub mod error;
pub mod exprlang;
pub mod field;
pub mod meanvalue;
pub mod operators;
pub mod periods;
pub mod solvers;
pub mod trigpoly;

pub use error::{Error, EvalFault, Result};
pub use field::{BoxGrid, Field, FieldFunction, ParamField, ParamFieldFunction, Point, C64};
