//! Numerical laboratory for the linearized KdV-Burgers equation
//! `u_t - u_xx + u_xxx = f` on `(-L, L)` with `u(-L) = u(L) = u_x(L) = 0`.
//!
//! The crate discretizes the generator and its adjoint, integrates the forward,
//! forced and adjoint flows, builds Carleman weights and checks their
//! coefficient algebra, estimates internal observability constants from
//! Gramians, and synthesizes controls by duality.

// `!(x > 0.0)` is the NaN-rejecting form of argument checks; index loops mirror the stencil formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod carleman;
pub mod control;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod grid;
pub mod observability;
pub mod operator;
pub mod sobolev;

pub use error::{Error, Result};
pub use grid::{inner_product, Grid, StateVector};
pub use operator::{build_operator, dissipativity_residual, DiscreteOperator, OperatorKind};
