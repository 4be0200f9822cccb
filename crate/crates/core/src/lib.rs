//! Compact-group and affine Weyl chamber special functions, Lie-algebra
//! Brownian motion simulation, and statistical checks tying them together.

// `!(x > 0.0)` guards are meant to reject NaN; index loops mirror the formulas.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod affinephi;
pub mod charfun;
pub mod doobsim;
pub mod error;
pub mod groupsim;
pub mod harness;
pub mod numerics;
pub mod rng;
pub mod rootsys;
pub mod stats;

pub use error::{Error, Result};
