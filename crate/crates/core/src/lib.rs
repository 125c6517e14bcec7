//! Explicit reflections across the boundary of a polynomial cusp
//! `{0 < t <= 1, |x| < t^s}`, the Sobolev extension operators they induce,
//! and a seeded Monte Carlo harness that checks their Jacobian estimates
//! and their sharp `(p, q)` windows.
// `!(a > b)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod extension;
pub mod geometry;
pub mod reflections;
pub mod sobolev;
