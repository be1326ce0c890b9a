//! Real positivity on finite-dimensional operator algebras.
//!
//! Elements are dense complex square matrices living in an explicit unital
//! ambient (the full matrix algebra, or a corner `eM_ne` cut down by a
//! Hermitian projection `e`). On top of that carrier the crate provides
//!
//! * numerical ranges, numerical abscissa and sectorial angles ([`numrange`]),
//! * membership and order for the accretive cone `r` and the cone
//!   `F = {x : ||e - x|| <= 1}` ([`cones`]),
//! * principal fractional powers by three independent routes, the
//!   F-transform and the classical norm/angle bounds ([`calculus`]),
//! * explicit subalgebras, support idempotents, ideals and hereditary
//!   subalgebras ([`algebra`]),
//! * linear maps between matrix algebras: Choi/Kraus, real complete
//!   positivity, symmetric and bicontractive projections ([`maps`]).
//!
//! Every checkable statement is exposed as a producer of a
//! [`report::VerificationReport`].
// NaN must fail tolerance comparisons, so `!(a <= b)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]


pub mod algebra;
pub mod calculus;
pub mod cones;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod numrange;
pub mod report;

pub use error::{Error, Result};
pub use linalg::{CMatrix, Tolerances, C64};
