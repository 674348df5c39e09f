//! Exact-arithmetic billiard dynamics on prefractal approximations of the
//! T-fractal table.
//!
//! The T-fractal is the planar region built by attaching, above a unit
//! square with a T-shaped cap, two half-scale copies of the whole figure,
//! then two quarter-scale copies above those, and so on. The level-`n`
//! prefractal `T_n` truncates this construction after `n` doubling stages,
//! leaving `2^(n+1)` open horizontal gaps ("removed segments") along its
//! top edge at height `sigma_n = 3 (1 - 2^-(n+1))`.
//!
//! Everything here is computed over the field `Q(sqrt(d))` (rationals, or
//! rationals adjoined a single square root, `d = 2` in practice): collision
//! points, reflection directions, unfoldings, escape bookkeeping, and limit
//! points on the "elusive" limit segment `[-1, 2] x {3}` are all exact.
//! Floating point appears only in rendering output, never in a predicate.

pub mod admissibility;
pub mod analysis;
pub mod flow;
pub mod geometry;
pub mod output;
pub mod scalar;
pub mod sqrt2_family;
pub mod suites;
pub mod unfolding;

pub use flow::{trace_orbit, Direction, Orbit, PhasePoint, Slope, Termination};
pub use geometry::{t_prefractal, unit_square, Boundary, Point};
pub use scalar::{QuadScalar, Rational, ScalarError};
