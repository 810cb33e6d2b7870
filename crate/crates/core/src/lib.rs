//! Sofic entropy of shift actions, computed on finite models.
//!
//! The crate builds finite local `G`-spaces (quotients of `ℤᵈ`, Schreier spaces of
//! free groups, grid-discretized circles for `ℝ`), enumerates labelings of their
//! points that are nearly equivariant maps into a shift space, and turns the
//! resulting microstate counts into entropy estimates.
//!
//! Layout:
//! - [`group`]: acting groups, balls and Haar weights.
//! - [`model`]: finite local `G`-spaces, good-point sets and sofic quality.
//! - [`shift`]: full shifts, subshifts of finite type, invariant measures.
//! - [`microstate`]: labelings, defects, empirical measures, transport.
//! - [`packing`]: separated/spanning/cover numbers and microstate counting engines.
//! - [`entropy`]: schedules, entropy reports, equidistribution and variational scans.
//!
//! The crate is `no_std` (it needs `alloc`). Parallel orchestration and file formats
//! live in the `sofic-lab` companion crate; everything here is deterministic and
//! exposes job-splitting hooks so callers can fan work out.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod entropy;
pub mod group;
pub mod microstate;
pub mod model;
pub mod packing;
pub mod shift;

mod math;

pub use entropy::{EntropyReport, EstimateMode, Schedule};
pub use group::{GroupElement, GroupModel, WeightedElementSet};
pub use microstate::{MapSpaceSpec, Microstate};
pub use model::LocalGSpace;
pub use shift::{InvariantMeasure, ShiftSystem};

/// Symbol index into an [`shift::Alphabet`].
pub type Symbol = u16;
