//! Efficiency analysis of decision-making units under imperfectly known data.
//!
//! Each unit's observation is replaced by a convex admissible region; a
//! Hit & Run walk draws observations from those regions, directional DEA
//! distances are recomputed per draw, and the resulting distance
//! distributions are summarized statistically.

pub mod bench;
pub mod dataset;
pub mod dea;
pub mod geometry;
pub mod inference;
pub mod lp;
pub mod pipeline;
pub mod sampler;
