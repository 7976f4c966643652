//! Number-filling puzzle toolkit for interference alignment on partially
//! connected (M, N)-channels.
//!
//! - [`topology`]: channel description (`K`, message flow `M`, connectivity `N`).
//! - [`puzzle`]: validity, interference counts and exact scores of index matrices.
//! - [`solver`]: exhaustive, branch-and-bound and local-search optimisers.
//! - [`constructions`]: closed-form labellings for the symmetric band family.
//! - [`alignment`]: builds the alignment scheme for an index matrix and checks
//!   that every receiver matrix has full column rank.

pub mod alignment;
pub mod constructions;
pub mod error;
pub mod puzzle;
pub mod solver;
pub mod topology;

mod text;

pub use error::{Error, Result};
pub use puzzle::{IndexMatrix, ScoreValue};
pub use topology::ChannelSpec;
