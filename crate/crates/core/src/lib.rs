//! Algorithmic core for diet-pattern sparsified genomics: apply a binary
//! "diet pattern" to DNA sequences, sketch the sparsified sequences with
//! double-strand minimizers, index and match seeds, select per-read pattern
//! phase by seed-frequency voting, locate mappings by diagonal voting, and
//! align the winning pairs with banded dynamic programming.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats, and the CLI
//! live in the companion `dietmap` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod align;
pub mod contain;
pub mod index;
pub mod mapper;
pub mod pattern;
pub mod seedbench;
pub mod seq;
pub mod sketch;

pub use align::{AlignmentRecord, RecordClass, ScoringScheme};
pub use index::SeedIndex;
pub use mapper::{AdjustedHit, VoteCluster};
pub use pattern::{DietPattern, PatternedSequence};
pub use seq::{NucSequence, ReferenceBatch};
pub use sketch::{Minimizer, Strand};
