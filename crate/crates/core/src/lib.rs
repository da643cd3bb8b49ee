//! Measuring whether embedding spaces trained on different corpora differ
//! more than retraining on reshuffled copies of the same corpus.
//!
//! The crate trains seeded subword skip-gram models ([`sgns`]), compares
//! them by k-nearest-neighbor overlap over an annotated lexicon
//! ([`overlap`], [`lexicon`]), and tests the differences statistically
//! ([`stats`]). [`pipeline`] ties the stages together.

pub mod corpus;
pub mod lexicon;
pub mod overlap;
pub mod pipeline;
pub mod sgns;
pub mod stats;
