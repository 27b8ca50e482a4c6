//! Builds word vectors for rare and unseen words by aligning a
//! knowledge-base embedding space with a corpus embedding space.
//!
//! The pieces, in pipeline order: a knowledge graph store ([`graph`]),
//! second-order random walks over it ([`walker`]), skip-gram training of the
//! walk corpus ([`sgns`]), synset-to-word composition ([`senses`]), CCA
//! alignment and the enhanced union space ([`align`]), similarity evaluation
//! and rarity simulation ([`eval`]), and a drop/backfill classification
//! harness ([`downstream`]).

pub mod align;
pub mod config;
pub mod downstream;
pub mod embed;
pub mod error;
pub mod eval;
pub mod graph;
pub mod manifest;
pub mod senses;
pub mod sgns;
pub mod walker;

pub use embed::EmbeddingSpace;
pub use error::{LexError, Result};
pub use graph::{EdgeKind, KnowledgeGraph};
