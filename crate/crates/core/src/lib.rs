//! Multi-hop passage retrieval over a proposition graph.
//!
//! Offline, passages are decomposed into propositions and entities and
//! indexed as a graph of entity cliques, passage containment links, and
//! synonymy links. Online, a query runs through two stages without any LLM
//! call: an exploratory Personalized PageRank induces a subgraph, then a
//! graph-guided beam search discovers proposition paths whose entities seed
//! a second, exploitative PageRank that ranks the evidence passages.

pub mod beam;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod extraction;
pub mod graph;
pub mod index;
pub mod normalize;
pub mod pipeline;
pub mod ppr;
pub mod synthetic;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
