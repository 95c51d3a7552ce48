//! Community detection over streaming weighted bipartite graphs.
//!
//! The graph has a user layer and an item layer; edge weights count how
//! often the edge occurred inside a sliding window of the most recent
//! updates. A query asks for every community around some user: a connected
//! subgraph whose items carry at least one query keyword, whose edges each
//! sit in at least k butterflies (2x2 bicliques) of the subgraph, whose
//! users stay within r user-hops of the center, and whose wedge-adjacent
//! user pairs keep a relationship score of at least sigma. Answers come as
//! one-off snapshots or are kept current while the window slides.
//!
//! Crate layout, bottom up:
//!
//! * [`graph`]: the windowed bipartite multigraph and its deltas.
//! * [`scores`]: wedge and butterfly arithmetic plus the incrementally
//!   maintained per-pair score store.
//! * [`view`]: mutable subgraph views that the extraction pipeline peels.
//! * [`community`]: per-center extraction, certification, and a
//!   brute-force oracle the fast paths are tested against.
//! * [`prune`]: candidate filters, their toggles, and audit counters.
//! * [`synopsis`]: a hierarchical per-user aggregate tree for skipping
//!   hopeless candidate centers wholesale.
//! * [`engine`]: snapshot evaluation and registered continuous queries
//!   refreshed per slide.
//! * [`bbd`]: the decomposition-first baseline used for benchmarking.
//! * [`workload`], [`io`]: seeded corpus generation and file formats.

pub mod bbd;
pub mod community;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod keywords;
pub mod prune;
pub mod query;
pub mod scores;
pub mod synopsis;
pub mod view;
pub mod workload;

pub use error::{Error, Result};
