//! Machinery for embedding bounded-degree trees into structured host graphs.
//!
//! The crate is organized around one pipeline: cut a rooted tree into a
//! fine partition (small hub sets plus shrubs hanging off them), then embed
//! the pieces into hosts presented through regularity-style structure
//! (dense bipartite pairs, regular pairs, regularized matchings,
//! nowhere-dense graphs with avoiding sets). Every embedding procedure
//! returns a checkable object, and the [`oracle`] module re-verifies the
//! interesting claims by brute force at small scale.

pub mod duplicate;
pub mod embed;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod partition;
pub mod rat;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
