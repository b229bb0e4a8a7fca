//! Density-matrix word representations.
//!
//! Learns density matrices from a corpus (Word2DM, multi-sense Word2DM),
//! builds them from contextual embeddings or clustered contexts, composes
//! them into phrase representations and evaluates them on word similarity,
//! compositional disambiguation and von Neumann entropy analyses.

pub mod builders;
pub mod composition;
pub mod corpus;
pub mod densecore;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod lexicon;
pub mod synthetic;
pub mod trainers;

pub use error::{Error, Result};
