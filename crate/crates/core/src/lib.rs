//! Explainable node embeddings.
//!
//! Sense features ([`features`]) describe every node in human terms. An
//! embedding is explained node by node through Explain matrices
//! ([`explain`]), whose nuclear norm measures how many sense-feature
//! patterns are needed to describe the node's embedding. The XM penalties
//! ([`xm`]) push embedders ([`embed`]) toward low-norm explanations, and
//! [`eval`] measures the effect on explanation quality and link prediction.

pub mod embed;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod graph;
pub mod linalg;
pub mod xm;

pub use error::{Result, XmError};
