//! Linear probing of constituency structure in fixed per-token representations.
//!
//! The crate is organised around the experiment pipeline:
//!
//! * [`treebank`] reads and preprocesses bracketed constituency treebanks and
//!   CoNLL-X dependency files, and answers structural queries (LCA labels,
//!   chunk labels, bracketings).
//! * [`nonce`] corrupts a corpus by replacing tokens with others that occur in
//!   the same dependency context.
//! * [`codec`] encodes trees as per-token label triples and decodes predicted
//!   triples back into trees.
//! * [`tasks`] assembles the probing datasets and control tasks.
//! * [`activations`] stores token-aligned activation matrices and turns them
//!   into probe features.
//! * [`probe`] trains and evaluates elastic-net softmax probes.
//! * [`neurons`] ranks probe input neurons and analyses the rankings.
//! * [`treeval`] scores reconstructed trees.
//!
//! Data-parallel stages run on rayon when the `parallel` feature is enabled
//! (the default). Every parallel stage produces output identical to its
//! sequential counterpart; see [`exec`].

pub mod activations;
pub mod codec;
mod error;
pub mod exec;
pub mod hash;
pub mod neurons;
pub mod nonce;
pub mod probe;
pub mod synthetic;
pub mod tasks;
pub mod treebank;
pub mod treeval;

pub use error::{Error, Result};
