//! Probabilistic circuits with monotone, squared (real and complex) and
//! Inception parameterizations.
//!
//! The crate is `no_std` with `alloc`. It contains:
//!
//! - [`circuit`]: the immutable circuit DAG, its evaluation semantics,
//!   structural checks and marginalization.
//! - [`transform`]: symbolic circuit algebra (conjugation, products of
//!   compatible circuits, latent augmentation and the Inception construction).
//! - [`numerics`]: log-polar complex arithmetic.
//! - [`engine`]: tensorized quad-tree models with CP layers, evaluated through
//!   pair matrices, with exact reverse-mode gradients.
//! - [`train`]: Adam, early stopping, bits-per-dimension.
//! - [`data`]: categorical datasets, synthetic mixtures, resolution reduction.
//! - [`oracle`]: brute-force references and the value-matrix rank lab.
//! - [`gen`]: seeded random circuit generators used by tests and `verify`.
#![no_std]
#![cfg_attr(docsrs, feature(doc_cfg))]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod circuit;
pub mod data;
pub mod engine;
pub mod gen;
pub mod math;
pub mod numerics;
pub mod oracle;
pub mod train;
pub mod transform;

pub use circuit::{Assignment, Circuit, CircuitBuilder, CircuitError, NodeId, NodeKind, Scope, VarId};
pub use numerics::LogComplex;

/// Complex scalar used for weights, table entries and circuit values.
pub type Complex = num_complex::Complex64;
