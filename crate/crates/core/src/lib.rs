//! Desk-scale multi-worker node embedding.
//!
//! The crate splits into two halves connected by on-disk sample files:
//!
//! * a **walk engine** ([`walker`]) that runs random walks over a graph,
//!   augments them into positive edge samples, and writes the samples out
//!   partitioned by episode and by 2D block;
//! * an **embedding training engine** ([`runtime`]) that executes a
//!   hierarchical ring schedule ([`schedule`]) over those blocks with one
//!   worker thread per simulated device, overlapping communication with
//!   SGNS training ([`sgns`]).
//!
//! Supporting modules: [`graph`] (CSR storage and 2D partitioning),
//! [`eval`] (link-prediction AUC), [`perfmodel`] (memory and pipeline cost
//! calculators), and [`store`] (episode sample files and manifests).
//!
//! Numeric kernels are generic over the scalar type through
//! [`num_traits::Float`]; production code uses the [`Real`] (f32) aliases
//! below, while tests instantiate f64 for reference computations.

pub mod embedding;
mod error;
pub mod eval;
pub mod graph;
pub mod noise;
pub mod perfmodel;
mod rng;
pub mod runtime;
pub mod schedule;
pub mod sgns;
pub mod store;
pub mod synthetic;
pub mod walker;

pub use error::{Error, Result};
pub use rng::stream_rng;

/// Node identifier. 32 bits holds every graph this system targets at desk
/// scale; file formats also admit 8-byte ids for forward compatibility.
pub type NodeId = u32;

/// Scalar type used for embeddings in production paths.
pub type Real = f32;

/// Embedding matrix over the production scalar.
pub type EmbeddingMatrix = embedding::Embeddings<Real>;
