//! Spectral clustering for mixed-type data.
//!
//! Numeric features define a fully connected Gaussian similarity graph over the
//! datapoints. Every category of every categorical variable becomes an extra
//! node, linked to the datapoints that carry it with weight `λ_ℓ`. Clustering
//! the augmented graph with normalized cuts (`specmix`) trades off numeric
//! similarity against keeping whole categories inside one cluster. When no
//! numeric features are present the graph is bipartite and the eigenproblem
//! is solved on the `t` category nodes alone and lifted back (`onlycat`), in
//! time linear in the number of datapoints.
//!
//! Modules:
//! - [`dataset`]: mixed datasets, CSV ingestion, preprocessing, one-hot
//!   encoders and the synthetic generator.
//! - [`graph`]: base similarity, the augmented graph, assignment matrices and
//!   cut energies.
//! - [`eigen`]: dense and Lanczos symmetric eigensolvers plus the normalized
//!   generalized problem `L v = μ D v`.
//! - [`kmeans`]: k-means++ seeded Lloyd iterations.
//! - [`pipelines`]: `specmix`, `onlycat` and plain numeric spectral clustering.
//! - [`baselines`]: k-modes and k-prototypes.
//! - [`eval`]: purity, imbalance ratio and permutation-invariant agreement.

pub mod baselines;
pub mod dataset;
pub mod eigen;
mod error;
pub mod eval;
pub mod graph;
pub mod kmeans;
pub mod pipelines;

pub use error::{Error, Result};
