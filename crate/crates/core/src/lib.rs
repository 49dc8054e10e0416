//! Low-rank linear autoencoder with tied weights, trained in closed form.
//!
//! The encoder `W` maps a behavior space (item interactions, or any feature
//! space) into an attribute space; its transpose maps back. Training
//! alternates an eigenvector update of the low-rank penalty subspace with an
//! exact Sylvester solve for the encoder, so there is no step size and no
//! stochastic descent anywhere. On top of the trained encoder sit two heads:
//! nearest-prototype zero-shot classification and cold-start top-k
//! recommendation with the usual ranking metrics.
//!
//! The numeric kernels (symmetric eigendecomposition, real Schur form,
//! Bartels-Stewart) are self-contained; matrices are dense, row-major `f64`
//! throughout. Everything is deterministic given the seeds, including the
//! denoising corruption mask and user splits.

pub mod csr;
pub mod data;
pub mod eigen;
pub mod error;
pub mod matrix;
pub mod model;
pub mod schur;
pub mod sylvester;
pub mod zsl;

pub use csr::{
    cold_split, grid_search, map_at_n, precision_at_k, recall_at_k, recommend,
    GridSearchOutcome, MapResult, ParamGrid, RankedList, RelevanceSet,
};
pub use data::{
    assemble, load_dense_csv, load_model, load_sparse_triples, save_model, AssembleReport,
    DataError, InteractionDataset, Triple, TripleList, ValueMode,
};
pub use eigen::{symmetric_eigen, SymmetricEigenResult};
pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use model::{
    compute_v, corrupt, objective, train, ModelConfig, Normalization, TrainedModel,
};
pub use schur::{real_schur, SchurDecomposition};
pub use sylvester::{kron_oracle_solve, solve_sylvester};
pub use zsl::{accuracy, classify, DistanceMetric, PrototypeSet};
