//! Shifted dyadic grids, stopping-time collections and the Calderón–Zygmund
//! decomposition.

pub mod collection;
pub mod cube;
pub mod cz;
pub mod stopping;

pub use collection::{certify_sparsity, Certificate, CollectionDocument, DensitySet, SparseCollection, SparseCube, Witness};
pub use cube::{grid_count, DyadicCube};
pub use cz::{cz_decompose, CZDecomposition};
pub use stopping::{
    build_from_data, build_sparse_collection, carleson_embedding_check, default_sigma, default_threshold,
    stopping_children, BuildParams, StoppingData, StoppingStep,
};
