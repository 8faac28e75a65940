pub mod corpus;
pub mod dyadic;
pub mod error;
pub mod extremals;
pub mod forms;
pub mod fourier;
pub mod grid;
pub mod operators;
pub mod quadrature;
pub mod regions;
pub mod weights;

pub use error::{Error, Result};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    pub mod grids {}
    #[doc = include_str!("../../../book/src/averages.md")]
    pub mod averages {}
    #[doc = include_str!("../../../book/src/sparse.md")]
    pub mod sparse {}
    #[doc = include_str!("../../../book/src/regions.md")]
    pub mod regions {}
    #[doc = include_str!("../../../book/src/sharpness.md")]
    pub mod sharpness {}
    #[doc = include_str!("../../../book/src/weights.md")]
    pub mod weights {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
