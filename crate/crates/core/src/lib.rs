//! Coupled heat and moisture transfer through building walls, linked to a
//! lumped multizone air model.

pub mod building;
pub mod dimensionless;
pub mod error;
pub mod materials;
pub mod output;
pub mod scenario;
pub mod signal;
pub mod tridiag;
pub mod validation;
pub mod wall_solver;
pub mod zone_model;

pub use error::{Error, Result};

// The guide in book/ is compiled and run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scaling.md")]
    mod scaling {}
    #[doc = include_str!("../../../book/src/schemes.md")]
    mod schemes {}
    #[doc = include_str!("../../../book/src/buildings.md")]
    mod buildings {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
