//! Neumann problems for the p-Laplacian on domains cut by fractures.
//!
//! [`geometry`] describes fracture sets and checks the cone and C-conditions,
//! [`mesh`] builds P1 meshes with nodes doubled across cracks, [`solver`]
//! solves the discrete problems and [`experiments`] runs them along a family
//! of fractures.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod mesh;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fracture-sets.md")]
    mod fracture_sets {}
    #[doc = include_str!("../../../book/src/conditions.md")]
    mod conditions {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/neumann.md")]
    mod neumann {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
