//! Finite models of skew-product group extensions and their partial speedups.
//!
//! A base system is a single cycle `x -> x + 1 mod N` on `N` labelled points,
//! skewed by a cocycle into a finite group `G`. Everything downstream works on
//! these finite cycles: name distributions and the Kantorovich metric, the
//! matching lemmas, Rokhlin towers, the distribution improvement step, and the
//! iterated factor and isomorphism drivers.

pub mod core_systems;
pub mod driver;
pub mod error;
pub mod improvement;
pub mod matching;
pub mod name_distributions;
pub mod towers;

pub use core_systems::{
    FiniteGroup, GExtensionSystem, PartialSpeedup, RegularityCertificate, TwistFunction,
};
pub use error::{Error, Result};
