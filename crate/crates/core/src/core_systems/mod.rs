//! Finite groups, skew-product extensions of a cycle, partial speedups and
//! twist functions.

mod group;
mod speedup;
mod system;

pub use group::FiniteGroup;
pub use speedup::{
    ConditionCheck, PartialSpeedup, RegularityCertificate, SkewDynamics, TwistFunction,
};
pub use system::{ExtensionErgodicity, GExtensionSystem, Point};
