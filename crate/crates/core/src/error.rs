use thiserror::Error;

use crate::improvement::Refusal;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("point ({x}, {g}) is outside the speedup domain")]
    OutOfDomain { x: usize, g: usize },

    #[error("distributions live on different metric spaces")]
    SpaceMismatch,
    #[error("position {pos} out of range for length {len}")]
    PositionOutOfRange { pos: usize, len: usize },

    #[error("domain of size {size} is too small (need at least {needed})")]
    DomainTooSmall { size: usize, needed: usize },
    #[error("atom {atom} has weight {weight} below the onto threshold {threshold}")]
    AtomTooSmall { atom: usize, weight: f64, threshold: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("template infeasible: {0}")]
    InfeasibleTemplate(String),
    #[error("no match within tolerance: defect {defect} exceeds {tolerance}")]
    TooFar { defect: f64, tolerance: f64 },
    #[error("window sequence too short: {windows} windows for {p} blocks per stage")]
    TooShort { windows: usize, p: usize },
    #[error("cycle map is not injective at window {window}, position {position}")]
    Collision { window: usize, position: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("height {height} is not a multiple of {n}")]
    NotMultiple { height: usize, n: usize },

    #[error("hypothesis distance {measured} is not below {bound}")]
    HypothesisDistance { measured: f64, bound: f64 },
    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),
    #[error("not regular: {0}")]
    NotRegular(Refusal),

    #[error("sets {from} and {to} lie in different orbit classes")]
    NotReachable { from: usize, to: usize },
    #[error("tower infeasible: height {height} exceeds cycle length {size}")]
    TowerInfeasible { height: usize, size: usize },
    #[error("partition does not generate: points {x} and {y} share every name")]
    GeneratorCheckFailed { x: usize, y: usize },
    #[error("no orbit of length {len} reaches tolerance {zeta} (best {best})")]
    NoGoodOrbit { len: usize, zeta: f64, best: f64 },

    #[error("iteration {index}: {source}")]
    Iteration { index: usize, source: Box<Error> },
}
