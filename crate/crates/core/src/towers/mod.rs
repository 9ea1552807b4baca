//! Rokhlin towers over finite cycles, their columns, and the ladders of
//! regular speedups.

mod ladder;
mod rokhlin;

pub use ladder::{broken_fraction, ladder, Ladder};
pub use rokhlin::{build_tower, pure_columns, Column, RokhlinTower};
