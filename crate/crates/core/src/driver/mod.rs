//! Iterated construction: bootstrap, the factor loop, partition copying and
//! the isomorphism loop.

mod bootstrap;
mod copy;
mod ergodicity;
mod factor;
mod iso;
mod schedule;

pub use bootstrap::bootstrap_regular;
pub use copy::{copy_partition, factor_map, CopiedPartition};
pub use ergodicity::{ergodicity_certificate, verify_witness, ErgodicityWitness};
pub use factor::{close_speedup, run_factor, ConstructionLog, FactorRun, IterationLog};
pub use iso::{
    check_generator, cylinder_sequence, partition_distance, run_isomorphism, seed_from_orbit, truncate_partition,
    GeneratorStep, IsomorphismRun, Truncation,
};
pub use schedule::{strict_delta, strict_n, IterationSchedule, Rectangle, ScheduleStep};
