//! Empirical name distributions, the block metric ρ′ and the Kantorovich
//! distance between distributions on a finite metric space.

mod distribution;
mod lemmas;
mod metric;
mod names;
mod transport;

pub use distribution::{kantorovich, EmpiricalDistribution};
pub use lemmas::{
    continuity_partition, convex_remainder, density_lower_bound, density_modulus,
    group_distribution, half_l1, haar, translate_distribution, DensityBound,
};
pub use metric::{BlockSpace, FiniteMetricSpace, MetricSpace, NameBlock, Symbol};
pub use names::{
    base_names, block_distribution, distribution_of_base_names, name_at, name_distribution,
    translate_block,
};
pub use transport::min_cost_transport;
