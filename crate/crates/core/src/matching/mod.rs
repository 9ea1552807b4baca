//! Sampling onto a distribution, exhaustion by disjoint samples, and
//! distribution matches between finite sequences.

mod dist_match;
mod exhaustion;
mod sampling;

pub use dist_match::{
    best_bijection, best_surjection, match_bijection, match_surjection, required_good, Matching,
};
pub use exhaustion::{exhaust_samples, SampleFamily};
pub use sampling::{rounded_counts, sample_onto, sample_unchecked, Sampling};
