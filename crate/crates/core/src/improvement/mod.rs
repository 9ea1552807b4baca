//! Regularity checks, model names, cycle construction and the improvement
//! step that turns one regular speedup into a finer one.
use serde::Serialize;

mod cycles;
mod dil;
mod model;
mod regular;

pub use cycles::{build_cycles, stages_in_pass, window_multiplicity, Cycle, Stage, WindowSystem};
pub use dil::{improve, ImproveConfig, ImproveOutcome, ImprovementReport, StepDiagnostics, Tolerances};
pub use model::{build_model_name, ModelName, ModelSpec, QPartition};
pub use regular::{check_regular, hypothesis_distance, ladder_distribution};

/// Why a regularity check failed: the first condition violated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refusal {
    pub condition: u8,
    pub reason: String,
    pub measured: f64,
}

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "condition {} fails ({}; measured {})", self.condition, self.reason, self.measured)
    }
}
