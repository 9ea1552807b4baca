//! JSON system and speedup files.

use std::path::Path;
use std::sync::Arc;

use gext_core::core_systems::SkewDynamics;
use gext_core::{FiniteGroup, GExtensionSystem, PartialSpeedup, TwistFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GroupSpec {
    Trivial,
    Cyclic { order: usize },
    Table { mul: Vec<Vec<usize>>, metric: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BaseSpec {
    /// x ↦ x + 1 mod N.
    Cycle,
    /// An explicit successor table; only x ↦ x + 1 mod N is accepted.
    Map { next: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseSpec>,
    pub labels: Vec<u32>,
    pub group: GroupSpec,
    /// Defaults to the identity everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedupSpec {
    pub parent: SystemSpec,
    pub domain: Vec<usize>,
    /// Exponent per base point, 0 off the domain.
    pub k: Vec<usize>,
    /// σ^(k)(x) per base point, null off the domain.
    pub sigma_k: Vec<Option<usize>>,
    pub alpha: Vec<usize>,
    pub pbar: Vec<u32>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, source: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        source_name: source.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

pub fn group_from_spec(spec: &GroupSpec) -> Result<FiniteGroup, CliError> {
    match spec {
        GroupSpec::Trivial => Ok(FiniteGroup::trivial()),
        GroupSpec::Cyclic { order: 0 } => Err(CliError::Validation("group.order must be positive".into())),
        GroupSpec::Cyclic { order } => Ok(FiniteGroup::cyclic(*order)),
        GroupSpec::Table { mul, metric } => {
            FiniteGroup::from_tables(mul.clone(), metric.clone()).map_err(|e| CliError::Validation(format!("group: {e}")))
        }
    }
}

pub fn group_to_spec(group: &FiniteGroup) -> GroupSpec {
    match group.cyclic_order() {
        Some(1) if *group == FiniteGroup::trivial() => GroupSpec::Trivial,
        Some(m) if *group == FiniteGroup::cyclic(m) => GroupSpec::Cyclic { order: m },
        _ => GroupSpec::Table { mul: group.mul_table(), metric: group.metric_table() },
    }
}

pub fn system_from_spec(spec: &SystemSpec) -> Result<GExtensionSystem, CliError> {
    let size = spec.labels.len();
    if let Some(BaseSpec::Map { next }) = &spec.base {
        if next.len() != size {
            return Err(CliError::Validation(format!("base.next has {} entries for {size} points", next.len())));
        }
        if let Some(x) = (0..size).find(|&x| next[x] != (x + 1) % size) {
            return Err(CliError::Validation(format!(
                "base.next[{x}] = {} but the base must be the cycle x -> x + 1 mod {size}",
                next[x]
            )));
        }
    }
    let group = Arc::new(group_from_spec(&spec.group)?);
    let sigma = spec.sigma.clone().unwrap_or_else(|| vec![group.identity(); size]);
    GExtensionSystem::new(spec.labels.clone(), group, sigma).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn system_to_spec(system: &GExtensionSystem) -> SystemSpec {
    SystemSpec {
        base: None,
        labels: system.labels().to_vec(),
        group: group_to_spec(system.group()),
        sigma: Some(system.sigma().to_vec()),
    }
}

pub fn parse_system_str(text: &str, source: &str) -> Result<GExtensionSystem, CliError> {
    system_from_spec(&parse_json(text, source)?)
}

/// Reads and validates a system file.
pub fn parse_system_spec(path: &Path) -> Result<GExtensionSystem, CliError> {
    parse_system_str(&read(path)?, &path.display().to_string())
}

pub fn serialize_system(system: &GExtensionSystem) -> String {
    serde_json::to_string_pretty(&system_to_spec(system)).expect("plain data serializes")
}

pub fn speedup_to_spec(speedup: &PartialSpeedup, alpha: &TwistFunction, pbar: &[u32]) -> SpeedupSpec {
    let size = speedup.base_size();
    SpeedupSpec {
        parent: system_to_spec(speedup.parent()),
        domain: (0..size).filter(|&x| speedup.in_domain(x)).collect(),
        k: speedup.exponents().to_vec(),
        sigma_k: (0..size).map(|x| speedup.step_cocycle(x)).collect(),
        alpha: alpha.values().to_vec(),
        pbar: pbar.to_vec(),
    }
}

/// A speedup file back as (speedup, ᾱ, P̄). The stored σ^(k) values must
/// agree with the parent's cocycle.
pub fn speedup_from_spec(spec: &SpeedupSpec) -> Result<(PartialSpeedup, TwistFunction, Vec<u32>), CliError> {
    let parent = Arc::new(system_from_spec(&spec.parent)?);
    let size = parent.size();
    if spec.k.len() != size || spec.sigma_k.len() != size || spec.alpha.len() != size || spec.pbar.len() != size {
        return Err(CliError::Validation(format!("speedup arrays must have {size} entries")));
    }
    let bound = spec.k.iter().copied().max();
    let speedup =
        PartialSpeedup::new(parent.clone(), spec.k.clone(), bound).map_err(|e| CliError::Validation(e.to_string()))?;
    let domain: Vec<usize> = (0..size).filter(|&x| speedup.in_domain(x)).collect();
    if domain != spec.domain {
        return Err(CliError::Validation("domain does not match the exponents".into()));
    }
    if let Some(x) = (0..size).find(|&x| speedup.step_cocycle(x) != spec.sigma_k[x]) {
        return Err(CliError::Validation(format!("sigma_k[{x}] disagrees with the parent cocycle")));
    }
    let alpha = TwistFunction::new(spec.alpha.clone(), parent.group()).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((speedup, alpha, spec.pbar.clone()))
}

pub fn parse_speedup_str(text: &str, source: &str) -> Result<(PartialSpeedup, TwistFunction, Vec<u32>), CliError> {
    speedup_from_spec(&parse_json(text, source)?)
}

pub fn parse_speedup_spec(path: &Path) -> Result<(PartialSpeedup, TwistFunction, Vec<u32>), CliError> {
    parse_speedup_str(&read(path)?, &path.display().to_string())
}
