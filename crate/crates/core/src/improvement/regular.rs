use std::sync::Arc;

use crate::core_systems::{
    ConditionCheck, FiniteGroup, GExtensionSystem, PartialSpeedup, RegularityCertificate, SkewDynamics, TwistFunction,
};
use crate::error::{Error, Result};
use crate::name_distributions::{
    block_distribution, kantorovich, name_at, name_distribution, translate_block, EmpiricalDistribution, BlockSpace,
    NameBlock,
};
use crate::towers::RokhlinTower;

use super::Refusal;

/// Distance between the target's n-name distribution on X × G and the
/// (P̄ ∨ αc̄) n-name distribution of `dynamics` on the set where n-names are
/// defined.
pub fn hypothesis_distance<D: SkewDynamics>(
    target: &GExtensionSystem,
    dynamics: &D,
    pbar: &[u32],
    alpha: Option<&TwistFunction>,
    n: usize,
) -> Result<f64> {
    let group = target.group();
    if dynamics.group().order() != group.order() {
        return Err(Error::SpaceMismatch);
    }
    let t = name_distribution(target, target.labels(), None, n, group)?;
    let s = name_distribution(dynamics, pbar, alpha, n, group)?;
    kantorovich(&t, &s)
}

/// Disjoint consecutive n-blocks of `name`, each right-translated by `h`.
pub fn ladder_distribution(
    name: &[(u32, u32)],
    n: usize,
    h: usize,
    group: &Arc<FiniteGroup>,
) -> Result<EmpiricalDistribution<BlockSpace>> {
    let moved = translate_block(name, h, group);
    let positions: Vec<usize> = (0..name.len() / n).map(|m| m * n).collect();
    block_distribution(group, &moved, n, &positions)
}

fn refuse(condition: u8, reason: impl Into<String>, measured: f64) -> Refusal {
    Refusal { condition, reason: reason.into(), measured }
}

fn check(condition: u8, measured: f64, detail: impl Into<String>) -> ConditionCheck {
    ConditionCheck { condition, passed: true, measured, detail: detail.into() }
}

/// Checks the five conditions of (n, δ)-regularity in order and refuses at
/// the first failure. Names are the (P̄ ∨ c̄)-names of `speedup`, so a twisted
/// speedup is checked by passing it over the twisted parent.
pub fn check_regular(
    speedup: &PartialSpeedup,
    pbar: &[u32],
    n: usize,
    delta: f64,
) -> std::result::Result<RegularityCertificate, Refusal> {
    let size = speedup.exponents().len();
    if pbar.len() != size {
        return Err(refuse(1, format!("partition has {} labels for {size} points", pbar.len()), 0.0));
    }
    let tower = RokhlinTower::of_speedup(speedup).map_err(|e| refuse(1, e.to_string(), 0.0))?;
    let height = tower.height();
    if height == 0 {
        return Err(refuse(1, "speedup has an empty domain", 0.0));
    }
    let base = tower.base();
    let mut checks = vec![check(1, height as f64, format!("{} columns of height {height}", base.len()))];

    let max_k = speedup.exponents().iter().copied().max().unwrap_or(0);
    match speedup.bound() {
        Some(_) => checks.push(check(2, max_k as f64, "exponent bounded")),
        None => return Err(refuse(2, "exponent is unbounded", f64::INFINITY)),
    }

    let group = speedup.parent().group().clone();
    let e = group.identity();
    let names: Vec<NameBlock> = base
        .iter()
        .map(|&b| name_at(speedup, pbar, None, (b, e), height).expect("tower orbit is defined"))
        .collect();
    let differing = names.iter().filter(|nm| **nm != names[0]).count();
    if differing > 0 {
        return Err(refuse(
            3,
            format!("{differing} of {} base points carry a different tower name", base.len()),
            differing as f64 / base.len() as f64,
        ));
    }
    checks.push(check(3, 0.0, "all base points share the tower name"));

    if n == 0 || height % n != 0 {
        return Err(refuse(4, format!("height {height} is not a multiple of {n}"), height as f64));
    }
    let full = name_distribution(speedup, pbar, None, n, &group).map_err(|e| refuse(4, e.to_string(), 1.0))?;
    // all base points share one tower name, so one ladder per fibre covers them all
    let mut worst: f64 = 0.0;
    for h in 0..group.order() {
        let lad = ladder_distribution(&names[0], n, h, &group).map_err(|e| refuse(4, e.to_string(), 1.0))?;
        let d = kantorovich(&lad, &full).map_err(|e| refuse(4, e.to_string(), 1.0))?;
        worst = worst.max(d);
    }
    if worst >= delta {
        return Err(refuse(4, format!("ladder {n}-distribution is {worst} from the full one"), worst));
    }
    checks.push(check(4, worst, "largest ladder distance over base fibres"));

    let mass = speedup.domain_mass();
    if mass <= 1.0 - delta {
        return Err(refuse(5, format!("domain mass {mass} is not above {}", 1.0 - delta), mass));
    }
    checks.push(check(5, mass, "domain mass"));

    Ok(RegularityCertificate { n, delta, tower_base: base, height, checks })
}
