use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::name_distributions::{continuity_partition, EmpiricalDistribution, MetricSpace};

/// φ: [len(γ₂)] → [len(γ₁)] with the number of coordinates i for which
/// ρ(γ₁(φ(i)), γ₂(i)) ≥ ζ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matching {
    pub map: Vec<usize>,
    pub bad: usize,
    pub defect: f64,
}

/// Assigns each element of `cod` (γ₂) to a slot of `dom` (γ₁), one slot per
/// element: equal values first, then values in a common atom of diameter
/// < ζ, then the rest, each stage in index order.
fn assign<S: MetricSpace>(space: &S, dom: &[S::Point], cod: &[S::Point], zeta: f64) -> Vec<usize> {
    debug_assert_eq!(dom.len(), cod.len());
    let n = cod.len();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];

    let mut by_value: BTreeMap<&S::Point, Vec<usize>> = BTreeMap::new();
    for (j, p) in dom.iter().enumerate() {
        by_value.entry(p).or_default().push(j);
    }
    let mut cursor: BTreeMap<&S::Point, usize> = BTreeMap::new();
    for (i, p) in cod.iter().enumerate() {
        if let Some(slots) = by_value.get(p) {
            let c = cursor.entry(p).or_insert(0);
            if *c < slots.len() {
                map[i] = slots[*c];
                used[slots[*c]] = true;
                *c += 1;
            }
        }
    }

    let rest_dom: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
    let rest_cod: Vec<usize> = (0..n).filter(|&i| map[i] == usize::MAX).collect();
    if rest_cod.is_empty() {
        return map;
    }
    let support = EmpiricalDistribution::from_points(
        space.clone(),
        rest_dom.iter().map(|&j| dom[j].clone()).chain(rest_cod.iter().map(|&i| cod[i].clone())),
    )
    .expect("nonempty");
    let atoms = continuity_partition(&support, zeta);
    let mut atom_of: BTreeMap<&S::Point, usize> = BTreeMap::new();
    for (k, a) in atoms.iter().enumerate() {
        for p in a {
            atom_of.insert(p, k);
        }
    }
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); atoms.len()];
    for &j in rest_dom.iter().rev() {
        pools[atom_of[&dom[j]]].push(j);
    }
    for &i in &rest_cod {
        if let Some(j) = pools[atom_of[&cod[i]]].pop() {
            map[i] = j;
            used[j] = true;
        }
    }
    let mut free = (0..n).filter(|&j| !used[j]);
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = free.next().expect("counts agree");
        }
    }
    map
}

fn score<S: MetricSpace>(space: &S, dom: &[S::Point], cod: &[S::Point], map: Vec<usize>, zeta: f64) -> Matching {
    let bad = map
        .iter()
        .enumerate()
        .filter(|(i, &j)| space.distance(&dom[j], &cod[*i]) >= zeta)
        .count();
    let defect = if map.is_empty() { 0.0 } else { bad as f64 / map.len() as f64 };
    Matching { map, bad, defect }
}

/// Number of coordinates that must be good: ⌈(1 − ζ) n⌉.
pub fn required_good(n: usize, zeta: f64) -> usize {
    ((1.0 - zeta) * n as f64 - 1e-12).ceil().max(0.0) as usize
}

/// Best-effort bijection without the tolerance check.
pub fn best_bijection<S: MetricSpace>(space: &S, gamma1: &[S::Point], gamma2: &[S::Point], zeta: f64) -> Matching {
    let map = assign(space, gamma1, gamma2, zeta);
    score(space, gamma1, gamma2, map, zeta)
}

/// A bijection φ with ρ(γ₁(φ(i)), γ₂(i)) < ζ for ⌈(1 − ζ) n⌉ coordinates.
pub fn match_bijection<S: MetricSpace>(
    space: &S,
    gamma1: &[S::Point],
    gamma2: &[S::Point],
    zeta: f64,
) -> Result<Matching> {
    if gamma1.len() != gamma2.len() {
        return Err(Error::PreconditionViolated(format!(
            "sequences of lengths {} and {} cannot be matched bijectively",
            gamma1.len(),
            gamma2.len()
        )));
    }
    let m = best_bijection(space, gamma1, gamma2, zeta);
    if m.map.len() - m.bad < required_good(m.map.len(), zeta) {
        return Err(Error::TooFar { defect: m.defect, tolerance: zeta });
    }
    Ok(m)
}

/// Fibre capacities for a balanced map [n₁] → [n]: ⌈n₁/n⌉ for the first
/// n₁ mod n targets, ⌊n₁/n⌋ for the rest.
fn capacities(n1: usize, n: usize) -> Vec<usize> {
    (0..n).map(|j| n1 / n + usize::from(j < n1 % n)).collect()
}

/// Best-effort balanced map [len γ₂] → [len γ₁] without tolerance checks.
/// Requires len γ₂ ≥ len γ₁ > 0.
pub fn best_surjection<S: MetricSpace>(space: &S, gamma1: &[S::Point], gamma2: &[S::Point], zeta: f64) -> Matching {
    let caps = capacities(gamma2.len(), gamma1.len());
    let mut owner = Vec::with_capacity(gamma2.len());
    let mut expanded = Vec::with_capacity(gamma2.len());
    for (j, &c) in caps.iter().enumerate() {
        for _ in 0..c {
            owner.push(j);
            expanded.push(gamma1[j].clone());
        }
    }
    let slots = assign(space, &expanded, gamma2, zeta);
    let map = slots.into_iter().map(|s| owner[s]).collect();
    score(space, gamma1, gamma2, map, zeta)
}

/// A map φ: [n₁] → [n] with balanced fibres (each within ζ of n₁/n in
/// normalised size) and ρ(γ₁(φ(i)), γ₂(i)) < ζ for ⌈(1 − ζ) n₁⌉ coordinates.
pub fn match_surjection<S: MetricSpace>(
    space: &S,
    gamma1: &[S::Point],
    gamma2: &[S::Point],
    zeta: f64,
) -> Result<Matching> {
    let (n, n1) = (gamma1.len(), gamma2.len());
    if n == 0 || n1 < n {
        return Err(Error::TooShort { windows: n1, p: n });
    }
    let caps = capacities(n1, n);
    let worst = caps
        .iter()
        .map(|&c| (c as f64 / n1 as f64 - 1.0 / n as f64).abs())
        .fold(0.0f64, f64::max);
    if worst >= zeta {
        return Err(Error::TooShort { windows: n1, p: n });
    }
    let m = best_surjection(space, gamma1, gamma2, zeta);
    if n1 - m.bad < required_good(n1, zeta) {
        return Err(Error::TooFar { defect: m.defect, tolerance: zeta });
    }
    Ok(m)
}
