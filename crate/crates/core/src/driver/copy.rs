use std::collections::BTreeMap;

use serde::Serialize;

use crate::core_systems::{GExtensionSystem, PartialSpeedup, SkewDynamics};
use crate::error::{Error, Result};
use crate::name_distributions::{kantorovich, name_distribution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopiedPartition {
    pub q: Vec<u32>,
    /// Joint (P ∨ Q ∨ c) n-distance between the two systems.
    pub distance: f64,
    pub within: bool,
    /// Fraction of domain points where φ fails to commute with the maps,
    /// the cocycles or the labels.
    pub factor_defect: f64,
}

/// Base part φ of a factor map: the point at level s of a column of `big`
/// goes to T^s x, where x is the target start whose (P ∨ c)-name agrees
/// best with the column; points after a column top continue by T.
pub fn factor_map(big: &PartialSpeedup, pbar: &[u32], small: &GExtensionSystem) -> Vec<usize> {
    let size = big.base_size();
    let n = small.size();
    let group = small.group();
    let e = group.identity();
    // walk the closed orbit structure: chains first, then any cycles
    let (chains, cycles) = big.chains();
    let mut phi = vec![0usize; size];
    let mut assigned = vec![false; size];
    let mut carry: Option<usize> = None;
    let mut orbits: Vec<&Vec<usize>> = chains.iter().chain(cycles.iter()).collect();
    orbits.sort_by_key(|o| o[0]);
    for orbit in orbits {
        let x = if orbit.len() >= 2 {
            // (label, cocycle) sequence of the column from (b, id)
            let mut word = Vec::with_capacity(orbit.len());
            let mut g = e;
            for (i, &z) in orbit.iter().enumerate() {
                word.push((pbar[z], g));
                if i + 1 < orbit.len() {
                    g = group.mul(big.step_cocycle(z).expect("chain point"), g);
                }
            }
            let mut best = (usize::MAX, 0);
            for x in 0..n {
                let mut h = e;
                let mut miss = 0;
                for (s, &(l, gc)) in word.iter().enumerate() {
                    let y = (x + s) % n;
                    miss += usize::from(small.label(y) != l || h != gc);
                    if miss >= best.0 {
                        break;
                    }
                    h = group.mul(small.sigma()[y], h);
                }
                if miss < best.0 {
                    best = (miss, x);
                }
            }
            best.1
        } else {
            carry.unwrap_or(0)
        };
        for (s, &z) in orbit.iter().enumerate() {
            phi[z] = (x + s) % n;
            assigned[z] = true;
        }
        carry = Some((x + orbit.len()) % n);
    }
    debug_assert!(assigned.iter().all(|&a| a));
    phi
}

fn joint(p: &[u32], q: &[u32], width: u32) -> Vec<u32> {
    p.iter().zip(q).map(|(&a, &b)| a * width + b).collect()
}

/// A partition Q of the small base whose joint name statistics with P copy
/// those of Q̄ with P̄ on the big side. Q(x) is the majority Q̄ label over
/// φ⁻¹(x), lowest label on ties; empty fibres take the overall majority.
pub fn copy_partition(
    big: &PartialSpeedup,
    pbar: &[u32],
    qbar: &[u32],
    small: &GExtensionSystem,
    phi: &[usize],
    zeta: f64,
    n: usize,
) -> Result<CopiedPartition> {
    let size = big.base_size();
    if n > small.size() {
        return Err(Error::TowerInfeasible { height: n, size: small.size() });
    }
    if qbar.len() != size || phi.len() != size || pbar.len() != size {
        return Err(Error::PreconditionViolated("partition or map length differs from the base".into()));
    }
    let majority = |votes: &BTreeMap<u32, usize>| {
        votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&l, _)| l).unwrap_or(0)
    };
    let mut overall = BTreeMap::new();
    let mut fibres: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); small.size()];
    for (z, &x) in phi.iter().enumerate() {
        *fibres[x].entry(qbar[z]).or_insert(0) += 1;
        *overall.entry(qbar[z]).or_insert(0) += 1;
    }
    let fallback = majority(&overall);
    let q: Vec<u32> = fibres.iter().map(|f| if f.is_empty() { fallback } else { majority(f) }).collect();

    let width = qbar.iter().chain(&q).copied().max().unwrap_or(0) + 1;
    let group = small.group();
    let big_names = name_distribution(big, &joint(pbar, qbar, width), None, n, group)?;
    let small_names = name_distribution(small, &joint(small.labels(), &q, width), None, n, group)?;
    let distance = kantorovich(&big_names, &small_names)?;

    let mut bad = 0usize;
    let mut dom = 0usize;
    for z in 0..size {
        if let Some(y) = big.base_map(z) {
            dom += 1;
            let x = phi[z];
            let ok = phi[y] == (x + 1) % small.size()
                && big.step_cocycle(z) == Some(small.sigma()[x])
                && pbar[z] == small.label(x);
            bad += usize::from(!ok);
        }
    }
    Ok(CopiedPartition {
        q,
        distance,
        within: distance < zeta,
        factor_defect: if dom == 0 { 0.0 } else { bad as f64 / dom as f64 },
    })
}
