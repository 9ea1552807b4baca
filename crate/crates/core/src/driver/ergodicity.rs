use serde::Serialize;

use crate::core_systems::{Point, PartialSpeedup, SkewDynamics};
use crate::error::{Error, Result};

/// A full-group map carrying most of C_i into C_j: each moved point is
/// sent forward by a power of the speedup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityWitness {
    pub from: usize,
    pub to: usize,
    /// (point of C_i, power m) with S^m(point) ∈ C_j.
    pub pieces: Vec<(Point, usize)>,
    pub moved_fraction: f64,
}

/// Orbits of a total speedup on X × G, as sequences of point indices
/// x·|G| + g in forward order.
fn skew_cycles(speedup: &PartialSpeedup) -> Result<Vec<Vec<usize>>> {
    let size = speedup.base_size();
    let order = speedup.group().order();
    if speedup.domain_size() != size {
        return Err(Error::PreconditionViolated("speedup must be total on its base".into()));
    }
    let mut seen = vec![false; size * order];
    let mut cycles = Vec::new();
    for start in 0..size * order {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut p = (start / order, start % order);
        loop {
            let i = p.0 * order + p.1;
            if seen[i] {
                break;
            }
            seen[i] = true;
            cycle.push(i);
            p = speedup.apply(p).expect("total speedup");
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// For each ordered pair of sets with |C_i| < |C_j|, or C_i = C_j, a
/// witness moving at least (1 − ε)|C_i| points of C_i injectively into
/// C_j along speedup orbits.
pub fn ergodicity_certificate(
    speedup: &PartialSpeedup,
    sets: &[Vec<Point>],
    epsilon: f64,
) -> Result<Vec<ErgodicityWitness>> {
    let order = speedup.group().order();
    let cycles = skew_cycles(speedup)?;
    let total = speedup.base_size() * order;
    let mut where_ = vec![(0usize, 0usize); total];
    for (c, cyc) in cycles.iter().enumerate() {
        for (pos, &i) in cyc.iter().enumerate() {
            where_[i] = (c, pos);
        }
    }
    let index = |p: &Point| p.0 * order + p.1;
    let mut out = Vec::new();
    for (i, ci) in sets.iter().enumerate() {
        for (j, cj) in sets.iter().enumerate() {
            let same = i == j;
            if !same && ci.len() >= cj.len() {
                continue;
            }
            if same {
                out.push(ErgodicityWitness {
                    from: i,
                    to: j,
                    pieces: ci.iter().map(|&p| (p, 0)).collect(),
                    moved_fraction: 1.0,
                });
                continue;
            }
            let mut in_i = vec![false; total];
            let mut in_j = vec![false; total];
            for p in ci {
                in_i[index(p)] = true;
            }
            for p in cj {
                in_j[index(p)] = true;
            }
            // per orbit: walk twice around, matching each pending C_i point
            // to the next free C_j point
            let mut pieces = Vec::new();
            for cyc in &cycles {
                let len = cyc.len();
                let mut pending: std::collections::VecDeque<usize> = Default::default();
                let mut taken = vec![false; len];
                let mut matched = vec![false; len];
                for step in 0..2 * len {
                    let pos = step % len;
                    let x = cyc[pos];
                    if in_j[x] && !taken[pos] {
                        if let Some(src) = pending.pop_front() {
                            taken[pos] = true;
                            matched[src] = true;
                            let m = (pos + len - src) % len;
                            let m = if m == 0 { len } else { m };
                            pieces.push(((cyc[src] / order, cyc[src] % order), m));
                        }
                    }
                    if step < len && in_i[x] {
                        pending.push_back(pos);
                    }
                }
            }
            let moved = pieces.len();
            let fraction = if ci.is_empty() { 1.0 } else { moved as f64 / ci.len() as f64 };
            if fraction < 1.0 - epsilon {
                let from = ci.iter().map(index).find(|&x| {
                    let c = where_[x].0;
                    !cycles[c].iter().any(|&y| in_j[y])
                });
                return Err(match from {
                    Some(_) => Error::NotReachable { from: i, to: j },
                    None => Error::Infeasible(format!("only {moved} of {} points of set {i} reach set {j}", ci.len())),
                });
            }
            pieces.sort();
            out.push(ErgodicityWitness { from: i, to: j, pieces, moved_fraction: fraction });
        }
    }
    Ok(out)
}

/// Executes a witness: the fraction of C_i carried injectively into C_j.
pub fn verify_witness(speedup: &PartialSpeedup, witness: &ErgodicityWitness, ci: &[Point], cj: &[Point]) -> f64 {
    let target: std::collections::BTreeSet<Point> = cj.iter().copied().collect();
    let source: std::collections::BTreeSet<Point> = ci.iter().copied().collect();
    let mut hit = std::collections::BTreeSet::new();
    for &(p, m) in &witness.pieces {
        if !source.contains(&p) {
            return 0.0;
        }
        let mut q = p;
        for _ in 0..m {
            match speedup.apply(q) {
                Some(r) => q = r,
                None => return 0.0,
            }
        }
        if !target.contains(&q) || !hit.insert(q) {
            return 0.0;
        }
    }
    if ci.is_empty() {
        1.0
    } else {
        hit.len() as f64 / ci.len() as f64
    }
}
