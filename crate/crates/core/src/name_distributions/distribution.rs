use std::collections::BTreeMap;

use super::metric::MetricSpace;
use super::transport::min_cost_transport;
use crate::error::{Error, Result};

/// Costs are rounded to multiples of 2^-32 before solving.
const COST_SCALE: f64 = 4_294_967_296.0;
/// Real weights are quantised to multiples of 2^-40.
const WEIGHT_SCALE: f64 = 1_099_511_627_776.0;

/// A probability distribution with rational weights `count / total` on
/// finitely many points of a metric space. Atoms are kept sorted by point.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution<S: MetricSpace> {
    space: S,
    atoms: Vec<(S::Point, u64)>,
    total: u64,
}

impl<S: MetricSpace> EmpiricalDistribution<S> {
    pub fn from_counts<I>(space: S, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S::Point, u64)>,
    {
        let mut map: BTreeMap<S::Point, u64> = BTreeMap::new();
        for (p, c) in counts {
            if c > 0 {
                *map.entry(p).or_insert(0) += c;
            }
        }
        let total: u64 = map.values().sum();
        if total == 0 {
            return Err(Error::InvalidSystem("distribution has no mass".into()));
        }
        Ok(EmpiricalDistribution {
            space,
            atoms: map.into_iter().collect(),
            total,
        })
    }

    /// Uniform weights over a multiset of points.
    pub fn from_points<I>(space: S, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = S::Point>,
    {
        Self::from_counts(space, points.into_iter().map(|p| (p, 1)))
    }

    /// Real weights, renormalised and quantised to multiples of 2^-40.
    pub fn from_weights(space: S, weights: Vec<(S::Point, f64)>) -> Result<Self> {
        if weights.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidSystem("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().map(|(_, w)| w).sum();
        if sum <= 0.0 {
            return Err(Error::InvalidSystem("distribution has no mass".into()));
        }
        Self::from_counts(
            space,
            weights
                .into_iter()
                .map(|(p, w)| (p, (w / sum * WEIGHT_SCALE).round() as u64)),
        )
    }

    pub fn point_mass(space: S, p: S::Point) -> Self {
        EmpiricalDistribution {
            space,
            atoms: vec![(p, 1)],
            total: 1,
        }
    }

    pub fn space(&self) -> &S {
        &self.space
    }

    pub fn atoms(&self) -> &[(S::Point, u64)] {
        &self.atoms
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self, p: &S::Point) -> f64 {
        match self.atoms.binary_search_by(|(q, _)| q.cmp(p)) {
            Ok(i) => self.atoms[i].1 as f64 / self.total as f64,
            Err(_) => 0.0,
        }
    }

    pub fn weights(&self) -> Vec<(S::Point, f64)> {
        let t = self.total as f64;
        self.atoms.iter().map(|(p, c)| (p.clone(), *c as f64 / t)).collect()
    }

    /// Image distribution under `f`.
    pub fn pushforward<T: MetricSpace>(
        &self,
        space: T,
        f: impl Fn(&S::Point) -> T::Point,
    ) -> EmpiricalDistribution<T> {
        EmpiricalDistribution::from_counts(space, self.atoms.iter().map(|(p, c)| (f(p), *c)))
            .expect("pushforward keeps the mass")
    }
}

/// Optimal transport distance inf Σ ρ(x, y) ν(x, y) over couplings ν.
///
/// Mass common to both distributions stays in place (optimal under any
/// metric); the rest is a transportation problem on integer supplies.
pub fn kantorovich<S: MetricSpace>(
    d1: &EmpiricalDistribution<S>,
    d2: &EmpiricalDistribution<S>,
) -> Result<f64> {
    if !d1.space.same_space(&d2.space) {
        return Err(Error::SpaceMismatch);
    }
    let t1 = d1.total as u128;
    let t2 = d2.total as u128;

    let mut sources: Vec<(&S::Point, u128)> = Vec::new();
    let mut sinks: Vec<(&S::Point, u128)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&d1.atoms, &d2.atoms);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                sources.push((&a[i].0, a[i].1 as u128 * t2));
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                sinks.push((&b[j].0, b[j].1 as u128 * t1));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let s = a[i].1 as u128 * t2;
                let d = b[j].1 as u128 * t1;
                if s > d {
                    sources.push((&a[i].0, s - d));
                } else if d > s {
                    sinks.push((&b[j].0, d - s));
                }
                i += 1;
                j += 1;
            }
        }
    }
    if sources.is_empty() {
        return Ok(0.0);
    }

    let cost: Vec<Vec<i64>> = sources
        .iter()
        .map(|(p, _)| {
            sinks
                .iter()
                .map(|(q, _)| (d1.space.distance(p, q) * COST_SCALE).round() as i64)
                .collect()
        })
        .collect();
    let first = cost[0][0];
    let total_cost: i128 = if cost.iter().all(|r| r.iter().all(|&c| c == first)) {
        let moved: u128 = sources.iter().map(|(_, s)| s).sum();
        moved as i128 * first as i128
    } else {
        let supply: Vec<u128> = sources.iter().map(|(_, s)| *s).collect();
        let demand: Vec<u128> = sinks.iter().map(|(_, d)| *d).collect();
        min_cost_transport(&supply, &demand, &cost)
    };
    Ok(total_cost as f64 / (t1 * t2) as f64 / COST_SCALE)
}
