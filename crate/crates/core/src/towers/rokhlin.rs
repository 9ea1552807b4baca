use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::core_systems::{FiniteGroup, GExtensionSystem, PartialSpeedup};
use crate::error::{Error, Result};
use crate::name_distributions::{kantorovich, EmpiricalDistribution, FiniteMetricSpace};

/// Disjoint sets B, SB, .., S^{K-1}B over a base of `size` points, stored
/// as one orbit segment per base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RokhlinTower {
    size: usize,
    height: usize,
    orbits: Vec<Vec<usize>>,
}

impl RokhlinTower {
    /// Tower of `map` over `base`; fails if a level is undefined or two
    /// levels meet.
    pub fn from_map(size: usize, base: &[usize], height: usize, map: impl Fn(usize) -> Option<usize>) -> Result<Self> {
        let mut seen = vec![false; size];
        let mut orbits = Vec::with_capacity(base.len());
        for &b in base {
            let mut orbit = Vec::with_capacity(height);
            let mut x = b;
            for i in 0..height {
                if x >= size || seen[x] {
                    return Err(Error::Infeasible(format!("tower levels meet at point {x}")));
                }
                seen[x] = true;
                orbit.push(x);
                if i + 1 < height {
                    x = map(x).ok_or_else(|| Error::Infeasible(format!("map undefined at level {i} over {b}")))?;
                }
            }
            orbits.push(orbit);
        }
        Ok(RokhlinTower { size, height, orbits })
    }

    /// Tower of the rotation x ↦ x + 1 mod `size`.
    pub fn of_rotation(size: usize, base: &[usize], height: usize) -> Result<Self> {
        Self::from_map(size, base, height, |x| Some((x + 1) % size))
    }

    /// The speedup tower: chains of the base map of length ≥ 2 are its
    /// columns. Fails unless all of them have the same length and there
    /// are no closed cycles.
    pub fn of_speedup(speedup: &PartialSpeedup) -> Result<Self> {
        let (chains, cycles) = speedup.chains();
        if !cycles.is_empty() {
            return Err(Error::Infeasible(format!("{} closed cycles in the speedup", cycles.len())));
        }
        let tall: Vec<&Vec<usize>> = chains.iter().filter(|c| c.len() >= 2).collect();
        let height = tall.first().map_or(0, |c| c.len());
        if let Some(c) = tall.iter().find(|c| c.len() != height) {
            return Err(Error::Infeasible(format!(
                "columns of heights {height} and {} in the speedup tower",
                c.len()
            )));
        }
        Ok(RokhlinTower {
            size: speedup.exponents().len(),
            height,
            orbits: tall.into_iter().cloned().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn base(&self) -> Vec<usize> {
        self.orbits.iter().map(|o| o[0]).collect()
    }

    /// `orbits()[b][i]` is level i over the b-th base point.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn level(&self, i: usize) -> Vec<usize> {
        self.orbits.iter().map(|o| o[i]).collect()
    }

    pub fn points(&self) -> usize {
        self.orbits.len() * self.height
    }

    /// Mass of the union of the levels, K·|B|/N.
    pub fn coverage(&self) -> f64 {
        self.points() as f64 / self.size as f64
    }

    /// For each point, (column index, level) when it lies in the tower.
    pub fn position_map(&self) -> Vec<Option<(usize, usize)>> {
        let mut pos = vec![None; self.size];
        for (c, o) in self.orbits.iter().enumerate() {
            for (i, &x) in o.iter().enumerate() {
                pos[x] = Some((c, i));
            }
        }
        pos
    }

    /// One line per level, top level first, one character per column
    /// showing `obs` at the column's point on that level.
    pub fn render(&self, columns: &[Column], obs: &[u32]) -> String {
        const GLYPHS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";
        let mut out = String::new();
        for i in (0..self.height).rev() {
            let _ = write!(out, "{i:>5} |");
            for c in columns {
                let v = obs[c.levels[i][0]] as usize;
                out.push(GLYPHS.get(v).map_or('#', |&b| b as char));
            }
            out.push('\n');
        }
        out
    }
}

/// Tower of height K over the rotation of `system` covering at least 1 − ε
/// with base distribution of `f` within ζ of its distribution on X.
///
/// The base has ⌊N/K⌋ points. Walking the cycle, a point joins the base
/// while its f-value is under quota (quotas from rounding dist_X(f)),
/// otherwise it is skipped as long as the N mod K spare points last.
/// Every start offset below min(K, 256) is tried; the closest base wins.
pub fn build_tower(
    system: &GExtensionSystem,
    k: usize,
    epsilon: f64,
    f: &[u32],
    zeta: f64,
) -> Result<RokhlinTower> {
    let n = system.size();
    if k == 0 || k > n {
        return Err(Error::Infeasible(format!("height {k} for a cycle of {n} points")));
    }
    if f.len() != n {
        return Err(Error::Infeasible(format!("observable has {} values for {n} points", f.len())));
    }
    let b = n / k;
    let residual = 1.0 - (k * b) as f64 / n as f64;
    if residual > epsilon {
        return Err(Error::Infeasible(format!(
            "residual {residual} of a {k}-tower exceeds {epsilon}"
        )));
    }
    let mut values: Vec<u32> = f.to_vec();
    values.sort_unstable();
    values.dedup();
    let index: BTreeMap<u32, usize> = values.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let space = FiniteMetricSpace::discrete(values.len());
    let whole = EmpiricalDistribution::from_points(space.clone(), f.iter().map(|v| index[v]))?;
    let weights: Vec<u64> = whole.atoms().iter().map(|a| a.1).collect();
    let quota_by_atom = crate::matching::rounded_counts(&weights, b);
    let mut quota0 = vec![0usize; values.len()];
    for ((p, _), q) in whole.atoms().iter().zip(quota_by_atom) {
        quota0[*p] = q;
    }

    let spare = n - k * b;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for x0 in 0..k.min(256) {
        let mut quota = quota0.clone();
        let mut base = Vec::with_capacity(b);
        let (mut pos, mut skipped) = (x0, 0);
        while base.len() < b {
            let v = index[&f[pos % n]];
            if quota[v] > 0 || skipped == spare {
                quota[v] = quota[v].saturating_sub(1);
                base.push(pos % n);
                pos += k;
            } else {
                pos += 1;
                skipped += 1;
            }
        }
        let dist_b = EmpiricalDistribution::from_points(space.clone(), base.iter().map(|&x| index[&f[x]]))?;
        let d = kantorovich(&dist_b, &whole)?;
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, base));
        }
    }
    let (d, base) = best.expect("at least one offset");
    if d >= zeta {
        return Err(Error::Infeasible(format!(
            "best base distribution is at distance {d}, not below {zeta}"
        )));
    }
    RokhlinTower::of_rotation(n, &base, k)
}

/// Base points of a tower sharing the same values of every observable on
/// every level, with σ within ζ′ per level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub base: Vec<usize>,
    /// `levels[i]` lists the level-i points of the column.
    pub levels: Vec<Vec<usize>>,
    /// Number of observables constant on every level.
    pub pure_for: usize,
    /// Largest σ-spread found on a level.
    pub sigma_spread: f64,
}

/// Splits the tower into columns. Base points with equal observable names
/// along the tower are grouped, then each group is split greedily (in base
/// order) so that on every level all σ values are pairwise within ζ′.
pub fn pure_columns(
    tower: &RokhlinTower,
    observables: &[&[u32]],
    sigma: Option<(&[usize], &FiniteGroup)>,
    zeta_prime: f64,
) -> Vec<Column> {
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for (c, orbit) in tower.orbits().iter().enumerate() {
        let key: Vec<u32> = orbit
            .iter()
            .flat_map(|&x| observables.iter().map(move |o| o[x]))
            .collect();
        groups.entry(key).or_default().push(c);
    }
    let mut members: Vec<Vec<usize>> = groups.into_values().collect();
    members.sort_by_key(|m| m[0]);

    let mut columns = Vec::new();
    for group in members {
        let mut parts: Vec<Vec<usize>> = Vec::new();
        for c in group {
            let fits = |part: &Vec<usize>| match sigma {
                None => true,
                Some((s, g)) => part.iter().all(|&d| {
                    (0..tower.height()).all(|i| g.dist(s[tower.orbits()[c][i]], s[tower.orbits()[d][i]]) < zeta_prime)
                }),
            };
            match parts.iter_mut().find(|p| fits(p)) {
                Some(p) => p.push(c),
                None => parts.push(vec![c]),
            }
        }
        for part in parts {
            let levels: Vec<Vec<usize>> = (0..tower.height())
                .map(|i| part.iter().map(|&c| tower.orbits()[c][i]).collect())
                .collect();
            let sigma_spread = match sigma {
                None => 0.0,
                Some((s, g)) => levels
                    .iter()
                    .flat_map(|lv| lv.iter().flat_map(move |&a| lv.iter().map(move |&b| g.dist(s[a], s[b]))))
                    .fold(0.0, f64::max),
            };
            columns.push(Column {
                base: part.iter().map(|&c| tower.orbits()[c][0]).collect(),
                levels,
                pure_for: observables.len(),
                sigma_spread,
            });
        }
    }
    columns
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;
    use std::sync::Arc;

    fn sys(labels: Vec<u32>) -> GExtensionSystem {
        GExtensionSystem::product(labels, Arc::new(FiniteGroup::trivial()))
    }

    #[test]
    fn build_examples() {
        let t = build_tower(&sys(vec![0; 10]), 3, 0.1, &[0; 10], 0.5).unwrap();
        assert_eq!(t.base().len(), 3);
        assert!((t.coverage() - 0.9).abs() < 1e-12);
        let f: Vec<u32> = (0..10).map(|x| x % 3).collect();
        let t = build_tower(&sys(f.clone()), 1, 0.0, &f, 1e-9).unwrap();
        assert_eq!(t.base(), (0..10).collect::<Vec<_>>());
        assert_eq!(t.coverage(), 1.0);
        let t = build_tower(&sys(vec![0; 10]), 10, 0.0, &[0; 10], 0.5).unwrap();
        assert_eq!(t.base().len(), 1);
        assert_eq!(t.coverage(), 1.0);
        assert!(matches!(build_tower(&sys(vec![0; 10]), 11, 0.5, &[0; 10], 0.5), Err(Error::Infeasible(_))));
        assert!(matches!(build_tower(&sys(vec![0; 10]), 3, 0.05, &[0; 10], 0.5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn stratified_base_tracks_distribution() {
        let f: Vec<u32> = (0..1000).map(|x| u32::from(x % 10 < 3)).collect();
        let t = build_tower(&sys(f.clone()), 7, 0.01, &f, 0.05).unwrap();
        let ones = t.base().iter().filter(|&&x| f[x] == 1).count() as f64 / t.base().len() as f64;
        assert!((ones - 0.3).abs() < 0.05);
    }

    #[test]
    fn column_examples() {
        let t = RokhlinTower::of_rotation(8, &[0, 4], 4).unwrap();
        assert_eq!(pure_columns(&t, &[&[1; 8]], None, 1.0).len(), 1);
        let t1 = RokhlinTower::of_rotation(2, &[0, 1], 1).unwrap();
        assert_eq!(pure_columns(&t1, &[&[0, 1]], None, 1.0).len(), 2);

        let labels: Vec<u32> = vec![0, 1, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let t = RokhlinTower::of_rotation(12, &[0, 3, 6, 9], 3).unwrap();
        let cols = pure_columns(&t, &[&labels], None, 1.0);
        let names: BTreeSet<Vec<u32>> = t.base().iter().map(|&b| labels[b..b + 3].to_vec()).collect();
        assert_eq!(cols.len(), names.len());
    }

    #[test]
    fn sigma_splits_columns() {
        let g = FiniteGroup::cyclic(4);
        let t = RokhlinTower::of_rotation(4, &[0, 1, 2, 3], 1).unwrap();
        let sigma = [0, 1, 2, 3];
        let cols = pure_columns(&t, &[&[0; 4]], Some((&sigma, &g)), 0.6);
        assert_eq!(cols.len(), 2);
        assert!(cols.iter().all(|c| c.sigma_spread < 0.6));
    }

    #[test]
    fn render_shape() {
        let t = RokhlinTower::of_rotation(6, &[0, 3], 3).unwrap();
        let labels = [0, 1, 2, 0, 0, 1];
        let cols = pure_columns(&t, &[&labels], None, 1.0);
        let r = t.render(&cols, &labels);
        assert_eq!(r.lines().count(), 3);
        assert!(r.lines().next().unwrap().ends_with("21"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn levels_disjoint_and_coverage_exact(n in 1usize..2000, k_raw in 1usize..64) {
            let k = k_raw.min(n);
            let f = vec![0u32; n];
            let t = build_tower(&sys(f.clone()), k, 1.0, &f, 1.0).unwrap();
            let mut seen = vec![false; n];
            for o in t.orbits() {
                for &x in o {
                    prop_assert!(!seen[x]);
                    seen[x] = true;
                }
            }
            prop_assert_eq!(t.points(), k * t.base().len());
            prop_assert_eq!(t.base().len(), n / k);
        }

        #[test]
        fn columns_partition_tower(labels in proptest::collection::vec(0u32..2, 24), k in 1usize..6) {
            let base: Vec<usize> = (0..24 / k).map(|i| i * k).collect();
            let t = RokhlinTower::of_rotation(24, &base, k).unwrap();
            let cols = pure_columns(&t, &[&labels], None, 1.0);
            let mut all: Vec<usize> = cols.iter().flat_map(|c| c.levels.iter().flatten().copied()).collect();
            all.sort_unstable();
            let mut expect: Vec<usize> = t.orbits().iter().flatten().copied().collect();
            expect.sort_unstable();
            prop_assert_eq!(all, expect);
            for c in &cols {
                for lv in &c.levels {
                    prop_assert!(lv.iter().all(|&x| labels[x] == labels[lv[0]]));
                }
            }
        }
    }
}
