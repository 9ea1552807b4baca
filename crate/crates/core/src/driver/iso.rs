use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::core_systems::{GExtensionSystem, PartialSpeedup, TwistFunction};
use crate::error::{Error, Result};
use crate::name_distributions::{distribution_of_base_names, kantorovich, name_at, name_distribution};

use super::copy::{copy_partition, factor_map};
use super::factor::{close_speedup, FactorLoop, FactorRun};
use super::schedule::IterationSchedule;

/// Smallest period d of the cyclic word, so rotations by d fix it.
fn cyclic_period(word: &[u32]) -> usize {
    let n = word.len();
    (1..=n).find(|&d| n.is_multiple_of(d) && (0..n).all(|i| word[i] == word[(i + d) % n])).unwrap_or(n)
}

/// Length-N label names along a cycle separate its points exactly when the
/// cyclic label word is not periodic.
pub fn check_generator(target: &GExtensionSystem) -> Result<()> {
    let d = cyclic_period(target.labels());
    if d < target.size() {
        return Err(Error::GeneratorCheckFailed { x: 0, y: d });
    }
    Ok(())
}

/// The k-th nonempty cylinder of the labels under x ↦ x + 1: lengths
/// 1, 2, .. and words in lexicographic order within a length, cycled.
pub fn cylinder_sequence(labels: &[u32], count: usize) -> Vec<(Vec<u32>, Vec<usize>)> {
    let size = labels.len();
    let mut out = Vec::new();
    let mut len = 1;
    while out.len() < count && len <= size {
        let mut by_word: std::collections::BTreeMap<Vec<u32>, Vec<usize>> = Default::default();
        for x in 0..size {
            let w: Vec<u32> = (0..len).map(|i| labels[(x + i) % size]).collect();
            by_word.entry(w).or_default().push(x);
        }
        for (w, pts) in by_word {
            if out.len() == count {
                break;
            }
            out.push((w, pts));
        }
        len += 1;
    }
    let distinct = out.len();
    if distinct > 0 {
        for i in distinct..count {
            out.push(out[i % distinct].clone());
        }
    }
    out
}

/// Σ over atoms of min(|atom ∩ A|, |atom ∖ A|) / N, where the atoms are the
/// (2m+1)-names centred on each point of one cycle.
fn window_defect(cycle: &[usize], labels: &[u32], set: &[bool], m: usize) -> f64 {
    let n = cycle.len();
    let word: Vec<u32> = cycle.iter().map(|&x| labels[x]).collect();
    let mut atoms: HashMap<Vec<u32>, (usize, usize)> = HashMap::new();
    for pos in 0..n {
        let name: Vec<u32> = (0..2 * m + 1).map(|i| word[(pos + n * (m / n + 1) + i - m) % n]).collect();
        let e = atoms.entry(name).or_insert((0, 0));
        if set[cycle[pos]] {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    atoms.values().map(|&(a, b)| a.min(b)).sum::<usize>() as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorStep {
    pub index: usize,
    pub cylinder: Vec<u32>,
    pub set_mass: f64,
    /// Smallest window half-width reaching the bound, or the largest tried.
    pub m: usize,
    pub defect: f64,
    pub bound: f64,
    pub copy_distance: f64,
    pub copy_within: bool,
    pub factor_defect: f64,
}

#[derive(Debug, Clone)]
pub struct IsomorphismRun {
    pub factor: FactorRun,
    pub generator: Vec<GeneratorStep>,
    /// Fraction of base points whose length-N name is shared by another.
    pub separation_failure: f64,
}

impl IsomorphismRun {
    pub fn defects_hold(&self) -> bool {
        self.generator.iter().all(|s| s.defect <= s.bound)
    }
}

/// Factor loop with a copied cylinder set after every iteration. After step
/// k the cylinder Ā_k of the source labels is copied to the target through
/// the column alignment map, and its approximation by centred P̂-names of
/// the closed speedup is measured.
pub fn run_isomorphism(
    target: &GExtensionSystem,
    source: Arc<GExtensionSystem>,
    pbar0: &[u32],
    beta0: Option<TwistFunction>,
    schedule: &IterationSchedule,
    zeta: f64,
) -> Result<IsomorphismRun> {
    check_generator(target)?;
    let size = source.size();
    let cylinders = cylinder_sequence(source.labels(), schedule.budget);
    let mut lp = FactorLoop::start(target, source.clone(), pbar0, beta0, schedule)?;
    let mut generator = Vec::new();
    for k in 0..schedule.budget {
        lp.step(k)?;
        let closed = close_speedup(&lp.current)?;
        let (_, cycles) = closed.chains();
        let (word, pts) = &cylinders[k];
        let mut set = vec![false; size];
        for &x in pts {
            set[x] = true;
        }
        let bound = 2.0 * schedule.steps[k].epsilon;
        let cycle = &cycles[0];
        let mut m = 0;
        let mut defect = window_defect(cycle, &lp.pbar, &set, 0);
        while defect > bound && 2 * m + 1 < size {
            m += 1;
            defect = window_defect(cycle, &lp.pbar, &set, m);
        }
        let phi = factor_map(&closed, &lp.pbar, target);
        let qbar: Vec<u32> = set.iter().map(|&b| u32::from(b)).collect();
        let copied = copy_partition(&closed, &lp.pbar, &qbar, target, &phi, zeta, lp.n_after(Some(k)))?;
        generator.push(GeneratorStep {
            index: k,
            cylinder: word.clone(),
            set_mass: pts.len() as f64 / size as f64,
            m,
            defect,
            bound,
            copy_distance: copied.distance,
            copy_within: copied.within,
            factor_defect: copied.factor_defect,
        });
    }
    let factor = lp.finish()?;
    let (_, cycles) = factor.closed.chains();
    let word: Vec<u32> = cycles[0].iter().map(|&x| factor.pbar[x]).collect();
    let separation_failure = if cyclic_period(&word) < size { 1.0 } else { 0.0 };
    Ok(IsomorphismRun { factor, generator, separation_failure })
}

/// P̄ and ᾱ copying the (P ∨ c)-name of a target orbit onto a source tower:
/// (P̄ ∨ ᾱc)(S̄^i(x̄, id)) = (P ∨ c)(S^i(x, id)) for the source tower over
/// x̄ = x of height `nlen`. The target start is the lowest x whose orbit
/// segment has its n-distribution closest to the target's; points off the
/// tower keep the source labels and α = id.
pub fn seed_from_orbit(
    target: &GExtensionSystem,
    source: &GExtensionSystem,
    nlen: usize,
    zeta: f64,
    n: usize,
) -> Result<(Vec<u32>, TwistFunction)> {
    let size = source.size();
    let group = target.group();
    if nlen == 0 || nlen > size || n == 0 || n > nlen || target.group().order() != source.group().order() {
        return Err(Error::NoGoodOrbit { len: nlen, zeta, best: 1.0 });
    }
    let full = name_distribution(target, target.labels(), None, n, group)?;
    let mut best = (f64::INFINITY, 0usize);
    for x in 0..target.size() {
        let segment = name_at(target, target.labels(), None, (x, group.identity()), nlen).expect("full map");
        let names: Vec<Option<Vec<(u32, u32)>>> =
            (0..=nlen - n).map(|i| Some(segment[i..i + n].to_vec())).collect();
        let d = kantorovich(&distribution_of_base_names(&names, n, group)?, &full)?;
        if d < best.0 {
            best = (d, x);
        }
        if d == 0.0 {
            break;
        }
    }
    if best.0 >= zeta {
        return Err(Error::NoGoodOrbit { len: nlen, zeta, best: best.0 });
    }
    let x = best.1 % size;
    let mut pbar = source.labels().to_vec();
    let mut alpha = vec![group.identity(); size];
    let (mut gt, mut gs) = (group.identity(), group.identity());
    for i in 0..nlen {
        let (y, ys) = ((best.1 + i) % target.size(), (x + i) % size);
        pbar[ys] = target.label(y);
        alpha[ys] = group.mul(gt, group.inv(gs));
        gt = group.mul(target.sigma()[y], gt);
        gs = group.mul(source.sigma()[ys], gs);
    }
    Ok((pbar, TwistFunction::new(alpha, group)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    pub labels: Vec<u32>,
    pub merged_mass: f64,
    pub distance: f64,
}

/// Merges every atom with index ≥ `ncut` into atom `ncut`, and reports the
/// n-name distance between the original and the truncated partitions.
pub fn truncate_partition(system: &GExtensionSystem, ncut: u32, n: usize) -> Result<Truncation> {
    let labels: Vec<u32> = system.labels().iter().map(|&l| l.min(ncut)).collect();
    let merged = system.labels().iter().filter(|&&l| l > ncut).count();
    let group = system.group();
    let a = name_distribution(system, system.labels(), None, n, group)?;
    let b = name_distribution(system, &labels, None, n, group)?;
    let distance = kantorovich(&a, &b)?;
    Ok(Truncation {
        merged_mass: system.labels().iter().filter(|&&l| l >= ncut).count() as f64 / system.size() as f64,
        labels,
        distance: if merged == 0 { 0.0 } else { distance },
    })
}

/// Kantorovich distance between the n-name distributions of two partitions
/// of the same speedup.
pub fn partition_distance(s: &PartialSpeedup, p: &[u32], q: &[u32], n: usize) -> Result<f64> {
    let group = s.parent().group();
    let a = name_distribution(s, p, None, n, group)?;
    let b = name_distribution(s, q, None, n, group)?;
    kantorovich(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_systems::FiniteGroup;

    fn blip(size: usize, at: usize, group: FiniteGroup) -> GExtensionSystem {
        let mut labels = vec![0u32; size];
        labels[at] = 1;
        let mut sigma = vec![0usize; size];
        if group.order() > 1 {
            sigma[at] = 1;
        }
        GExtensionSystem::new(labels, Arc::new(group), sigma).unwrap()
    }

    #[test]
    fn generator_check() {
        assert!(check_generator(&blip(32, 3, FiniteGroup::trivial())).is_ok());
        let periodic = GExtensionSystem::product(vec![0, 1, 0, 1, 0, 1], Arc::new(FiniteGroup::trivial()));
        assert_eq!(check_generator(&periodic), Err(Error::GeneratorCheckFailed { x: 0, y: 2 }));
    }

    #[test]
    fn seeding_from_itself() {
        let t = blip(64, 10, FiniteGroup::cyclic(2));
        let (p, a) = seed_from_orbit(&t, &t, 64, 0.01, 4).unwrap();
        assert_eq!(p, t.labels());
        assert!(a.is_identity(t.group()));
    }

    #[test]
    fn full_cycle_seed_is_off_only_at_the_seam() {
        let t = blip(64, 10, FiniteGroup::cyclic(2));
        let s = blip(64, 40, FiniteGroup::cyclic(2));
        let n = 4;
        let (p, a) = seed_from_orbit(&t, &s, 64, 0.2, n).unwrap();
        assert_eq!(p.iter().filter(|&&l| l == 1).count(), 1);
        let d = crate::improvement::hypothesis_distance(&t, &s, &p, Some(&a), n).unwrap();
        assert!(d <= (n - 1) as f64 / 64.0, "{d}");
    }

    fn loop_pair() -> (GExtensionSystem, Arc<GExtensionSystem>) {
        let t = blip(512, 0, FiniteGroup::cyclic(2));
        let mut labels = vec![0u32; 512];
        for x in [40, 255, 400] {
            labels[x] = 1;
        }
        let mut sigma = vec![0usize; 512];
        sigma[255] = 1;
        (t, Arc::new(GExtensionSystem::new(labels, Arc::new(FiniteGroup::cyclic(2)), sigma).unwrap()))
    }

    #[test]
    fn same_system_has_no_defects() {
        let (t, _) = loop_pair();
        let s = Arc::new(t.clone());
        let sched = IterationSchedule::halving(0.5, 4, 0.1, &[8, 8], 2).unwrap();
        let run = run_isomorphism(&t, s.clone(), s.labels(), None, &sched, 0.1).unwrap();
        assert_eq!(run.generator.len(), 2);
        assert!(run.generator.iter().all(|g| g.defect == 0.0), "{:?}", run.generator);
        assert_eq!(run.separation_failure, 0.0);
    }

    #[test]
    fn one_iteration_one_defect() {
        let (t, s) = loop_pair();
        let sched = IterationSchedule::halving(0.5, 4, 0.1, &[8], 1).unwrap();
        let run = run_isomorphism(&t, s.clone(), s.labels(), None, &sched, 0.1).unwrap();
        assert_eq!(run.generator.len(), 1);
        assert!(run.generator[0].defect < 2.0 * sched.steps[0].epsilon);
    }

    #[test]
    fn unreachable_tolerance() {
        let t = blip(64, 10, FiniteGroup::trivial());
        assert!(matches!(seed_from_orbit(&t, &t, 8, 1e-9, 4), Err(Error::NoGoodOrbit { .. })));
    }

    #[test]
    fn truncation_examples() {
        let labels: Vec<u32> = (0..64).map(|x| (x % 4) as u32).collect();
        let s = GExtensionSystem::product(labels.clone(), Arc::new(FiniteGroup::trivial()));
        let same = truncate_partition(&s, 8, 2).unwrap();
        assert_eq!(same.labels, labels);
        assert_eq!(same.distance, 0.0);
        let two = truncate_partition(&s, 1, 2).unwrap();
        assert!(two.labels.iter().all(|&l| l <= 1));
        assert_eq!(two.merged_mass, 0.75);
    }

    #[test]
    fn geometric_tail_merge() {
        // atom j has mass about 2^-(j+1)
        let mut labels = Vec::new();
        for j in 0..16u32 {
            let c = (4096usize >> (j + 1)).max(1);
            labels.extend(std::iter::repeat_n(j, c));
        }
        let s = GExtensionSystem::product(labels.clone(), Arc::new(FiniteGroup::trivial()));
        let t = truncate_partition(&s, 8, 1).unwrap();
        let tail = labels.iter().filter(|&&l| l >= 8).count() as f64 / labels.len() as f64;
        assert_eq!(t.merged_mass, tail);
        // 1-names: only the merged atoms move, by distance 1
        let moved = labels.iter().filter(|&&l| l > 8).count() as f64 / labels.len() as f64;
        assert!((t.distance - moved).abs() < 1e-9);
    }

    #[test]
    fn cylinders_cycle() {
        let c = cylinder_sequence(&[0, 0, 1], 5);
        let words: Vec<Vec<u32>> = c.iter().map(|(w, _)| w.clone()).collect();
        assert_eq!(words, vec![vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0]]);
    }
}
