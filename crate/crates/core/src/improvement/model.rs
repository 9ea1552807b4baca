use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::core_systems::{FiniteGroup, GExtensionSystem};
use crate::error::{Error, Result};
use crate::name_distributions::{
    continuity_partition, distribution_of_base_names, kantorovich, name_at, name_distribution, EmpiricalDistribution,
    NameBlock,
};

use super::regular::ladder_distribution;

/// Partition of n-names into atoms of small diameter. Only names carrying
/// target mass ≥ q_min get proper atoms; everything else falls into the
/// miscellaneous atom, indexed `proper`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QPartition {
    pub n: usize,
    pub proper: usize,
    pub masses: Vec<f64>,
    #[serde(skip)]
    atom_of: BTreeMap<NameBlock, usize>,
}

impl QPartition {
    pub fn from_target(target: &GExtensionSystem, n: usize, q_min: f64, diameter: f64) -> Result<Self> {
        let dist = name_distribution(target, target.labels(), None, n, target.group())?;
        let total = dist.total() as f64;
        let heavy: Vec<(NameBlock, u64)> = dist
            .atoms()
            .iter()
            .filter(|(_, c)| *c as f64 / total >= q_min)
            .cloned()
            .collect();
        if heavy.is_empty() {
            return Err(Error::Infeasible(format!("no target {n}-name has mass {q_min}")));
        }
        let restricted = EmpiricalDistribution::from_counts(dist.space().clone(), heavy.iter().cloned())?;
        let atoms = continuity_partition(&restricted, diameter);
        let mut atom_of = BTreeMap::new();
        let mut masses = vec![0.0; atoms.len() + 1];
        for (k, a) in atoms.iter().enumerate() {
            for name in a {
                masses[k] += dist.weight(name);
                atom_of.insert(name.clone(), k);
            }
        }
        masses[atoms.len()] = 1.0 - masses[..atoms.len()].iter().sum::<f64>();
        Ok(QPartition { n, proper: atoms.len(), masses, atom_of })
    }

    pub fn misc(&self) -> usize {
        self.proper
    }

    pub fn atom(&self, name: &[(u32, u32)]) -> usize {
        self.atom_of.get(name).copied().unwrap_or(self.proper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub n: usize,
    pub n1: usize,
    /// |F|; searched over multiples of lcm(n, n₁) when absent.
    pub length: Option<usize>,
    pub max_length: usize,
    /// Searched lengths start above this.
    pub min_length: usize,
    /// (N̄, δ₁): keep only lengths L whose stacked copies leave domain mass
    /// ⌊N̄/L⌋(L−1)/N̄ above 1 − δ₁.
    pub host: Option<(usize, f64)>,
    /// Search stops at the first length whose score is below this.
    pub tolerance: f64,
    /// K of certificate (d).
    pub min_count: usize,
}

/// A target orbit segment used as the copying template.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelName {
    pub start: usize,
    pub n: usize,
    pub n1: usize,
    pub word: NameBlock,
    /// Total-variation score used by the search (bounds both certificates).
    pub search_score: f64,
    /// (a) sliding n₁-blocks, averaged over G, against the target.
    pub sliding_distance: f64,
    /// (b) disjoint n₁-blocks, worst right translate, against the target.
    pub ladder_distance: f64,
    /// Q-atom of each n-block of F; the miscellaneous atom marks pseudo blocks.
    pub block_atoms: Vec<usize>,
    pub misc_atom: usize,
    /// (c) per n₁-block: fraction covered by real blocks and their distance.
    pub coverage: Vec<f64>,
    pub block_distance: Vec<f64>,
    /// (d) smallest count of a Q-atom among the real blocks of F.
    pub min_atom_count: usize,
    pub counts_ok: bool,
}

impl ModelName {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.block_atoms.len()
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.block_atoms[i] != self.misc_atom
    }

    pub fn block(&self, i: usize) -> &[(u32, u32)] {
        &self.word[i * self.n..(i + 1) * self.n]
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Interned n₁-names at (x, id) with cocycle prefixes, for fast scoring.
struct Scorer<'a> {
    size: usize,
    n1: usize,
    group: &'a FiniteGroup,
    class: Vec<usize>,
    class_count: Vec<i64>,
    prefix: Vec<usize>,
}

impl<'a> Scorer<'a> {
    fn new(target: &'a GExtensionSystem, n1: usize) -> Self {
        let size = target.size();
        let group = target.group().as_ref();
        let mut ids: HashMap<NameBlock, usize> = HashMap::new();
        let mut class = Vec::with_capacity(size);
        for x in 0..size {
            let name = name_at(target, target.labels(), None, (x, group.identity()), n1).expect("full map");
            let next = ids.len();
            class.push(*ids.entry(name).or_insert(next));
        }
        let mut class_count = vec![0i64; ids.len()];
        for &c in &class {
            class_count[c] += 1;
        }
        // prefix[i] = σ^{(i)}(0) along the cycle, for i ≤ 3N
        let mut prefix = Vec::with_capacity(3 * size + 1);
        prefix.push(group.identity());
        for i in 0..3 * size {
            let last = *prefix.last().expect("nonempty");
            prefix.push(group.mul(target.sigma()[i % size], last));
        }
        Scorer { size, n1, group, class, class_count, prefix }
    }

    /// σ^{(k)}(x) for x < N, k ≤ 2N.
    fn cocycle(&self, x: usize, k: usize) -> usize {
        self.group.mul(self.prefix[x + k], self.group.inv(self.prefix[x]))
    }

    /// Best start for length `len`: (score, start), lowest start on ties.
    fn best_start(&self, len: usize) -> (f64, usize) {
        let (n, n1, g) = (self.size as i64, self.n1, self.group.order());
        let w = (len - n1 + 1) as i64;
        let mut win = vec![0i64; self.class_count.len()];
        for j in 0..w as usize {
            win[self.class[j % self.size]] += 1;
        }
        let term = |c: usize, win: &Vec<i64>| (win[c] * n - self.class_count[c] * w).abs();
        let mut sum: i64 = (0..win.len()).map(|c| term(c, &win)).sum();
        let blocks = len / n1;
        let t_class = |c: usize| self.class_count[c] as f64 / (self.size * g) as f64;
        let mut best = (f64::INFINITY, 0);
        for x in 0..self.size {
            if x > 0 {
                let out = self.class[(x - 1) % self.size];
                let inn = self.class[(x - 1 + w as usize) % self.size];
                for (c, d) in [(out, -1i64), (inn, 1)] {
                    sum -= term(c, &win);
                    win[c] += d;
                    sum += term(c, &win);
                }
            }
            let tv_a = sum as f64 / (2 * w * n) as f64;
            if tv_a >= best.0 {
                continue;
            }
            let mut keys: Vec<(usize, usize)> = (0..blocks)
                .map(|m| (self.class[(x + m * n1) % self.size], self.cocycle(x, m * n1)))
                .collect();
            let mut tv_b: f64 = 0.0;
            for h in 0..g {
                let mut moved: Vec<(usize, usize)> = keys.iter().map(|&(c, u)| (c, self.group.mul(u, h))).collect();
                moved.sort_unstable();
                let mut acc = 1.0;
                let mut i = 0;
                while i < moved.len() {
                    let mut j = i;
                    while j < moved.len() && moved[j] == moved[i] {
                        j += 1;
                    }
                    let f = (j - i) as f64 / blocks as f64;
                    let t = t_class(moved[i].0);
                    acc += (f - t).abs() - t;
                    i = j;
                }
                tv_b = tv_b.max(acc / 2.0);
            }
            keys.clear();
            let score = tv_a.max(tv_b);
            if score < best.0 {
                best = (score, x);
            }
        }
        best
    }
}

/// Searches the target cycle for a segment F whose sliding and disjoint
/// n₁-block statistics are close to the target's, then certifies it.
pub fn build_model_name(target: &GExtensionSystem, q: &QPartition, spec: &ModelSpec) -> Result<ModelName> {
    let (n, n1) = (spec.n, spec.n1);
    if n == 0 || n1 < n {
        return Err(Error::Infeasible(format!("block lengths n = {n}, n1 = {n1}")));
    }
    let step = n / gcd(n, n1) * n1;
    let cap = spec.max_length.min(target.size());
    let lengths: Vec<usize> = match spec.length {
        Some(l) if l % step == 0 && l >= step && l <= cap && l > spec.min_length => vec![l],
        Some(l) => {
            return Err(Error::Infeasible(format!(
                "model length {l} must be a multiple of {step} in ({}, {cap}]",
                spec.min_length
            )))
        }
        None => (spec.min_length / step + 1..=cap / step).map(|m| m * step).collect(),
    };
    let lengths: Vec<usize> = match spec.host {
        Some((size, delta1)) => lengths
            .into_iter()
            .filter(|&l| ((size / l) * (l - 1)) as f64 > (1.0 - delta1) * size as f64)
            .collect(),
        None => lengths,
    };
    if lengths.is_empty() {
        return Err(Error::Infeasible(format!("no admissible model length among multiples of {step} up to {cap}")));
    }
    let scorer = Scorer::new(target, n1);
    let mut chosen: Option<(f64, usize, usize)> = None;
    for &len in &lengths {
        let (score, start) = scorer.best_start(len);
        if chosen.is_none_or(|(s, _, _)| score < s) {
            chosen = Some((score, start, len));
        }
        if score < spec.tolerance {
            break;
        }
    }
    let (search_score, start, len) = chosen.expect("nonempty lengths");
    certify(target, q, spec, start, len, search_score)
}

fn certify(
    target: &GExtensionSystem,
    q: &QPartition,
    spec: &ModelSpec,
    start: usize,
    len: usize,
    search_score: f64,
) -> Result<ModelName> {
    let (n, n1) = (spec.n, spec.n1);
    let group: &Arc<FiniteGroup> = target.group();
    let word = name_at(target, target.labels(), None, (start, group.identity()), len).expect("full map");
    let target_n1 = name_distribution(target, target.labels(), None, n1, group)?;
    let target_n = name_distribution(target, target.labels(), None, n, group)?;

    let sliding: Vec<Option<NameBlock>> = (0..=len - n1).map(|i| Some(word[i..i + n1].to_vec())).collect();
    let sliding_distance = kantorovich(&distribution_of_base_names(&sliding, n1, group)?, &target_n1)?;
    let mut ladder_distance: f64 = 0.0;
    for h in 0..group.order() {
        ladder_distance = ladder_distance.max(kantorovich(&ladder_distribution(&word, n1, h, group)?, &target_n1)?);
    }

    let block_atoms: Vec<usize> = (0..len / n).map(|i| q.atom(&word[i * n..(i + 1) * n])).collect();
    let per = n1 / n;
    let mut coverage = Vec::new();
    let mut block_distance = Vec::new();
    for k in 0..len / n1 {
        let real: Vec<usize> = (k * per..(k + 1) * per)
            .filter(|&i| block_atoms[i] != q.misc())
            .map(|i| i * n)
            .collect();
        coverage.push((real.len() * n) as f64 / n1 as f64);
        block_distance.push(if real.is_empty() {
            1.0
        } else {
            let names: Vec<Option<NameBlock>> = real.iter().map(|&i| Some(word[i..i + n].to_vec())).collect();
            kantorovich(&distribution_of_base_names(&names, n, group)?, &target_n)?
        });
    }
    let mut counts = vec![0usize; q.proper];
    for &a in &block_atoms {
        if a != q.misc() {
            counts[a] += 1;
        }
    }
    let min_atom_count = counts.iter().copied().filter(|&c| c > 0).min().unwrap_or(0);
    Ok(ModelName {
        start,
        n,
        n1,
        word,
        search_score,
        sliding_distance,
        ladder_distance,
        block_atoms,
        misc_atom: q.misc(),
        coverage,
        block_distance,
        min_atom_count,
        counts_ok: min_atom_count >= spec.min_count,
    })
}
