use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::core_systems::{ConditionCheck, FiniteGroup, GExtensionSystem, PartialSpeedup, TwistFunction};
use crate::error::{Error, Result};
use crate::matching::{best_bijection, best_surjection, exhaust_samples, rounded_counts};
use crate::name_distributions::{kantorovich, name_at, BlockSpace, EmpiricalDistribution, NameBlock};
use crate::towers::{broken_fraction, ladder, Ladder, RokhlinTower};

use super::cycles::{build_cycles, WindowSystem};
use super::model::{build_model_name, ModelName, ModelSpec, QPartition};
use super::regular::{check_regular, hypothesis_distance};
use super::Refusal;

/// Parameters of one improvement step. Tolerances left as `None` take the
/// defaults documented on each field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImproveConfig {
    pub n: usize,
    pub delta: f64,
    pub n1: usize,
    pub delta1: f64,
    pub epsilon: f64,
    /// A₁ as a list of base points; `None` is the whole base.
    pub a1: Option<Vec<usize>>,
    /// A₂ as a list of group elements; `None` is the whole group.
    pub a2: Option<Vec<usize>>,
    /// Matching tolerance and Q-atom diameter.
    pub zeta: f64,
    /// M′, height of the window tower; defaults to the whole cycle.
    pub column_height: Option<usize>,
    /// M; defaults to 2|F| rounded up to a multiple of n, capped at M′.
    pub window_len: Option<usize>,
    /// |F|; searched when absent.
    pub model_len: Option<usize>,
    pub model_tolerance: f64,
    /// Smallest target mass of a proper Q-atom name; defaults to 2^-n.
    pub q_min: Option<f64>,
    /// Q₀-atoms lighter than this join the miscellaneous atom; defaults to δ.
    pub misc_threshold: Option<f64>,
    pub seed: u64,
}

impl ImproveConfig {
    pub fn new(n: usize, delta: f64, n1: usize, delta1: f64, epsilon: f64) -> Self {
        ImproveConfig {
            n,
            delta,
            n1,
            delta1,
            epsilon,
            a1: None,
            a2: None,
            zeta: 0.1,
            column_height: None,
            window_len: None,
            model_len: None,
            model_tolerance: delta1,
            q_min: None,
            misc_threshold: None,
            seed: 0,
        }
    }
}

/// Tolerances actually used by a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub zeta: f64,
    pub q_min: f64,
    pub misc_threshold: f64,
    pub column_height: usize,
    pub window_len: usize,
    pub model_tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub model_start: usize,
    pub model_len: usize,
    pub model_search_score: f64,
    pub model_sliding_distance: f64,
    pub model_ladder_distance: f64,
    pub model_real_blocks: usize,
    pub model_pseudo_blocks: usize,
    pub model_min_atom_count: usize,
    pub columns: usize,
    pub windows_per_column: usize,
    pub useful_blocks_per_window: usize,
    /// Step 1: Q₀-atoms merged into the miscellaneous atom, blocks carved
    /// from the donor, columns where no carve size fitted.
    pub misc_merged_atoms: usize,
    pub misc_carved_blocks: usize,
    pub misc_carve_skipped: usize,
    /// Step 2: real blocks of F turned pseudo because their atom is absent.
    pub absent_atom_blocks: usize,
    /// Step 3.
    pub samples: usize,
    pub exhaustion_bound_met: bool,
    pub sample_leftover: f64,
    /// Step 4.
    pub cycles: usize,
    pub stages: usize,
    /// Step 5.
    pub pseudo_blocks_placed: usize,
    pub dropped_stages: usize,
    /// Step 6.
    pub cycle_orbits: usize,
    /// Step 7: every constructed orbit spells F in the twisted system.
    pub step7_identity: bool,
    /// Step 9.
    pub stacked_orbits: usize,
    pub complement_size: usize,
}

/// Measured values of the six conclusions, recomputed from the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementReport {
    pub n: usize,
    pub delta: f64,
    pub n1: usize,
    pub delta1: f64,
    pub epsilon: f64,
    pub hypothesis_distance: f64,
    pub identity_shortcut: bool,
    pub regular: bool,
    pub regularity: Vec<ConditionCheck>,
    pub regularity_refusal: Option<Refusal>,
    pub partition_drift: f64,
    pub alpha_size: f64,
    pub broken_mass: f64,
    pub final_distance: f64,
    pub good_a_fraction: f64,
    /// (μ̄ × λ)(A₁ × A₂).
    pub good_a_mass: f64,
    pub tolerances: Tolerances,
    pub steps: StepDiagnostics,
}

impl ImprovementReport {
    /// Regularity, drift, α-size, broken mass, distance, good A.
    pub fn conclusions(&self) -> [bool; 6] {
        [
            self.regular,
            self.partition_drift < self.epsilon,
            self.alpha_size < self.epsilon,
            self.broken_mass < self.delta1,
            self.final_distance < self.delta1,
            self.good_a_fraction > 1.0 - self.epsilon,
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.conclusions().iter().all(|&c| c)
    }
}

/// `speedup` runs over the input parent; twisting that parent by `alpha`
/// gives the system on which it is regular for `pbar1`.
#[derive(Debug, Clone)]
pub struct ImproveOutcome {
    pub speedup: PartialSpeedup,
    pub pbar1: Vec<u32>,
    pub alpha: TwistFunction,
    pub report: ImprovementReport,
}

struct Measured {
    regular: bool,
    checks: Vec<ConditionCheck>,
    refusal: Option<Refusal>,
    drift: f64,
    alpha_size: f64,
    broken: f64,
    distance: f64,
    good_a: f64,
}

struct Membership {
    a1: Vec<bool>,
    a2: Vec<bool>,
    mass: f64,
}

impl Membership {
    fn new(cfg: &ImproveConfig, size: usize, group: &FiniteGroup) -> Result<Self> {
        let fill = |set: &Option<Vec<usize>>, len: usize, what: &str| -> Result<Vec<bool>> {
            match set {
                None => Ok(vec![true; len]),
                Some(v) => {
                    let mut m = vec![false; len];
                    for &x in v {
                        if x >= len {
                            return Err(Error::PreconditionViolated(format!("{what} element {x} out of range")));
                        }
                        m[x] = true;
                    }
                    Ok(m)
                }
            }
        };
        let a1 = fill(&cfg.a1, size, "A1")?;
        let a2 = fill(&cfg.a2, group.order(), "A2")?;
        if !a2.iter().any(|&b| b) {
            return Err(Error::PreconditionViolated("A2 must be nonempty".into()));
        }
        let c1 = a1.iter().filter(|&&b| b).count() as f64;
        let c2 = a2.iter().filter(|&&b| b).count() as f64;
        Ok(Membership { mass: c1 / size as f64 * c2 / group.order() as f64, a1, a2 })
    }
}

/// Fraction of (n₁-block, g) pairs whose orbit visits A₁ × A₂ with
/// frequency above its mass minus ε. Blocks are consecutive n₁-chunks of
/// the columns of `speedup`.
fn good_a_fraction(speedup: &PartialSpeedup, n1: usize, member: &Membership, epsilon: f64) -> f64 {
    let group = speedup.parent().group();
    let (chains, _) = speedup.chains();
    let (mut good, mut total) = (0usize, 0usize);
    for chain in chains.iter().filter(|c| c.len() >= 2) {
        for block in chain.chunks_exact(n1) {
            for g in 0..group.order() {
                let mut h = g;
                let mut hits = 0;
                for (i, &y) in block.iter().enumerate() {
                    if member.a1[y] && member.a2[h] {
                        hits += 1;
                    }
                    if i + 1 < n1 {
                        h = group.mul(speedup.step_cocycle(y).expect("block inside a chain"), h);
                    }
                }
                total += 1;
                if hits as f64 / n1 as f64 > member.mass - epsilon {
                    good += 1;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        good as f64 / total as f64
    }
}

#[allow(clippy::too_many_arguments)]
fn measure(
    target: &GExtensionSystem,
    current: &PartialSpeedup,
    pbar: &[u32],
    lad0: &Ladder,
    s1: &PartialSpeedup,
    pbar1: &[u32],
    alpha: &TwistFunction,
    cfg: &ImproveConfig,
    member: &Membership,
) -> Result<Measured> {
    let group = current.parent().group();
    let twisted = if alpha.is_identity(group) {
        s1.clone()
    } else {
        s1.with_parent(Arc::new(current.parent().twist(alpha)?))?
    };
    let (regular, checks, refusal) = match check_regular(&twisted, pbar1, cfg.n1, cfg.delta1) {
        Ok(c) => (true, c.checks, None),
        Err(r) => (false, Vec::new(), Some(r)),
    };
    let changed = pbar.iter().zip(pbar1).filter(|(a, b)| a != b).count();
    let distance = match hypothesis_distance(target, s1, pbar1, Some(alpha), cfg.n1) {
        Ok(d) => d,
        Err(Error::Infeasible(_)) => 1.0,
        Err(e) => return Err(e),
    };
    Ok(Measured {
        regular,
        checks,
        refusal,
        drift: changed as f64 / pbar.len() as f64,
        alpha_size: alpha.size(group),
        broken: broken_fraction(lad0, s1),
        distance,
        good_a: good_a_fraction(s1, cfg.n1, member, cfg.epsilon),
    })
}

#[allow(clippy::too_many_arguments)]
fn report(
    cfg: &ImproveConfig,
    hyp: f64,
    shortcut: bool,
    m: Measured,
    member: &Membership,
    tolerances: Tolerances,
    steps: StepDiagnostics,
) -> ImprovementReport {
    ImprovementReport {
        n: cfg.n,
        delta: cfg.delta,
        n1: cfg.n1,
        delta1: cfg.delta1,
        epsilon: cfg.epsilon,
        hypothesis_distance: hyp,
        identity_shortcut: shortcut,
        regular: m.regular,
        regularity: m.checks,
        regularity_refusal: m.refusal,
        partition_drift: m.drift,
        alpha_size: m.alpha_size,
        broken_mass: m.broken,
        final_distance: m.distance,
        good_a_fraction: m.good_a,
        good_a_mass: member.mass,
        tolerances,
        steps,
    }
}

/// A useful block: n consecutive points of a current ladder block, all in
/// one window. `height` is the window position of its first point.
#[derive(Debug, Clone)]
struct UsefulBlock {
    points: Vec<usize>,
    height: usize,
}

/// Per-column state: samples and cycles built from useful blocks.
struct ColumnWork<'a> {
    model: &'a ModelName,
    q: &'a QPartition,
    current: &'a PartialSpeedup,
    pbar: &'a [u32],
    member: &'a Membership,
    space: BlockSpace,
    cfg: &'a ImproveConfig,
    misc_threshold: f64,
}

/// Samples of one column: `samples[s][t][i]` is the useful block (index
/// into window s) assigned to block i of F by sample t.
struct ColumnSamples {
    samples: Vec<Vec<Vec<Option<usize>>>>,
}

impl ColumnWork<'_> {
    fn names_at(&self, blocks: &[UsefulBlock], g: usize) -> Vec<NameBlock> {
        blocks
            .iter()
            .map(|b| name_at(self.current, self.pbar, None, (b.points[0], g), self.cfg.n).expect("block inside a chain"))
            .collect()
    }

    fn pattern(&self, b: &UsefulBlock) -> Vec<bool> {
        b.points.iter().map(|&z| self.member.a1[z]).collect()
    }

    /// Fibre minimising the distance from V₀ names to F's real blocks.
    fn choose_fibre(&self, v0: &[UsefulBlock]) -> Result<usize> {
        let real: Vec<NameBlock> = (0..self.model.block_count())
            .filter(|&i| self.model.is_real(i))
            .map(|i| self.model.block(i).to_vec())
            .collect();
        let group = self.current.parent().group();
        if real.is_empty() || v0.is_empty() {
            return Ok(group.identity());
        }
        let f = EmpiricalDistribution::from_points(self.space.clone(), real)?;
        let mut best = (f64::INFINITY, group.identity());
        for g in 0..group.order() {
            let d = kantorovich(&EmpiricalDistribution::from_points(self.space.clone(), self.names_at(v0, g))?, &f)?;
            if d < best.0 {
                best = (d, g);
            }
        }
        Ok(best.1)
    }

    fn samples(&self, windows: &[Vec<UsefulBlock>], diag: &mut StepDiagnostics) -> Result<ColumnSamples> {
        let (model, q, n) = (self.model, self.q, self.cfg.n);
        let p = model.block_count();
        let w = windows.len();
        let v0 = &windows[0];
        let empty = ColumnSamples { samples: vec![Vec::new(); w] };
        if v0.is_empty() {
            return Ok(empty);
        }
        let g = self.choose_fibre(v0)?;
        let names: Vec<Vec<NameBlock>> = windows.iter().map(|blocks| self.names_at(blocks, g)).collect();
        let labelled: Vec<Vec<NameBlock>> = windows
            .iter()
            .zip(&names)
            .map(|(blocks, nm)| {
                blocks
                    .iter()
                    .zip(nm)
                    .map(|(b, name)| {
                        name.iter()
                            .zip(self.pattern(b))
                            .map(|(&(l, c), a)| (2 * l + u32::from(a), c))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // φ_s: V_s → V₀, kept as its inverse
        let mut phi_inv: Vec<Vec<usize>> = vec![(0..v0.len()).collect()];
        for s in 1..w {
            let m = best_bijection(&self.space, &labelled[0], &labelled[s], self.cfg.zeta);
            let mut inv = vec![0; v0.len()];
            for (vs, &v) in m.map.iter().enumerate() {
                inv[v] = vs;
            }
            phi_inv.push(inv);
        }

        // Q₀ through θ: V₀ → J₀ when V₀ is long enough, else own names
        let real: Vec<usize> = (0..p).filter(|&i| model.is_real(i)).collect();
        let mut q0: Vec<usize> = if !real.is_empty() && v0.len() >= real.len() {
            let f_names: Vec<NameBlock> = real.iter().map(|&i| model.block(i).to_vec()).collect();
            let theta = best_surjection(&self.space, &f_names, &names[0], self.cfg.zeta);
            theta.map.iter().map(|&j| model.block_atoms[real[j]]).collect()
        } else {
            names[0].iter().map(|nm| q.atom(nm)).collect()
        };

        // Step 1: light atoms become miscellaneous; a too small miscellaneous
        // atom is topped up from the heaviest atom
        let len0 = v0.len();
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &a in q0.iter().filter(|&&a| a != q.misc()) {
            *counts.entry(a).or_insert(0) += 1;
        }
        for (&a, &c) in &counts {
            if (c as f64) < self.misc_threshold * len0 as f64 {
                diag.misc_merged_atoms += 1;
                q0.iter_mut().filter(|x| **x == a).for_each(|x| *x = q.misc());
            }
        }
        let misc = q0.iter().filter(|&&a| a == q.misc()).count();
        let lo = len0 as f64 / 2f64.powi(n as i32 + 2);
        if misc > 0 && misc as f64 <= lo {
            let want = lo.floor() as usize + 1;
            let mut live: BTreeMap<usize, usize> = BTreeMap::new();
            for &a in q0.iter().filter(|&&a| a != q.misc()) {
                *live.entry(a).or_insert(0) += 1;
            }
            let donor = live.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&a, &c)| (a, c));
            match donor {
                Some((a, c)) if want as f64 <= 2.0 * lo && want - misc <= c => {
                    let mut left = want - misc;
                    for x in q0.iter_mut().filter(|x| **x == a) {
                        if left == 0 {
                            break;
                        }
                        *x = q.misc();
                        left -= 1;
                    }
                    diag.misc_carved_blocks += want - misc;
                }
                _ => diag.misc_carve_skipped += 1,
            }
        }

        // Step 2: A₁-patterns of real blocks of F, per n₁-block and Q-atom,
        // distributed as the conditional pattern counts over V₀
        let present: BTreeSet<usize> = q0.iter().copied().filter(|&a| a != q.misc()).collect();
        let mut pattern_id: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        let r0: Vec<usize> = v0
            .iter()
            .map(|b| {
                let next = pattern_id.len();
                *pattern_id.entry(self.pattern(b)).or_insert(next)
            })
            .collect();
        let mut cond: BTreeMap<usize, BTreeMap<usize, u64>> = BTreeMap::new();
        for (v, &a) in q0.iter().enumerate() {
            if a != q.misc() {
                *cond.entry(a).or_default().entry(r0[v]).or_insert(0) += 1;
            }
        }
        let per = self.cfg.n1 / n;
        let mut f_atom: Vec<Option<(usize, usize)>> = vec![None; p];
        for k in 0..p / per {
            let mut by_q: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for i in k * per..(k + 1) * per {
                if !model.is_real(i) {
                    continue;
                }
                if present.contains(&model.block_atoms[i]) {
                    by_q.entry(model.block_atoms[i]).or_default().push(i);
                } else {
                    diag.absent_atom_blocks += 1;
                }
            }
            for (a, blocks) in by_q {
                let dist = &cond[&a];
                let weights: Vec<u64> = dist.values().copied().collect();
                let rc = rounded_counts(&weights, blocks.len());
                let mut it = blocks.into_iter();
                for (&r, &c) in dist.keys().zip(&rc) {
                    for i in it.by_ref().take(c) {
                        f_atom[i] = Some((a, r));
                    }
                }
            }
        }

        // Step 3: exhaustion of V₀ by samples with the (Q, R̃) counts of F
        let mut combined: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for key in f_atom.iter().flatten() {
            let next = combined.len();
            combined.entry(*key).or_insert(next);
        }
        let spare = combined.len();
        let atom_of: Vec<usize> = q0
            .iter()
            .zip(&r0)
            .map(|(&a, &r)| combined.get(&(a, r)).copied().unwrap_or(spare))
            .collect();
        let mut template = vec![0usize; spare + 1];
        for key in f_atom.iter().flatten() {
            template[combined[key]] += 1;
        }
        let family = match exhaust_samples(&atom_of, &template, self.cfg.epsilon) {
            Ok(f) => f,
            Err(_) => return Ok(empty),
        };
        diag.samples += family.samples.len();
        diag.exhaustion_bound_met &= family.size_bound_met;
        diag.sample_leftover = diag.sample_leftover.max(family.leftover_fraction());
        let mut offset = vec![0usize; template.len()];
        for a in 1..template.len() {
            offset[a] = offset[a - 1] + template[a - 1];
        }
        let mut tau0: Vec<Vec<Option<usize>>> = Vec::with_capacity(family.samples.len());
        for sample in &family.samples {
            let mut used = offset.clone();
            let row = f_atom
                .iter()
                .map(|key| {
                    key.map(|key| {
                        let a = combined[&key];
                        used[a] += 1;
                        sample[used[a] - 1]
                    })
                })
                .collect();
            tau0.push(row);
        }
        let samples = (0..w)
            .map(|s| tau0.iter().map(|row| row.iter().map(|v| v.map(|v| phi_inv[s][v])).collect()).collect())
            .collect();
        Ok(ColumnSamples { samples })
    }
}

/// Cocycle products c_t along an orbit of base points (c₀ = id).
fn orbit_cocycles(parent: &GExtensionSystem, orbit: &[usize]) -> Vec<usize> {
    let size = parent.size();
    let group = parent.group();
    let mut c = Vec::with_capacity(orbit.len());
    c.push(group.identity());
    for t in 1..orbit.len() {
        let k = (orbit[t] + size - orbit[t - 1]) % size;
        c.push(group.mul(parent.cocycle_product(orbit[t - 1], k), c[t - 1]));
    }
    c
}

/// Labels and twist so that the orbit spells `word`: α(o_t) = g′_t (c_t g₀)⁻¹
/// with g₀ chosen to minimise the size of α on the orbit.
fn spell(parent: &GExtensionSystem, orbit: &[usize], word: &[(u32, u32)], pbar1: &mut [u32], alpha: &mut [usize]) {
    let group = parent.group();
    let c = orbit_cocycles(parent, orbit);
    let e = group.identity();
    let value = |t: usize, g0: usize| group.mul(word[t].1 as usize, group.inv(group.mul(c[t], g0)));
    let mut best = (f64::INFINITY, e);
    for g0 in 0..group.order() {
        let cost: f64 = (0..orbit.len()).map(|t| group.dist(value(t, g0), e)).sum();
        if cost < best.0 {
            best = (cost, g0);
        }
    }
    for (t, &x) in orbit.iter().enumerate() {
        pbar1[x] = word[t].0;
        alpha[x] = value(t, best.1);
    }
}

/// One distribution improvement step. `current` must be (n, δ)-regular for
/// `pbar` over its parent, and its n-names must be δ-close to the target's.
/// Returns a speedup, partition and twist for which the report measures
/// the six conclusions at (n₁, δ₁, ε).
pub fn improve(
    target: &GExtensionSystem,
    current: &PartialSpeedup,
    pbar: &[u32],
    cfg: &ImproveConfig,
) -> Result<ImproveOutcome> {
    let source = current.parent().clone();
    let group = source.group().clone();
    let size = source.size();
    if target.group().order() != group.order() {
        return Err(Error::SpaceMismatch);
    }
    if pbar.len() != size {
        return Err(Error::InvalidSystem(format!("partition has {} labels for {size} points", pbar.len())));
    }
    let (n, n1) = (cfg.n, cfg.n1);
    if n == 0 || n1 < n || n1 % n != 0 {
        return Err(Error::ScheduleInfeasible(format!("n1 = {n1} must be a positive multiple of n = {n}")));
    }
    let cert0 = check_regular(current, pbar, n, cfg.delta).map_err(Error::NotRegular)?;
    let hyp = hypothesis_distance(target, current, pbar, None, n)?;
    if hyp >= cfg.delta {
        return Err(Error::HypothesisDistance { measured: hyp, bound: cfg.delta });
    }
    let lad0 = ladder(current, &cert0, n)?;
    let member = Membership::new(cfg, size, &group)?;
    let q_min = cfg.q_min.unwrap_or_else(|| 2f64.powi(-(n as i32)));
    let misc_threshold = cfg.misc_threshold.unwrap_or(cfg.delta);
    let m_prime = cfg.column_height.unwrap_or(size);
    let mut tolerances = Tolerances {
        zeta: cfg.zeta,
        q_min,
        misc_threshold,
        column_height: m_prime,
        window_len: 0,
        model_tolerance: cfg.model_tolerance,
        seed: cfg.seed,
    };

    let id = TwistFunction::identity(size, &group);
    let m = measure(target, current, pbar, &lad0, current, pbar, &id, cfg, &member)?;
    if m.regular && m.distance < cfg.delta1 && m.good_a > 1.0 - cfg.epsilon {
        let rep = report(cfg, hyp, true, m, &member, tolerances, StepDiagnostics::default());
        return Ok(ImproveOutcome { speedup: current.clone(), pbar1: pbar.to_vec(), alpha: id, report: rep });
    }

    let q = QPartition::from_target(target, n, q_min, cfg.zeta)?;
    let spec = ModelSpec {
        n,
        n1,
        length: cfg.model_len,
        max_length: size.min(target.size()),
        // column tops leave the domain, so |F| > 1/δ₁ for condition 5
        min_length: (1.0 / cfg.delta1).floor() as usize,
        host: Some((size, cfg.delta1)),
        tolerance: cfg.model_tolerance,
        min_count: 1,
    };
    let model = build_model_name(target, &q, &spec)?;
    let flen = model.len();
    let p = model.block_count();
    if m_prime < n || m_prime > size {
        return Err(Error::ScheduleInfeasible(format!("column height {m_prime} for {size} points and n = {n}")));
    }
    let m_len = cfg.window_len.unwrap_or_else(|| (2 * flen).div_ceil(n) * n).min(m_prime);
    tolerances.window_len = m_len;
    // windows start on a current ladder block boundary
    let phase = lad0.blocks.iter().map(|b| b[0]).min().unwrap_or(0);
    let bases: Vec<usize> = (0..size / m_prime).map(|j| (phase + j * m_prime) % size).collect();
    let tower = RokhlinTower::of_rotation(size, &bases, m_prime)
        .map_err(|e| Error::ScheduleInfeasible(format!("window tower: {e}")))?;
    let windows = WindowSystem::tiled(m_len, m_prime)?;
    let w = windows.len();
    let mut diag = StepDiagnostics {
        model_start: model.start,
        model_len: flen,
        model_search_score: model.search_score,
        model_sliding_distance: model.sliding_distance,
        model_ladder_distance: model.ladder_distance,
        model_real_blocks: (0..p).filter(|&i| model.is_real(i)).count(),
        model_pseudo_blocks: (0..p).filter(|&i| !model.is_real(i)).count(),
        model_min_atom_count: model.min_atom_count,
        columns: tower.orbits().len(),
        windows_per_column: w,
        exhaustion_bound_met: true,
        step7_identity: true,
        ..StepDiagnostics::default()
    };

    // useful blocks: current ladder blocks lying inside one window
    let pos = tower.position_map();
    let mut useful: Vec<Vec<Vec<UsefulBlock>>> = vec![vec![Vec::new(); w]; tower.orbits().len()];
    for block in &lad0.blocks {
        let Some((c, level)) = pos[block[0]] else { continue };
        let s = level / m_len;
        if s >= w {
            continue;
        }
        let inside = block.iter().all(|&z| matches!(pos[z], Some((c2, l2)) if c2 == c && l2 / m_len == s));
        if inside {
            useful[c][s].push(UsefulBlock { points: block.clone(), height: level - s * m_len });
        }
    }
    let kmin = useful.iter().flatten().map(Vec::len).min().unwrap_or(0);
    for win in useful.iter_mut().flatten() {
        win.sort_by_key(|b| b.height);
        win.truncate(kmin);
    }
    diag.useful_blocks_per_window = kmin;

    let work = ColumnWork {
        model: &model,
        q: &q,
        current,
        pbar,
        member: &member,
        space: BlockSpace::new(n, group.clone()),
        cfg,
        misc_threshold,
    };
    let mut in_orbit = vec![false; size];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for (c, column) in useful.iter().enumerate() {
        let cs = work.samples(column, &mut diag)?;
        let t_count = cs.samples.iter().map(Vec::len).min().unwrap_or(0);
        if t_count == 0 || p > w {
            continue;
        }
        let heights: Vec<Vec<Vec<Option<usize>>>> = cs
            .samples
            .iter()
            .enumerate()
            .map(|(s, rows)| rows.iter().map(|row| row.iter().map(|v| v.map(|v| column[s][v].height)).collect()).collect())
            .collect();
        let cycles = build_cycles(&windows, &heights, p)?;
        diag.cycles += cycles.len();

        // Step 5: real blocks are reserved, pseudo blocks take the lowest
        // free window points; a stage that cannot be completed is dropped
        let col_points = &tower.orbits()[c];
        let mut reserved = vec![false; size];
        for (t, cyc) in cycles.iter().enumerate() {
            for st in &cyc.stages {
                for i in 0..p {
                    if let Some(v) = cs.samples[st.window(p, i)][t][i] {
                        for &z in &column[st.window(p, i)][v].points {
                            reserved[z] = true;
                        }
                    }
                }
            }
        }
        for (t, cyc) in cycles.iter().enumerate() {
            for st in &cyc.stages {
                diag.stages += 1;
                let mut orbit = Vec::with_capacity(flen);
                let mut taken = Vec::new();
                let mut ok = true;
                for i in 0..p {
                    let s = st.window(p, i);
                    match cs.samples[s][t][i] {
                        Some(v) => orbit.extend_from_slice(&column[s][v].points),
                        None => {
                            let free: Vec<usize> = col_points[s * m_len..(s + 1) * m_len]
                                .iter()
                                .copied()
                                .filter(|&z| !reserved[z])
                                .take(n)
                                .collect();
                            if free.len() < n {
                                ok = false;
                                break;
                            }
                            for &z in &free {
                                reserved[z] = true;
                            }
                            taken.push(free.clone());
                            orbit.extend(free);
                        }
                    }
                }
                if !ok {
                    diag.dropped_stages += 1;
                    for z in taken.into_iter().flatten() {
                        reserved[z] = false;
                    }
                    for i in 0..p {
                        let s = st.window(p, i);
                        if let Some(v) = cs.samples[s][t][i] {
                            for &z in &column[s][v].points {
                                reserved[z] = false;
                            }
                        }
                    }
                    continue;
                }
                diag.pseudo_blocks_placed += taken.len();
                for &z in &orbit {
                    in_orbit[z] = true;
                }
                orbits.push(orbit);
            }
        }
    }
    diag.cycle_orbits = orbits.len();

    // Step 9: leftover points in rotation order, stacked into copies of F
    let start = tower.base().first().copied().unwrap_or(0);
    let leftover: Vec<usize> = (0..size).map(|i| (start + i) % size).filter(|&x| !in_orbit[x]).collect();
    let mut chunks = leftover.chunks_exact(flen);
    for chunk in chunks.by_ref() {
        orbits.push(chunk.to_vec());
    }
    let complement = chunks.remainder().to_vec();
    diag.stacked_orbits = orbits.len() - diag.cycle_orbits;
    diag.complement_size = complement.len();

    // Step 7 on every orbit; the complement keeps one label and α = id
    let mut pbar1 = pbar.to_vec();
    let mut alpha_values = vec![group.identity(); size];
    let mut k1 = vec![0usize; size];
    for orbit in &orbits {
        spell(&source, orbit, &model.word, &mut pbar1, &mut alpha_values);
        for t in 0..orbit.len() - 1 {
            k1[orbit[t]] = (orbit[t + 1] + size - orbit[t]) % size;
        }
    }
    if !complement.is_empty() {
        let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
        for &x in &complement {
            *votes.entry(pbar[x]).or_insert(0) += 1;
        }
        let label = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&l, _)| l).unwrap_or(0);
        for &x in &complement {
            pbar1[x] = label;
        }
    }
    let bound = k1.iter().copied().max().unwrap_or(0);
    let alpha = TwistFunction::new(alpha_values, &group)?;
    let s1 = PartialSpeedup::new(source.clone(), k1, Some(bound))?;

    let twisted = s1.with_parent(Arc::new(source.twist(&alpha)?))?;
    let e = group.identity();
    diag.step7_identity = orbits
        .iter()
        .all(|o| name_at(&twisted, &pbar1, None, (o[0], e), flen).as_deref() == Some(&model.word[..]));

    let m = measure(target, current, pbar, &lad0, &s1, &pbar1, &alpha, cfg, &member)?;
    let rep = report(cfg, hyp, false, m, &member, tolerances, diag);
    Ok(ImproveOutcome { speedup: s1, pbar1, alpha, report: rep })
}
