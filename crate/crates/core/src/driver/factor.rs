use std::sync::Arc;

use serde::Serialize;

use crate::core_systems::{GExtensionSystem, PartialSpeedup, TwistFunction};
use crate::error::{Error, Result};
use crate::improvement::{hypothesis_distance, improve, ImprovementReport};

use super::bootstrap::bootstrap_regular;
use super::ergodicity::ErgodicityWitness;
use super::schedule::IterationSchedule;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLog {
    pub index: usize,
    pub report: ImprovementReport,
    /// ∫ρ(β_k, id) after this iteration.
    pub beta_size: f64,
    /// Fraction of base points where the speedup differs from the source map.
    pub change_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionLog {
    pub bootstrap_change: f64,
    pub iterations: Vec<IterationLog>,
    pub cumulative_drift: f64,
    pub broken_series: Vec<f64>,
    /// Bootstrap change plus every broken mass: a bound on the final change.
    pub change_bound: f64,
    /// Change mass of the closed final map, measured directly.
    pub final_change_mass: f64,
    /// n-distance of the closed final map over all of X̄ × G.
    pub final_n: usize,
    pub final_distance: f64,
    pub final_alpha_size: f64,
    pub epsilon_sum: f64,
    pub ergodicity: Vec<ErgodicityWitness>,
}

impl ConstructionLog {
    /// Every completed iteration measured its distance below its δ_k.
    pub fn distances_hold(&self) -> bool {
        self.iterations.iter().all(|it| it.report.final_distance < it.report.delta1)
    }
}

/// Result of the factor loop. `speedup` runs over `source` twisted by
/// `beta`; `closed` is the same map completed to one cycle through every
/// base point.
#[derive(Debug, Clone)]
pub struct FactorRun {
    pub speedup: PartialSpeedup,
    pub closed: PartialSpeedup,
    pub pbar: Vec<u32>,
    pub beta: TwistFunction,
    pub alphas: Vec<TwistFunction>,
    pub log: ConstructionLog,
}

fn change_mass(s: &PartialSpeedup) -> f64 {
    s.exponents().iter().filter(|&&k| k != 1).count() as f64 / s.exponents().len() as f64
}

/// Links every chain of the base map to the next one in rotation order,
/// starting from the first column, so the result is a single cycle.
pub fn close_speedup(s: &PartialSpeedup) -> Result<PartialSpeedup> {
    let size = s.exponents().len();
    let (chains, cycles) = s.chains();
    if !cycles.is_empty() {
        return Ok(s.clone());
    }
    let first = chains.iter().filter(|c| c.len() >= 2).map(|c| c[0]).min().unwrap_or(0);
    let mut heads: Vec<&Vec<usize>> = chains.iter().collect();
    heads.sort_by_key(|c| (c[0] + size - first) % size);
    let mut k = s.exponents().to_vec();
    for (i, c) in heads.iter().enumerate() {
        let next = heads[(i + 1) % heads.len()][0];
        let top = *c.last().expect("nonempty chain");
        k[top] = match (next + size - top) % size {
            0 => size,
            d => d,
        };
    }
    let bound = k.iter().copied().max();
    PartialSpeedup::new(s.parent().clone(), k, bound)
}

/// State of the factor loop between iterations.
pub(crate) struct FactorLoop<'a> {
    target: &'a GExtensionSystem,
    source: Arc<GExtensionSystem>,
    schedule: &'a IterationSchedule,
    pub(crate) beta: TwistFunction,
    pub(crate) current: PartialSpeedup,
    pub(crate) pbar: Vec<u32>,
    bootstrap_change: f64,
    iterations: Vec<IterationLog>,
    alphas: Vec<TwistFunction>,
}

impl<'a> FactorLoop<'a> {
    pub(crate) fn start(
        target: &'a GExtensionSystem,
        source: Arc<GExtensionSystem>,
        pbar0: &[u32],
        beta0: Option<TwistFunction>,
        schedule: &'a IterationSchedule,
    ) -> Result<Self> {
        schedule.validate()?;
        let beta = beta0.unwrap_or_else(|| TwistFunction::identity(source.size(), source.group()));
        let parent = Arc::new(source.twist(&beta)?);
        let (current, _) = bootstrap_regular(parent, pbar0, schedule.n0, schedule.delta0, schedule.epsilon)?;
        Ok(FactorLoop {
            target,
            source,
            schedule,
            beta,
            bootstrap_change: change_mass(&current),
            current,
            pbar: pbar0.to_vec(),
            iterations: Vec::new(),
            alphas: Vec::new(),
        })
    }

    /// Iteration k: improve, then twist the source by the new β. The next
    /// improve call checks its hypothesis against this twisted system.
    pub(crate) fn step(&mut self, k: usize) -> Result<()> {
        let group = self.source.group().clone();
        let cfg = self.schedule.config(k);
        let out = improve(self.target, &self.current, &self.pbar, &cfg)
            .map_err(|e| Error::Iteration { index: k, source: Box::new(e) })?;
        self.beta = out.alpha.compose(&self.beta, &group);
        let twisted = Arc::new(self.source.twist(&self.beta)?);
        self.current = out.speedup.with_parent(twisted)?;
        self.pbar = out.pbar1;
        self.iterations.push(IterationLog {
            index: k,
            beta_size: self.beta.size(&group),
            change_mass: change_mass(&self.current),
            report: out.report,
        });
        self.alphas.push(out.alpha);
        Ok(())
    }

    pub(crate) fn n_after(&self, k: Option<usize>) -> usize {
        k.map_or(self.schedule.n0, |k| self.schedule.steps[k].n)
    }

    pub(crate) fn finish(self) -> Result<FactorRun> {
        let group = self.source.group().clone();
        let budget = self.iterations.len();
        let closed = close_speedup(&self.current)?;
        let final_n = self.n_after(budget.checked_sub(1));
        let final_distance = hypothesis_distance(self.target, &closed, &self.pbar, None, final_n)?;
        let broken_series: Vec<f64> = self.iterations.iter().map(|it| it.report.broken_mass).collect();
        let log = ConstructionLog {
            bootstrap_change: self.bootstrap_change,
            cumulative_drift: self.iterations.iter().map(|it| it.report.partition_drift).sum(),
            change_bound: self.bootstrap_change + broken_series.iter().sum::<f64>(),
            broken_series,
            final_change_mass: change_mass(&closed),
            final_n,
            final_distance,
            final_alpha_size: self.beta.size(&group),
            epsilon_sum: self.schedule.steps[..budget].iter().map(|s| s.epsilon).sum(),
            ergodicity: Vec::new(),
            iterations: self.iterations,
        };
        Ok(FactorRun {
            speedup: self.current,
            closed,
            pbar: self.pbar,
            beta: self.beta,
            alphas: self.alphas,
            log,
        })
    }
}

/// Iterates the improvement step, twisting the source by the accumulated
/// β between steps. `beta0` twists the source before the bootstrap.
pub fn run_factor(
    target: &GExtensionSystem,
    source: Arc<GExtensionSystem>,
    pbar0: &[u32],
    beta0: Option<TwistFunction>,
    schedule: &IterationSchedule,
) -> Result<FactorRun> {
    let mut lp = FactorLoop::start(target, source, pbar0, beta0, schedule)?;
    for k in 0..schedule.budget {
        lp.step(k)?;
    }
    lp.finish()
}
