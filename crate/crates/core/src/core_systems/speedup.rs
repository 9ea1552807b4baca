use std::sync::Arc;

use serde::Serialize;

use super::group::FiniteGroup;
use super::system::{GExtensionSystem, Point};
use crate::error::{Error, Result};

/// A partial map on X × G that moves points forward along their skew orbit.
pub trait SkewDynamics {
    fn base_size(&self) -> usize;
    fn group(&self) -> &FiniteGroup;
    fn apply(&self, p: Point) -> Option<Point>;
}

impl SkewDynamics for GExtensionSystem {
    fn base_size(&self) -> usize {
        self.size()
    }
    fn group(&self) -> &FiniteGroup {
        GExtensionSystem::group(self)
    }
    fn apply(&self, p: Point) -> Option<Point> {
        Some(self.step(p))
    }
}

/// Partial speedup S̄(x, g) = S̄₀^{k(x)}(x, g) on a domain of base points.
/// `exponent[x] == 0` marks x as outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSpeedup {
    parent: Arc<GExtensionSystem>,
    exponent: Vec<usize>,
    bound: Option<usize>,
    step_cocycle: Vec<usize>,
    preimage: Vec<Option<usize>>,
}

impl PartialSpeedup {
    /// `bound = None` encodes an unbounded exponent; such speedups are
    /// representable but never regular.
    pub fn new(parent: Arc<GExtensionSystem>, exponent: Vec<usize>, bound: Option<usize>) -> Result<Self> {
        let n = parent.size();
        if exponent.len() != n {
            return Err(Error::InvalidSystem(format!(
                "exponent has length {} for a base of {n} points",
                exponent.len()
            )));
        }
        if let Some(b) = bound {
            if let Some(&k) = exponent.iter().find(|&&k| k > b) {
                return Err(Error::InvalidSystem(format!("exponent {k} exceeds bound {b}")));
            }
        }
        let mut preimage = vec![None; n];
        for (x, &k) in exponent.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let y = (x + k) % n;
            if let Some(other) = preimage[y] {
                return Err(Error::InvalidSystem(format!(
                    "base map not injective: {other} and {x} both map to {y}"
                )));
            }
            preimage[y] = Some(x);
        }
        let step_cocycle = exponent
            .iter()
            .enumerate()
            .map(|(x, &k)| parent.cocycle_product(x, k))
            .collect();
        Ok(PartialSpeedup {
            parent,
            exponent,
            bound,
            step_cocycle,
            preimage,
        })
    }

    /// k ≡ 1 on all of X: the speedup equal to S̄₀.
    pub fn full(parent: Arc<GExtensionSystem>) -> Self {
        let n = parent.size();
        Self::new(parent, vec![1; n], Some(1)).expect("rotation is injective")
    }

    pub fn parent(&self) -> &Arc<GExtensionSystem> {
        &self.parent
    }

    /// Same exponent function over a different (e.g. twisted) parent.
    pub fn with_parent(&self, parent: Arc<GExtensionSystem>) -> Result<Self> {
        Self::new(parent, self.exponent.clone(), self.bound)
    }

    pub fn exponent(&self, x: usize) -> usize {
        self.exponent[x]
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponent
    }

    pub fn bound(&self) -> Option<usize> {
        self.bound
    }

    pub fn in_domain(&self, x: usize) -> bool {
        self.exponent[x] > 0
    }

    pub fn domain_size(&self) -> usize {
        self.exponent.iter().filter(|&&k| k > 0).count()
    }

    pub fn domain_mass(&self) -> f64 {
        self.domain_size() as f64 / self.exponent.len() as f64
    }

    pub fn base_map(&self, x: usize) -> Option<usize> {
        let k = self.exponent[x];
        (k > 0).then(|| (x + k) % self.exponent.len())
    }

    pub fn base_preimage(&self, y: usize) -> Option<usize> {
        self.preimage[y]
    }

    /// σ̄^(k(x))(x), the group increment of one speedup step.
    pub fn step_cocycle(&self, x: usize) -> Option<usize> {
        self.in_domain(x).then(|| self.step_cocycle[x])
    }

    pub fn apply_speedup(&self, (x, g): Point) -> Result<Point> {
        self.parent.check_point((x, g))?;
        self.apply((x, g)).ok_or(Error::OutOfDomain { x, g })
    }

    /// Maximal chains of the base map: each starts at a point without a
    /// preimage and follows the map until it leaves the domain. Points on
    /// closed cycles are returned separately.
    pub fn chains(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let n = self.exponent.len();
        let mut seen = vec![false; n];
        let mut chains = Vec::new();
        for start in 0..n {
            if self.preimage[start].is_some() {
                continue;
            }
            let mut chain = vec![start];
            seen[start] = true;
            let mut x = start;
            while let Some(y) = self.base_map(x) {
                chain.push(y);
                seen[y] = true;
                x = y;
            }
            chains.push(chain);
        }
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = self.base_map(start).expect("cycle points are in the domain");
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = self.base_map(x).expect("cycle points are in the domain");
            }
            cycles.push(cycle);
        }
        (chains, cycles)
    }
}

impl SkewDynamics for PartialSpeedup {
    fn base_size(&self) -> usize {
        self.exponent.len()
    }
    fn group(&self) -> &FiniteGroup {
        self.parent.group()
    }
    #[inline]
    fn apply(&self, (x, g): Point) -> Option<Point> {
        let y = self.base_map(x)?;
        Some((y, self.parent.group().mul(self.step_cocycle[x], g)))
    }
}

/// Measurable map α: X → G, stored pointwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistFunction {
    values: Vec<usize>,
}

impl TwistFunction {
    pub fn new(values: Vec<usize>, group: &FiniteGroup) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v >= group.order()) {
            return Err(Error::InvalidSystem(format!("twist value {bad} not in group")));
        }
        Ok(TwistFunction { values })
    }

    pub fn identity(n: usize, group: &FiniteGroup) -> Self {
        TwistFunction {
            values: vec![group.identity(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize) -> usize {
        self.values[x]
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// ∫ ρ(α(x), id) over the uniform base measure.
    pub fn size(&self, group: &FiniteGroup) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let e = group.identity();
        self.values.iter().map(|&a| group.dist(a, e)).sum::<f64>() / self.values.len() as f64
    }

    pub fn is_identity(&self, group: &FiniteGroup) -> bool {
        self.values.iter().all(|&a| a == group.identity())
    }

    /// Pointwise product (self · other): twisting by `other` and then by
    /// `self` equals twisting once by the product.
    pub fn compose(&self, other: &TwistFunction, group: &FiniteGroup) -> TwistFunction {
        TwistFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| group.mul(a, b))
                .collect(),
        }
    }
}

/// One of the five regularity conditions with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub condition: u8,
    pub passed: bool,
    pub measured: f64,
    pub detail: String,
}

/// Evidence that a speedup with a partition is (n, δ)-regular.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityCertificate {
    pub n: usize,
    pub delta: f64,
    pub tower_base: Vec<usize>,
    pub height: usize,
    pub checks: Vec<ConditionCheck>,
}

impl RegularityCertificate {
    pub fn passed(&self) -> bool {
        self.checks.len() == 5 && self.checks.iter().all(|c| c.passed)
    }
}
