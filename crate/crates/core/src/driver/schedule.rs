use serde::Serialize;

use crate::error::{Error, Result};
use crate::improvement::ImproveConfig;

/// Targets (n_k, δ_k) and change budget ε_k of iteration k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleStep {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
}

/// A₁ × A₂ with `None` meaning the whole base or group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rectangle {
    pub a1: Option<Vec<usize>>,
    pub a2: Option<Vec<usize>>,
}

impl Rectangle {
    pub fn everything() -> Self {
        Rectangle { a1: None, a2: None }
    }
}

/// Tolerance schedule of the iterated construction. Iteration k improves
/// from `steps[k-1]` (or the initial (n₀, δ₀)) to `steps[k]` and uses
/// rectangle k mod the rectangle count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationSchedule {
    pub epsilon: f64,
    pub n0: usize,
    pub delta0: f64,
    pub steps: Vec<ScheduleStep>,
    pub rectangles: Vec<Rectangle>,
    pub budget: usize,
    /// Remaining improve settings; n, δ, n₁, δ₁, ε and A are overwritten.
    pub template: ImproveConfig,
}

impl IterationSchedule {
    pub fn new(
        epsilon: f64,
        n0: usize,
        delta0: f64,
        steps: Vec<ScheduleStep>,
        rectangles: Vec<Rectangle>,
        budget: usize,
    ) -> Result<Self> {
        let template = ImproveConfig::new(n0, delta0, n0, delta0, epsilon);
        let s = IterationSchedule { epsilon, n0, delta0, steps, rectangles, budget, template };
        s.validate()?;
        Ok(s)
    }

    /// Halving schedule: δ_k = δ₀ 2^-k and ε_k = c δ_k with c > 2 picked
    /// so that Σ ε_k < ε/2.
    pub fn halving(epsilon: f64, n0: usize, delta0: f64, ns: &[usize], budget: usize) -> Result<Self> {
        let deltas: Vec<f64> = (1..=ns.len()).map(|k| delta0 / 2f64.powi(k as i32)).collect();
        let total: f64 = deltas.iter().sum();
        let c = 0.5 * (2.0 + epsilon / 2.0 / total);
        let steps = ns
            .iter()
            .zip(&deltas)
            .map(|(&n, &delta)| ScheduleStep { n, delta, epsilon: c * delta })
            .collect();
        Self::new(epsilon, n0, delta0, steps, vec![Rectangle::everything()], budget)
    }

    /// The sufficient-constant preset: ε_k = ε 2^-(k+2), n_k the least
    /// multiple of n_{k-1} above 100/ε_k, and δ_k = ε_k⁴ / (2^{n_k} 100)
    /// (rounded down to half that bound, so the inequality is strict).
    pub fn strict(epsilon: f64, n0: usize, delta0: f64, budget: usize) -> Result<Self> {
        let mut steps = Vec::with_capacity(budget);
        let mut prev = n0.max(1);
        for k in 0..budget {
            let eps_k = epsilon / 2f64.powi(k as i32 + 2);
            let n = strict_n(eps_k).div_ceil(prev) * prev;
            let delta = strict_delta(eps_k, n) / 2.0;
            if delta <= 0.0 {
                return Err(Error::ScheduleInfeasible(format!(
                    "delta_{k} = epsilon_k^4 / (2^{n} 100) underflows to zero"
                )));
            }
            steps.push(ScheduleStep { n, delta, epsilon: eps_k });
            prev = n;
        }
        Self::new(epsilon, n0, delta0, steps, vec![Rectangle::everything()], budget)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ScheduleInfeasible(m));
        if self.budget > self.steps.len() {
            return bad(format!("budget {} exceeds the {} scheduled steps", self.budget, self.steps.len()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) || !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return bad("tolerances must lie in (0, 1)".into());
        }
        let mut prev = (self.n0, f64::INFINITY);
        for (k, s) in self.steps.iter().enumerate() {
            if !(s.epsilon > 0.0 && s.epsilon < prev.1) {
                return bad(format!("epsilon_{k} = {} is not positive and decreasing", s.epsilon));
            }
            if s.delta <= 0.0 {
                return bad(format!("delta_{k} = {} is not positive", s.delta));
            }
            if s.delta >= s.epsilon / 2.0 {
                return bad(format!("delta_{k} = {} is not below epsilon_{k}/2 = {}", s.delta, s.epsilon / 2.0));
            }
            if s.n == 0 || s.n % prev.0 != 0 {
                return bad(format!("n_{k} = {} is not a multiple of {}", s.n, prev.0));
            }
            prev = (s.n, s.epsilon);
        }
        let sum: f64 = self.steps.iter().map(|s| s.epsilon).sum();
        if sum >= self.epsilon / 2.0 {
            return bad(format!("sum of epsilon_k is {sum}, not below epsilon/2 = {}", self.epsilon / 2.0));
        }
        if self.rectangles.is_empty() {
            return bad("no rectangles".into());
        }
        if self.budget > 0 && self.budget < self.rectangles.len() {
            return bad(format!(
                "budget {} does not visit all {} rectangles",
                self.budget,
                self.rectangles.len()
            ));
        }
        Ok(())
    }

    /// Improve configuration of iteration k (0-based).
    pub fn config(&self, k: usize) -> ImproveConfig {
        let (n, delta) = if k == 0 {
            (self.n0, self.delta0)
        } else {
            (self.steps[k - 1].n, self.steps[k - 1].delta)
        };
        let s = &self.steps[k];
        let r = &self.rectangles[k % self.rectangles.len()];
        ImproveConfig {
            n,
            delta,
            n1: s.n,
            delta1: s.delta,
            epsilon: s.epsilon,
            a1: r.a1.clone(),
            a2: r.a2.clone(),
            model_tolerance: s.delta,
            ..self.template.clone()
        }
    }
}

/// The sufficient constant δ < ε′⁴ / (2ⁿ · 100).
pub fn strict_delta(epsilon_prime: f64, n: usize) -> f64 {
    epsilon_prime.powi(4) / (2f64.powi(n as i32) * 100.0)
}

/// Smallest n with n > 100/ε.
pub fn strict_n(epsilon: f64) -> usize {
    (100.0 / epsilon).floor() as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_meets_invariants() {
        let s = IterationSchedule::halving(0.4, 8, 0.1, &[16, 16, 16], 3).unwrap();
        let d: Vec<f64> = s.steps.iter().map(|x| x.delta).collect();
        assert_eq!(d, vec![0.05, 0.025, 0.0125]);
        assert!(s.steps.iter().map(|x| x.epsilon).sum::<f64>() < 0.2);
        let c = s.config(1);
        assert_eq!((c.n, c.n1), (16, 16));
        assert_eq!((c.delta, c.delta1), (0.05, 0.025));
    }

    #[test]
    fn invariant_violations() {
        // Σ 2δ_k = 0.175 already exceeds ε/2 = 0.15
        assert!(IterationSchedule::halving(0.3, 8, 0.1, &[16, 16, 16], 3).is_err());
        let step = |n, delta, epsilon| ScheduleStep { n, delta, epsilon };
        let all = vec![Rectangle::everything()];
        assert!(IterationSchedule::new(0.9, 4, 0.1, vec![step(8, 0.1, 0.1)], all.clone(), 1).is_err());
        assert!(IterationSchedule::new(0.9, 4, 0.1, vec![step(6, 0.01, 0.1)], all.clone(), 1).is_err());
        assert!(IterationSchedule::new(0.9, 4, 0.1, vec![step(8, 0.01, 0.1)], all.clone(), 2).is_err());
        let two = vec![Rectangle::everything(), Rectangle { a1: Some(vec![0]), a2: None }];
        assert!(IterationSchedule::new(0.9, 4, 0.1, vec![step(8, 0.01, 0.1)], two, 1).is_err());
    }

    #[test]
    fn strict_preset_is_valid_and_huge() {
        let s = IterationSchedule::strict(0.9, 8, 0.1, 1).unwrap();
        assert_eq!(s.steps[0].n, 448);
        assert!(s.steps[0].delta > 0.0 && s.steps[0].delta < strict_delta(0.225, 448));
        // 2^1008 leaves no representable delta
        assert!(matches!(IterationSchedule::strict(0.4, 8, 0.1, 2), Err(Error::ScheduleInfeasible(_))));
    }

    #[test]
    fn strict_constants() {
        assert_eq!(strict_n(0.5), 201);
        assert!((strict_delta(0.5, 3) - 0.0625 / 800.0).abs() < 1e-15);
    }
}
