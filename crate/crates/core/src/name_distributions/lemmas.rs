use num::{BigRational, Signed, Zero};
use serde::Serialize;

use super::distribution::{kantorovich, EmpiricalDistribution};
use super::metric::{FiniteMetricSpace, MetricSpace};
use crate::core_systems::FiniteGroup;
use crate::error::Result;

/// Partition of the support of `dist` into sets of diameter < `bound`.
///
/// Greedy: each point joins the first atom all of whose members are closer
/// than `bound`, otherwise starts a new atom. On a finite space every set is
/// a continuity set, so only the diameter matters.
pub fn continuity_partition<S: MetricSpace>(
    dist: &EmpiricalDistribution<S>,
    bound: f64,
) -> Vec<Vec<S::Point>> {
    let mut atoms: Vec<Vec<S::Point>> = Vec::new();
    let space = dist.space();
    for (p, _) in dist.atoms() {
        match atoms
            .iter_mut()
            .find(|a| a.iter().all(|q| space.distance(p, q) < bound))
        {
            Some(a) => a.push(p.clone()),
            None => atoms.push(vec![p.clone()]),
        }
    }
    atoms
}

/// Pointwise right translation γ(i) h.
pub fn translate_distribution(gamma: &[usize], h: usize, group: &FiniteGroup) -> Vec<usize> {
    gamma.iter().map(|&g| group.mul(g, h)).collect()
}

/// Empirical distribution of a sequence of group elements.
pub fn group_distribution(gamma: &[usize], group: &FiniteGroup) -> Result<EmpiricalDistribution<FiniteMetricSpace>> {
    EmpiricalDistribution::from_points(FiniteMetricSpace::of_group(group), gamma.iter().copied())
}

pub fn haar(group: &FiniteGroup) -> EmpiricalDistribution<FiniteMetricSpace> {
    EmpiricalDistribution::from_points(FiniteMetricSpace::of_group(group), 0..group.order())
        .expect("group is nonempty")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityBound {
    /// min over h of (1/n) Σ 1_A(γ(i) h)
    pub fraction: f64,
    /// λ(A) − ε
    pub threshold: f64,
    pub holds: bool,
    /// Distance of dist(γ) to Haar measure.
    pub distance_to_haar: f64,
    /// Largest η such that distance < η forces the bound (see [`density_modulus`]).
    pub eta: f64,
}

/// η(ε, A) for a finite group: if ‖ν, λ‖ < η then ν(A h⁻¹) > λ(A) − ε for
/// every h. Since every nonzero distance is at least ρ_min, the Kantorovich
/// distance dominates ρ_min times total variation, and total variation
/// dominates λ(A) − ν(A h⁻¹); so η = ε ρ_min works. The grid search returns
/// the largest k/1024 not exceeding that value.
pub fn density_modulus(group: &FiniteGroup, epsilon: f64) -> f64 {
    let m = group.order();
    let rho_min = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| group.dist(a, b))
        .fold(1.0f64, f64::min);
    let cap = epsilon * rho_min;
    let mut eta = 0.0;
    for k in 0..=1024 {
        let v = k as f64 / 1024.0;
        if v <= cap {
            eta = v;
        }
    }
    eta
}

pub fn density_lower_bound(
    gamma: &[usize],
    a: &[bool],
    group: &FiniteGroup,
    epsilon: f64,
) -> Result<DensityBound> {
    let m = group.order();
    let n = gamma.len().max(1) as f64;
    let lambda_a = a.iter().filter(|&&b| b).count() as f64 / m as f64;
    let fraction = (0..m)
        .map(|h| gamma.iter().filter(|&&g| a[group.mul(g, h)]).count() as f64 / n)
        .fold(1.0f64, f64::min);
    let threshold = lambda_a - epsilon;
    Ok(DensityBound {
        fraction,
        threshold,
        holds: fraction >= threshold,
        distance_to_haar: kantorovich(&group_distribution(gamma, group)?, &haar(group))?,
        eta: density_modulus(group, epsilon),
    })
}

/// Half the L1 distance of two probability vectors, exactly.
pub fn half_l1(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let mut s = BigRational::zero();
    for (x, y) in a.iter().zip(b) {
        s += (x - y).abs();
    }
    s / BigRational::from_integer(2.into())
}

/// The component v₂ in v_Q = (1 − ε) v₁ + ε v₂, that is
/// v₂ = (v_Q − (1 − ε) v₁) / ε. It is a probability vector whenever
/// (1 − ε) v₁ ≤ v_Q coordinatewise.
pub fn convex_remainder(v1: &[BigRational], vq: &[BigRational], eps: &BigRational) -> Vec<BigRational> {
    let one_minus = BigRational::from_integer(1.into()) - eps;
    v1.iter()
        .zip(vq)
        .map(|(a, q)| (q - &one_minus * a) / eps)
        .collect()
}
