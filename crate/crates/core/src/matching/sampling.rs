use crate::error::{Error, Result};
use crate::name_distributions::{kantorovich, EmpiricalDistribution, MetricSpace};

/// A map from D = {0, .., |D|-1} onto the atoms of a distribution.
#[derive(Debug, Clone)]
pub struct Sampling<P> {
    /// `assignment[d]` is the image of d.
    pub assignment: Vec<P>,
    /// Number of domain points sent to each atom, in atom order.
    pub counts: Vec<usize>,
    /// Kantorovich distance between dist_D(f) and ν.
    pub distance: f64,
}

/// Counts obtained by rounding each cumulative endpoint of ν down to a
/// multiple of 1/size. Exact integer arithmetic.
pub fn rounded_counts(weights: &[u64], size: usize) -> Vec<usize> {
    let total: u128 = weights.iter().map(|&w| w as u128).sum();
    let mut out = Vec::with_capacity(weights.len());
    let mut cum: u128 = 0;
    let mut prev: usize = 0;
    for &w in weights {
        cum += w as u128;
        let r = if total == 0 {
            0
        } else {
            (cum * size as u128 / total) as usize
        };
        out.push(r - prev);
        prev = r;
    }
    out
}

/// A function from D onto the support of ν whose pushforward is ζ-close to
/// ν. Requires every atom to carry weight above 1/|D| and |D| to exceed
/// max(1/δ, |E|/ζ) with δ the smallest atom weight.
pub fn sample_onto<S: MetricSpace>(
    nu: &EmpiricalDistribution<S>,
    domain_size: usize,
    zeta: f64,
) -> Result<Sampling<S::Point>> {
    let total = nu.total() as f64;
    let d = domain_size as f64;
    for (k, (_, c)) in nu.atoms().iter().enumerate() {
        let w = *c as f64 / total;
        // ν(e) ≤ 1/|D|, compared exactly as c·|D| ≤ total
        if (*c as u128) * (domain_size as u128) <= nu.total() as u128 {
            return Err(Error::AtomTooSmall {
                atom: k,
                weight: w,
                threshold: 1.0 / d,
            });
        }
    }
    let e = nu.len() as f64;
    if d <= e / zeta {
        return Err(Error::DomainTooSmall {
            size: domain_size,
            needed: (e / zeta).floor() as usize + 1,
        });
    }
    Ok(sample_unchecked(nu, domain_size))
}

/// The rounding construction without the size preconditions.
pub fn sample_unchecked<S: MetricSpace>(nu: &EmpiricalDistribution<S>, domain_size: usize) -> Sampling<S::Point> {
    let weights: Vec<u64> = nu.atoms().iter().map(|(_, c)| *c).collect();
    let counts = rounded_counts(&weights, domain_size);
    let mut assignment = Vec::with_capacity(domain_size);
    for ((p, _), &c) in nu.atoms().iter().zip(&counts) {
        assignment.extend(std::iter::repeat_n(p.clone(), c));
    }
    let distance = if domain_size == 0 {
        1.0
    } else {
        let pushed = EmpiricalDistribution::from_points(nu.space().clone(), assignment.iter().cloned())
            .expect("nonempty domain");
        kantorovich(&pushed, nu).expect("same space")
    };
    Sampling {
        assignment,
        counts,
        distance,
    }
}
