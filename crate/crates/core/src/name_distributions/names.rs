use std::sync::Arc;

use super::distribution::EmpiricalDistribution;
use super::metric::{BlockSpace, NameBlock, Symbol};
use crate::core_systems::{FiniteGroup, Point, SkewDynamics, TwistFunction};
use crate::error::{Error, Result};

/// Uniform distribution over the blocks `s[i..i+n]`, `i ∈ positions`.
pub fn block_distribution(
    group: &Arc<FiniteGroup>,
    name: &[Symbol],
    n: usize,
    positions: &[usize],
) -> Result<EmpiricalDistribution<BlockSpace>> {
    if let Some(&bad) = positions.iter().find(|&&i| i + n > name.len()) {
        return Err(Error::PositionOutOfRange { pos: bad, len: name.len() });
    }
    EmpiricalDistribution::from_points(
        BlockSpace::new(n, group.clone()),
        positions.iter().map(|&i| name[i..i + n].to_vec()),
    )
}

/// Right translation of every group coordinate: (p, g) ↦ (p, g h).
pub fn translate_block(block: &[Symbol], h: usize, group: &FiniteGroup) -> NameBlock {
    block
        .iter()
        .map(|&(p, g)| (p, group.mul(g as usize, h) as u32))
        .collect()
}

/// The n-name of `start`: coordinates (P(x_i), α(x_i) g_i) along the orbit
/// (x_i, g_i) = S^i(start). `None` when S^{n-1}(start) is undefined.
pub fn name_at<D: SkewDynamics>(
    dynamics: &D,
    labels: &[u32],
    alpha: Option<&TwistFunction>,
    start: Point,
    n: usize,
) -> Option<NameBlock> {
    let group = dynamics.group();
    let mut out = Vec::with_capacity(n);
    let mut p = start;
    for i in 0..n {
        let a = alpha.map_or(group.identity(), |a| a.get(p.0));
        out.push((labels[p.0], group.mul(a, p.1) as u32));
        if i + 1 < n {
            p = dynamics.apply(p)?;
        }
    }
    Some(out)
}

/// Names at (x, id) for every base point x, `None` where undefined. The name
/// at (x, g) is the right translate by g of the name at (x, id).
pub fn base_names<D: SkewDynamics>(
    dynamics: &D,
    labels: &[u32],
    alpha: Option<&TwistFunction>,
    n: usize,
) -> Vec<Option<NameBlock>> {
    let e = dynamics.group().identity();
    (0..dynamics.base_size())
        .map(|x| name_at(dynamics, labels, alpha, (x, e), n))
        .collect()
}

/// The n-name distribution over all (x, g) whose n-name is defined, with
/// uniform weight (the product of the base measure and Haar measure).
pub fn name_distribution<D: SkewDynamics>(
    dynamics: &D,
    labels: &[u32],
    alpha: Option<&TwistFunction>,
    n: usize,
    group: &Arc<FiniteGroup>,
) -> Result<EmpiricalDistribution<BlockSpace>> {
    let names = base_names(dynamics, labels, alpha, n);
    distribution_of_base_names(&names, n, group)
}

/// Distribution of a collection of base names, each spread over all fibres.
pub fn distribution_of_base_names(
    names: &[Option<NameBlock>],
    n: usize,
    group: &Arc<FiniteGroup>,
) -> Result<EmpiricalDistribution<BlockSpace>> {
    let pts = names
        .iter()
        .flatten()
        .flat_map(|b| (0..group.order()).map(move |h| translate_block(b, h, group)));
    let mut pts = pts.peekable();
    if pts.peek().is_none() {
        return Err(Error::Infeasible(format!("no point has a defined {n}-name")));
    }
    EmpiricalDistribution::from_points(BlockSpace::new(n, group.clone()), pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_systems::{GExtensionSystem, PartialSpeedup};
    use crate::name_distributions::kantorovich;

    fn sym(s: &str) -> Vec<Symbol> {
        s.bytes().map(|c| ((c - b'a') as u32, 0)).collect()
    }

    #[test]
    fn sliding_and_disjoint_blocks() {
        let g = Arc::new(FiniteGroup::trivial());
        let d = block_distribution(&g, &sym("aabb"), 2, &[0, 1, 2]).unwrap();
        assert_eq!(d.len(), 3);
        for (_, w) in d.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        let d = block_distribution(&g, &sym("abab"), 2, &[0, 2]).unwrap();
        assert_eq!(d.atoms(), &[(sym("ab"), 2)]);
        assert!(block_distribution(&g, &sym("abab"), 2, &[3]).is_err());
        let c = block_distribution(&g, &sym("aaaa"), 3, &[0, 1]).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn names_follow_the_skew_orbit() {
        let g = Arc::new(FiniteGroup::cyclic(2));
        let sys = GExtensionSystem::new(vec![0, 1, 0, 1], g.clone(), vec![1, 0, 0, 0]).unwrap();
        let name = name_at(&sys, sys.labels(), None, (3, 1), 3).unwrap();
        assert_eq!(name, vec![(1, 1), (0, 1), (1, 0)]);
        let mut k = vec![1; 4];
        k[3] = 0;
        let sp = PartialSpeedup::new(Arc::new(sys.clone()), k, Some(1)).unwrap();
        assert!(name_at(&sp, sys.labels(), None, (2, 0), 3).is_none());
        assert!(name_at(&sp, sys.labels(), None, (1, 0), 3).is_some());
    }

    #[test]
    fn fibre_translation_is_consistent() {
        let g = Arc::new(FiniteGroup::cyclic(3));
        let sys = GExtensionSystem::new(vec![0, 1, 1, 0, 1], g.clone(), vec![1, 2, 0, 1, 1]).unwrap();
        for x in 0..5 {
            let base = name_at(&sys, sys.labels(), None, (x, 0), 4).unwrap();
            for h in 0..3 {
                let direct = name_at(&sys, sys.labels(), None, (x, h), 4).unwrap();
                assert_eq!(direct, translate_block(&base, h, &g));
            }
        }
        // the full distribution of a system is invariant under twisting by a constant
        let d = name_distribution(&sys, sys.labels(), None, 3, &g).unwrap();
        let a = TwistFunction::new(vec![2; 5], &g).unwrap();
        let tw = sys.twist(&a).unwrap();
        let e = name_distribution(&tw, tw.labels(), None, 3, &g).unwrap();
        assert_eq!(kantorovich(&d, &e).unwrap(), 0.0);
    }
}
