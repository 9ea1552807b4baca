use std::fmt::Debug;
use std::sync::Arc;

use crate::core_systems::FiniteGroup;
use crate::error::{Error, Result};

/// A metric space whose distances are bounded by 1.
pub trait MetricSpace: Clone + Debug {
    type Point: Clone + Ord + Debug;
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;
    /// Whether distributions on `self` and `other` can be compared.
    fn same_space(&self, other: &Self) -> bool;
}

/// Points `0..size` with an explicit distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    size: usize,
    table: Arc<Vec<f64>>,
}

impl FiniteMetricSpace {
    pub fn discrete(size: usize) -> Self {
        let mut t = vec![1.0; size * size];
        for i in 0..size {
            t[i * size + i] = 0.0;
        }
        FiniteMetricSpace { size, table: Arc::new(t) }
    }

    /// The group itself with its invariant metric.
    pub fn of_group(group: &FiniteGroup) -> Self {
        let m = group.order();
        let t = (0..m * m).map(|k| group.dist(k / m, k % m)).collect();
        FiniteMetricSpace { size: m, table: Arc::new(t) }
    }

    pub fn from_table(table: Vec<Vec<f64>>) -> Result<Self> {
        let size = table.len();
        if table.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidSystem("distance table must be square".into()));
        }
        for i in 0..size {
            for j in 0..size {
                let d = table[i][j];
                if !(0.0..=1.0).contains(&d) || (d == 0.0) != (i == j) || d != table[j][i] {
                    return Err(Error::InvalidSystem(format!("not a metric at ({i}, {j})")));
                }
                for k in 0..size {
                    if table[i][k] > d + table[j][k] + 1e-12 {
                        return Err(Error::InvalidSystem(format!(
                            "triangle inequality fails at ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace {
            size,
            table: Arc::new(table.into_iter().flatten().collect()),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

impl MetricSpace for FiniteMetricSpace {
    type Point = usize;
    fn distance(&self, a: &usize, b: &usize) -> f64 {
        self.table[a * self.size + b]
    }
    fn same_space(&self, other: &Self) -> bool {
        self.size == other.size && (Arc::ptr_eq(&self.table, &other.table) || self.table == other.table)
    }
}

/// One coordinate of a name: (label, group element).
pub type Symbol = (u32, u32);

/// A name of length n over P × G.
pub type NameBlock = Vec<Symbol>;

/// (P × G)^n with ρ′ = max over coordinates of
/// d((p, g), (p′, g′)) = 1 if p ≠ p′, else ρ(g, g′).
#[derive(Debug, Clone)]
pub struct BlockSpace {
    n: usize,
    group: Arc<FiniteGroup>,
}

impl BlockSpace {
    pub fn new(n: usize, group: Arc<FiniteGroup>) -> Self {
        BlockSpace { n, group }
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    #[inline]
    pub fn symbol_distance(&self, a: Symbol, b: Symbol) -> f64 {
        if a.0 != b.0 {
            1.0
        } else {
            self.group.dist(a.1 as usize, b.1 as usize)
        }
    }
}

impl MetricSpace for BlockSpace {
    type Point = NameBlock;
    fn distance(&self, a: &NameBlock, b: &NameBlock) -> f64 {
        let mut d: f64 = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            d = d.max(self.symbol_distance(x, y));
            if d >= 1.0 {
                break;
            }
        }
        if a.len() != b.len() {
            1.0
        } else {
            d
        }
    }
    fn same_space(&self, other: &Self) -> bool {
        self.n == other.n && (Arc::ptr_eq(&self.group, &other.group) || *self.group == *other.group)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn block_metric_examples() {
        let s = BlockSpace::new(3, Arc::new(FiniteGroup::cyclic(8)));
        let a = vec![(0, 0), (1, 2), (0, 0)];
        let b = vec![(0, 1), (1, 2), (0, 7)];
        assert_eq!(s.distance(&a, &b), 0.25);
        let c = vec![(0, 0), (0, 2), (0, 0)];
        assert_eq!(s.distance(&a, &c), 1.0);
        assert_eq!(s.distance(&a, &a), 0.0);
    }

    #[test]
    fn table_validation() {
        assert!(FiniteMetricSpace::from_table(vec![vec![0.0, 0.5], vec![0.5, 0.0]]).is_ok());
        assert!(FiniteMetricSpace::from_table(vec![vec![0.0, 0.5], vec![0.4, 0.0]]).is_err());
        let bad = vec![
            vec![0.0, 0.1, 0.9],
            vec![0.1, 0.0, 0.1],
            vec![0.9, 0.1, 0.0],
        ];
        assert!(FiniteMetricSpace::from_table(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn block_metric_axioms(
            m in 1usize..9,
            raw in proptest::collection::vec((0u32..2, 0u32..64), 12),
        ) {
            let s = BlockSpace::new(4, Arc::new(FiniteGroup::cyclic(m)));
            let blocks: Vec<NameBlock> = raw
                .chunks(4)
                .map(|c| c.iter().map(|&(p, g)| (p, g % m as u32)).collect())
                .collect();
            for a in &blocks {
                for b in &blocks {
                    let d = s.distance(a, b);
                    prop_assert!((0.0..=1.0).contains(&d));
                    prop_assert_eq!(d, s.distance(b, a));
                    prop_assert_eq!(d == 0.0, a == b);
                    for c in &blocks {
                        prop_assert!(s.distance(a, c) <= d + s.distance(b, c) + 1e-12);
                    }
                }
            }
        }
    }
}
