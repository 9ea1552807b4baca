use serde::Serialize;

use crate::error::{Error, Result};

/// A finite group given by its multiplication table, with a two-sided
/// invariant metric bounded by 1. Elements are indices `0..order`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteGroup {
    order: usize,
    identity: usize,
    mul: Vec<usize>,
    inv: Vec<usize>,
    metric: Vec<f64>,
    cyclic: bool,
}

impl FiniteGroup {
    /// Z/m with the normalised circle metric min(|a-b|, m-|a-b|) / floor(m/2).
    pub fn cyclic(m: usize) -> Self {
        assert!(m >= 1, "cyclic group needs order >= 1");
        let half = (m / 2).max(1) as f64;
        let mut mul = vec![0; m * m];
        let mut metric = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                mul[a * m + b] = (a + b) % m;
                let d = a.abs_diff(b);
                metric[a * m + b] = (d.min(m - d) as f64 / half).min(1.0);
            }
        }
        let inv = (0..m).map(|a| (m - a) % m).collect();
        FiniteGroup {
            order: m,
            identity: 0,
            mul,
            inv,
            metric,
            cyclic: true,
        }
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// Builds a group from explicit tables and checks the group axioms and
    /// the metric (symmetry, triangle inequality, two-sided invariance, ρ ≤ 1).
    pub fn from_tables(mul: Vec<Vec<usize>>, metric: Vec<Vec<f64>>) -> Result<Self> {
        let m = mul.len();
        if m == 0 {
            return Err(Error::InvalidGroup("empty multiplication table".into()));
        }
        if metric.len() != m || mul.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidGroup("tables must be square of equal size".into()));
        }
        if metric.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidGroup("metric table must be square".into()));
        }
        let flat: Vec<usize> = mul.iter().flatten().copied().collect();
        if flat.iter().any(|&v| v >= m) {
            return Err(Error::InvalidGroup("product out of range".into()));
        }
        let at = |a: usize, b: usize| flat[a * m + b];

        let identity = (0..m)
            .find(|&e| (0..m).all(|a| at(e, a) == a && at(a, e) == a))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    if at(at(a, b), c) != at(a, at(b, c)) {
                        return Err(Error::InvalidGroup(format!(
                            "not associative at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        let mut inv = vec![0; m];
        for a in 0..m {
            inv[a] = (0..m)
                .find(|&b| at(a, b) == identity && at(b, a) == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {a} has no inverse")))?;
        }

        let dist: Vec<f64> = metric.iter().flatten().copied().collect();
        let d = |a: usize, b: usize| dist[a * m + b];
        for a in 0..m {
            for b in 0..m {
                let v = d(a, b);
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidGroup(format!("metric value {v} outside [0, 1]")));
                }
                if (v == 0.0) != (a == b) {
                    return Err(Error::InvalidGroup(format!("metric not definite at ({a}, {b})")));
                }
                if v != d(b, a) {
                    return Err(Error::InvalidGroup(format!("metric not symmetric at ({a}, {b})")));
                }
                for c in 0..m {
                    if d(a, c) > v + d(b, c) + 1e-12 {
                        return Err(Error::InvalidGroup(format!(
                            "triangle inequality fails at ({a}, {b}, {c})"
                        )));
                    }
                    if (d(at(c, a), at(c, b)) - v).abs() > 1e-12
                        || (d(at(a, c), at(b, c)) - v).abs() > 1e-12
                    {
                        return Err(Error::InvalidGroup(format!(
                            "metric not two-sided invariant at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }

        Ok(FiniteGroup {
            order: m,
            identity,
            mul: flat,
            inv,
            metric: dist,
            cyclic: false,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.metric[a * self.order + b]
    }

    /// Uniform Haar weight of a single element.
    pub fn haar(&self) -> f64 {
        1.0 / self.order as f64
    }

    /// `Some(m)` if this group was built as Z/m.
    pub fn cyclic_order(&self) -> Option<usize> {
        self.cyclic.then_some(self.order)
    }

    pub fn mul_table(&self) -> Vec<Vec<usize>> {
        self.mul.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn metric_table(&self) -> Vec<Vec<f64>> {
        self.metric.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    /// Order of the cyclic subgroup generated by `a`.
    pub fn element_order(&self, a: usize) -> usize {
        let mut g = a;
        let mut k = 1;
        while g != self.identity {
            g = self.mul(a, g);
            k += 1;
        }
        k
    }

    /// Elements of the cyclic subgroup generated by `a`, as a membership mask.
    pub fn generated_by(&self, a: usize) -> Vec<bool> {
        let mut mask = vec![false; self.order];
        let mut g = self.identity;
        loop {
            if mask[g] {
                break;
            }
            mask[g] = true;
            g = self.mul(a, g);
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn klein() -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
        let mul = (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect();
        let metric = (0..4)
            .map(|a| (0..4).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
            .collect();
        (mul, metric)
    }

    #[test]
    fn cyclic_metric_values() {
        let g = FiniteGroup::cyclic(8);
        assert_eq!(g.dist(0, 4), 1.0);
        assert_eq!(g.dist(1, 7), 0.5);
        assert_eq!(g.dist(3, 3), 0.0);
        let odd = FiniteGroup::cyclic(5);
        assert_eq!(odd.dist(0, 2), 1.0);
        assert_eq!(odd.dist(0, 3), 1.0);
        assert_eq!(odd.dist(0, 1), 0.5);
        assert_eq!(FiniteGroup::trivial().dist(0, 0), 0.0);
    }

    #[test]
    fn klein_tables_accepted() {
        let (mul, metric) = klein();
        let g = FiniteGroup::from_tables(mul, metric).unwrap();
        assert_eq!(g.identity(), 0);
        assert_eq!(g.inv(3), 3);
        assert_eq!(g.element_order(2), 2);
        assert_eq!(g.cyclic_order(), None);
    }

    #[test]
    fn non_associative_table_rejected() {
        // a Latin square with identity 0 that is not a group
        let mul = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let metric = (0..5)
            .map(|a| (0..5).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
            .collect();
        assert!(matches!(
            FiniteGroup::from_tables(mul, metric),
            Err(Error::InvalidGroup(_))
        ));
    }

    #[test]
    fn non_invariant_metric_rejected() {
        let g = FiniteGroup::cyclic(4);
        let mut metric = g.metric_table();
        // 0-1 made shorter than 1-2: breaks translation invariance
        metric[0][1] = 0.25;
        metric[1][0] = 0.25;
        assert!(FiniteGroup::from_tables(g.mul_table(), metric).is_err());
    }

    #[test]
    fn generated_subgroup() {
        let g = FiniteGroup::cyclic(6);
        let mask = g.generated_by(2);
        assert_eq!(mask, vec![true, false, true, false, true, false]);
        assert_eq!(g.element_order(1), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cyclic_axioms(m in 1usize..24) {
            let g = FiniteGroup::cyclic(m);
            let rebuilt = FiniteGroup::from_tables(g.mul_table(), g.metric_table());
            prop_assert!(rebuilt.is_ok());
            for a in 0..m {
                prop_assert_eq!(g.mul(a, g.inv(a)), g.identity());
                for b in 0..m {
                    prop_assert!(g.dist(a, b) <= 1.0);
                }
            }
        }
    }
}
