use std::sync::Arc;

use serde::Serialize;

use super::group::FiniteGroup;
use crate::error::{Error, Result};

/// A point of the skew product: base point and group coordinate.
pub type Point = (usize, usize);

/// Skew-product extension of the cycle `x -> x + 1 mod N`:
/// `S(x, g) = (x + 1, σ(x) g)`, with a labelling `P` of the base.
#[derive(Debug, Clone, PartialEq)]
pub struct GExtensionSystem {
    labels: Vec<u32>,
    group: Arc<FiniteGroup>,
    sigma: Vec<usize>,
}

/// Outcome of the ergodicity check for a finite G-extension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionErgodicity {
    pub ergodic: bool,
    /// Length of the skew orbit through `(0, id)`.
    pub cycle_length: usize,
    /// A point not on that orbit, present exactly when the system splits.
    pub splitting_point: Option<Point>,
}

impl GExtensionSystem {
    pub fn new(labels: Vec<u32>, group: Arc<FiniteGroup>, sigma: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSystem("base cycle must be nonempty".into()));
        }
        if sigma.len() != labels.len() {
            return Err(Error::InvalidSystem(format!(
                "sigma has length {} but the base has {} points",
                sigma.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = sigma.iter().find(|&&s| s >= group.order()) {
            return Err(Error::InvalidSystem(format!(
                "sigma value {bad} is not an element of a group of order {}",
                group.order()
            )));
        }
        Ok(GExtensionSystem { labels, group, sigma })
    }

    /// The untwisted product system: σ ≡ id.
    pub fn product(labels: Vec<u32>, group: Arc<FiniteGroup>) -> Self {
        let sigma = vec![group.identity(); labels.len()];
        GExtensionSystem { labels, group, sigma }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> u32 {
        self.labels[x]
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn alphabet_size(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Same dynamics, different partition of the base.
    pub fn with_labels(&self, labels: Vec<u32>) -> Result<Self> {
        Self::new(labels, self.group.clone(), self.sigma.clone())
    }

    #[inline]
    pub fn step(&self, (x, g): Point) -> Point {
        let n = self.size();
        ((x + 1) % n, self.group.mul(self.sigma[x], g))
    }

    pub fn skew_orbit(&self, start: Point, len: usize) -> Result<Vec<Point>> {
        self.check_point(start)?;
        let mut out = Vec::with_capacity(len);
        let mut p = start;
        for _ in 0..len {
            out.push(p);
            p = self.step(p);
        }
        Ok(out)
    }

    /// σ^(k)(x) = σ(T^{k-1}x) ··· σ(x); the identity for k = 0.
    pub fn cocycle_product(&self, x: usize, k: usize) -> usize {
        let n = self.size();
        let mut g = self.group.identity();
        let mut y = x % n;
        for _ in 0..k {
            g = self.group.mul(self.sigma[y], g);
            y = (y + 1) % n;
        }
        g
    }

    /// σ^α(x) = α(Tx) σ(x) α(x)^{-1}.
    pub fn twist(&self, alpha: &super::TwistFunction) -> Result<Self> {
        let n = self.size();
        if alpha.len() != n {
            return Err(Error::InvalidSystem(format!(
                "twist has length {} for a base of {n} points",
                alpha.len()
            )));
        }
        let g = &self.group;
        let sigma = (0..n)
            .map(|x| {
                let a_next = alpha.get((x + 1) % n);
                g.mul(g.mul(a_next, self.sigma[x]), g.inv(alpha.get(x)))
            })
            .collect();
        Self::new(self.labels.clone(), self.group.clone(), sigma)
    }

    /// The orbit of (x, g) returns to the fibre over x after N steps with
    /// w = σ^(N)(x) applied, so the extension is ergodic exactly when w
    /// generates G (which forces G to be cyclic).
    pub fn check_extension_ergodic(&self) -> ExtensionErgodicity {
        let n = self.size();
        let w = self.cocycle_product(0, n);
        let ord = self.group.element_order(w);
        let reach = self.group.generated_by(w);
        let splitting_point = reach.iter().position(|&r| !r).map(|g| (0, g));
        ExtensionErgodicity {
            ergodic: ord == self.group.order(),
            cycle_length: n * ord,
            splitting_point,
        }
    }

    pub fn check_point(&self, (x, g): Point) -> Result<()> {
        if x >= self.size() {
            return Err(Error::PositionOutOfRange { pos: x, len: self.size() });
        }
        if g >= self.group.order() {
            return Err(Error::PositionOutOfRange { pos: g, len: self.group.order() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_systems::TwistFunction;
    use proptest::prelude::*;

    fn z(m: usize) -> Arc<FiniteGroup> {
        Arc::new(FiniteGroup::cyclic(m))
    }

    #[test]
    fn orbit_of_alternating_cocycle() {
        let sys = GExtensionSystem::new(vec![0; 6], z(2), vec![0, 1, 0, 1, 0, 1]).unwrap();
        let orbit = sys.skew_orbit((0, 0), 4).unwrap();
        assert_eq!(orbit, vec![(0, 0), (1, 0), (2, 1), (3, 1)]);
        assert_eq!(sys.cocycle_product(0, 2), 1);
        assert_eq!(sys.cocycle_product(0, 6), 1);
    }

    #[test]
    fn ergodicity_by_total_cocycle() {
        let odd = GExtensionSystem::new(vec![0; 6], z(2), vec![0, 1, 0, 1, 0, 1]).unwrap();
        let e = odd.check_extension_ergodic();
        assert!(e.ergodic);
        assert_eq!(e.cycle_length, 12);
        assert_eq!(e.splitting_point, None);

        let even = GExtensionSystem::new(vec![0; 4], z(2), vec![1, 1, 0, 0]).unwrap();
        let e = even.check_extension_ergodic();
        assert!(!e.ergodic);
        assert_eq!(e.cycle_length, 4);
        assert_eq!(e.splitting_point, Some((0, 1)));
        // brute force: the orbit of (0,0) never visits (0,1)
        let orbit = even.skew_orbit((0, 0), 8).unwrap();
        assert!(!orbit.contains(&(0, 1)));
    }

    #[test]
    fn invalid_sigma_rejected() {
        assert!(GExtensionSystem::new(vec![0; 3], z(2), vec![0, 2, 0]).is_err());
        assert!(GExtensionSystem::new(vec![0; 3], z(2), vec![0, 1]).is_err());
        let sys = GExtensionSystem::product(vec![0; 3], z(2));
        assert!(sys.skew_orbit((3, 0), 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn twist_is_cohomologous(
            m in 1usize..7,
            raw in proptest::collection::vec((0usize..100, 0usize..100), 1..20),
        ) {
            let g = z(m);
            let sigma: Vec<usize> = raw.iter().map(|r| r.0 % m).collect();
            let alpha: Vec<usize> = raw.iter().map(|r| r.1 % m).collect();
            let n = sigma.len();
            let sys = GExtensionSystem::new(vec![0; n], g.clone(), sigma).unwrap();
            let a = TwistFunction::new(alpha.clone(), &g).unwrap();
            let tw = sys.twist(&a).unwrap();
            // σ^α(k)(x) = α(T^k x) σ^(k)(x) α(x)^{-1}
            for x in 0..n {
                for k in 0..=n {
                    let lhs = tw.cocycle_product(x, k);
                    let rhs = g.mul(g.mul(alpha[(x + k) % n], sys.cocycle_product(x, k)), g.inv(alpha[x]));
                    prop_assert_eq!(lhs, rhs);
                }
            }
            // ergodicity is a cohomology invariant
            prop_assert_eq!(tw.check_extension_ergodic().ergodic, sys.check_extension_ergodic().ergodic);
        }

        #[test]
        fn cocycle_is_multiplicative(
            m in 1usize..7,
            raw in proptest::collection::vec(0usize..100, 1..20),
            j in 0usize..30, k in 0usize..30,
        ) {
            let g = z(m);
            let n = raw.len();
            let sys = GExtensionSystem::new(vec![0; n], g.clone(), raw.iter().map(|r| r % m).collect()).unwrap();
            let x = j % n;
            let lhs = sys.cocycle_product(x, j + k);
            let rhs = g.mul(sys.cocycle_product((x + j) % n, k), sys.cocycle_product(x, j));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
