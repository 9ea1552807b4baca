use serde::Serialize;

use crate::error::{Error, Result};

/// Pairwise disjoint samples of a ground set Z = {0, .., |Z|-1}, each with
/// exactly the same count vector over the atoms of a partition Q.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFamily {
    pub ground_size: usize,
    pub sample_size: usize,
    /// Template count per Q-atom, shared by every sample.
    pub template: Vec<usize>,
    /// Each sample lists its elements atom by atom, ascending within an atom.
    pub samples: Vec<Vec<usize>>,
    pub leftover: Vec<usize>,
    /// Whether |Z| > K′ / (ε δ′ / 2) held, the size bound under which the
    /// leftover is guaranteed to be at most ε.
    pub size_bound_met: bool,
}

impl SampleFamily {
    pub fn leftover_fraction(&self) -> f64 {
        if self.ground_size == 0 {
            0.0
        } else {
            self.leftover.len() as f64 / self.ground_size as f64
        }
    }
}

/// Greedy exhaustion: repeatedly draw, for every atom q, the `template[q]`
/// lowest-indexed unused points of q, until some atom runs short.
///
/// `atom_of[z]` is the Q-atom of z. Errors when K′ = Σ template exceeds |Z|
/// or when the first sample already cannot be realised.
pub fn exhaust_samples(atom_of: &[usize], template: &[usize], epsilon: f64) -> Result<SampleFamily> {
    let z = atom_of.len();
    let k_prime: usize = template.iter().sum();
    if k_prime == 0 {
        return Err(Error::PreconditionViolated("sample size must be positive".into()));
    }
    if k_prime > z {
        return Err(Error::PreconditionViolated(format!(
            "sample size {k_prime} exceeds ground set size {z}"
        )));
    }
    if let Some(&bad) = atom_of.iter().find(|&&q| q >= template.len()) {
        return Err(Error::PreconditionViolated(format!("atom {bad} has no template entry")));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); template.len()];
    for (i, &q) in atom_of.iter().enumerate() {
        members[q].push(i);
    }
    if let Some(q) = (0..template.len()).find(|&q| template[q] > members[q].len()) {
        return Err(Error::InfeasibleTemplate(format!(
            "atom {q} needs {} points but has {}",
            template[q],
            members[q].len()
        )));
    }
    let delta_prime = members
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.len() as f64 / z as f64)
        .fold(1.0f64, f64::min);
    let size_bound_met = z as f64 > k_prime as f64 / (epsilon * delta_prime / 2.0);

    let rounds = (0..template.len())
        .filter(|&q| template[q] > 0)
        .map(|q| members[q].len() / template[q])
        .min()
        .unwrap_or(0);
    let mut samples = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let mut s = Vec::with_capacity(k_prime);
        for q in 0..template.len() {
            let t = template[q];
            s.extend_from_slice(&members[q][r * t..(r + 1) * t]);
        }
        samples.push(s);
    }
    let mut used = vec![false; z];
    for s in &samples {
        for &i in s {
            used[i] = true;
        }
    }
    let leftover = (0..z).filter(|&i| !used[i]).collect();
    Ok(SampleFamily {
        ground_size: z,
        sample_size: k_prime,
        template: template.to_vec(),
        samples,
        leftover,
        size_bound_met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_tiling() {
        let f = exhaust_samples(&[0; 100], &[10], 0.05).unwrap();
        assert_eq!(f.samples.len(), 10);
        assert!(f.leftover.is_empty());
    }

    #[test]
    fn two_atoms() {
        let mut atoms = vec![0; 60];
        atoms.extend(vec![1; 37]);
        let f = exhaust_samples(&atoms, &[6, 4], 0.2).unwrap();
        assert!(f.samples.len() >= 8);
        assert!(f.leftover.len() <= 17);
        assert!(f.leftover_fraction() <= 0.2);
    }

    #[test]
    fn errors() {
        assert!(matches!(exhaust_samples(&[0; 5], &[6], 0.1), Err(Error::PreconditionViolated(_))));
        assert!(matches!(exhaust_samples(&[0, 0, 1], &[1, 2], 0.1), Err(Error::InfeasibleTemplate(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn disjoint_equal_counts(
            atoms in proptest::collection::vec(0usize..3, 1..3000),
            t in proptest::collection::vec(1usize..4, 3),
        ) {
            match exhaust_samples(&atoms, &t, 0.1) {
                Ok(f) => {
                    let mut seen = vec![false; atoms.len()];
                    for s in &f.samples {
                        let mut c = vec![0; 3];
                        for &i in s {
                            prop_assert!(!seen[i]);
                            seen[i] = true;
                            c[atoms[i]] += 1;
                        }
                        prop_assert_eq!(&c, &t);
                    }
                    // maximality: some atom cannot supply another sample
                    let mut left = [0; 3];
                    for &i in &f.leftover {
                        left[atoms[i]] += 1;
                    }
                    prop_assert!((0..3).any(|q| left[q] < t[q]));
                }
                Err(Error::InfeasibleTemplate(_)) | Err(Error::PreconditionViolated(_)) => {}
                Err(e) => prop_assert!(false, "unexpected {:?}", e),
            }
        }
    }
}
