use serde::Serialize;

use crate::core_systems::{PartialSpeedup, RegularityCertificate};
use crate::error::{Error, Result};

/// The n-ladder of a regular speedup: its tower cut into consecutive
/// n-blocks, each listed as base points from bottom to top.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ladder {
    pub n: usize,
    pub height: usize,
    pub base_size: usize,
    pub blocks: Vec<Vec<usize>>,
    /// Exponents of the owner speedup, used to decide breakage.
    owner: Vec<usize>,
}

impl Ladder {
    /// Initial points of all ladder blocks.
    pub fn starts(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b[0]).collect()
    }

    pub fn is_broken(&self, block: &[usize], other: &PartialSpeedup) -> bool {
        block[..block.len() - 1]
            .iter()
            .any(|&z| other.exponent(z) != self.owner[z])
    }
}

/// Ladder of `speedup` at block length n from the tower recorded in `cert`.
pub fn ladder(speedup: &PartialSpeedup, cert: &RegularityCertificate, n: usize) -> Result<Ladder> {
    let height = cert.height;
    if n == 0 || !height.is_multiple_of(n) {
        return Err(Error::NotMultiple { height, n });
    }
    let mut blocks = Vec::with_capacity(cert.tower_base.len() * (height / n));
    for &b in &cert.tower_base {
        let mut x = b;
        let mut block = Vec::with_capacity(n);
        for i in 0..height {
            block.push(x);
            if block.len() == n {
                blocks.push(std::mem::replace(&mut block, Vec::with_capacity(n)));
            }
            if i + 1 < height {
                x = speedup
                    .base_map(x)
                    .ok_or_else(|| Error::Infeasible(format!("tower over {b} ends at level {i}")))?;
            }
        }
    }
    Ok(Ladder {
        n,
        height,
        base_size: speedup.exponents().len(),
        blocks,
        owner: speedup.exponents().to_vec(),
    })
}

/// Mass of the points whose ladder block is broken by `other`: some
/// i ∈ [0, n−2] with the two maps disagreeing at the i-th block point.
/// The maps act fibrewise, so base mass equals product mass.
pub fn broken_fraction(ladder: &Ladder, other: &PartialSpeedup) -> f64 {
    let broken: usize = ladder
        .blocks
        .iter()
        .filter(|b| ladder.is_broken(b, other))
        .map(|b| b.len())
        .sum();
    broken as f64 / ladder.base_size as f64
}
