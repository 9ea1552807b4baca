use serde::Serialize;

use crate::error::{Error, Result};

/// w windows of length M in [M′]: W̃_s(j) = u(s) + j.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSystem {
    pub m: usize,
    pub m_prime: usize,
    pub offsets: Vec<usize>,
}

impl WindowSystem {
    pub fn new(m: usize, m_prime: usize, offsets: Vec<usize>) -> Result<Self> {
        if m == 0 || m > m_prime {
            return Err(Error::Infeasible(format!("window length {m} in a segment of {m_prime}")));
        }
        for (s, &u) in offsets.iter().enumerate() {
            if u > m_prime - m {
                return Err(Error::Infeasible(format!("window {s} starts at {u}, past {}", m_prime - m)));
            }
            if s > 0 && u < offsets[s - 1] + m {
                return Err(Error::Infeasible(format!("windows {} and {s} overlap", s - 1)));
            }
        }
        Ok(WindowSystem { m, m_prime, offsets })
    }

    /// ⌊M′/M⌋ abutting windows starting at 0.
    pub fn tiled(m: usize, m_prime: usize) -> Result<Self> {
        let w = if m == 0 { 0 } else { m_prime / m };
        Self::new(m, m_prime, (0..w).map(|s| s * m).collect())
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn position(&self, s: usize, j: usize) -> usize {
        self.offsets[s] + j
    }
}

/// Stage j of pass l: heights t(i) in windows jp + l + i and the resulting
/// positions g(i). Undefined entries stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub pass: usize,
    pub index: usize,
    pub heights: Vec<Option<usize>>,
    pub positions: Vec<Option<usize>>,
}

impl Stage {
    pub fn window(&self, p: usize, i: usize) -> usize {
        self.index * p + self.pass + i
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cycle {
    pub p: usize,
    pub stages: Vec<Stage>,
}

/// Number of complete stages of pass l: ⌊(w − l)/p⌋.
pub fn stages_in_pass(w: usize, p: usize, l: usize) -> usize {
    if l > w {
        0
    } else {
        (w - l) / p
    }
}

/// For every window s, the number of triples (l, j, i) with jp + l + i = s.
pub fn window_multiplicity(w: usize, p: usize) -> Vec<usize> {
    let mut count = vec![0; w];
    for l in 0..p {
        for j in 0..stages_in_pass(w, p, l) {
            for i in 0..p {
                count[j * p + l + i] += 1;
            }
        }
    }
    count
}

/// One cycle per sample index t. `samples[s][t][i]` is the height in window
/// s of the point that sample t assigns to block i (`None` leaves it for
/// later). Stage (l, j) takes block i from window jp + l + i.
pub fn build_cycles(windows: &WindowSystem, samples: &[Vec<Vec<Option<usize>>>], p: usize) -> Result<Vec<Cycle>> {
    let w = windows.len();
    if p == 0 || p > w {
        return Err(Error::TooShort { windows: w, p });
    }
    if samples.len() != w {
        return Err(Error::PreconditionViolated(format!("{} sample lists for {w} windows", samples.len())));
    }
    let t_count = samples.iter().map(Vec::len).min().unwrap_or(0);
    let mut used = vec![false; windows.m_prime];
    let mut cycles = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let mut stages = Vec::new();
        for l in 0..p {
            for j in 0..stages_in_pass(w, p, l) {
                let mut heights = Vec::with_capacity(p);
                let mut positions = Vec::with_capacity(p);
                for i in 0..p {
                    let s = j * p + l + i;
                    let h = samples[s][t].get(i).copied().flatten();
                    let pos = match h {
                        Some(h) if h >= windows.m => {
                            return Err(Error::PreconditionViolated(format!(
                                "height {h} outside window {s} of length {}",
                                windows.m
                            )))
                        }
                        Some(h) => {
                            let x = windows.position(s, h);
                            if used[x] {
                                return Err(Error::Collision { window: s, position: x });
                            }
                            used[x] = true;
                            Some(x)
                        }
                        None => None,
                    };
                    heights.push(h);
                    positions.push(pos);
                }
                stages.push(Stage { pass: l, index: j, heights, positions });
            }
        }
        cycles.push(Cycle { p, stages });
    }
    Ok(cycles)
}
