use std::sync::Arc;

use crate::core_systems::{GExtensionSystem, PartialSpeedup, RegularityCertificate};
use crate::error::{Error, Result};
use crate::improvement::{check_regular, Refusal};

/// An (n, δ)-regular speedup of `source`: one column with k ≡ 1 of height
/// the largest multiple of n that fits, over the base point whose ladder
/// distribution is closest to the full one (lowest point on ties). It differs from the source map only off
/// the column, which must have mass below ε/2.
pub fn bootstrap_regular(
    source: Arc<GExtensionSystem>,
    pbar: &[u32],
    n: usize,
    delta: f64,
    epsilon: f64,
) -> Result<(PartialSpeedup, RegularityCertificate)> {
    let size = source.size();
    if !source.check_extension_ergodic().ergodic {
        return Err(Error::Infeasible("source extension is not ergodic".into()));
    }
    if n == 0 || n > size {
        return Err(Error::Infeasible(format!("block length {n} for {size} points")));
    }
    let height = size / n * n;
    let change = (size - height + 1) as f64 / size as f64;
    if change >= epsilon / 2.0 {
        return Err(Error::Infeasible(format!(
            "trimming to height {height} changes mass {change}, not below epsilon/2 = {}",
            epsilon / 2.0
        )));
    }
    let mut last: Option<Refusal> = None;
    let mut best: Option<(PartialSpeedup, RegularityCertificate)> = None;
    for b in 0..size {
        let mut k = vec![0usize; size];
        for i in 0..height - 1 {
            k[(b + i) % size] = 1;
        }
        let s = PartialSpeedup::new(source.clone(), k, Some(1))?;
        match check_regular(&s, pbar, n, delta) {
            Ok(cert) => {
                let better = best.as_ref().is_none_or(|(_, c)| cert.checks[3].measured < c.checks[3].measured);
                if better {
                    let exact = cert.checks[3].measured == 0.0;
                    best = Some((s, cert));
                    if exact {
                        break;
                    }
                }
            }
            Err(r) => last = Some(r),
        }
    }
    if let Some(found) = best {
        return Ok(found);
    }
    Err(Error::Infeasible(format!(
        "no base point gives an ({n}, {delta})-regular column: {}",
        last.map_or_else(String::new, |r| r.to_string())
    )))
}
