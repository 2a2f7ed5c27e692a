//! Class weights for the weighted loss: w_c = n_min / n_c.

use crate::error::{Error, Result};

/// Weight per class from its training occurrence count; the least
/// frequent class gets exactly 1 and all weights lie in (0, 1].
pub fn weighted_loss_weights(counts: &[u64]) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::Contract("no class counts".into()));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Contract(format!(
            "class {c} has zero occurrences; weights undefined"
        )));
    }
    let n_min = *counts.iter().min().unwrap();
    Ok(counts.iter().map(|&n| n_min as f64 / n as f64).collect())
}
