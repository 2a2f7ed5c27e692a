//! Pixel-rate sampling and per-class balanced sampling.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polsar::{PolsarField, UNLABELED};

/// Uniformly samples disjoint train/val pixel index sets from the labeled
/// pixels at the given rates (counts rounded down); everything else is
/// the test set.
pub fn sample_pixels(
    field: &PolsarField,
    rates: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let (r_train, r_val) = rates;
    if r_train < 0.0 || r_val < 0.0 || r_train + r_val >= 1.0 {
        return Err(Error::Contract(format!(
            "sampling rates ({r_train}, {r_val}) must be nonnegative and sum below 1"
        )));
    }
    let mut labeled: Vec<usize> = field
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != UNLABELED)
        .map(|(i, _)| i)
        .collect();
    labeled.shuffle(rng);
    let n = labeled.len();
    let n_train = (r_train * n as f64).floor() as usize;
    let n_val = (r_val * n as f64).floor() as usize;
    let mut train = labeled[..n_train].to_vec();
    let mut val = labeled[n_train..n_train + n_val].to_vec();
    let mut test = labeled[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok((train, val, test))
}

/// Samples exactly `m` labeled pixels of every class; returns one index
/// set per class. Errors when some class has fewer than `m` pixels.
pub fn balanced_pixel_sampling(
    field: &PolsarField,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    let k = field.classes();
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in field.labels().iter().enumerate() {
        if l != UNLABELED {
            per_class[l as usize].push(i);
        }
    }
    if let Some((c, n)) = per_class
        .iter()
        .enumerate()
        .map(|(c, v)| (c, v.len()))
        .min_by_key(|&(_, n)| n)
    {
        if m > n {
            return Err(Error::Contract(format!(
                "cannot draw {m} pixels per class: class '{}' has only {n}",
                field.class_names()[c]
            )));
        }
    }
    let mut out = Vec::with_capacity(k);
    for mut pool in per_class {
        pool.shuffle(rng);
        let mut take = pool[..m].to_vec();
        take.sort_unstable();
        out.push(take);
    }
    Ok(out)
}
