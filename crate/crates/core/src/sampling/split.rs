//! Spatial dataset split into vertical train/val/test strips.

use super::super::polsar::PolsarField;
use crate::error::{Error, Result};

/// Splits a field into vertical strips along the width axis, columns
/// [0, floor(f0 W)), [floor(f0 W), floor((f0+f1) W)), [.., W).
///
/// Every class present in the field must occur in each strip, otherwise
/// the split is infeasible and the offending class is reported.
pub fn spatial_split(
    field: &PolsarField,
    fractions: (f64, f64, f64),
) -> Result<(PolsarField, PolsarField, PolsarField)> {
    let (f0, f1, f2) = fractions;
    if f0 <= 0.0 || f1 <= 0.0 || f2 <= 0.0 {
        return Err(Error::Contract(format!(
            "split fractions must be positive, got ({f0}, {f1}, {f2})"
        )));
    }
    if (f0 + f1 + f2 - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "split fractions must sum to 1, got {}",
            f0 + f1 + f2
        )));
    }
    let w = field.width();
    let (b0, b1) = strip_bounds(w, fractions);
    if b0 == 0 || b1 <= b0 || b1 >= w {
        return Err(Error::Contract(format!(
            "strips [0,{b0}), [{b0},{b1}), [{b1},{w}) would be empty"
        )));
    }
    let train = field.column_slice(0, b0)?;
    let val = field.column_slice(b0, b1)?;
    let test = field.column_slice(b1, w)?;

    let present: Vec<bool> = {
        let counts = field.class_counts();
        counts.iter().map(|&n| n > 0).collect()
    };
    for (strip, name) in [(&train, "train"), (&val, "val"), (&test, "test")] {
        let counts = strip.class_counts();
        for (c, &must) in present.iter().enumerate() {
            if must && counts[c] == 0 {
                return Err(Error::SplitInfeasible {
                    class: field.class_names()[c].clone(),
                    strip: name,
                });
            }
        }
    }
    Ok((train, val, test))
}

/// Column boundaries of the three strips; the small bias guards against
/// representation error in products like 0.7 * W.
pub fn strip_bounds(width: usize, fractions: (f64, f64, f64)) -> (usize, usize) {
    let b0 = ((fractions.0 * width as f64) + 1e-9).floor() as usize;
    let b1 = (((fractions.0 + fractions.1) * width as f64) + 1e-9).floor() as usize;
    (b0, b1)
}
