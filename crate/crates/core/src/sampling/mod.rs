//! Patch extraction, spatial splitting, pixel-rate sampling and the two
//! class-balancing methods.

mod balance;
pub mod fixtures;
mod pixels;
mod split;
mod weights;
mod window;

pub use balance::{
    balance_patches, balance_total_pixels_of_patch, remove_exceeding_one_class_images,
};
pub use pixels::{balanced_pixel_sampling, sample_pixels};
pub use split::{spatial_split, strip_bounds};
pub use weights::weighted_loss_weights;
pub use window::{extract_centered_patches, sliding_window};

use crate::error::{Error, Result};
use crate::grad::Value;
use crate::polsar::UNLABELED;

/// An encoded scene: per-pixel channel tensor plus the aligned labels.
#[derive(Debug, Clone)]
pub struct ChannelField {
    /// [H, W, C] channels (complex or real).
    pub data: Value,
    /// H*W labels, 255 = unlabeled.
    pub labels: Vec<u8>,
    pub classes: usize,
}

impl ChannelField {
    pub fn new(data: Value, labels: Vec<u8>, classes: usize) -> Result<Self> {
        let [h, w, _] = data.shape() else {
            return Err(Error::Shape(format!(
                "channel field must be [H, W, C], got {:?}",
                data.shape()
            )));
        };
        if labels.len() != h * w {
            return Err(Error::Shape(format!(
                "{} labels for a {h}x{w} field",
                labels.len()
            )));
        }
        Ok(Self {
            data,
            labels,
            classes,
        })
    }

    pub fn height(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[2]
    }
}

/// One extracted patch: inputs, its label grid, and where it came from.
#[derive(Debug, Clone)]
pub struct Patch {
    /// [size, size, C] slice of the source channels.
    pub input: Value,
    /// size*size labels aligned with the input.
    pub labels: Vec<u8>,
    /// Top-left (row, col) in the source field.
    pub origin: (usize, usize),
    /// Class of the generating pixel for center-labeled extraction.
    pub center_class: Option<u8>,
}

/// Patches of one spatial size over a common class set.
#[derive(Debug, Clone)]
pub struct PatchSet {
    pub size: usize,
    pub classes: usize,
    pub patches: Vec<Patch>,
}

impl PatchSet {
    /// Count of `class` pixels in patch `idx`.
    pub fn class_pixels(&self, idx: usize, class: u8) -> u64 {
        self.patches[idx]
            .labels
            .iter()
            .filter(|&&l| l == class)
            .count() as u64
    }

    /// Total labeled pixels per class over all patches.
    pub fn pixel_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.classes];
        for p in &self.patches {
            for &l in &p.labels {
                if l != UNLABELED {
                    totals[l as usize] += 1;
                }
            }
        }
        totals
    }
}

/// Per-class row of the occurrence table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ClassOccurrence {
    pub total_pixels: u64,
    pub pixels_in_mixed: u64,
    pub single_class_patches: u64,
    pub mixed_patches: u64,
}

/// Occurrence statistics in the layout of the training-set tables:
/// total pixels, pixels in mixed patches, single-class and mixed patch
/// counts, per class.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct OccurrenceTable {
    pub per_class: Vec<ClassOccurrence>,
}

impl OccurrenceTable {
    pub fn from_patch_set(set: &PatchSet) -> Self {
        let k = set.classes;
        let mut per_class = vec![
            ClassOccurrence {
                total_pixels: 0,
                pixels_in_mixed: 0,
                single_class_patches: 0,
                mixed_patches: 0,
            };
            k
        ];
        for p in &set.patches {
            let mut counts = vec![0u64; k];
            for &l in &p.labels {
                if l != UNLABELED {
                    counts[l as usize] += 1;
                }
            }
            let present: Vec<usize> = (0..k).filter(|&c| counts[c] > 0).collect();
            let mixed = present.len() > 1;
            for &c in &present {
                per_class[c].total_pixels += counts[c];
                if mixed {
                    per_class[c].pixels_in_mixed += counts[c];
                    per_class[c].mixed_patches += 1;
                } else {
                    per_class[c].single_class_patches += 1;
                }
            }
        }
        Self { per_class }
    }

    /// Patches containing each class (single + mixed).
    pub fn presence(&self) -> Vec<u64> {
        self.per_class
            .iter()
            .map(|c| c.single_class_patches + c.mixed_patches)
            .collect()
    }

    pub fn totals(&self) -> Vec<u64> {
        self.per_class.iter().map(|c| c.total_pixels).collect()
    }
}

/// One removal decision taken by the balancing passes.
#[derive(Debug, Clone, serde::Serialize)]
pub enum RemovalEvent {
    /// Phase 1 dropped an entire single-class patch.
    PatchRemoved {
        class: u8,
        patch_index: usize,
        pixels: u64,
    },
    /// Phase 2 unlabeled some of a patch's pixels of one class.
    PixelsRemoved {
        class: u8,
        patch_index: usize,
        removed: u64,
    },
}

/// Before/after occurrence tables plus the per-step removal log.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BalanceReport {
    pub before: OccurrenceTable,
    pub after: OccurrenceTable,
    pub removals: Vec<RemovalEvent>,
}

/// Renders an occurrence table with the standard columns.
pub fn occurrence_csv(table: &OccurrenceTable, class_names: &[String]) -> String {
    let mut out =
        String::from("Class,Total Pixels,Pixels in mixed images,Single-class images,Mixed Images\n");
    for (c, row) in table.per_class.iter().enumerate() {
        let name = class_names
            .get(c)
            .map(String::as_str)
            .unwrap_or("unknown");
        out.push_str(&format!(
            "{name},{},{},{},{}\n",
            row.total_pixels, row.pixels_in_mixed, row.single_class_patches, row.mixed_patches
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctensor::RealTensor;

    fn patch(labels: Vec<u8>) -> Patch {
        Patch {
            input: Value::R(RealTensor::zeros(&[1, 1, 1])),
            labels,
            origin: (0, 0),
            center_class: None,
        }
    }

    #[test]
    fn occurrence_table_counts() {
        let set = PatchSet {
            size: 2,
            classes: 2,
            patches: vec![
                patch(vec![0, 0, 0, 0]),
                patch(vec![0, 1, 1, UNLABELED]),
                patch(vec![1, 1, 1, 1]),
            ],
        };
        let t = OccurrenceTable::from_patch_set(&set);
        assert_eq!(t.per_class[0].total_pixels, 5);
        assert_eq!(t.per_class[0].pixels_in_mixed, 1);
        assert_eq!(t.per_class[0].single_class_patches, 1);
        assert_eq!(t.per_class[0].mixed_patches, 1);
        assert_eq!(t.per_class[1].total_pixels, 6);
        assert_eq!(t.per_class[1].pixels_in_mixed, 2);
        assert_eq!(t.per_class[1].single_class_patches, 1);
        assert_eq!(t.per_class[1].mixed_patches, 1);
        // Totals decompose into single-class plus mixed pixels.
        for row in &t.per_class {
            assert!(row.total_pixels >= row.pixels_in_mixed);
        }
        assert_eq!(t.presence(), vec![2, 2]);
    }
}
