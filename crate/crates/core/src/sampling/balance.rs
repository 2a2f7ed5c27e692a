//! Two-phase class balancing of patch datasets.
//!
//! Phase 1 removes single-class patches so every class appears in (as
//! close as possible to) the same number of patches: per class, surplus
//! single-class patches are dropped smallest-first until the class's
//! patch presence reaches the scarcest class's presence or no
//! single-class patches remain. Mixed patches are never deleted.
//!
//! Phase 2 equalizes per-class pixel totals exactly by unlabeling pixels,
//! visiting each class's patches in ascending pixel count: patches at or
//! below the running average keep everything, the rest are trimmed to an
//! integer water-fill of the remaining budget. Inputs are never touched,
//! only labels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BalanceReport, OccurrenceTable, PatchSet, RemovalEvent};
use crate::polsar::UNLABELED;

/// Phase 1: drops surplus single-class patches, fewest-pixels first.
pub fn remove_exceeding_one_class_images(set: PatchSet) -> (PatchSet, BalanceReport) {
    let before = OccurrenceTable::from_patch_set(&set);
    let presence = before.presence();
    let target = presence.iter().copied().min().unwrap_or(0);

    let k = set.classes;
    let mut remove = vec![false; set.patches.len()];
    let mut removals = Vec::new();
    for c in 0..k {
        let surplus = presence[c].saturating_sub(target);
        if surplus == 0 {
            continue;
        }
        // Single-class patches of c, ascending by pixel count then index.
        let mut singles: Vec<(u64, usize)> = set
            .patches
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let mut n = 0u64;
                let mut only_c = true;
                for &l in &p.labels {
                    if l == UNLABELED {
                        continue;
                    }
                    if l == c as u8 {
                        n += 1;
                    } else {
                        only_c = false;
                        break;
                    }
                }
                (only_c && n > 0).then_some((n, i))
            })
            .collect();
        singles.sort_unstable();
        for &(pixels, idx) in singles.iter().take(surplus as usize) {
            remove[idx] = true;
            removals.push(RemovalEvent::PatchRemoved {
                class: c as u8,
                patch_index: idx,
                pixels,
            });
        }
    }
    let patches = set
        .patches
        .into_iter()
        .zip(&remove)
        .filter_map(|(p, &r)| (!r).then_some(p))
        .collect();
    let out = PatchSet {
        size: set.size,
        classes: set.classes,
        patches,
    };
    let after = OccurrenceTable::from_patch_set(&out);
    (
        out,
        BalanceReport {
            before,
            after,
            removals,
        },
    )
}

/// Phase 2: equalizes per-class pixel totals to the current minimum by
/// unlabeling randomly chosen pixels. Only labels change; removal streams
/// are per-class substreams of `seed`.
pub fn balance_total_pixels_of_patch(set: &mut PatchSet, seed: u64) -> BalanceReport {
    let before = OccurrenceTable::from_patch_set(set);
    let totals = before.totals();
    let target = totals.iter().copied().min().unwrap_or(0);
    let mut removals = Vec::new();

    for c in 0..set.classes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64 + 1);
        // Patches containing c, ascending by its pixel count then index.
        let mut order: Vec<(u64, usize)> = set
            .patches
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let n = p.labels.iter().filter(|&&l| l == c as u8).count() as u64;
                (n > 0).then_some((n, i))
            })
            .collect();
        order.sort_unstable();

        let mut budget = target;
        let mut remaining = order.len() as u64;
        for pos in 0..order.len() {
            let (occ, _idx) = order[pos];
            // A patch at or below the running average keeps all pixels.
            if occ * remaining <= budget {
                budget -= occ;
                remaining -= 1;
                continue;
            }
            // Water-fill the rest: every remaining patch can afford the
            // base quota because the order is ascending; the largest
            // `extra` patches take one more to land exactly on target.
            let base = budget / remaining;
            let extra = (budget % remaining) as usize;
            let tail = &order[pos..];
            for (j, &(occ2, idx2)) in tail.iter().enumerate() {
                let keep = base + u64::from(j >= tail.len() - extra);
                debug_assert!(keep <= occ2);
                let drop = occ2 - keep;
                if drop > 0 {
                    unlabel_random(&mut set.patches[idx2].labels, c as u8, drop, &mut rng);
                    removals.push(RemovalEvent::PixelsRemoved {
                        class: c as u8,
                        patch_index: idx2,
                        removed: drop,
                    });
                }
            }
            budget = 0;
            break;
        }
        debug_assert!(order.is_empty() || budget == 0);
    }

    let after = OccurrenceTable::from_patch_set(set);
    BalanceReport {
        before,
        after,
        removals,
    }
}

fn unlabel_random(labels: &mut [u8], class: u8, count: u64, rng: &mut ChaCha8Rng) {
    let mut positions: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| (l == class).then_some(i))
        .collect();
    positions.shuffle(rng);
    for &p in positions.iter().take(count as usize) {
        labels[p] = UNLABELED;
    }
}

/// Both phases in sequence; the report spans the whole pipeline.
pub fn balance_patches(set: PatchSet, seed: u64) -> (PatchSet, BalanceReport) {
    let (mut out, r1) = remove_exceeding_one_class_images(set);
    let r2 = balance_total_pixels_of_patch(&mut out, seed);
    let mut removals = r1.removals;
    removals.extend(r2.removals);
    (
        out,
        BalanceReport {
            before: r1.before,
            after: r2.after,
            removals,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctensor::RealTensor;
    use crate::grad::Value;
    use crate::sampling::fixtures;
    use crate::sampling::Patch;
    use rand::Rng;

    fn patch(labels: Vec<u8>) -> Patch {
        Patch {
            input: Value::R(RealTensor::zeros(&[1, 1, 1])),
            labels,
            origin: (0, 0),
            center_class: None,
        }
    }

    fn set(classes: usize, labels: Vec<Vec<u8>>) -> PatchSet {
        let size = (labels[0].len() as f64).sqrt() as usize;
        PatchSet {
            size,
            classes,
            patches: labels.into_iter().map(patch).collect(),
        }
    }

    #[test]
    fn already_balanced_presence_no_removals() {
        let s = set(
            2,
            vec![vec![0, 0, 1, 1], vec![0, 1, 1, UNLABELED], vec![0, 0, 0, 1]],
        );
        let (out, report) = remove_exceeding_one_class_images(s);
        assert_eq!(out.patches.len(), 3);
        assert!(report.removals.is_empty());
    }

    #[test]
    fn partial_removal_drops_smallest_singles_first() {
        // Class 0: three singles (sizes 1, 2, 4) + one mixed = presence 4.
        // Class 1: three mixed = presence 3. Class 2: two mixed = presence 2.
        // Target 2: class 0 drops its two smallest singles; class 1 has no
        // singles to drop and keeps its mixed patches.
        let s = set(
            3,
            vec![
                vec![0, UNLABELED, UNLABELED, UNLABELED],
                vec![0, 0, UNLABELED, UNLABELED],
                vec![0, 0, 0, 0],
                vec![0, 1, UNLABELED, UNLABELED],
                vec![1, 2, UNLABELED, UNLABELED],
                vec![2, 1, 1, UNLABELED],
            ],
        );
        let (out, report) = remove_exceeding_one_class_images(s);
        assert_eq!(out.patches.len(), 4);
        assert_eq!(report.removals.len(), 2);
        let removed_sizes: Vec<u64> = report
            .removals
            .iter()
            .map(|r| match r {
                RemovalEvent::PatchRemoved { pixels, .. } => *pixels,
                _ => panic!(),
            })
            .collect();
        assert_eq!(removed_sizes, vec![1, 2]);
        let after = OccurrenceTable::from_patch_set(&out);
        assert_eq!(after.presence(), vec![2, 3, 2]);
    }

    #[test]
    fn degenerate_case_removes_all_non_minimum_singles() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        // Class 0 scarce: few patches overall; class 1 has many singles.
        let mut labels = Vec::new();
        for _ in 0..3 {
            labels.push(vec![0, 1, UNLABELED, UNLABELED]); // mixed
        }
        for _ in 0..10 {
            let n = rng.random_range(1..4usize);
            let mut l = vec![UNLABELED; 4];
            for cell in l.iter_mut().take(n) {
                *cell = 1;
            }
            labels.push(l); // singles of class 1
        }
        let s = set(2, labels);
        let (out, _) = remove_exceeding_one_class_images(s);
        // Presence: class0 3, class1 13 -> target 3; only 10 singles exist,
        // all must go (13 - 3 = 10).
        for p in &out.patches {
            let classes: std::collections::HashSet<u8> = p
                .labels
                .iter()
                .copied()
                .filter(|&l| l != UNLABELED)
                .collect();
            assert!(classes.len() > 1, "single-class patch survived");
        }
    }

    #[test]
    fn micro_example_two_patches() {
        // Two patches with 10 and 100 pixels of one class, target 100:
        // all ten excess pixels come out of the larger patch.
        let mut labels0 = vec![UNLABELED; 16 * 16];
        for cell in labels0.iter_mut().take(10) {
            *cell = 0;
        }
        let mut labels1 = vec![UNLABELED; 16 * 16];
        for cell in labels1.iter_mut().take(100) {
            *cell = 0;
        }
        // A second class pins the target at 100.
        let mut labels2 = vec![UNLABELED; 16 * 16];
        for cell in labels2.iter_mut().take(100) {
            *cell = 1;
        }
        let mut s = set(2, vec![labels0, labels1, labels2]);
        let report = balance_total_pixels_of_patch(&mut s, 7);
        assert_eq!(s.pixel_totals(), vec![100, 100]);
        // Patch 0 untouched, patch 1 lost exactly 10.
        assert_eq!(s.class_pixels(0, 0), 10);
        assert_eq!(s.class_pixels(1, 0), 90);
        assert_eq!(report.removals.len(), 1);
        match &report.removals[0] {
            RemovalEvent::PixelsRemoved {
                class,
                patch_index,
                removed,
            } => {
                assert_eq!((*class, *patch_index, *removed), (0, 1, 10));
            }
            other => panic!("unexpected removal {other:?}"),
        }
    }

    #[test]
    fn paper_profile_phase1_and_phase2() {
        let s = fixtures::reference_occurrence_profile();
        let table = OccurrenceTable::from_patch_set(&s);
        assert_eq!(
            table.totals(),
            vec![2_721_238, 3_091_975, 9_750_257, 33_245_055]
        );
        assert_eq!(
            table.per_class.iter().map(|c| c.pixels_in_mixed).collect::<Vec<_>>(),
            vec![592_309, 2_900_017, 2_620_141, 10_797_471]
        );
        assert_eq!(
            table
                .per_class
                .iter()
                .map(|c| c.single_class_patches)
                .collect::<Vec<_>>(),
            vec![264, 109, 1134, 2045]
        );
        assert_eq!(
            table.per_class.iter().map(|c| c.mixed_patches).collect::<Vec<_>>(),
            vec![304, 931, 686, 1519]
        );

        let (mut out, r1) = remove_exceeding_one_class_images(s);
        assert_eq!(
            r1.after.totals(),
            vec![2_721_238, 2_900_017, 2_620_141, 10_797_471]
        );
        assert_eq!(
            r1.after
                .per_class
                .iter()
                .map(|c| c.single_class_patches)
                .collect::<Vec<_>>(),
            vec![264, 0, 0, 0]
        );

        let r2 = balance_total_pixels_of_patch(&mut out, 11);
        assert_eq!(r2.after.totals(), vec![2_620_141; 4]);
        // The scarce class's mixed pixels survive phase 2 untouched.
        assert_eq!(r2.after.per_class[0].pixels_in_mixed, 592_309);
    }

    #[test]
    fn random_sets_balance_exactly_and_leave_inputs_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for round in 0..20 {
            let classes = rng.random_range(2..5usize);
            let n = rng.random_range(4..30usize);
            let mut labels = Vec::new();
            for _ in 0..n {
                let l: Vec<u8> = (0..64)
                    .map(|_| {
                        let r: f64 = rng.random();
                        if r < 0.3 {
                            UNLABELED
                        } else {
                            rng.random_range(0..classes) as u8
                        }
                    })
                    .collect();
                labels.push(l);
            }
            let s = set(classes, labels);
            // Ensure every class occurs at least once.
            let totals = s.pixel_totals();
            if totals.contains(&0) {
                continue;
            }
            let inputs_before: Vec<String> =
                s.patches.iter().map(|p| format!("{:?}", p.input)).collect();
            let (out, _) = balance_patches(s, round);
            let totals = out.pixel_totals();
            assert!(
                totals.windows(2).all(|w| w[0] == w[1]),
                "unequal totals {totals:?}"
            );
            // Inputs bit-identical for surviving patches (a subset of the
            // originals in order).
            let mut it = inputs_before.iter();
            for p in &out.patches {
                let s = format!("{:?}", p.input);
                assert!(it.any(|orig| *orig == s), "input mutated");
            }
        }
    }
}
