//! Synthetic patch sets with prescribed occurrence statistics, used to
//! validate the balancing passes against known occurrence tables.

use super::{Patch, PatchSet};
use crate::ctensor::RealTensor;
use crate::grad::Value;
use crate::polsar::UNLABELED;

const SIZE: usize = 128;
const AREA: usize = SIZE * SIZE;

/// Splits `total` as evenly as integers allow over `n` patches.
fn spread(total: u64, n: u64) -> Vec<u64> {
    let base = total / n;
    let rem = (total % n) as usize;
    (0..n as usize)
        .map(|i| base + u64::from(i < rem))
        .collect()
}

fn single(class: u8, pixels: u64) -> Patch {
    assert!(pixels as usize <= AREA);
    let mut labels = vec![UNLABELED; AREA];
    for cell in labels.iter_mut().take(pixels as usize) {
        *cell = class;
    }
    Patch {
        input: Value::R(RealTensor::zeros(&[1, 1, 1])),
        labels,
        origin: (0, 0),
        center_class: None,
    }
}

fn mixed(a: u8, na: u64, b: u8, nb: u64) -> Patch {
    assert!((na + nb) as usize <= AREA);
    let mut labels = vec![UNLABELED; AREA];
    for cell in labels.iter_mut().take(na as usize) {
        *cell = a;
    }
    for cell in labels.iter_mut().skip(na as usize).take(nb as usize) {
        *cell = b;
    }
    Patch {
        input: Value::R(RealTensor::zeros(&[1, 1, 1])),
        labels,
        origin: (0, 0),
        center_class: None,
    }
}

/// Rebuilds the training-set occurrence profile of the reference scene
/// with dataset splitting (classes: 0 Forest, 1 Runway, 2 Urban, 3 Open):
///
/// | class  | total pixels | pixels in mixed | singles | mixed |
/// |--------|-------------:|----------------:|--------:|------:|
/// | Forest |    2,721,238 |         592,309 |     264 |   304 |
/// | Runway |    3,091,975 |       2,900,017 |     109 |   931 |
/// | Urban  |    9,750,257 |       2,620,141 |   1,134 |   686 |
/// | Open   |   33,245,055 |      10,797,471 |   2,045 | 1,519 |
///
/// Mixed patches pair classes (Forest+Open 304, Runway+Urban 201,
/// Runway+Open 730, Urban+Open 485), which reproduces every row above.
/// Inputs are placeholder tensors; only labels matter to the balancers.
pub fn reference_occurrence_profile() -> PatchSet {
    let mut patches = Vec::new();

    // Single-class patches: totals minus the mixed-pixel columns.
    for (class, count, pixels) in [
        (0u8, 264u64, 2_721_238 - 592_309),
        (1, 109, 3_091_975 - 2_900_017),
        (2, 1134, 9_750_257 - 2_620_141),
        (3, 2045, 33_245_055 - 10_797_471),
    ] {
        for px in spread(pixels, count) {
            patches.push(single(class, px));
        }
    }

    // Mixed pixels per class, split across that class's memberships.
    let forest = spread(592_309, 304);
    let runway = spread(2_900_017, 931);
    let urban = spread(2_620_141, 686);
    let open = spread(10_797_471, 1519);

    // Forest+Open: 304 patches.
    for i in 0..304 {
        patches.push(mixed(0, forest[i], 3, open[i]));
    }
    // Runway+Urban: 201 patches.
    for i in 0..201 {
        patches.push(mixed(1, runway[i], 2, urban[i]));
    }
    // Runway+Open: 730 patches.
    for i in 0..730 {
        patches.push(mixed(1, runway[201 + i], 3, open[304 + i]));
    }
    // Urban+Open: 485 patches.
    for i in 0..485 {
        patches.push(mixed(2, urban[201 + i], 3, open[304 + 730 + i]));
    }

    PatchSet {
        size: SIZE,
        classes: 4,
        patches,
    }
}
