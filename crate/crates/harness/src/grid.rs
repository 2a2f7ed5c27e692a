//! Comparison tables over a grid of experiment cells: one row per
//! (family, metric), one column per (representation, domain), the
//! per-row best mean marked.

use serde::Serialize;

use cvnn_core::models::Family;
use cvnn_core::nn::Domain;
use cvnn_core::polsar::Representation;
use cvnn_core::{Error, Result};

use crate::experiment::AggregateResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    OverallAccuracy,
    AverageAccuracy,
}

/// One grid cell: a finished experiment identified by its axes.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub name: String,
    pub family: Family,
    pub domain: Domain,
    pub representation: Representation,
    pub aggregate: AggregateResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableEntry {
    pub name: String,
    pub mean: f64,
    pub half_width_95: f64,
    /// Per-row (family, metric) maximum mean.
    pub best: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub family: Family,
    pub metric: Metric,
    /// Columns in fixed order: (coherency, cv), (coherency, rv),
    /// (pauli, cv), (pauli, rv). Missing cells stay None.
    pub cells: Vec<Option<TableEntry>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

const COLUMNS: [(Representation, Domain); 4] = [
    (Representation::Coherency, Domain::Complex),
    (Representation::Coherency, Domain::Real),
    (Representation::Pauli, Domain::Complex),
    (Representation::Pauli, Domain::Real),
];

fn column_name(rep: Representation, domain: Domain) -> String {
    let r = match rep {
        Representation::Coherency => "coherency",
        Representation::Pauli => "pauli",
    };
    let d = match domain {
        Domain::Complex => "cv",
        Domain::Real => "rv",
    };
    format!("{r}-{d}")
}

/// Builds the comparison table from finished cells.
pub fn compare_grid(cells: &[GridCell]) -> Result<ComparisonTable> {
    if cells.len() < 2 {
        return Err(Error::Contract(format!(
            "grid comparison needs at least 2 experiments, got {}",
            cells.len()
        )));
    }
    let k = cells[0].aggregate.class_names.len();
    if let Some(bad) = cells.iter().find(|c| c.aggregate.class_names.len() != k) {
        return Err(Error::Contract(format!(
            "experiment '{}' has {} classes, expected {k}",
            bad.name,
            bad.aggregate.class_names.len()
        )));
    }

    let mut families: Vec<Family> = Vec::new();
    for c in cells {
        if !families.contains(&c.family) {
            families.push(c.family);
        }
    }

    let mut rows = Vec::new();
    for &family in &families {
        for metric in [Metric::OverallAccuracy, Metric::AverageAccuracy] {
            let mut entries: Vec<Option<TableEntry>> = vec![None; COLUMNS.len()];
            for cell in cells.iter().filter(|c| c.family == family) {
                let col = COLUMNS
                    .iter()
                    .position(|&(r, d)| r == cell.representation && d == cell.domain)
                    .expect("column covers all (representation, domain) pairs");
                if entries[col].is_some() {
                    return Err(Error::Contract(format!(
                        "duplicate grid cell for {:?}/{}",
                        family,
                        column_name(cell.representation, cell.domain)
                    )));
                }
                let ms = match metric {
                    Metric::OverallAccuracy => &cell.aggregate.overall_accuracy,
                    Metric::AverageAccuracy => &cell.aggregate.average_accuracy,
                };
                entries[col] = Some(TableEntry {
                    name: cell.name.clone(),
                    mean: ms.mean,
                    half_width_95: ms.half_width_95,
                    best: false,
                });
            }
            let best = entries
                .iter()
                .flatten()
                .map(|e| e.mean)
                .fold(f64::NEG_INFINITY, f64::max);
            for e in entries.iter_mut().flatten() {
                if e.mean == best {
                    e.best = true;
                }
            }
            rows.push(TableRow {
                family,
                metric,
                cells: entries,
            });
        }
    }
    if rows.iter().all(|r| r.cells.iter().all(Option::is_none)) {
        return Err(Error::Contract("grid has no populated cells".into()));
    }
    Ok(ComparisonTable {
        columns: COLUMNS
            .iter()
            .map(|&(r, d)| column_name(r, d))
            .collect(),
        rows,
    })
}

/// CSV rendering; the per-row best mean carries a `*` suffix.
pub fn table_csv(table: &ComparisonTable) -> String {
    let mut s = String::from("family,metric");
    for c in &table.columns {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for row in &table.rows {
        let fam = match row.family {
            Family::Mlp => "mlp",
            Family::Cnn => "cnn",
            Family::Fcnn => "fcnn",
        };
        let met = match row.metric {
            Metric::OverallAccuracy => "oa",
            Metric::AverageAccuracy => "aa",
        };
        s.push_str(&format!("{fam},{met}"));
        for cell in &row.cells {
            s.push(',');
            if let Some(e) = cell {
                s.push_str(&format!(
                    "{}+-{}{}",
                    e.mean,
                    e.half_width_95,
                    if e.best { "*" } else { "" }
                ));
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{mean_sd, AggregateResult, INTERVAL_NOTE};

    fn agg(oa: f64, aa: f64) -> AggregateResult {
        AggregateResult {
            trials: 2,
            interval: INTERVAL_NOTE,
            degenerate_interval: false,
            class_names: vec!["a".into(), "b".into()],
            overall_accuracy: mean_sd(&[oa, oa]),
            average_accuracy: mean_sd(&[aa, aa]),
            per_class_accuracy: vec![mean_sd(&[aa, aa]), mean_sd(&[aa, aa])],
        }
    }

    fn cell(
        name: &str,
        family: Family,
        domain: Domain,
        rep: Representation,
        oa: f64,
    ) -> GridCell {
        GridCell {
            name: name.into(),
            family,
            domain,
            representation: rep,
            aggregate: agg(oa, oa - 0.05),
        }
    }

    #[test]
    fn two_by_two_schema_and_best_marking() {
        let cells = vec![
            cell("a", Family::Cnn, Domain::Complex, Representation::Coherency, 0.95),
            cell("b", Family::Cnn, Domain::Real, Representation::Coherency, 0.94),
            cell("c", Family::Cnn, Domain::Complex, Representation::Pauli, 0.93),
            cell("d", Family::Cnn, Domain::Real, Representation::Pauli, 0.92),
        ];
        let t = compare_grid(&cells).unwrap();
        assert_eq!(t.columns.len(), 4);
        assert_eq!(t.rows.len(), 2); // oa and aa for one family
        let oa_row = &t.rows[0];
        let best: Vec<bool> = oa_row
            .cells
            .iter()
            .map(|c| c.as_ref().map(|e| e.best).unwrap_or(false))
            .collect();
        assert_eq!(best, vec![true, false, false, false]);
        // Recompute the marking from the means.
        let means: Vec<f64> = oa_row
            .cells
            .iter()
            .flatten()
            .map(|e| e.mean)
            .collect();
        let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for e in oa_row.cells.iter().flatten() {
            assert_eq!(e.best, e.mean == max);
        }
        let csv = table_csv(&t);
        assert!(csv.contains("0.95"));
        assert!(csv.lines().count() >= 3);
    }

    #[test]
    fn fewer_than_two_rejected() {
        let cells = vec![cell(
            "a",
            Family::Cnn,
            Domain::Complex,
            Representation::Coherency,
            0.9,
        )];
        assert!(compare_grid(&cells).is_err());
    }

    #[test]
    fn duplicate_cell_rejected() {
        let cells = vec![
            cell("a", Family::Cnn, Domain::Complex, Representation::Coherency, 0.9),
            cell("b", Family::Cnn, Domain::Complex, Representation::Coherency, 0.91),
        ];
        assert!(compare_grid(&cells).is_err());
    }

    #[test]
    fn class_count_mismatch_rejected() {
        let mut odd = cell("b", Family::Cnn, Domain::Real, Representation::Pauli, 0.9);
        odd.aggregate.class_names.push("c".into());
        let cells = vec![
            cell("a", Family::Cnn, Domain::Complex, Representation::Coherency, 0.9),
            odd,
        ];
        assert!(compare_grid(&cells).is_err());
    }
}
