use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::table::{MetricTable, BASELINE_AUGMENTATION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub dataset: String,
    pub metric: String,
    /// Best first.
    pub order: Vec<String>,
    /// Groups of labels with exactly equal values, each in lexicographic order.
    pub ties: Vec<Vec<String>>,
    /// Values aligned with `order`.
    pub values: Vec<f64>,
}

impl Ranking {
    /// 0-based position of each label.
    pub fn positions(&self) -> BTreeMap<&str, usize> {
        self.order.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
    }

    /// Tie-group index per label: labels sharing a value share an index.
    fn levels(&self) -> BTreeMap<&str, usize> {
        let mut level = 0;
        let mut out = BTreeMap::new();
        for (i, label) in self.order.iter().enumerate() {
            if i > 0 && self.values[i] != self.values[i - 1] {
                level += 1;
            }
            out.insert(label.as_str(), level);
        }
        out
    }
}

/// Orders the augmentations of one (dataset, metric) column, best first.
pub fn rank(table: &MetricTable, dataset: &str, metric: &str) -> Result<Ranking> {
    let direction = table.direction(metric)?;
    let mut column = table.column(dataset, metric);
    if column.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no values for dataset {dataset:?} and metric {metric:?}"
        )));
    }
    column.sort_by(|(la, va), (lb, vb)| {
        let by_value = match direction {
            super::Direction::LowerBetter => va.total_cmp(vb),
            super::Direction::HigherBetter => vb.total_cmp(va),
        };
        by_value.then_with(|| la.cmp(lb))
    });
    let mut ties = Vec::new();
    let mut start = 0;
    for i in 1..=column.len() {
        if i == column.len() || column[i].1 != column[start].1 {
            if i - start > 1 {
                ties.push(column[start..i].iter().map(|(l, _)| l.clone()).collect());
            }
            start = i;
        }
    }
    Ok(Ranking {
        dataset: dataset.to_string(),
        metric: metric.to_string(),
        order: column.iter().map(|(l, _)| l.clone()).collect(),
        values: column.iter().map(|(_, v)| *v).collect(),
        ties,
    })
}

/// Kendall tau-b between two rankings of the same labels. Tied labels share
/// a rank; a ranking with all labels tied has no defined correlation.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<f64> {
    let la: BTreeSet<&str> = a.order.iter().map(String::as_str).collect();
    let lb: BTreeSet<&str> = b.order.iter().map(String::as_str).collect();
    if la != lb || la.len() != a.order.len() || lb.len() != b.order.len() {
        return Err(Error::InvalidInput(format!(
            "rankings {}/{} and {}/{} cover different labels",
            a.dataset, a.metric, b.dataset, b.metric
        )));
    }
    let (ra, rb) = (a.levels(), b.levels());
    let labels: Vec<&str> = la.into_iter().collect();
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            let da = ra[labels[i]] as i64 - ra[labels[j]] as i64;
            let db = rb[labels[i]] as i64 - rb[labels[j]] as i64;
            match (da == 0, db == 0) {
                (true, true) => {}
                (true, false) => ties_a += 1,
                (false, true) => ties_b += 1,
                (false, false) => {
                    if da.signum() == db.signum() {
                        concordant += 1
                    } else {
                        discordant += 1
                    }
                }
            }
        }
    }
    let n1 = (concordant + discordant + ties_a) as f64;
    let n2 = (concordant + discordant + ties_b) as f64;
    if n1 == 0.0 || n2 == 0.0 {
        if labels.len() < 2 {
            return Ok(1.0);
        }
        return Err(Error::Degenerate(format!(
            "Kendall tau undefined: every label is tied in {}/{} or {}/{}",
            a.dataset, a.metric, b.dataset, b.metric
        )));
    }
    Ok((concordant - discordant) as f64 / (n1 * n2).sqrt())
}

/// Key of one table cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub augmentation: String,
    pub metric: String,
}

impl CellKey {
    pub fn new(dataset: &str, augmentation: &str, metric: &str) -> Self {
        CellKey {
            dataset: dataset.into(),
            augmentation: augmentation.into(),
            metric: metric.into(),
        }
    }
}

/// Marks cells strictly worse than the baseline row of the same dataset and metric.
pub fn dagger_marks(table: &MetricTable) -> Result<BTreeMap<CellKey, bool>> {
    let mut out = BTreeMap::new();
    for cell in &table.cells {
        let direction = table.direction(&cell.metric)?;
        let baseline = table
            .get(&cell.dataset, BASELINE_AUGMENTATION, &cell.metric)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no {BASELINE_AUGMENTATION:?} row for dataset {} metric {}",
                    cell.dataset, cell.metric
                ))
            })?;
        let worse = cell.augmentation != BASELINE_AUGMENTATION
            && direction.better(baseline, cell.value);
        out.insert(CellKey::new(&cell.dataset, &cell.augmentation, &cell.metric), worse);
    }
    Ok(out)
}

/// Cells holding the best value of their (dataset, metric) column; all tied
/// best cells are marked.
pub fn best_marks(table: &MetricTable) -> Result<BTreeSet<CellKey>> {
    let mut out = BTreeSet::new();
    for dataset in table.datasets() {
        for metric in table.metrics() {
            let column = table.column(&dataset, &metric);
            if column.is_empty() {
                continue;
            }
            let r = rank(table, &dataset, &metric)?;
            let best = r.values[0];
            for (label, value) in column {
                if value == best {
                    out.insert(CellKey::new(&dataset, &label, &metric));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::Direction;

    fn table(values: &[(&str, f64)], direction: Direction) -> MetricTable {
        let mut t = MetricTable::new();
        t.set_direction("m", direction);
        for (l, v) in values {
            t.insert("d", *l, "m", *v);
        }
        t
    }

    #[test]
    fn ranks_lower_better() {
        let t = table(
            &[("None", 12.53), ("ADA", 8.90), ("APA", 17.58), ("DiffAug", 7.68)],
            Direction::LowerBetter,
        );
        let r = rank(&t, "d", "m").unwrap();
        assert_eq!(r.order, ["DiffAug", "ADA", "None", "APA"]);
        assert!(r.ties.is_empty());
    }

    #[test]
    fn ties_are_lexicographic_and_recorded() {
        let t = table(&[("b", 1.0), ("a", 1.0), ("c", 0.5)], Direction::HigherBetter);
        let r = rank(&t, "d", "m").unwrap();
        assert_eq!(r.order, ["a", "b", "c"]);
        assert_eq!(r.ties, vec![vec!["a".to_string(), "b".to_string()]]);
    }

    #[test]
    fn single_model() {
        let t = table(&[("only", 3.0)], Direction::LowerBetter);
        assert_eq!(rank(&t, "d", "m").unwrap().order, ["only"]);
    }

    #[test]
    fn missing_direction() {
        let mut t = MetricTable::new();
        t.insert("d", "None", "m", 1.0);
        assert!(rank(&t, "d", "m").is_err());
    }

    #[test]
    fn tau_extremes() {
        let a = table(&[("w", 1.0), ("x", 2.0), ("y", 3.0), ("z", 4.0)], Direction::LowerBetter);
        let b = table(&[("w", 1.0), ("x", 2.0), ("y", 3.0), ("z", 4.0)], Direction::HigherBetter);
        let ra = rank(&a, "d", "m").unwrap();
        let rb = rank(&b, "d", "m").unwrap();
        assert_eq!(kendall_tau(&ra, &ra).unwrap(), 1.0);
        assert_eq!(kendall_tau(&ra, &rb).unwrap(), -1.0);
    }

    #[test]
    fn tau_label_mismatch() {
        let a = rank(&table(&[("x", 1.0), ("y", 2.0)], Direction::LowerBetter), "d", "m").unwrap();
        let b = rank(&table(&[("x", 1.0), ("z", 2.0)], Direction::LowerBetter), "d", "m").unwrap();
        assert!(kendall_tau(&a, &b).is_err());
    }

    #[test]
    fn daggers() {
        let t = table(&[("None", 12.53), ("APA", 17.58), ("ADA", 12.53)], Direction::LowerBetter);
        let marks = dagger_marks(&t).unwrap();
        assert!(marks[&CellKey::new("d", "APA", "m")]);
        assert!(!marks[&CellKey::new("d", "ADA", "m")]);
        assert!(!marks[&CellKey::new("d", "None", "m")]);
    }

    #[test]
    fn daggers_need_baseline() {
        let t = table(&[("ADA", 1.0)], Direction::LowerBetter);
        assert!(dagger_marks(&t).is_err());
    }

    #[test]
    fn best_includes_ties() {
        let t = table(&[("None", 48.0), ("ADA", 32.0), ("DiffAug", 48.0)], Direction::HigherBetter);
        let best = best_marks(&t).unwrap();
        assert_eq!(best.len(), 2);
        assert!(best.contains(&CellKey::new("d", "None", "m")));
    }
}
