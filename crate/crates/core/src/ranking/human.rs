use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{Direction, MetricTable};
use crate::error::{Error, Result};
use crate::stats::{pearson, CorrelationResult};
use crate::vtt::{split_study_id, VttStats};

pub const HUMAN_CSV_HEADER: [&str; 4] = ["dataset", "augmentation", "statistic_name", "value"];

/// Human statistics understood by the report, with their preferred direction.
pub const HUMAN_STATISTICS: [(&str, Direction); 5] = [
    ("fpr", Direction::HigherBetter),
    ("fnr", Direction::HigherBetter),
    ("group_p", Direction::HigherBetter),
    ("likert_diff", Direction::LowerBetter),
    ("ks_p", Direction::HigherBetter),
];

pub fn human_direction(statistic: &str) -> Option<Direction> {
    HUMAN_STATISTICS
        .iter()
        .find(|(name, _)| *name == statistic)
        .map(|(_, d)| *d)
}

fn row_error(source: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Row {
        source_name: source.to_string(),
        line,
        reason: reason.into(),
    }
}

/// Reads `dataset,augmentation,statistic_name,value` rows into a metric table
/// whose metric ids are the statistic names.
pub fn read_human_csv<R: Read>(reader: R, source_name: &str) -> Result<MetricTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| row_error(source_name, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers != HUMAN_CSV_HEADER {
        return Err(row_error(
            source_name,
            1,
            format!("header must be {}", HUMAN_CSV_HEADER.join(",")),
        ));
    }
    let mut table = MetricTable::new();
    let mut seen = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| row_error(source_name, line, e.to_string()))?;
        if record.len() != 4 {
            return Err(row_error(source_name, line, format!("expected 4 fields, found {}", record.len())));
        }
        let f: Vec<&str> = record.iter().map(str::trim).collect();
        if f[0].is_empty() || f[1].is_empty() {
            return Err(row_error(source_name, line, "dataset and augmentation must be non-empty"));
        }
        let direction = human_direction(f[2]).ok_or_else(|| {
            let known: Vec<&str> = HUMAN_STATISTICS.iter().map(|(n, _)| *n).collect();
            row_error(
                source_name,
                line,
                format!("unknown statistic_name {:?} (expected one of {})", f[2], known.join(", ")),
            )
        })?;
        let value: f64 = f[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| row_error(source_name, line, format!("value {:?} is not a finite number", f[3])))?;
        if let Some(prev) = seen.insert((f[0].to_string(), f[1].to_string(), f[2].to_string()), line) {
            return Err(row_error(source_name, line, format!("duplicate of line {prev}")));
        }
        table.set_direction(f[2], direction);
        table.insert(f[0], f[1], f[2], value);
    }
    Ok(table)
}

pub fn read_human_file(path: &Path) -> Result<MetricTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_human_csv(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn write_human_csv<W: Write>(table: &MetricTable, writer: W) -> Result<()> {
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HUMAN_CSV_HEADER).map_err(csv_err)?;
    for c in &table.cells {
        w.write_record([&c.dataset, &c.augmentation, &c.metric, &c.value.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))
}

/// One row per study with the five human statistics; study ids of the form
/// `dataset/augmentation` give the row keys.
pub fn vtt_stats_table(stats: &[VttStats]) -> MetricTable {
    let mut table = MetricTable::new();
    for (name, direction) in HUMAN_STATISTICS {
        table.set_direction(name, direction);
    }
    for s in stats {
        let (dataset, augmentation) = split_study_id(&s.study_id);
        table.insert(&dataset, &augmentation, "fpr", s.fpr);
        table.insert(&dataset, &augmentation, "fnr", s.fnr);
        if let Some(g) = &s.group_test {
            table.insert(&dataset, &augmentation, "group_p", g.p_value);
        }
        table.insert(&dataset, &augmentation, "likert_diff", s.likert_diff);
        table.insert(&dataset, &augmentation, "ks_p", s.ks_test.p_value);
    }
    table
}

/// `(dataset, augmentation) → value` for one metric column.
pub fn metric_values(table: &MetricTable, metric: &str) -> BTreeMap<(String, String), f64> {
    table
        .cells
        .iter()
        .filter(|c| c.metric == metric)
        .map(|c| ((c.dataset.clone(), c.augmentation.clone()), c.value))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanCorrelation {
    pub metric: String,
    pub statistic: String,
    pub result: CorrelationResult,
}

/// Pearson correlation of one metric column against human values over the
/// (dataset, augmentation) keys present in both.
pub fn correlate_with_humans(
    table: &MetricTable,
    metric: &str,
    human: &BTreeMap<(String, String), f64>,
    alpha: f64,
) -> Result<CorrelationResult> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (key, v) in metric_values(table, metric) {
        if let Some(h) = human.get(&key) {
            x.push(v);
            y.push(*h);
        }
    }
    if x.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "metric {metric} overlaps the human data in {} (dataset, augmentation) keys; at least 3 are needed",
            x.len()
        )));
    }
    pearson(&x, &y, alpha)
}
