use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::provenance::RunInfo;

pub const METRIC_TABLE_SCHEMA_VERSION: u32 = 1;

/// Label of the no-augmentation baseline row.
pub const BASELINE_AUGMENTATION: &str = "None";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Direction {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::LowerBetter => a < b,
            Direction::HigherBetter => a > b,
        }
    }

    pub fn arrow(self) -> &'static str {
        match self {
            Direction::LowerBetter => "↓",
            Direction::HigherBetter => "↑",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::LowerBetter => "lower-better",
            Direction::HigherBetter => "higher-better",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower-better" => Ok(Direction::LowerBetter),
            "higher-better" => Ok(Direction::HigherBetter),
            other => Err(Error::InvalidInput(format!("unknown direction {other:?}"))),
        }
    }
}

/// Numerical provenance of a computed distance cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub min_eigenvalue: f64,
    pub regularization_applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub dataset: String,
    pub augmentation: String,
    pub metric: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<CellDiagnostics>,
}

/// Scores keyed by (dataset, augmentation, metric) with a preferred direction
/// per metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub schema_version: u32,
    pub directions: BTreeMap<String, Direction>,
    pub cells: Vec<MetricCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
}

impl Default for MetricTable {
    fn default() -> Self {
        MetricTable {
            schema_version: METRIC_TABLE_SCHEMA_VERSION,
            directions: BTreeMap::new(),
            cells: Vec::new(),
            run: None,
        }
    }
}

impl MetricTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_direction(&mut self, metric: impl Into<String>, direction: Direction) {
        self.directions.insert(metric.into(), direction);
    }

    /// Inserts or replaces a value.
    pub fn insert(
        &mut self,
        dataset: impl Into<String>,
        augmentation: impl Into<String>,
        metric: impl Into<String>,
        value: f64,
    ) {
        self.insert_cell(MetricCell {
            dataset: dataset.into(),
            augmentation: augmentation.into(),
            metric: metric.into(),
            value,
            diagnostics: None,
        });
    }

    pub fn insert_cell(&mut self, cell: MetricCell) {
        match self.cells.iter_mut().find(|c| {
            c.dataset == cell.dataset && c.augmentation == cell.augmentation && c.metric == cell.metric
        }) {
            Some(existing) => *existing = cell,
            None => self.cells.push(cell),
        }
    }

    pub fn get(&self, dataset: &str, augmentation: &str, metric: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.augmentation == augmentation && c.metric == metric)
            .map(|c| c.value)
    }

    pub fn direction(&self, metric: &str) -> Result<Direction> {
        self.directions
            .get(metric)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("no direction defined for metric {metric:?}")))
    }

    /// Datasets in first-appearance order.
    pub fn datasets(&self) -> Vec<String> {
        first_appearance(self.cells.iter().map(|c| c.dataset.as_str()))
    }

    /// Metrics in first-appearance order.
    pub fn metrics(&self) -> Vec<String> {
        first_appearance(self.cells.iter().map(|c| c.metric.as_str()))
    }

    /// Augmentations of one dataset in first-appearance order.
    pub fn augmentations(&self, dataset: &str) -> Vec<String> {
        first_appearance(
            self.cells
                .iter()
                .filter(|c| c.dataset == dataset)
                .map(|c| c.augmentation.as_str()),
        )
    }

    /// `(augmentation, value)` pairs for one (dataset, metric) column.
    pub fn column(&self, dataset: &str, metric: &str) -> Vec<(String, f64)> {
        self.cells
            .iter()
            .filter(|c| c.dataset == dataset && c.metric == metric)
            .map(|c| (c.augmentation.clone(), c.value))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != METRIC_TABLE_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported metric table schema_version {}",
                self.schema_version
            )));
        }
        let mut seen = BTreeSet::new();
        for cell in &self.cells {
            self.direction(&cell.metric)?;
            if !cell.value.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite value for {}/{}/{}",
                    cell.dataset, cell.augmentation, cell.metric
                )));
            }
            if !seen.insert((&cell.dataset, &cell.augmentation, &cell.metric)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate cell {}/{}/{}",
                    cell.dataset, cell.augmentation, cell.metric
                )));
            }
        }
        Ok(())
    }

    /// Merges another table; later values win.
    pub fn merge(&mut self, other: &MetricTable) {
        for (m, d) in &other.directions {
            self.directions.insert(m.clone(), *d);
        }
        for cell in &other.cells {
            self.insert_cell(cell.clone());
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: MetricTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MetricTable::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::format(path, j.to_string()),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

fn first_appearance<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    it.filter(|s| seen.insert(*s)).map(str::to_string).collect()
}
