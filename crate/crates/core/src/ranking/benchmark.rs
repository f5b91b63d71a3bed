use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::table::{MetricTable, BASELINE_AUGMENTATION};
use crate::error::{Error, Result};
use crate::stats::{paired_t_test, Alternative, TestResult};

/// How paired observations are formed when comparing an augmentation with the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// One pair per dataset, one test per metric.
    ByDataset,
    /// One pair per (dataset, metric) cell, pooling all metrics of the table.
    ByDatasetExtractor,
}

impl Pairing {
    pub fn as_str(self) -> &'static str {
        match self {
            Pairing::ByDataset => "by-dataset",
            Pairing::ByDatasetExtractor => "by-dataset-extractor",
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by-dataset" => Ok(Pairing::ByDataset),
            "by-dataset-extractor" => Ok(Pairing::ByDatasetExtractor),
            other => Err(Error::InvalidInput(format!(
                "unknown pairing {other:?} (expected by-dataset or by-dataset-extractor)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedObservation {
    pub dataset: String,
    pub metric: String,
    pub baseline: f64,
    pub augmented: f64,
}

/// Paired t-test of baseline values (first sample) against one augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkComparison {
    pub pairing: Pairing,
    /// The metric tested, or `*` when all metrics are pooled.
    pub metric: String,
    pub baseline: String,
    pub augmentation: String,
    pub pairs: Vec<PairedObservation>,
    pub result: TestResult,
}

/// Compares every non-baseline augmentation with the baseline row. The
/// first sample is the baseline, so `greater` asks whether the baseline
/// values exceed the augmented ones.
pub fn benchmark_augmentations(
    table: &MetricTable,
    pairing: Pairing,
    alternative: Alternative,
    alpha: f64,
) -> Result<Vec<BenchmarkComparison>> {
    let mut augmentations: Vec<String> = Vec::new();
    for d in table.datasets() {
        for a in table.augmentations(&d) {
            if a != BASELINE_AUGMENTATION && !augmentations.contains(&a) {
                augmentations.push(a);
            }
        }
    }
    let groups: Vec<(String, Vec<String>)> = match pairing {
        Pairing::ByDataset => table.metrics().into_iter().map(|m| (m.clone(), vec![m])).collect(),
        Pairing::ByDatasetExtractor => vec![("*".to_string(), table.metrics())],
    };

    let mut out = Vec::new();
    for (label, metrics) in &groups {
        for aug in &augmentations {
            let mut pairs = Vec::new();
            for dataset in table.datasets() {
                for m in metrics {
                    if let (Some(b), Some(a)) = (
                        table.get(&dataset, BASELINE_AUGMENTATION, m),
                        table.get(&dataset, aug, m),
                    ) {
                        pairs.push(PairedObservation {
                            dataset: dataset.clone(),
                            metric: m.clone(),
                            baseline: b,
                            augmented: a,
                        });
                    }
                }
            }
            if pairs.is_empty() {
                continue;
            }
            if pairs.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "{pairing} pairing gives {} pair for {aug} vs {BASELINE_AUGMENTATION} on {label}; at least 2 are needed",
                    pairs.len()
                )));
            }
            let x: Vec<f64> = pairs.iter().map(|p| p.baseline).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.augmented).collect();
            let result = paired_t_test(&x, &y, alternative, alpha)?;
            out.push(BenchmarkComparison {
                pairing,
                metric: label.clone(),
                baseline: BASELINE_AUGMENTATION.to_string(),
                augmentation: aug.clone(),
                pairs,
                result,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no augmentation shares a dataset with a {BASELINE_AUGMENTATION:?} row"
        )));
    }
    Ok(out)
}
