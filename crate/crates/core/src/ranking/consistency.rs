use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::rank::{kendall_tau, rank};
use super::table::MetricTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTau {
    pub metric_a: String,
    pub metric_b: String,
    /// `None` when one of the rankings ties every label.
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConsistency {
    pub dataset: String,
    pub pairs: Vec<PairTau>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallTau {
    pub metric_a: String,
    pub metric_b: String,
    /// Mean of the defined per-dataset taus.
    pub mean_tau: Option<f64>,
    pub datasets: usize,
}

/// Rank agreement between every pair of metrics, per dataset and averaged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub metrics: Vec<String>,
    pub per_dataset: Vec<DatasetConsistency>,
    pub overall: Vec<OverallTau>,
}

impl ConsistencyReport {
    pub fn tau(&self, dataset: &str, a: &str, b: &str) -> Option<f64> {
        if a == b {
            return Some(1.0);
        }
        let d = self.per_dataset.iter().find(|d| d.dataset == dataset)?;
        d.pairs
            .iter()
            .find(|p| (p.metric_a == a && p.metric_b == b) || (p.metric_a == b && p.metric_b == a))
            .and_then(|p| p.tau)
    }
}

/// Pairs are taken in the order of `metrics` (table order when `None`); a
/// pair is skipped for a dataset where the two columns cover different models.
pub fn consistency(table: &MetricTable, metrics: Option<&[String]>) -> Result<ConsistencyReport> {
    let metrics: Vec<String> = match metrics {
        Some(m) => m.to_vec(),
        None => table.metrics(),
    };
    let mut per_dataset = Vec::new();
    for dataset in table.datasets() {
        let mut pairs = Vec::new();
        for i in 0..metrics.len() {
            for j in i + 1..metrics.len() {
                let (a, b) = (&metrics[i], &metrics[j]);
                let labels = |m: &str| -> BTreeSet<String> {
                    table.column(&dataset, m).into_iter().map(|(l, _)| l).collect()
                };
                let (la, lb) = (labels(a), labels(b));
                if la.is_empty() || la != lb {
                    continue;
                }
                let tau = match kendall_tau(&rank(table, &dataset, a)?, &rank(table, &dataset, b)?) {
                    Ok(t) => Some(t),
                    Err(Error::Degenerate(_)) => None,
                    Err(e) => return Err(e),
                };
                pairs.push(PairTau {
                    metric_a: a.clone(),
                    metric_b: b.clone(),
                    tau,
                });
            }
        }
        per_dataset.push(DatasetConsistency { dataset, pairs });
    }

    let mut overall = Vec::new();
    for i in 0..metrics.len() {
        for j in i + 1..metrics.len() {
            let (a, b) = (&metrics[i], &metrics[j]);
            let taus: Vec<Option<f64>> = per_dataset
                .iter()
                .flat_map(|d| &d.pairs)
                .filter(|p| &p.metric_a == a && &p.metric_b == b)
                .map(|p| p.tau)
                .collect();
            if taus.is_empty() {
                continue;
            }
            let defined: Vec<f64> = taus.iter().flatten().copied().collect();
            overall.push(OverallTau {
                metric_a: a.clone(),
                metric_b: b.clone(),
                mean_tau: (!defined.is_empty())
                    .then(|| defined.iter().sum::<f64>() / defined.len() as f64),
                datasets: taus.len(),
            });
        }
    }
    Ok(ConsistencyReport {
        metrics,
        per_dataset,
        overall,
    })
}
