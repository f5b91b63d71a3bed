use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{fit_gaussian, frechet_distance, relative_from_fits, GaussianSummary};
use crate::embedding::{split_real, EmbeddingManifest, ManifestEntry, REAL_TAG};
use crate::error::{Error, Result};
use crate::ranking::{CellDiagnostics, Direction, MetricCell, MetricTable};

/// Metric identifier for a distance column, e.g. `rfd/swav-imagenet`.
pub fn metric_id(relative: bool, extractor: &str) -> String {
    let kind = if relative { "rfd" } else { "fd" };
    format!("{kind}/{extractor}")
}

struct Group<'a> {
    dataset: &'a str,
    extractor: &'a str,
    real: &'a ManifestEntry,
    models: Vec<&'a ManifestEntry>,
}

fn group_entries(manifest: &EmbeddingManifest) -> Result<Vec<Group<'_>>> {
    let mut groups: BTreeMap<(&str, &str), Vec<&ManifestEntry>> = BTreeMap::new();
    for e in &manifest.entries {
        groups
            .entry((e.dataset.as_str(), e.extractor.as_str()))
            .or_default()
            .push(e);
    }
    groups
        .into_iter()
        .map(|((dataset, extractor), entries)| {
            let mut real = entries.iter().filter(|e| e.model_tag == REAL_TAG);
            let real_entry = real.next().ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no \"{REAL_TAG}\" embedding set for dataset={dataset} extractor={extractor}"
                ))
            })?;
            if let Some(bad) = entries.iter().find(|e| e.d != real_entry.d) {
                return Err(Error::DimensionMismatch {
                    left: real_entry.d,
                    right: bad.d,
                });
            }
            let mut models: Vec<&ManifestEntry> = entries
                .iter()
                .copied()
                .filter(|e| e.model_tag != REAL_TAG)
                .collect();
            models.sort_by(|a, b| a.model_tag.cmp(&b.model_tag));
            Ok(Group {
                dataset,
                extractor,
                real: real_entry,
                models,
            })
        })
        .collect()
}

struct RealFits {
    full: GaussianSummary,
    halves: Option<(GaussianSummary, GaussianSummary)>,
}

fn fit_real(manifest: &EmbeddingManifest, group: &Group<'_>, relative: bool, seed: u64) -> Result<RealFits> {
    let set = manifest.load_entry(group.real)?;
    let full = fit_gaussian(&set)?;
    let halves = if relative {
        let (a, b) = split_real(&set, seed)?;
        Some((fit_gaussian(&a)?, fit_gaussian(&b)?))
    } else {
        None
    };
    Ok(RealFits { full, halves })
}

fn compute_cell(
    manifest: &EmbeddingManifest,
    group: &Group<'_>,
    real: &RealFits,
    model: &ManifestEntry,
    relative: bool,
    seed: u64,
) -> Result<MetricCell> {
    let gen = fit_gaussian(&manifest.load_entry(model)?)?;
    let (value, diagnostics) = match &real.halves {
        Some((h1, h2)) => {
            let r = relative_from_fits(&real.full, &gen, h1, h2, seed)?;
            let diag = CellDiagnostics {
                min_eigenvalue: r
                    .numerator
                    .diagnostics
                    .min_eigenvalue
                    .min(r.denominator.diagnostics.min_eigenvalue),
                regularization_applied: r.numerator.diagnostics.regularization_applied
                    || r.denominator.diagnostics.regularization_applied,
                numerator: Some(r.numerator.value),
                denominator: Some(r.denominator.value),
                split_seed: Some(seed),
            };
            (r.value, diag)
        }
        None => {
            let r = frechet_distance(&real.full, &gen)?;
            let diag = CellDiagnostics {
                min_eigenvalue: r.diagnostics.min_eigenvalue,
                regularization_applied: r.diagnostics.regularization_applied,
                numerator: None,
                denominator: None,
                split_seed: None,
            };
            (r.value, diag)
        }
    };
    Ok(MetricCell {
        dataset: group.dataset.to_string(),
        augmentation: model.model_tag.clone(),
        metric: metric_id(relative, group.extractor),
        value,
        diagnostics: Some(diagnostics),
    })
}

/// One distance per (dataset, extractor, generative model) in the manifest.
///
/// Groups run in parallel on the current rayon pool; cells come back sorted
/// by (dataset, augmentation, metric) whatever the execution order.
pub fn batch_fd(manifest: &EmbeddingManifest, relative: bool, seed: u64) -> Result<MetricTable> {
    let groups = group_entries(manifest)?;
    let per_group: Vec<Vec<MetricCell>> = groups
        .par_iter()
        .map(|group| {
            let real = fit_real(manifest, group, relative, seed)?;
            group
                .models
                .par_iter()
                .map(|model| compute_cell(manifest, group, &real, model, relative, seed))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells: Vec<MetricCell> = per_group.into_iter().flatten().collect();
    cells.sort_by(|a, b| {
        (&a.dataset, &a.augmentation, &a.metric).cmp(&(&b.dataset, &b.augmentation, &b.metric))
    });
    let mut table = MetricTable::new();
    for group in &groups {
        table.set_direction(metric_id(relative, group.extractor), Direction::LowerBetter);
    }
    table.cells = cells;
    Ok(table)
}
