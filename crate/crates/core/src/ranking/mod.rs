//! Metric tables, model rankings, rank agreement between metrics, human
//! judgment correlation and report rendering.

mod benchmark;
mod consistency;
mod human;
mod rank;
mod report;
mod table;

pub use benchmark::{benchmark_augmentations, BenchmarkComparison, PairedObservation, Pairing};
pub use consistency::{consistency, ConsistencyReport, DatasetConsistency, OverallTau, PairTau};
pub use human::{
    correlate_with_humans, human_direction, metric_values, read_human_csv, read_human_file,
    vtt_stats_table, write_human_csv, HumanCorrelation, HUMAN_CSV_HEADER, HUMAN_STATISTICS,
};
pub use rank::{best_marks, dagger_marks, kendall_tau, rank, CellKey, Ranking};
pub use report::{
    emit_report, format_p, format_value, NamedTable, Report, ReportFormat, REPORT_SCHEMA_VERSION,
};
pub use table::{
    CellDiagnostics, Direction, MetricCell, MetricTable, BASELINE_AUGMENTATION,
    METRIC_TABLE_SCHEMA_VERSION,
};
