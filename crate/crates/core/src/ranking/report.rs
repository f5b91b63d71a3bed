use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::benchmark::BenchmarkComparison;
use super::consistency::ConsistencyReport;
use super::human::HumanCorrelation;
use super::rank::{best_marks, dagger_marks, CellKey, Ranking};
use super::table::{MetricTable, BASELINE_AUGMENTATION};
use crate::error::{Error, Result};
use crate::provenance::RunInfo;
use crate::vtt::VttStats;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidInput(format!(
                "unknown format {other:?} (expected markdown or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTable {
    pub name: String,
    pub table: MetricTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
    #[serde(default)]
    pub tables: Vec<NamedTable>,
    #[serde(default)]
    pub rankings: Vec<Ranking>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyReport>,
    #[serde(default)]
    pub vtt_stats: Vec<VttStats>,
    #[serde(default)]
    pub correlations: Vec<HumanCorrelation>,
    #[serde(default)]
    pub benchmarks: Vec<BenchmarkComparison>,
}

impl Default for Report {
    fn default() -> Self {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            run: None,
            tables: Vec::new(),
            rankings: Vec::new(),
            consistency: None,
            vtt_stats: Vec::new(),
            correlations: Vec::new(),
            benchmarks: Vec::new(),
        }
    }
}

impl Report {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: Report = serde_json::from_str(text)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported report schema_version {}",
                r.schema_version
            )));
        }
        Ok(r)
    }
}

pub fn emit_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Markdown => markdown(report),
    }
}

/// p-values print like `p=.497`, `p<.001`, `p>.999`.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p<.001".into()
    } else if p > 0.999 {
        "p>.999".into()
    } else {
        let s = format!("{p:.3}");
        format!("p={}", s.trim_start_matches('0'))
    }
}

/// Display rule per metric: human rates as whole percents, p-value
/// statistics in p notation, everything else with two decimals.
pub fn format_value(metric: &str, value: f64) -> String {
    match metric {
        "fpr" | "fnr" => format!("{value:.0}"),
        m if m.ends_with("_p") => format_p(value),
        _ if value != 0.0 && value.abs() < 0.01 => format!("{value:.2e}"),
        _ => format!("{value:.2}"),
    }
}

fn escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn render_table(out: &mut String, nt: &NamedTable) -> Result<()> {
    let t = &nt.table;
    let metrics = t.metrics();
    let daggers = if t
        .datasets()
        .iter()
        .all(|d| t.augmentations(d).iter().any(|a| a == BASELINE_AUGMENTATION))
    {
        dagger_marks(t)?
    } else {
        Default::default()
    };
    let best = best_marks(t)?;

    writeln!(out, "### {}\n", escape(&nt.name)).unwrap();
    write!(out, "| Dataset | Aug |").unwrap();
    for m in &metrics {
        write!(out, " {} {} |", escape(m), t.direction(m)?.arrow()).unwrap();
    }
    write!(out, "\n|---|---|").unwrap();
    for _ in &metrics {
        out.push_str("---|");
    }
    out.push('\n');
    for dataset in t.datasets() {
        for aug in t.augmentations(&dataset) {
            write!(out, "| {} | {} |", escape(&dataset), escape(&aug)).unwrap();
            for m in &metrics {
                let key = CellKey::new(&dataset, &aug, m);
                let cell = match t.get(&dataset, &aug, m) {
                    None => String::new(),
                    Some(v) => {
                        let mut s = format_value(m, v);
                        if best.contains(&key) {
                            s = format!("**__{s}__**");
                        }
                        if daggers.get(&key).copied().unwrap_or(false) {
                            s.push('†');
                        }
                        s
                    }
                };
                write!(out, " {cell} |").unwrap();
            }
            out.push('\n');
        }
    }
    out.push('\n');
    Ok(())
}

fn opt_f(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.digits$}"))
}

fn markdown(report: &Report) -> Result<String> {
    let mut out = String::new();
    if let Some(run) = &report.run {
        out.push_str(&run.markdown());
    }
    out.push_str("# Evaluation report\n\n");
    writeln!(out, "Schema version {}. Best value per dataset in **__bold underline__**; † marks a value worse than the {BASELINE_AUGMENTATION} row; ↑/↓ give the preferred direction.\n", report.schema_version).unwrap();

    out.push_str("## Metric tables\n\n");
    for nt in &report.tables {
        render_table(&mut out, nt)?;
    }

    out.push_str("## Rankings\n\n");
    if !report.rankings.is_empty() {
        out.push_str("| Dataset | Metric | Order (best first) | Ties |\n|---|---|---|---|\n");
        for r in &report.rankings {
            let ties = r
                .ties
                .iter()
                .map(|g| g.join(" = "))
                .collect::<Vec<_>>()
                .join("; ");
            writeln!(
                out,
                "| {} | {} | {} | {} |",
                escape(&r.dataset),
                escape(&r.metric),
                escape(&r.order.join(" > ")),
                escape(&ties)
            )
            .unwrap();
        }
        out.push('\n');
    }

    out.push_str("## Ranking consistency (Kendall tau-b)\n\n");
    if let Some(c) = &report.consistency {
        if !c.overall.is_empty() {
            out.push_str("| Metric A | Metric B | Mean tau | Datasets |\n|---|---|---|---|\n");
            for o in &c.overall {
                writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    escape(&o.metric_a),
                    escape(&o.metric_b),
                    opt_f(o.mean_tau, 3),
                    o.datasets
                )
                .unwrap();
            }
            out.push('\n');
            out.push_str("| Dataset | Metric A | Metric B | tau |\n|---|---|---|---|\n");
            for d in &c.per_dataset {
                for p in &d.pairs {
                    writeln!(
                        out,
                        "| {} | {} | {} | {} |",
                        escape(&d.dataset),
                        escape(&p.metric_a),
                        escape(&p.metric_b),
                        opt_f(p.tau, 3)
                    )
                    .unwrap();
                }
            }
            out.push('\n');
        }
    }

    out.push_str("## Visual Turing tests\n\n");
    if !report.vtt_stats.is_empty() {
        out.push_str("| Study | Participant | FPR [%] | TPR [%] | Mean Likert real | Mean Likert generated | t test |\n|---|---|---|---|---|---|---|\n");
        for s in &report.vtt_stats {
            for (p, t) in s.per_participant.iter().zip(&s.participant_tests) {
                let test = t.result.as_ref().map_or_else(|| "n/a".into(), |r| format_p(r.p_value));
                writeln!(
                    out,
                    "| {} | {} | {:.0} | {:.0} | {:.2} | {:.2} | {} |",
                    escape(&s.study_id),
                    escape(&p.participant),
                    p.fpr,
                    p.tpr,
                    p.mean_likert_real,
                    p.mean_likert_generated,
                    test
                )
                .unwrap();
            }
        }
        out.push('\n');
    }

    out.push_str("## Correlation with human judgment\n\n");
    if !report.correlations.is_empty() {
        out.push_str("| Metric | Human statistic | n | r | p | alpha | reject |\n|---|---|---|---|---|---|---|\n");
        for c in &report.correlations {
            writeln!(
                out,
                "| {} | {} | {} | {:.3} | {:.3} | {} | {} |",
                escape(&c.metric),
                escape(&c.statistic),
                c.result.n,
                c.result.r,
                c.result.p_value,
                c.result.alpha,
                c.result.reject
            )
            .unwrap();
        }
        out.push('\n');
    }

    out.push_str("## Augmentation benchmarks\n\n");
    if !report.benchmarks.is_empty() {
        out.push_str("| Metric | Pairing | Comparison | Pairs | t | df | p | Alternative | reject |\n|---|---|---|---|---|---|---|---|---|\n");
        for b in &report.benchmarks {
            writeln!(
                out,
                "| {} | {} | {} vs {} | {} | {:.4} | {} | {:.6} | {} | {} |",
                escape(&b.metric),
                b.pairing,
                escape(&b.baseline),
                escape(&b.augmentation),
                b.pairs.len(),
                b.result.statistic,
                opt_f(b.result.df, 0),
                b.result.p_value,
                b.result.alternative,
                b.result.reject
            )
            .unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}
