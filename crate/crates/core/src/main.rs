use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use genimg_eval::embedding::EmbeddingManifest;
use genimg_eval::frechet::batch_fd;
use genimg_eval::provenance::RunInfo;
use genimg_eval::ranking::{
    benchmark_augmentations, consistency, correlate_with_humans, emit_report, metric_values, rank,
    read_human_file, vtt_stats_table, HumanCorrelation, MetricTable, NamedTable, Pairing, Report,
    ReportFormat,
};
use genimg_eval::service::{serve, ServiceConfig};
use genimg_eval::stats::{Alternative, TTestVariant};
use genimg_eval::vtt::{analyze_study_with, read_study_file, AnalysisOptions, DEFAULT_VTT_ALPHA};
use genimg_eval::{Error, Result};

const THREADS_ENV: &str = "GENIMG_EVAL_THREADS";

#[derive(Parser)]
#[command(name = "genimg-eval", version, about = "Evaluate synthetic-image generative models")]
struct Cli {
    /// Seed for every random choice (real-set splits).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Format written to stdout when --out is not given.
    #[arg(long, global = true, default_value = "markdown", value_parser = parse_format)]
    format: ReportFormat,

    /// Output stem: writes <stem>.json and <stem>.md instead of printing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fréchet or relative Fréchet distances for every model in a manifest.
    Fd {
        #[arg(long)]
        manifest: PathBuf,
        /// Relative Fréchet distance (uses a seeded split of the real set).
        #[arg(long)]
        relative: bool,
    },
    /// Visual Turing test statistics from response CSVs.
    VttAnalyze {
        /// `STUDY_ID=PATH`, or a PATH whose file stem is the study id.
        #[arg(required = true)]
        responses: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_VTT_ALPHA)]
        alpha_t: f64,
        #[arg(long, default_value_t = DEFAULT_VTT_ALPHA)]
        alpha_ks: f64,
        #[arg(long, default_value = "pooled", value_parser = parse_variant)]
        t_test: TTestVariant,
    },
    /// Rankings, rank agreement and optional correlation with human statistics.
    Rank {
        /// Metric table JSON; repeatable, tables are merged.
        #[arg(long = "table", required = true)]
        tables: Vec<PathBuf>,
        /// Human statistics CSV (dataset, augmentation, statistic_name, value).
        #[arg(long)]
        human: Option<PathBuf>,
        /// Correlate every metric with the human statistic.
        #[arg(long, requires = "human")]
        correlate: bool,
        #[arg(long, default_value = "likert_diff")]
        statistic: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Paired t-tests of each augmentation against the baseline row.
    BenchmarkAug {
        #[command(flatten)]
        input: BenchInput,
        /// Restrict to these metrics or statistics; repeatable.
        #[arg(long = "metric")]
        metrics: Vec<String>,
        #[arg(long, default_value = "by-dataset", value_parser = parse_pairing)]
        pairing: Pairing,
        #[arg(long, default_value = "two-sided", value_parser = parse_alternative)]
        alternative: Alternative,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Serve visual Turing test sessions over HTTP.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct BenchInput {
    /// Metric table JSON; repeatable.
    #[arg(long = "table")]
    tables: Vec<PathBuf>,
    /// Human statistics CSV.
    #[arg(long)]
    human: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<TTestVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pairing(s: &str) -> Result<Pairing, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_alternative(s: &str) -> Result<Alternative, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// The JSON and markdown renderings of one command's result.
struct Output {
    json: String,
    markdown: String,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("cannot configure thread pool: {e}")))
}

fn load_tables(paths: &[PathBuf]) -> Result<MetricTable> {
    let mut merged = MetricTable::new();
    for p in paths {
        merged.merge(&MetricTable::load(p)?);
    }
    merged.run = None;
    Ok(merged)
}

fn report_output(report: &Report) -> Result<Output> {
    Ok(Output {
        json: emit_report(report, ReportFormat::Json)?,
        markdown: emit_report(report, ReportFormat::Markdown)?,
    })
}

fn cmd_fd(manifest: &Path, relative: bool, seed: u64) -> Result<Output> {
    let manifest = EmbeddingManifest::load(manifest)?;
    let mut table = batch_fd(&manifest, relative, seed)?;
    let command = if relative { "fd --relative" } else { "fd" };
    let run = RunInfo::new(command).seed(seed);
    table.run = Some(run.clone());
    let report = Report {
        run: Some(run),
        tables: vec![NamedTable {
            name: if relative { "rfd" } else { "fd" }.into(),
            table: table.clone(),
        }],
        ..Report::default()
    };
    Ok(Output {
        json: table.to_json()?,
        markdown: emit_report(&report, ReportFormat::Markdown)?,
    })
}

fn study_input(arg: &str) -> Result<(String, PathBuf)> {
    if let Some((id, path)) = arg.split_once('=') {
        if id.is_empty() {
            return Err(Error::InvalidInput(format!("empty study id in {arg:?}")));
        }
        return Ok((id.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(arg);
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::InvalidInput(format!("cannot derive a study id from {arg:?}")))?;
    Ok((id, path))
}

fn cmd_vtt_analyze(inputs: &[String], options: AnalysisOptions, seed: u64) -> Result<Output> {
    let mut stats = Vec::new();
    for arg in inputs {
        let (id, path) = study_input(arg)?;
        let study = read_study_file(&id, &path)?;
        stats.push(analyze_study_with(&study, &options)?);
    }
    let report = Report {
        run: Some(
            RunInfo::new("vtt-analyze")
                .seed(seed)
                .alpha("t", options.alpha_t)
                .alpha("ks", options.alpha_ks)
                .t_test_variant(options.variant),
        ),
        tables: vec![NamedTable {
            name: "visual Turing tests".into(),
            table: vtt_stats_table(&stats),
        }],
        vtt_stats: stats,
        ..Report::default()
    };
    report_output(&report)
}

fn cmd_rank(
    tables: &[PathBuf],
    human: Option<&Path>,
    correlate: bool,
    statistic: &str,
    alpha: f64,
    seed: u64,
) -> Result<Output> {
    let table = load_tables(tables)?;
    let mut rankings = Vec::new();
    for d in table.datasets() {
        for m in table.metrics() {
            if !table.column(&d, &m).is_empty() {
                rankings.push(rank(&table, &d, &m)?);
            }
        }
    }
    let mut run = RunInfo::new("rank").seed(seed);
    let mut named = vec![NamedTable { name: "metrics".into(), table: table.clone() }];
    let mut correlations = Vec::new();
    if let Some(path) = human {
        let human = read_human_file(path)?;
        if correlate {
            run = run.alpha("pearson", alpha);
            let values = metric_values(&human, statistic);
            if values.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "{} has no rows for statistic {statistic:?}",
                    path.display()
                )));
            }
            for m in table.metrics() {
                correlations.push(HumanCorrelation {
                    metric: m.clone(),
                    statistic: statistic.to_string(),
                    result: correlate_with_humans(&table, &m, &values, alpha)?,
                });
            }
        }
        named.push(NamedTable { name: "human".into(), table: human });
    }
    let report = Report {
        run: Some(run),
        tables: named,
        rankings,
        consistency: Some(consistency(&table, None)?),
        correlations,
        ..Report::default()
    };
    report_output(&report)
}

fn cmd_benchmark(
    input: &BenchInput,
    metrics: &[String],
    pairing: Pairing,
    alternative: Alternative,
    alpha: f64,
    seed: u64,
) -> Result<Output> {
    let mut table = load_tables(&input.tables)?;
    if let Some(path) = &input.human {
        table.merge(&read_human_file(path)?);
    }
    if !metrics.is_empty() {
        for m in metrics {
            if !table.directions.contains_key(m) {
                return Err(Error::InvalidInput(format!("no metric {m:?} in the inputs")));
            }
        }
        table.cells.retain(|c| metrics.contains(&c.metric));
        table.directions.retain(|m, _| metrics.contains(m));
    }
    let benchmarks = benchmark_augmentations(&table, pairing, alternative, alpha)?;
    let report = Report {
        run: Some(
            RunInfo::new("benchmark-aug")
                .seed(seed)
                .alpha("t", alpha)
                .t_test_variant("paired")
                .pairing(pairing),
        ),
        benchmarks,
        ..Report::default()
    };
    report_output(&report)
}

fn write_output(output: &Output, out: Option<&Path>, format: ReportFormat) -> Result<()> {
    match out {
        None => {
            let text = match format {
                ReportFormat::Json => &output.json,
                ReportFormat::Markdown => &output.markdown,
            };
            print!("{text}");
            Ok(())
        }
        Some(stem) => {
            let stem = match stem.extension().and_then(|e| e.to_str()) {
                Some("json" | "md") => stem.with_extension(""),
                _ => stem.to_path_buf(),
            };
            for (ext, text) in [("json", &output.json), ("md", &output.markdown)] {
                let mut name = stem.clone().into_os_string();
                name.push(".");
                name.push(ext);
                let path = PathBuf::from(name);
                std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let output = match &cli.command {
        Command::Fd { manifest, relative } => cmd_fd(manifest, *relative, cli.seed)?,
        Command::VttAnalyze {
            responses,
            alpha_t,
            alpha_ks,
            t_test,
        } => {
            let options = AnalysisOptions {
                alpha_t: *alpha_t,
                alpha_ks: *alpha_ks,
                variant: *t_test,
            };
            cmd_vtt_analyze(responses, options, cli.seed)?
        }
        Command::Rank {
            tables,
            human,
            correlate,
            statistic,
            alpha,
        } => cmd_rank(tables, human.as_deref(), *correlate, statistic, *alpha, cli.seed)?,
        Command::BenchmarkAug {
            input,
            metrics,
            pairing,
            alternative,
            alpha,
        } => cmd_benchmark(input, metrics, *pairing, *alternative, *alpha, cli.seed)?,
        Command::Serve { config, port, host } => {
            let config = ServiceConfig::load(config)?;
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| Error::InvalidInput(format!("cannot start runtime: {e}")))?;
            return runtime.block_on(serve(config, SocketAddr::new(*host, *port)));
        }
    };
    write_output(&output, cli.out.as_deref(), cli.format)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
