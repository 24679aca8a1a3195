use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::PipelineConfig;
use crate::diag::{Diagnostic, RowCounts, Severity};
use crate::ingest::LinkReport;
use crate::noise::{ClassificationMetrics, ConfusionMatrix};
use crate::popularity::{CountSummary, Season};
use crate::trendmine::{FeatureClass, FeatureClassification, ItemsetComparison, MergedSeasonView, TrendDelta};

pub const REPORT_FILE: &str = "report.json";
pub const METADATA_FILE: &str = "metadata.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MONTHS_FILE: &str = "months.csv";
pub const ITEMSETS_FILE: &str = "itemsets.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const TREND_FILE: &str = "trend.csv";
pub const PRIORS_FILE: &str = "priors.json";
pub const FEATURE_BARS_FILE: &str = "feature_bars.csv";
pub const DELTA_CHART_FILE: &str = "delta_chart.csv";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiagnosticSummary {
    pub warnings: usize,
    pub errors: usize,
    pub fatal: usize,
    pub by_source: BTreeMap<String, usize>,
}

impl DiagnosticSummary {
    pub fn of(diags: &[Diagnostic]) -> Self {
        let mut s = DiagnosticSummary::default();
        for d in diags {
            match d.severity {
                Severity::Warning => s.warnings += 1,
                Severity::Error => s.errors += 1,
                Severity::Fatal => s.fatal += 1,
            }
            *s.by_source.entry(d.source.clone()).or_default() += 1;
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InputRowCounts {
    pub items: RowCounts,
    pub transactions: RowCounts,
    pub attributes: RowCounts,
    pub noise_scores: Option<RowCounts>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NoiseSummary {
    pub applied: bool,
    pub kept: usize,
    pub pruned: usize,
    pub unscored: usize,
    /// Present when the score file carries labels.
    pub confusion: Option<ConfusionMatrix>,
    pub metrics: Option<ClassificationMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub season: Season,
    pub category: String,
    pub ranked: usize,
    pub popular: usize,
    pub unpopular: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularitySummary {
    pub transactions: CountSummary,
    pub percentile: f64,
    pub cells: Vec<CellSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BinarizeSummary {
    pub items: usize,
    pub skipped_without_attributes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrfSummary {
    pub solver: String,
    pub items: usize,
    pub changed_items: usize,
    pub flips: usize,
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemsetRunSummary {
    pub season: Season,
    pub category: String,
    pub set_kind: SetKind,
    pub transactions: usize,
    pub min_support: u64,
    pub itemsets: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Popular,
    Unpopular,
}

impl SetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::Popular => "popular",
            SetKind::Unpopular => "unpopular",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellComparison {
    pub season: Season,
    pub category: String,
    pub comparisons: Vec<ItemsetComparison>,
}

/// Everything a run produced, minus wall-clock data (kept in `metadata.json`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub stages: Vec<&'static str>,
    pub diagnostics: DiagnosticSummary,
    pub row_counts: InputRowCounts,
    pub link: LinkReport,
    pub noise: NoiseSummary,
    pub popularity: PopularitySummary,
    pub binarize: BinarizeSummary,
    pub crf: Option<CrfSummary>,
    pub itemsets: Vec<ItemsetRunSummary>,
    pub features: FeatureClassification,
    pub merged_features: BTreeMap<Season, MergedSeasonView>,
    pub trend: Vec<TrendDelta>,
    pub itemset_comparisons: Vec<CellComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub millis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub version: &'static str,
    pub started_at: String,
    pub finished_at: String,
    pub threads: usize,
    pub stages: Vec<StageTiming>,
}

pub(super) fn create(dir: &Path, name: &str) -> io::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?)))
}

pub(super) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::other)?;
    w.write_all(b"\n")?;
    w.flush()
}

pub(super) fn write_diagnostics(dir: &Path, diags: &[Diagnostic]) -> io::Result<()> {
    let mut w = create(dir, DIAGNOSTICS_FILE)?;
    w.write_record(["severity", "source", "row", "message"])?;
    for d in diags {
        let row = d.row.map(|r| r.to_string()).unwrap_or_default();
        w.write_record([d.severity.as_str(), &d.source, &row, &d.message])?;
    }
    w.flush()
}

pub(super) fn write_features(dir: &Path, classification: &FeatureClassification) -> io::Result<()> {
    let mut w = create(dir, FEATURES_FILE)?;
    w.write_record(["season", "attribute", "sup_pop", "sup_unpop", "lift", "class"])?;
    for e in &classification.entries {
        w.write_record([
            e.season.as_str(),
            &e.attribute,
            &e.sup_pop.to_string(),
            &e.sup_unpop.to_string(),
            &e.lift.to_string(),
            e.class.as_str(),
        ])?;
    }
    w.flush()
}

pub(super) fn write_trend(dir: &Path, trend: &[TrendDelta]) -> io::Result<()> {
    let mut w = create(dir, TREND_FILE)?;
    w.write_record(["attribute", "spring_sup", "winter_sup", "delta", "direction"])?;
    for t in trend {
        w.write_record([
            &t.attribute,
            &t.first_sup.to_string(),
            &t.second_sup.to_string(),
            &t.delta.to_string(),
            t.direction.as_str(),
        ])?;
    }
    w.flush()
}

/// Figure-ready CSVs: monthly sales, non-neutral feature bars, and the
/// seasonal delta chart (already sorted by |delta| descending).
pub fn emit_plotdata(dir: &Path, months: &BTreeMap<(i32, u32), u64>, report: &RunReport) -> io::Result<()> {
    let mut w = create(dir, MONTHS_FILE)?;
    w.write_record(["year", "month", "count"])?;
    for ((y, m), c) in months {
        w.write_record([y.to_string(), m.to_string(), c.to_string()])?;
    }
    w.flush()?;

    let mut w = create(dir, FEATURE_BARS_FILE)?;
    w.write_record(["season", "attribute", "class", "sup_pop", "sup_unpop"])?;
    for e in report
        .features
        .entries
        .iter()
        .filter(|e| e.class != FeatureClass::Neutral)
    {
        w.write_record([
            e.season.as_str(),
            &e.attribute,
            e.class.as_str(),
            &e.sup_pop.to_string(),
            &e.sup_unpop.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = create(dir, DELTA_CHART_FILE)?;
    w.write_record(["attribute", "delta", "direction"])?;
    for t in &report.trend {
        w.write_record([&t.attribute, &t.delta.to_string(), t.direction.as_str()])?;
    }
    w.flush()
}
