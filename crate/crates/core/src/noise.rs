//! Noise-item pruning from externally produced noise scores, and the
//! confusion-matrix bookkeeping used to evaluate a pruning model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::diag::{Diagnostic, RowCounts};
use crate::ingest::{Dataset, IngestError};

pub const NOISE_SCORES_FILE: &str = "noise_scores.csv";
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("noise threshold must be in [0,1], got {0}")]
    InvalidThreshold(f64),
    #[error("no labeled noise scores to evaluate")]
    NoLabeledScores,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
}

/// Probability that an item's image is noise, with optional ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseScore {
    pub item_id: u64,
    pub score: f64,
    pub label: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(value: f64) -> Result<Self, NoiseError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Threshold(value))
        } else {
            Err(NoiseError::InvalidThreshold(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold(DEFAULT_THRESHOLD)
    }
}

/// Decides, per scored item, whether it is noise.
pub trait NoiseFilter: Send + Sync {
    fn name(&self) -> &'static str;
    fn is_noise(&self, score: &NoiseScore) -> bool;
}

/// Prunes an item when its score reaches the threshold.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThresholdFilter {
    pub threshold: Threshold,
}

impl NoiseFilter for ThresholdFilter {
    fn name(&self) -> &'static str {
        "threshold"
    }

    fn is_noise(&self, score: &NoiseScore) -> bool {
        score.score >= self.threshold.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FilterOutcome {
    pub kept: BTreeSet<u64>,
    pub pruned: BTreeSet<u64>,
    /// Catalog items that had no score; they are kept.
    pub unscored: BTreeSet<u64>,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

pub fn apply_filter(dataset: &Dataset, scores: &[NoiseScore], threshold: Threshold) -> FilterOutcome {
    apply_noise_filter(dataset, scores, &ThresholdFilter { threshold })
}

pub fn apply_noise_filter(dataset: &Dataset, scores: &[NoiseScore], filter: &dyn NoiseFilter) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for s in scores {
        if filter.is_noise(s) {
            out.pruned.insert(s.item_id);
        } else {
            out.kept.insert(s.item_id);
        }
    }
    // an item scored twice keeps the noisier verdict
    out.kept.retain(|id| !out.pruned.contains(id));

    for item in dataset.items() {
        let id = item.item_id;
        if !out.kept.contains(&id) && !out.pruned.contains(&id) {
            out.unscored.insert(id);
            out.kept.insert(id);
            out.diagnostics.push(Diagnostic::warning(
                "noise_filter",
                None,
                format!("item {id} has no noise score; kept"),
            ));
        }
    }
    out
}

/// Counts with noise as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(scores: &[NoiseScore], threshold: f64) -> Result<ConfusionMatrix, NoiseError> {
    let filter = ThresholdFilter {
        threshold: Threshold::new(threshold)?,
    };
    let mut cm = ConfusionMatrix::default();
    let mut labeled = 0usize;
    for s in scores {
        let Some(actual) = s.label else { continue };
        labeled += 1;
        match (filter.is_noise(s), actual) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    if labeled == 0 {
        return Err(NoiseError::NoLabeledScores);
    }
    Ok(cm)
}

/// A ratio that may be undefined because its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    Undefined,
}

impl Metric {
    fn ratio(num: u64, den: u64) -> Metric {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Undefined => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v}"),
            Metric::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub accuracy: Metric,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics, NoiseError> {
    let total = cm.total();
    if total == 0 {
        return Err(NoiseError::EmptyMatrix);
    }
    let accuracy = Metric::ratio(cm.tp + cm.tn, total);
    let precision = Metric::ratio(cm.tp, cm.tp + cm.fp);
    let recall = Metric::ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Metric::Value(p), Metric::Value(r)) if p > 0.0 && r > 0.0 => Metric::Value(2.0 * p * r / (p + r)),
        _ => Metric::Undefined,
    };
    Ok(ClassificationMetrics {
        accuracy,
        precision,
        recall,
        f1,
    })
}

pub fn load_noise_scores(path: &Path) -> Result<(Vec<NoiseScore>, Vec<Diagnostic>, RowCounts), IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_noise_scores(file, &path.display().to_string())
}

/// Reads `item_id,score[,label]`. Scores outside [0,1], unknown labels and
/// repeated item ids reject the row.
pub fn read_noise_scores<R: io::Read>(
    reader: R,
    source: &str,
) -> Result<(Vec<NoiseScore>, Vec<Diagnostic>, RowCounts), IngestError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Csv {
            file: source.to_string(),
            source: e,
        })?
        .clone();
    let with_label = match headers.iter().collect::<Vec<_>>().as_slice() {
        ["item_id", "score"] => false,
        ["item_id", "score", "label"] => true,
        other => {
            return Err(IngestError::Header {
                file: source.to_string(),
                expected: "item_id,score[,label]".to_string(),
                found: other.join(","),
            })
        }
    };
    let width = if with_label { 3 } else { 2 };

    let mut out = Vec::new();
    let mut diags = Vec::new();
    let mut counts = RowCounts::default();
    let mut seen = BTreeMap::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        counts.input_rows += 1;
        let record = record.map_err(|e| IngestError::Csv {
            file: source.to_string(),
            source: e,
        })?;
        let mut reject = |msg: String| {
            diags.push(Diagnostic::fatal(source, Some(row), msg));
            counts.rejected += 1;
        };
        if record.len() != width {
            reject(format!("expected {width} fields, found {}", record.len()));
            continue;
        }
        let Ok(item_id) = record[0].parse::<u64>() else {
            reject(format!("bad item_id `{}`", &record[0]));
            continue;
        };
        let score = match record[1].parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => v,
            _ => {
                reject(format!("score `{}` is not a number in [0,1]", &record[1]));
                continue;
            }
        };
        let label = if with_label {
            match &record[2] {
                "" => None,
                "0" => Some(false),
                "1" => Some(true),
                other => {
                    reject(format!("label `{other}` must be 0 or 1"));
                    continue;
                }
            }
        } else {
            None
        };
        if let Some(first) = seen.insert(item_id, row) {
            reject(format!("item {item_id} already scored on row {first}"));
            continue;
        }
        out.push(NoiseScore { item_id, score, label });
        counts.kept += 1;
    }
    Ok((out, diags, counts))
}

pub fn write_noise_scores<W: io::Write>(writer: W, scores: &[NoiseScore], with_label: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if with_label {
        w.write_record(["item_id", "score", "label"])?;
    } else {
        w.write_record(["item_id", "score"])?;
    }
    for s in scores {
        let mut rec = vec![s.item_id.to_string(), s.score.to_string()];
        if with_label {
            rec.push(match s.label {
                Some(true) => "1".into(),
                Some(false) => "0".into(),
                None => String::new(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
