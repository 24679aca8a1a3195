//! End-to-end run: ingest → noise filter → popularity → (optional CRF
//! rescoring) → binarize → itemset mining → trend mining → reports.

mod config;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use chrono::{DateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use thiserror::Error;

use crate::attribute_model::{estimate_priors, solver_registry, AttributePosterior, AttributePriorModel, SolverParams};
use crate::diag::{count_fatal, Diagnostic, Severity};
use crate::fpgrowth::{absolute_min_support, binarize, miner_registry, AttributeSet, MinerParams};
use crate::ingest::{load_dataset_dir, Dataset};
use crate::noise::{apply_filter, confusion, load_noise_scores, metrics, NOISE_SCORES_FILE};
use crate::popularity::{count_frequencies, monthly_histogram, select_popular, PopularitySelection};
use crate::trendmine::{
    classify, feature_stats, frequent_sets_report, merged_view, trend_deltas, MinedSets, SeasonSets, ANALYZED_SEASONS,
};

pub use config::{validate_config, ConfigError, PipelineConfig, ValidConfig};
pub use report::*;

pub const THREADS_ENV: &str = "TRENDFORGE_THREADS";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    /// 2 for configuration problems, 1 for everything discovered while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 1,
        }
    }

    fn stage(stage: &'static str, message: impl ToString) -> Self {
        PipelineError::Stage {
            stage,
            message: message.to_string(),
        }
    }
}

/// Reads `TRENDFORGE_THREADS` and sizes the global worker pool. Returns the
/// configured count, or `None` when the variable is unset.
pub fn configure_threads_from_env() -> Result<Option<usize>, ConfigError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError {
        field: "TRENDFORGE_THREADS",
        message: format!("must be a positive integer, got `{raw}`"),
    })?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub metadata: RunMetadata,
    pub priors: Option<AttributePriorModel>,
}

struct Stopwatch {
    timings: Vec<StageTiming>,
    stages: Vec<&'static str>,
    current: Option<(&'static str, Instant)>,
}

impl Stopwatch {
    fn new() -> Self {
        Stopwatch {
            timings: Vec::new(),
            stages: Vec::new(),
            current: None,
        }
    }

    fn start(&mut self, stage: &'static str) {
        self.stop();
        self.stages.push(stage);
        self.current = Some((stage, Instant::now()));
    }

    fn stop(&mut self) {
        if let Some((stage, t0)) = self.current.take() {
            self.timings.push(StageTiming {
                stage,
                millis: t0.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
}

fn timestamp(t: SystemTime) -> String {
    DateTime::<Utc>::from(t).to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Validates `config`, runs every stage and writes the outputs.
pub fn run(config: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    let valid = validate_config(config).map_err(PipelineError::Config)?;
    run_validated(&valid)
}

pub fn run_validated(cfg: &ValidConfig) -> Result<RunOutput, PipelineError> {
    let started = SystemTime::now();
    let mut clock = Stopwatch::new();
    let raw = &cfg.raw;
    let mut diagnostics: Vec<Diagnostic> = Vec::new();

    clock.start("ingest");
    let load = load_dataset_dir(&raw.input_dir, cfg.window).map_err(|e| PipelineError::stage("ingest", e))?;
    diagnostics.extend(load.all_diagnostics().cloned());
    let fatal = count_fatal(&diagnostics);
    if fatal > 0 {
        let first = diagnostics
            .iter()
            .find(|d| d.severity == Severity::Fatal)
            .expect("counted");
        return Err(PipelineError::stage(
            "ingest",
            format!("{fatal} rows violate input invariants; first: {first}"),
        ));
    }
    let dataset = &load.dataset;
    let mut row_counts = InputRowCounts {
        items: load.items.counts,
        transactions: load.transactions.counts,
        attributes: load.attributes.counts,
        noise_scores: None,
    };

    clock.start("noise_filter");
    let (kept, noise_summary) = noise_stage(cfg, dataset, &mut diagnostics, &mut row_counts)?;

    clock.start("popularity");
    let (freq, count_summary) = count_frequencies(dataset, &kept, &cfg.season_map);
    let selection = select_popular(&freq, cfg.percentile);
    let months = monthly_histogram(dataset);
    let popularity = PopularitySummary {
        transactions: count_summary,
        percentile: cfg.percentile.value(),
        cells: selection
            .cells
            .iter()
            .map(|(cell, sel)| CellSummary {
                season: cell.season,
                category: cell.category.to_string(),
                ranked: sel.ranked,
                popular: sel.popular.len(),
                unpopular: sel.unpopular.len(),
            })
            .collect(),
    };

    clock.start("binarize");
    let kept_with_items: Vec<u64> = dataset
        .items()
        .map(|i| i.item_id)
        .filter(|id| kept.contains(id))
        .collect();
    let (binarized, bin_diags) = binarize(dataset.attributes(), kept_with_items.iter().copied(), cfg.cutoff);
    let binarize_summary = BinarizeSummary {
        items: binarized.len(),
        skipped_without_attributes: bin_diags.len(),
    };
    diagnostics.extend(bin_diags);
    let mut sets: BTreeMap<u64, AttributeSet> = binarized.into_iter().collect();
    let vocabulary = dataset.attributes().vocabulary().to_vec();
    let all_sets: Vec<AttributeSet> = sets.values().cloned().collect();
    let priors = if all_sets.is_empty() {
        diagnostics.push(Diagnostic::warning(
            "priors",
            None,
            "no attribute sets; priors not estimated",
        ));
        None
    } else {
        Some(
            estimate_priors(&all_sets, &vocabulary, raw.smoothing_alpha)
                .map_err(|e| PipelineError::stage("priors", e))?,
        )
    };

    let crf = if raw.crf_rescore {
        clock.start("crf_rescore");
        match &priors {
            Some(priors) => Some(rescore(cfg, dataset, priors, &mut sets)?),
            None => None,
        }
    } else {
        None
    };

    clock.start("fpgrowth");
    let (itemset_rows, itemset_summaries, comparisons) = mine_cells(cfg, &selection, &sets)?;

    clock.start("trendmine");
    let per_season: BTreeMap<_, _> = ANALYZED_SEASONS
        .iter()
        .map(|&season| {
            let pick = |ids: BTreeSet<u64>| ids.iter().filter_map(|id| sets.get(id).cloned()).collect::<Vec<_>>();
            let s = SeasonSets {
                popular: pick(selection.popular_in(season)),
                unpopular: pick(selection.unpopular_in(season)),
            };
            (season, s)
        })
        .collect();
    let (stats, stat_diags) = feature_stats(&vocabulary, &per_season);
    diagnostics.extend(stat_diags);
    let classification = classify(&stats, &ANALYZED_SEASONS, cfg.thresholds);
    diagnostics.extend(classification.diagnostics.iter().cloned());
    let [first, second] = ANALYZED_SEASONS;
    let trend = match trend_deltas(&stats, first, second, cfg.flat_band) {
        Ok(t) => t,
        Err(e) => {
            diagnostics.push(Diagnostic::warning("trendmine", None, format!("no trend deltas: {e}")));
            Vec::new()
        }
    };

    clock.start("reports");
    let report = RunReport {
        config: raw.clone(),
        stages: clock.stages.clone(),
        diagnostics: DiagnosticSummary::of(&diagnostics),
        row_counts,
        link: load.link.clone(),
        noise: noise_summary,
        popularity,
        binarize: binarize_summary,
        crf,
        itemsets: itemset_summaries,
        merged_features: merged_view(&classification),
        features: classification,
        trend,
        itemset_comparisons: comparisons,
    };

    let out = &raw.output_dir;
    let io = |e: std::io::Error| PipelineError::Output {
        path: out.clone(),
        source: e,
    };
    std::fs::create_dir_all(out).map_err(io)?;
    write_json(out, REPORT_FILE, &report).map_err(io)?;
    write_diagnostics(out, &diagnostics).map_err(io)?;
    write_itemsets(out, &itemset_rows).map_err(io)?;
    write_features(out, &report.features).map_err(io)?;
    write_trend(out, &report.trend).map_err(io)?;
    if let Some(p) = &priors {
        std::fs::write(out.join(PRIORS_FILE), p.to_json_string() + "\n").map_err(io)?;
    }
    emit_plotdata(out, &months, &report).map_err(io)?;
    clock.stop();

    let metadata = RunMetadata {
        version: env!("CARGO_PKG_VERSION"),
        started_at: timestamp(started),
        finished_at: timestamp(SystemTime::now()),
        threads: rayon::current_num_threads(),
        stages: clock.timings,
    };
    write_json(out, METADATA_FILE, &metadata).map_err(io)?;
    Ok(RunOutput {
        report,
        metadata,
        priors,
    })
}

fn noise_stage(
    cfg: &ValidConfig,
    dataset: &Dataset,
    diagnostics: &mut Vec<Diagnostic>,
    row_counts: &mut InputRowCounts,
) -> Result<(BTreeSet<u64>, NoiseSummary), PipelineError> {
    let path = match &cfg.raw.noise_scores {
        Some(p) => Some(p.clone()),
        None => Some(cfg.raw.input_dir.join(NOISE_SCORES_FILE)).filter(|p| p.exists()),
    };
    let Some(path) = path else {
        diagnostics.push(Diagnostic::warning(
            "noise_filter",
            None,
            "no noise scores found; every item kept",
        ));
        let kept: BTreeSet<u64> = dataset.items().map(|i| i.item_id).collect();
        let summary = NoiseSummary {
            kept: kept.len(),
            ..NoiseSummary::default()
        };
        return Ok((kept, summary));
    };
    let (scores, diags, counts) = load_noise_scores(&path).map_err(|e| PipelineError::stage("noise_filter", e))?;
    let fatal = count_fatal(&diags);
    diagnostics.extend(diags);
    if fatal > 0 {
        return Err(PipelineError::stage(
            "noise_filter",
            format!("{fatal} noise score rows violate input invariants"),
        ));
    }
    row_counts.noise_scores = Some(counts);
    let outcome = apply_filter(dataset, &scores, cfg.noise_threshold);
    diagnostics.extend(outcome.diagnostics.iter().cloned());
    let confusion = confusion(&scores, cfg.noise_threshold.value()).ok();
    let summary = NoiseSummary {
        applied: true,
        kept: outcome.kept.len(),
        pruned: outcome.pruned.len(),
        unscored: outcome.unscored.len(),
        metrics: confusion.as_ref().and_then(|cm| metrics(cm).ok()),
        confusion,
    };
    Ok((outcome.kept, summary))
}

fn rescore(
    cfg: &ValidConfig,
    dataset: &Dataset,
    priors: &AttributePriorModel,
    sets: &mut BTreeMap<u64, AttributeSet>,
) -> Result<CrfSummary, PipelineError> {
    let solver = solver_registry()
        .create(
            cfg.map_solver,
            &SolverParams {
                max_sweeps: cfg.raw.crf_sweeps,
            },
        )
        .map_err(|e| PipelineError::stage("crf_rescore", e))?;
    let vocabulary = priors.names();
    let ids: Vec<u64> = sets.keys().copied().collect();
    let results = ids
        .par_iter()
        .map(|&id| {
            let values = dataset
                .attribute_vector(id)
                .expect("binarized items have rows")
                .values()
                .to_vec();
            let posterior = AttributePosterior::new(values)?;
            solver.solve(&posterior, priors).map(|r| (id, r))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::stage("crf_rescore", e))?;
    let mut summary = CrfSummary {
        solver: cfg.map_solver.to_string(),
        items: results.len(),
        changed_items: 0,
        flips: 0,
        unconverged: 0,
    };
    for (id, r) in results {
        let set: AttributeSet = vocabulary
            .iter()
            .zip(&r.assignment)
            .filter(|(_, &s)| s)
            .map(|(n, _)| n.clone())
            .collect();
        summary.flips += r.flips;
        summary.unconverged += usize::from(!r.converged);
        let slot = sets.get_mut(&id).expect("present");
        if *slot != set {
            summary.changed_items += 1;
            *slot = set;
        }
    }
    Ok(summary)
}

struct ItemsetRow {
    season: crate::popularity::Season,
    category: String,
    kind: SetKind,
    items: String,
    support: u64,
    relative: f64,
}

type MinedCells = (Vec<ItemsetRow>, Vec<ItemsetRunSummary>, Vec<CellComparison>);

fn mine_cells(
    cfg: &ValidConfig,
    selection: &PopularitySelection,
    sets: &BTreeMap<u64, AttributeSet>,
) -> Result<MinedCells, PipelineError> {
    let miner = miner_registry()
        .create(
            cfg.miner,
            &MinerParams {
                max_itemset_size: cfg.raw.max_itemset_size,
            },
        )
        .map_err(|e| PipelineError::stage("fpgrowth", e))?;
    let fraction = cfg.raw.min_support;
    let mine_one = |ids: &[u64]| -> Result<(MinedSets, u64), PipelineError> {
        let txs: Vec<AttributeSet> = ids.iter().filter_map(|id| sets.get(id).cloned()).collect();
        let min_support = absolute_min_support(fraction, txs.len()).map_err(|e| PipelineError::stage("fpgrowth", e))?;
        let itemsets = miner
            .mine(&txs, min_support)
            .map_err(|e| PipelineError::stage("fpgrowth", e))?;
        Ok((
            MinedSets {
                itemsets,
                n_transactions: txs.len(),
                min_support_fraction: fraction,
            },
            min_support,
        ))
    };
    let cells: Vec<_> = selection.cells.iter().collect();
    let mined = cells
        .par_iter()
        .map(|(cell, sel)| {
            let pop = mine_one(&sel.popular)?;
            let unpop = mine_one(&sel.unpopular)?;
            Ok((*cell, pop, unpop))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut comparisons = Vec::new();
    for (cell, pop, unpop) in mined {
        let category = cell.category.to_string();
        for (kind, (m, min_support)) in [(SetKind::Popular, &pop), (SetKind::Unpopular, &unpop)] {
            summaries.push(ItemsetRunSummary {
                season: cell.season,
                category: category.clone(),
                set_kind: kind,
                transactions: m.n_transactions,
                min_support: *min_support,
                itemsets: m.itemsets.len(),
            });
            for s in &m.itemsets {
                rows.push(ItemsetRow {
                    season: cell.season,
                    category: category.clone(),
                    kind,
                    items: s.joined(),
                    support: s.support,
                    relative: m.relative(s.support),
                });
            }
        }
        let cmp = frequent_sets_report(&pop.0, &unpop.0).map_err(|e| PipelineError::stage("trendmine", e))?;
        comparisons.push(CellComparison {
            season: cell.season,
            category,
            comparisons: cmp,
        });
    }
    Ok((rows, summaries, comparisons))
}

fn write_itemsets(dir: &Path, rows: &[ItemsetRow]) -> std::io::Result<()> {
    let mut w = report::create(dir, ITEMSETS_FILE)?;
    w.write_record(["season", "category", "set_kind", "items", "support", "relative_support"])?;
    for r in rows {
        w.write_record([
            r.season.as_str(),
            &r.category,
            r.kind.as_str(),
            &r.items,
            &r.support.to_string(),
            &r.relative.to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, GeneratorSpec};

    #[test]
    fn synthetic_run_writes_every_output() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in");
        let output = dir.path().join("out");
        let truth = generate(&GeneratorSpec::planted_trends(11, 300), &input).unwrap();
        let out = run(&PipelineConfig::new(&input, &output)).unwrap();
        for f in [
            REPORT_FILE,
            METADATA_FILE,
            DIAGNOSTICS_FILE,
            MONTHS_FILE,
            ITEMSETS_FILE,
            FEATURES_FILE,
            TREND_FILE,
            PRIORS_FILE,
            FEATURE_BARS_FILE,
            DELTA_CHART_FILE,
        ] {
            assert!(output.join(f).exists(), "{f} missing");
        }
        assert_eq!(out.report.noise.pruned, truth.noise_items.len());
        assert_eq!(out.report.row_counts.transactions.kept, truth.transaction_count);
        assert_eq!(
            out.report.stages,
            [
                "ingest",
                "noise_filter",
                "popularity",
                "binarize",
                "fpgrowth",
                "trendmine",
                "reports"
            ]
        );
    }

    #[test]
    fn invalid_config_exits_with_two() {
        let mut c = PipelineConfig::new("/nonexistent", "/nonexistent/out");
        c.noise_threshold = 2.0;
        let err = run(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_input_exits_with_one() {
        let dir = tempfile::tempdir().unwrap();
        let err = run(&PipelineConfig::new(dir.path().join("none"), dir.path().join("out"))).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("ingest"));
    }
}
