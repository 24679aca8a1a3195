use std::fmt;
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::attribute_model::solver_registry;
use crate::fpgrowth::{miner_registry, Cutoff};
use crate::ingest::DateWindow;
use crate::noise::{Threshold, DEFAULT_THRESHOLD};
use crate::popularity::{Percentile, SeasonMap};
use crate::trendmine::{FlatBand, Thresholds};

/// Every knob of a run, as given. [`validate_config`] turns it into a [`ValidConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Defaults to `noise_scores.csv` in the input directory when present.
    pub noise_scores: Option<PathBuf>,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub noise_threshold: f64,
    pub top_percent: f64,
    /// JSON month → season map; the meteorological default when absent.
    pub season_map: Option<PathBuf>,
    pub min_support: f64,
    pub attr_cutoff: f64,
    pub max_itemset_size: Option<usize>,
    pub miner: String,
    pub crf_rescore: bool,
    pub crf_sweeps: usize,
    pub map_solver: String,
    pub smoothing_alpha: f64,
    pub tau_classic: f64,
    pub tau_popular: f64,
    pub flat_band: f64,
}

impl PipelineConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        let window = DateWindow::default();
        let thresholds = Thresholds::default();
        PipelineConfig {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            noise_scores: None,
            window_start: window.start(),
            window_end: window.end(),
            noise_threshold: DEFAULT_THRESHOLD,
            top_percent: Percentile::default().value(),
            season_map: None,
            min_support: 0.05,
            attr_cutoff: Cutoff::default().value(),
            max_itemset_size: None,
            miner: "fpgrowth".into(),
            crf_rescore: false,
            crf_sweeps: 10,
            map_solver: "icm".into(),
            smoothing_alpha: 1.0,
            tau_classic: thresholds.tau_classic,
            tau_popular: thresholds.tau_popular,
            flat_band: FlatBand::default().value(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// A configuration whose every value lies in its domain.
#[derive(Debug, Clone)]
pub struct ValidConfig {
    pub raw: PipelineConfig,
    pub window: DateWindow,
    pub noise_threshold: Threshold,
    pub percentile: Percentile,
    pub season_map: SeasonMap,
    pub cutoff: Cutoff,
    pub thresholds: Thresholds,
    pub flat_band: FlatBand,
    /// Canonical registry names.
    pub miner: &'static str,
    pub map_solver: &'static str,
}

/// Checks every field and reports all violations, not just the first.
pub fn validate_config(raw: &PipelineConfig) -> Result<ValidConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut fail = |field: &'static str, message: String| errors.push(ConfigError { field, message });

    let window = DateWindow::new(raw.window_start, raw.window_end)
        .map_err(|_| {
            fail(
                "window",
                format!("window start {} is after end {}", raw.window_start, raw.window_end),
            )
        })
        .ok();
    let noise_threshold = Threshold::new(raw.noise_threshold)
        .map_err(|_| {
            fail(
                "noise_threshold",
                format!("threshold must be in [0,1], got {}", raw.noise_threshold),
            )
        })
        .ok();
    let percentile = Percentile::new(raw.top_percent)
        .map_err(|_| {
            fail(
                "top_percent",
                format!("percentile must be in (0,50], got {}", raw.top_percent),
            )
        })
        .ok();
    let season_map = match &raw.season_map {
        None => Some(SeasonMap::default()),
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => SeasonMap::from_json_str(&text)
                .map_err(|e| fail("season_map", format!("{}: {e}", path.display())))
                .ok(),
            Err(e) => {
                fail("season_map", format!("cannot read {}: {e}", path.display()));
                None
            }
        },
    };
    if !(raw.min_support > 0.0 && raw.min_support <= 1.0) {
        fail(
            "min_support",
            format!("min support must be in (0,1], got {}", raw.min_support),
        );
    }
    let cutoff = Cutoff::new(raw.attr_cutoff)
        .map_err(|_| {
            fail(
                "attr_cutoff",
                format!("attribute cutoff must be in (0,1), got {}", raw.attr_cutoff),
            )
        })
        .ok();
    if raw.max_itemset_size == Some(0) {
        fail("max_itemset_size", "max itemset size must be at least 1".into());
    }
    let miner = miner_registry().resolve(&raw.miner);
    if miner.is_none() {
        fail(
            "miner",
            format!(
                "unknown miner `{}` (available: {})",
                raw.miner,
                miner_registry().names().join(", ")
            ),
        );
    }
    let map_solver = solver_registry().resolve(&raw.map_solver);
    if map_solver.is_none() {
        fail(
            "map_solver",
            format!(
                "unknown MAP solver `{}` (available: {})",
                raw.map_solver,
                solver_registry().names().join(", ")
            ),
        );
    }
    if raw.crf_sweeps == 0 {
        fail("crf_sweeps", "sweep count must be at least 1".into());
    }
    if !(raw.smoothing_alpha.is_finite() && raw.smoothing_alpha > 0.0) {
        fail(
            "smoothing_alpha",
            format!("smoothing alpha must be positive, got {}", raw.smoothing_alpha),
        );
    }
    if !(0.0..=1.0).contains(&raw.tau_classic) {
        fail(
            "tau_classic",
            format!("classic threshold must be in [0,1], got {}", raw.tau_classic),
        );
    }
    if !(raw.tau_popular.is_finite() && raw.tau_popular >= 1.0) {
        fail(
            "tau_popular",
            format!("popularity threshold must be at least 1, got {}", raw.tau_popular),
        );
    }
    let flat_band = FlatBand::new(raw.flat_band)
        .map_err(|_| {
            fail(
                "flat_band",
                format!("flat band must be non-negative, got {}", raw.flat_band),
            )
        })
        .ok();

    match (
        window,
        noise_threshold,
        percentile,
        season_map,
        cutoff,
        flat_band,
        miner,
        map_solver,
    ) {
        (
            Some(window),
            Some(noise_threshold),
            Some(percentile),
            Some(season_map),
            Some(cutoff),
            Some(flat_band),
            Some(miner),
            Some(map_solver),
        ) if errors.is_empty() => Ok(ValidConfig {
            raw: raw.clone(),
            window,
            noise_threshold,
            percentile,
            season_map,
            cutoff,
            thresholds: Thresholds::new(raw.tau_classic, raw.tau_popular).expect("checked above"),
            flat_band,
            miner,
            map_solver,
        }),
        _ => Err(errors),
    }
}
