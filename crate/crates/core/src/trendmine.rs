//! Popular-versus-unpopular attribute contrast within a season, and
//! attribute drift between two seasons.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::fpgrowth::{AttributeItemset, AttributeSet};
use crate::popularity::Season;

/// The season pair contrasted by classification and trend deltas.
pub const ANALYZED_SEASONS: [Season; 2] = [Season::Spring, Season::Winter];

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("classic threshold must be in [0,1], got {0}")]
    TauClassic(f64),
    #[error("popularity threshold must be finite and at least 1, got {0}")]
    TauPopular(f64),
    #[error("flat band must be finite and non-negative, got {0}")]
    FlatBand(f64),
    #[error("season {0} has no feature statistics")]
    MissingSeason(Season),
    #[error("itemsets mined with different min supports: popular {popular}, unpopular {unpopular}")]
    SupportMismatch { popular: f64, unpopular: f64 },
}

/// sup_pop / sup_unpop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lift {
    Finite(f64),
    /// sup_unpop = 0 < sup_pop.
    Infinite,
    /// Both supports zero.
    Undefined,
}

impl Lift {
    pub fn of(sup_pop: f64, sup_unpop: f64) -> Lift {
        if sup_unpop > 0.0 {
            Lift::Finite(sup_pop / sup_unpop)
        } else if sup_pop > 0.0 {
            Lift::Infinite
        } else {
            Lift::Undefined
        }
    }

    fn at_least(self, bound: f64) -> bool {
        match self {
            Lift::Finite(v) => v >= bound,
            Lift::Infinite => true,
            Lift::Undefined => false,
        }
    }

    fn at_most(self, bound: f64) -> bool {
        match self {
            Lift::Finite(v) => v <= bound,
            Lift::Infinite | Lift::Undefined => false,
        }
    }
}

impl fmt::Display for Lift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lift::Finite(v) => write!(f, "{v}"),
            Lift::Infinite => f.write_str("inf"),
            Lift::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Lift {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Lift::Finite(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureStat {
    pub attribute: String,
    pub sup_pop: f64,
    pub sup_unpop: f64,
    pub lift: Lift,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeasonStats {
    pub n_popular: usize,
    pub n_unpopular: usize,
    /// Vocabulary order.
    pub features: Vec<FeatureStat>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeatureStats {
    pub seasons: BTreeMap<Season, SeasonStats>,
}

impl FeatureStats {
    pub fn season(&self, season: Season) -> Option<&SeasonStats> {
        self.seasons.get(&season)
    }

    pub fn get(&self, season: Season, attribute: &str) -> Option<&FeatureStat> {
        self.season(season)?.features.iter().find(|f| f.attribute == attribute)
    }
}

/// Binarized attribute sets of one season's popular and unpopular items.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeasonSets {
    pub popular: Vec<AttributeSet>,
    pub unpopular: Vec<AttributeSet>,
}

/// Fraction of `sets` containing `attribute`; 0 for an empty collection.
pub fn relative_support(sets: &[AttributeSet], attribute: &str) -> f64 {
    if sets.is_empty() {
        return 0.0;
    }
    sets.iter().filter(|s| s.contains(attribute)).count() as f64 / sets.len() as f64
}

/// Seasons with an empty popular or unpopular set are skipped with a diagnostic.
pub fn feature_stats(
    vocabulary: &[String],
    per_season: &BTreeMap<Season, SeasonSets>,
) -> (FeatureStats, Vec<Diagnostic>) {
    let mut stats = FeatureStats::default();
    let mut diags = Vec::new();
    for (&season, sets) in per_season {
        if sets.popular.is_empty() || sets.unpopular.is_empty() {
            diags.push(Diagnostic::warning(
                "trendmine",
                None,
                format!(
                    "season {season}: {} popular and {} unpopular items; no feature statistics",
                    sets.popular.len(),
                    sets.unpopular.len()
                ),
            ));
            continue;
        }
        let features = vocabulary
            .par_iter()
            .map(|attribute| {
                let sup_pop = relative_support(&sets.popular, attribute);
                let sup_unpop = relative_support(&sets.unpopular, attribute);
                FeatureStat {
                    attribute: attribute.clone(),
                    sup_pop,
                    sup_unpop,
                    lift: Lift::of(sup_pop, sup_unpop),
                }
            })
            .collect();
        stats.seasons.insert(
            season,
            SeasonStats {
                n_popular: sets.popular.len(),
                n_unpopular: sets.unpopular.len(),
                features,
            },
        );
    }
    (stats, diags)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Minimum support in both sets for a classic or attractive feature.
    pub tau_classic: f64,
    /// Lift at or above which a feature is popular; its reciprocal bounds unpopular.
    pub tau_popular: f64,
}

impl Thresholds {
    pub fn new(tau_classic: f64, tau_popular: f64) -> Result<Self, TrendError> {
        if !(0.0..=1.0).contains(&tau_classic) {
            return Err(TrendError::TauClassic(tau_classic));
        }
        if !(tau_popular.is_finite() && tau_popular >= 1.0) {
            return Err(TrendError::TauPopular(tau_popular));
        }
        Ok(Thresholds {
            tau_classic,
            tau_popular,
        })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tau_classic: 0.3,
            tau_popular: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureClass {
    Classic,
    Attractive,
    Popular,
    Unpopular,
    Neutral,
}

impl FeatureClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureClass::Classic => "classic",
            FeatureClass::Attractive => "attractive",
            FeatureClass::Popular => "popular",
            FeatureClass::Unpopular => "unpopular",
            FeatureClass::Neutral => "neutral",
        }
    }
}

impl fmt::Display for FeatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifiedFeature {
    pub season: Season,
    pub attribute: String,
    pub sup_pop: f64,
    pub sup_unpop: f64,
    pub lift: Lift,
    pub class: FeatureClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureClassification {
    pub thresholds: Thresholds,
    /// Season order as requested, vocabulary order within a season.
    pub entries: Vec<ClassifiedFeature>,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

impl FeatureClassification {
    pub fn class_of(&self, season: Season, attribute: &str) -> Option<FeatureClass> {
        self.entries
            .iter()
            .find(|e| e.season == season && e.attribute == attribute)
            .map(|e| e.class)
    }
}

fn within_season_class(stat: &FeatureStat, th: Thresholds) -> FeatureClass {
    if stat.sup_pop.min(stat.sup_unpop) >= th.tau_classic {
        FeatureClass::Attractive
    } else if stat.lift.at_least(th.tau_popular) {
        FeatureClass::Popular
    } else if stat.lift.at_most(1.0 / th.tau_popular) {
        FeatureClass::Unpopular
    } else {
        FeatureClass::Neutral
    }
}

/// Classic needs stats for every season in `seasons`; when one is missing,
/// the present seasons get within-season classes and a diagnostic is recorded.
pub fn classify(stats: &FeatureStats, seasons: &[Season], thresholds: Thresholds) -> FeatureClassification {
    let mut diagnostics = Vec::new();
    let missing: Vec<Season> = seasons.iter().copied().filter(|s| stats.season(*s).is_none()).collect();
    for s in &missing {
        diagnostics.push(Diagnostic::warning(
            "trendmine",
            None,
            format!("season {s} missing; classic features not assessed"),
        ));
    }
    let cross_season = missing.is_empty() && !seasons.is_empty();
    let classic: BTreeSet<&str> = if cross_season {
        let first = stats.season(seasons[0]).expect("present");
        first
            .features
            .iter()
            .map(|f| f.attribute.as_str())
            .filter(|a| {
                seasons.iter().all(|s| {
                    stats
                        .get(*s, a)
                        .is_some_and(|f| f.sup_pop.min(f.sup_unpop) >= thresholds.tau_classic)
                })
            })
            .collect()
    } else {
        BTreeSet::new()
    };

    let mut entries = Vec::new();
    for &season in seasons {
        let Some(ss) = stats.season(season) else { continue };
        for stat in &ss.features {
            let class = if classic.contains(stat.attribute.as_str()) {
                FeatureClass::Classic
            } else {
                within_season_class(stat, thresholds)
            };
            entries.push(ClassifiedFeature {
                season,
                attribute: stat.attribute.clone(),
                sup_pop: stat.sup_pop,
                sup_unpop: stat.sup_unpop,
                lift: stat.lift,
                class,
            });
        }
    }
    FeatureClassification {
        thresholds,
        entries,
        diagnostics,
    }
}

/// Per-season feature lists with classic and attractive merged, the way a
/// single "classic/attractive" column would present them.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MergedSeasonView {
    pub classic_attractive: Vec<String>,
    pub popular: Vec<String>,
    pub unpopular: Vec<String>,
}

pub fn merged_view(classification: &FeatureClassification) -> BTreeMap<Season, MergedSeasonView> {
    let mut out: BTreeMap<Season, MergedSeasonView> = BTreeMap::new();
    for e in &classification.entries {
        let view = out.entry(e.season).or_default();
        let list = match e.class {
            FeatureClass::Classic | FeatureClass::Attractive => &mut view.classic_attractive,
            FeatureClass::Popular => &mut view.popular,
            FeatureClass::Unpopular => &mut view.unpopular,
            FeatureClass::Neutral => continue,
        };
        list.push(e.attribute.clone());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct FlatBand(f64);

impl FlatBand {
    pub fn new(value: f64) -> Result<Self, TrendError> {
        if value.is_finite() && value >= 0.0 {
            Ok(FlatBand(value))
        } else {
            Err(TrendError::FlatBand(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for FlatBand {
    fn default() -> Self {
        FlatBand(0.05)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Flat,
}

impl Direction {
    pub fn of(delta: f64, band: FlatBand) -> Direction {
        if delta > band.0 {
            Direction::Up
        } else if delta < -band.0 {
            Direction::Down
        } else {
            Direction::Flat
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Flat => "flat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendDelta {
    pub attribute: String,
    pub first_sup: f64,
    pub second_sup: f64,
    /// first_sup − second_sup.
    pub delta: f64,
    pub direction: Direction,
}

/// Popular-set support drift from `second` to `first`, sorted by |delta|
/// descending, ties by attribute name.
pub fn trend_deltas(
    stats: &FeatureStats,
    first: Season,
    second: Season,
    band: FlatBand,
) -> Result<Vec<TrendDelta>, TrendError> {
    let a = stats.season(first).ok_or(TrendError::MissingSeason(first))?;
    let b = stats.season(second).ok_or(TrendError::MissingSeason(second))?;
    let mut out: Vec<TrendDelta> = a
        .features
        .iter()
        .filter_map(|fa| {
            let fb = b.features.iter().find(|f| f.attribute == fa.attribute)?;
            let delta = fa.sup_pop - fb.sup_pop;
            Some(TrendDelta {
                attribute: fa.attribute.clone(),
                first_sup: fa.sup_pop,
                second_sup: fb.sup_pop,
                delta,
                direction: Direction::of(delta, band),
            })
        })
        .collect();
    out.sort_by(|x, y| {
        y.delta
            .abs()
            .total_cmp(&x.delta.abs())
            .then_with(|| x.attribute.cmp(&y.attribute))
    });
    Ok(out)
}

/// One mining run over a collection of attribute sets.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedSets {
    pub itemsets: Vec<AttributeItemset>,
    pub n_transactions: usize,
    pub min_support_fraction: f64,
}

impl MinedSets {
    pub fn relative(&self, support: u64) -> f64 {
        if self.n_transactions == 0 {
            0.0
        } else {
            support as f64 / self.n_transactions as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetContrast {
    PopularDistinctive,
    UnpopularDistinctive,
    Shared,
}

impl SetContrast {
    pub fn as_str(self) -> &'static str {
        match self {
            SetContrast::PopularDistinctive => "popular-distinctive",
            SetContrast::UnpopularDistinctive => "unpopular-distinctive",
            SetContrast::Shared => "shared",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemsetComparison {
    pub items: Vec<String>,
    pub contrast: SetContrast,
    pub popular_support: Option<f64>,
    pub unpopular_support: Option<f64>,
}

impl ItemsetComparison {
    fn rank_support(&self) -> f64 {
        self.popular_support
            .unwrap_or(0.0)
            .max(self.unpopular_support.unwrap_or(0.0))
    }
}

/// Contrasts the itemsets frequent among popular items with those frequent
/// among unpopular items. Ranked by the larger relative support, then by size
/// and items.
pub fn frequent_sets_report(popular: &MinedSets, unpopular: &MinedSets) -> Result<Vec<ItemsetComparison>, TrendError> {
    if popular.min_support_fraction != unpopular.min_support_fraction {
        return Err(TrendError::SupportMismatch {
            popular: popular.min_support_fraction,
            unpopular: unpopular.min_support_fraction,
        });
    }
    let mut merged: BTreeMap<&[String], (Option<f64>, Option<f64>)> = BTreeMap::new();
    for s in &popular.itemsets {
        merged.entry(&s.items).or_default().0 = Some(popular.relative(s.support));
    }
    for s in &unpopular.itemsets {
        merged.entry(&s.items).or_default().1 = Some(unpopular.relative(s.support));
    }
    let mut out: Vec<ItemsetComparison> = merged
        .into_iter()
        .map(|(items, (p, u))| ItemsetComparison {
            items: items.to_vec(),
            contrast: match (p, u) {
                (Some(_), Some(_)) => SetContrast::Shared,
                (Some(_), None) => SetContrast::PopularDistinctive,
                _ => SetContrast::UnpopularDistinctive,
            },
            popular_support: p,
            unpopular_support: u,
        })
        .collect();
    out.sort_by(|a, b| {
        b.rank_support()
            .total_cmp(&a.rank_support())
            .then_with(|| a.items.len().cmp(&b.items.len()))
            .then_with(|| a.items.cmp(&b.items))
    });
    Ok(out)
}
