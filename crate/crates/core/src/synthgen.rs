//! Synthetic catalogs with planted ground truth.
//!
//! Sales counts are fixed per (season, item) from a Zipf-like profile over a
//! random per-season ranking, so observed popularity ranks equal the recorded
//! ranks exactly. Only dates and buyers are random. Attribute posteriors are
//! drawn on the correct side of 0.5, so binarization recovers the planted
//! presence exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    write_attributes, write_items, write_transactions, AttributeTable, AttributeVector, CategoryId, DateWindow,
    ItemRecord, Taxonomy, TransactionRecord, ATTRIBUTES_FILE, ITEMS_FILE, TAXONOMY_FILE, TRANSACTIONS_FILE,
};
use crate::noise::{write_noise_scores, NoiseScore, NOISE_SCORES_FILE};
use crate::popularity::{Percentile, Season, SeasonMap};
use crate::trendmine::FeatureClass;

pub const TRUTH_FILE: &str = "truth.json";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
    #[error("cannot parse generator spec: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("writing {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// An attribute whose presence depends on an item's popularity stratum in one season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedFeature {
    pub season: Season,
    pub attribute: String,
    /// Presence probability for items in the season's popular stratum.
    pub popular: f64,
    /// Presence probability for items in the season's unpopular stratum.
    pub unpopular: f64,
}

impl PlantedFeature {
    /// The class the contrast is meant to produce.
    pub fn planted_class(&self) -> FeatureClass {
        if self.popular > self.unpopular {
            FeatureClass::Popular
        } else if self.popular < self.unpopular {
            FeatureClass::Unpopular
        } else {
            FeatureClass::Neutral
        }
    }
}

/// Two attributes drawn jointly for every clean item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoOccurrence {
    pub a: String,
    pub b: String,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n_items: usize,
    pub n_users: usize,
    /// Sales budget; every clean item sells at least once per season, so the
    /// realized count can exceed it for tiny budgets.
    pub n_transactions: usize,
    #[serde(default)]
    pub noise_fraction: f64,
    /// Items are spread round-robin over taxonomy categories `1..=n_categories`.
    #[serde(default = "default_categories")]
    pub n_categories: usize,
    #[serde(default = "default_vocabulary")]
    pub attributes: Vec<String>,
    /// Presence probability of attributes that are neither planted nor paired.
    #[serde(default = "default_background")]
    pub background_rate: f64,
    #[serde(default = "default_zipf")]
    pub zipf_exponent: f64,
    /// Stratum width; match the pipeline's top percent.
    #[serde(default = "default_top_percent")]
    pub top_percent: f64,
    #[serde(default, alias = "planted_popular")]
    pub planted: Vec<PlantedFeature>,
    #[serde(default)]
    pub co_occurrence: Vec<CoOccurrence>,
}

fn default_categories() -> usize {
    4
}

fn default_vocabulary() -> Vec<String> {
    [
        "collar",
        "v_neckline",
        "round_neckline",
        "upper_blue",
        "upper_white",
        "upper_black",
        "floral",
        "stripe",
        "lower_solid",
        "long_sleeve",
        "short_sleeve",
        "belt",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn default_background() -> f64 {
    0.15
}

fn default_zipf() -> f64 {
    1.0
}

fn default_top_percent() -> f64 {
    10.0
}

impl GeneratorSpec {
    /// One popular (0.8/0.2) and one unpopular (0.2/0.8) attribute planted in
    /// each of spring and winter, plus one correlated pair.
    pub fn planted_trends(seed: u64, n_items: usize) -> Self {
        let plant = |season, attribute: &str, popular, unpopular| PlantedFeature {
            season,
            attribute: attribute.to_string(),
            popular,
            unpopular,
        };
        GeneratorSpec {
            seed,
            n_items,
            n_users: (n_items / 2).max(1),
            n_transactions: n_items * 20,
            noise_fraction: 0.05,
            n_categories: default_categories(),
            attributes: default_vocabulary(),
            background_rate: default_background(),
            zipf_exponent: default_zipf(),
            top_percent: default_top_percent(),
            planted: vec![
                plant(Season::Spring, "floral", 0.8, 0.2),
                plant(Season::Spring, "stripe", 0.2, 0.8),
                plant(Season::Winter, "upper_black", 0.8, 0.2),
                plant(Season::Winter, "short_sleeve", 0.2, 0.8),
            ],
            co_occurrence: vec![CoOccurrence {
                a: "collar".into(),
                b: "long_sleeve".into(),
                p_a: 0.4,
                p_b: 0.5,
                p_ab: 0.3,
            }],
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, SynthError> {
        let spec: GeneratorSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Infeasible(m));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_items == 0 || self.n_users == 0 || self.n_transactions == 0 {
            return bad("n_items, n_users and n_transactions must be positive".into());
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return bad(format!("noise_fraction {} outside [0,1)", self.noise_fraction));
        }
        let n_tax = Taxonomy::clothing_default().len();
        if self.n_categories == 0 || self.n_categories > n_tax {
            return bad(format!("n_categories must be in 1..={n_tax}"));
        }
        let vocab: BTreeSet<&str> = self.attributes.iter().map(String::as_str).collect();
        if vocab.is_empty() || vocab.len() != self.attributes.len() || vocab.contains("") || vocab.contains("item_id") {
            return bad("attributes must be non-empty, unique, and not `item_id`".into());
        }
        if !prob(self.background_rate) {
            return bad(format!("background_rate {} outside [0,1]", self.background_rate));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return bad(format!(
                "zipf_exponent {} must be finite and non-negative",
                self.zipf_exponent
            ));
        }
        if Percentile::new(self.top_percent).is_err() {
            return bad(format!("top_percent {} outside (0,50]", self.top_percent));
        }
        let mut claimed: BTreeSet<&str> = BTreeSet::new();
        for p in &self.planted {
            if !vocab.contains(p.attribute.as_str()) {
                return bad(format!("planted attribute `{}` not in vocabulary", p.attribute));
            }
            if !prob(p.popular) || !prob(p.unpopular) {
                return bad(format!("planted `{}` probabilities outside [0,1]", p.attribute));
            }
            if !claimed.insert(&p.attribute) {
                return bad(format!("attribute `{}` planted twice", p.attribute));
            }
        }
        for c in &self.co_occurrence {
            for name in [&c.a, &c.b] {
                if !vocab.contains(name.as_str()) {
                    return bad(format!("co-occurrence attribute `{name}` not in vocabulary"));
                }
                if !claimed.insert(name) {
                    return bad(format!("attribute `{name}` already planted or paired"));
                }
            }
            if !prob(c.p_a) || !prob(c.p_b) || !prob(c.p_ab) {
                return bad(format!("co-occurrence ({}, {}) probabilities outside [0,1]", c.a, c.b));
            }
            if c.p_ab > c.p_a.min(c.p_b) {
                return bad(format!(
                    "co-occurrence ({}, {}): joint {} exceeds a marginal ({}, {})",
                    c.a, c.b, c.p_ab, c.p_a, c.p_b
                ));
            }
            if c.p_a + c.p_b - c.p_ab > 1.0 + 1e-12 {
                return bad(format!("co-occurrence ({}, {}): union probability exceeds 1", c.a, c.b));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub season: Season,
    pub attribute: String,
    pub popular: f64,
    pub unpopular: f64,
    pub planted_class: FeatureClass,
    /// Realized presence rate over the season's popular stratum.
    pub empirical_popular: f64,
    pub empirical_unpopular: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoOccurrenceTruth {
    pub a: String,
    pub b: String,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    pub empirical_a: f64,
    pub empirical_b: f64,
    pub empirical_ab: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub popular: Vec<u64>,
    pub unpopular: Vec<u64>,
}

/// Ground truth written as `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub n_items: usize,
    pub transaction_count: usize,
    pub top_percent: f64,
    pub noise_items: Vec<u64>,
    pub planted: Vec<PlantedTruth>,
    pub co_occurrence: Vec<CoOccurrenceTruth>,
    /// Clean items per (season, category) in popularity order.
    pub ranks: BTreeMap<Season, BTreeMap<String, Vec<u64>>>,
    /// Union over categories of each season's strata, ascending ids.
    pub strata: BTreeMap<Season, Strata>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub taxonomy: Taxonomy,
    pub items: Vec<ItemRecord>,
    pub transactions: Vec<TransactionRecord>,
    pub attributes: AttributeTable,
    pub noise_scores: Vec<NoiseScore>,
    pub truth: Truth,
}

// independent random streams per phase, so changing one phase leaves the others intact
const STREAM_NOISE: u64 = 1;
const STREAM_RANKS: u64 = 2;
const STREAM_ATTRIBUTES: u64 = 3;
const STREAM_SCORES: u64 = 4;
const STREAM_SALES: u64 = 5;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Sales counts for ranks 1..=m: a Zipf-like share of `budget`, at least 1.
fn zipf_counts(m: usize, budget: usize, exponent: f64) -> Vec<u64> {
    let weights: Vec<f64> = (1..=m).map(|r| (r as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| ((budget as f64 * w / total).floor() as u64).max(1))
        .collect()
}

pub fn generate_in_memory(spec: &GeneratorSpec) -> Result<SyntheticDataset, SynthError> {
    spec.validate()?;
    let taxonomy = Taxonomy::clothing_default();
    let window = DateWindow::default();
    let season_map = SeasonMap::default();
    let percentile = Percentile::new(spec.top_percent).expect("validated");

    let ids: Vec<u64> = (1..=spec.n_items as u64).collect();
    let categories: Vec<(u64, CategoryId)> = taxonomy
        .iter()
        .take(spec.n_categories)
        .map(|(raw, e)| (raw, CategoryId::new(e.zone, e.name.clone())))
        .collect();
    let items: Vec<ItemRecord> = ids
        .iter()
        .map(|&id| {
            let (raw, cat) = &categories[(id as usize - 1) % categories.len()];
            ItemRecord {
                item_id: id,
                raw_cat_id: *raw,
                name: format!("item-{id}"),
                img_ref: format!("img/{id}.jpg"),
                category: Some(cat.clone()),
            }
        })
        .collect();

    let n_noise = (spec.noise_fraction * spec.n_items as f64).floor() as usize;
    let noise: BTreeSet<u64> = {
        let mut rng = rng_for(spec.seed, STREAM_NOISE);
        ids.choose_multiple(&mut rng, n_noise).copied().collect()
    };

    // per-season rankings and strata over clean items
    let mut ranks: BTreeMap<Season, BTreeMap<String, Vec<u64>>> = BTreeMap::new();
    let mut counts: BTreeMap<(Season, u64), u64> = BTreeMap::new();
    let mut strata: BTreeMap<Season, Strata> = BTreeMap::new();
    let mut stratum_of: BTreeMap<(Season, u64), Stratum> = BTreeMap::new();
    {
        let mut rng = rng_for(spec.seed, STREAM_RANKS);
        let clean_items = spec.n_items - n_noise;
        for season in Season::ALL {
            let season_strata = strata.entry(season).or_default();
            for (_, cat) in &categories {
                let mut members: Vec<u64> = items
                    .iter()
                    .filter(|it| it.category.as_ref() == Some(cat) && !noise.contains(&it.item_id))
                    .map(|it| it.item_id)
                    .collect();
                members.shuffle(&mut rng);
                let budget = spec.n_transactions / Season::ALL.len() * members.len() / clean_items.max(1);
                let sales = zipf_counts(members.len(), budget, spec.zipf_exponent);
                for (&id, &c) in members.iter().zip(&sales) {
                    counts.insert((season, id), c);
                }
                // the order popularity selection will observe: count desc, then id asc
                members.sort_by(|a, b| counts[&(season, *b)].cmp(&counts[&(season, *a)]).then(a.cmp(b)));
                let k = percentile.slots(members.len());
                let start = members.len().saturating_sub(k).max(k);
                for &id in &members[..k.min(members.len())] {
                    season_strata.popular.push(id);
                    stratum_of.insert((season, id), Stratum::Popular);
                }
                for &id in &members[start.min(members.len())..] {
                    season_strata.unpopular.push(id);
                    stratum_of.insert((season, id), Stratum::Unpopular);
                }
                ranks.entry(season).or_default().insert(cat.to_string(), members);
            }
            season_strata.popular.sort_unstable();
            season_strata.unpopular.sort_unstable();
        }
    }

    // attribute presence, then posteriors on the matching side of 0.5
    let vocab = &spec.attributes;
    let index: BTreeMap<&str, usize> = vocab.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut presence: BTreeMap<u64, Vec<bool>> = BTreeMap::new();
    let mut rows: BTreeMap<u64, AttributeVector> = BTreeMap::new();
    {
        let mut rng = rng_for(spec.seed, STREAM_ATTRIBUTES);
        for &id in &ids {
            let clean = !noise.contains(&id);
            let mut present: Vec<bool> = (0..vocab.len()).map(|_| rng.gen_bool(spec.background_rate)).collect();
            if clean {
                for p in &spec.planted {
                    let rate = match stratum_of.get(&(p.season, id)) {
                        Some(Stratum::Popular) => p.popular,
                        Some(Stratum::Unpopular) => p.unpopular,
                        None => p.popular.min(p.unpopular),
                    };
                    present[index[p.attribute.as_str()]] = rng.gen_bool(rate);
                }
                for c in &spec.co_occurrence {
                    let u: f64 = rng.gen();
                    let (sa, sb) = if u < c.p_ab {
                        (true, true)
                    } else if u < c.p_a {
                        (true, false)
                    } else if u < c.p_a + c.p_b - c.p_ab {
                        (false, true)
                    } else {
                        (false, false)
                    };
                    present[index[c.a.as_str()]] = sa;
                    present[index[c.b.as_str()]] = sb;
                }
            }
            let posterior = present
                .iter()
                .map(|&s| {
                    round4(if s {
                        rng.gen_range(0.6..0.99)
                    } else {
                        rng.gen_range(0.01..0.4)
                    })
                })
                .collect();
            rows.insert(id, AttributeVector(posterior));
            presence.insert(id, present);
        }
    }
    let attributes = AttributeTable::new(vocab.clone(), rows);

    let noise_scores: Vec<NoiseScore> = {
        let mut rng = rng_for(spec.seed, STREAM_SCORES);
        ids.iter()
            .map(|&id| {
                let is_noise = noise.contains(&id);
                let score = if is_noise {
                    rng.gen_range(0.5..1.0)
                } else {
                    rng.gen_range(0.0..0.5)
                };
                NoiseScore {
                    item_id: id,
                    score: round4(score).min(if is_noise { 1.0 } else { 0.4999 }),
                    label: Some(is_noise),
                }
            })
            .collect()
    };

    // sales: fixed counts per clean item and season, a few for noise items
    let days_by_season = window_days(&window, &season_map);
    let mut transactions = Vec::new();
    {
        let mut rng = rng_for(spec.seed, STREAM_SALES);
        for season in Season::ALL {
            let days = &days_by_season[&season];
            if days.is_empty() {
                continue;
            }
            for &id in &ids {
                let n = if noise.contains(&id) {
                    rng.gen_range(1..=5)
                } else {
                    counts[&(season, id)]
                };
                for _ in 0..n {
                    transactions.push(TransactionRecord {
                        user_id: rng.gen_range(1..=spec.n_users as u64),
                        item_id: id,
                        date: days[rng.gen_range(0..days.len())],
                    });
                }
            }
        }
    }
    transactions.sort();

    let clean: Vec<u64> = ids.iter().copied().filter(|id| !noise.contains(id)).collect();
    let rate = |members: &[u64], a: usize| -> f64 {
        if members.is_empty() {
            0.0
        } else {
            members.iter().filter(|id| presence[id][a]).count() as f64 / members.len() as f64
        }
    };
    let planted = spec
        .planted
        .iter()
        .map(|p| {
            let a = index[p.attribute.as_str()];
            let s = &strata[&p.season];
            PlantedTruth {
                season: p.season,
                attribute: p.attribute.clone(),
                popular: p.popular,
                unpopular: p.unpopular,
                planted_class: p.planted_class(),
                empirical_popular: rate(&s.popular, a),
                empirical_unpopular: rate(&s.unpopular, a),
            }
        })
        .collect();
    let co_occurrence = spec
        .co_occurrence
        .iter()
        .map(|c| {
            let (a, b) = (index[c.a.as_str()], index[c.b.as_str()]);
            let both = if clean.is_empty() {
                0.0
            } else {
                clean.iter().filter(|id| presence[id][a] && presence[id][b]).count() as f64 / clean.len() as f64
            };
            CoOccurrenceTruth {
                a: c.a.clone(),
                b: c.b.clone(),
                p_a: c.p_a,
                p_b: c.p_b,
                p_ab: c.p_ab,
                empirical_a: rate(&clean, a),
                empirical_b: rate(&clean, b),
                empirical_ab: both,
            }
        })
        .collect();

    let truth = Truth {
        seed: spec.seed,
        n_items: spec.n_items,
        transaction_count: transactions.len(),
        top_percent: spec.top_percent,
        noise_items: noise.into_iter().collect(),
        planted,
        co_occurrence,
        ranks,
        strata,
    };
    Ok(SyntheticDataset {
        taxonomy,
        items,
        transactions,
        attributes,
        noise_scores,
        truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stratum {
    Popular,
    Unpopular,
}

fn window_days(window: &DateWindow, map: &SeasonMap) -> BTreeMap<Season, Vec<NaiveDate>> {
    let mut out: BTreeMap<Season, Vec<NaiveDate>> = Season::ALL.iter().map(|s| (*s, Vec::new())).collect();
    let mut d = window.start();
    while d <= window.end() {
        out.get_mut(&map.season_of(d.month())).expect("all seasons").push(d);
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Writes the four pipeline inputs, `noise_scores.csv` and `truth.json` into `out_dir`.
pub fn generate(spec: &GeneratorSpec, out_dir: &Path) -> Result<Truth, SynthError> {
    let data = generate_in_memory(spec)?;
    write_dataset(&data, out_dir)?;
    Ok(data.truth)
}

pub fn write_dataset(data: &SyntheticDataset, out_dir: &Path) -> Result<(), SynthError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source: io::Error| SynthError::Io { path, source }
    };
    let csv_err = |path: &Path| {
        let path = path.display().to_string();
        move |e: csv::Error| SynthError::Io {
            path,
            source: io::Error::other(e),
        }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let create = |name: &str| {
        let p = out_dir.join(name);
        fs::File::create(&p).map(io::BufWriter::new).map_err(io_err(&p))
    };
    let p = out_dir.join(ITEMS_FILE);
    write_items(create(ITEMS_FILE)?, &data.items).map_err(csv_err(&p))?;
    let p = out_dir.join(TRANSACTIONS_FILE);
    write_transactions(create(TRANSACTIONS_FILE)?, &data.transactions).map_err(csv_err(&p))?;
    let p = out_dir.join(ATTRIBUTES_FILE);
    write_attributes(create(ATTRIBUTES_FILE)?, &data.attributes).map_err(csv_err(&p))?;
    let p = out_dir.join(NOISE_SCORES_FILE);
    write_noise_scores(create(NOISE_SCORES_FILE)?, &data.noise_scores, true).map_err(csv_err(&p))?;
    let p = out_dir.join(TAXONOMY_FILE);
    fs::write(&p, data.taxonomy.to_json_string() + "\n").map_err(io_err(&p))?;
    let p = out_dir.join(TRUTH_FILE);
    let truth = serde_json::to_string_pretty(&data.truth).expect("truth serializes");
    fs::write(&p, truth + "\n").map_err(io_err(&p))?;
    Ok(())
}
