//! Seasonal selling frequencies per category bin and top/bottom percentile
//! selection of popular and unpopular items.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CategoryId, Dataset, TransactionRecord};

#[derive(Debug, Error, PartialEq)]
pub enum PopularityError {
    #[error("percentile must be in (0,50], got {0}")]
    Percentile(f64),
    #[error("season map: {0}")]
    SeasonMap(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Fall, Season::Winter];

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
            Season::Winter => "winter",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Season {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "fall" | "autumn" => Ok(Season::Fall),
            "winter" => Ok(Season::Winter),
            _ => Err(format!("unknown season `{s}`")),
        }
    }
}

/// Total assignment of calendar months to seasons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonMap {
    by_month: [Season; 12],
}

impl Default for SeasonMap {
    /// Northern-hemisphere meteorological seasons.
    fn default() -> Self {
        use Season::*;
        SeasonMap {
            by_month: [
                Winter, Winter, Spring, Spring, Spring, Summer, Summer, Summer, Fall, Fall, Fall, Winter,
            ],
        }
    }
}

impl SeasonMap {
    pub fn season_of(&self, month: u32) -> Season {
        self.by_month[(month as usize).clamp(1, 12) - 1]
    }

    /// Parses `{ "1": "winter", ..., "12": "winter" }`; all twelve months are required.
    pub fn from_json_str(text: &str) -> Result<Self, PopularityError> {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| PopularityError::SeasonMap(e.to_string()))?;
        let mut slots: [Option<Season>; 12] = [None; 12];
        for (k, v) in raw {
            let month: usize = k
                .trim()
                .parse()
                .ok()
                .filter(|m| (1..=12).contains(m))
                .ok_or_else(|| PopularityError::SeasonMap(format!("`{k}` is not a month number 1-12")))?;
            if slots[month - 1].is_some() {
                return Err(PopularityError::SeasonMap(format!("month {month} assigned twice")));
            }
            slots[month - 1] = Some(v.parse().map_err(PopularityError::SeasonMap)?);
        }
        let mut by_month = [Season::Spring; 12];
        for (i, s) in slots.iter().enumerate() {
            by_month[i] = s.ok_or_else(|| PopularityError::SeasonMap(format!("month {} unassigned", i + 1)))?;
        }
        Ok(SeasonMap { by_month })
    }

    pub fn to_json_string(&self) -> String {
        let m: BTreeMap<u32, &str> = (1..=12).map(|m| (m, self.season_of(m).as_str())).collect();
        serde_json::to_string(&m).expect("season map serializes")
    }
}

/// A (season, category) bin.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Cell {
    pub season: Season,
    pub category: CategoryId,
}

impl Cell {
    pub fn new(season: Season, category: CategoryId) -> Self {
        Cell { season, category }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    cells: BTreeMap<Cell, BTreeMap<u64, u64>>,
}

impl FrequencyTable {
    pub fn from_counts(counts: impl IntoIterator<Item = (Cell, u64, u64)>) -> Self {
        let mut t = FrequencyTable::default();
        for (cell, item, n) in counts {
            *t.cells.entry(cell).or_default().entry(item).or_insert(0) += n;
        }
        t
    }

    pub fn get(&self, cell: &Cell, item_id: u64) -> u64 {
        self.cells.get(cell).and_then(|c| c.get(&item_id)).copied().unwrap_or(0)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Cell, &BTreeMap<u64, u64>)> {
        self.cells.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.cells.values().flat_map(|c| c.values()).sum()
    }

    /// Cell-wise addition; associative and commutative.
    pub fn merge(mut self, other: FrequencyTable) -> FrequencyTable {
        for (cell, items) in other.cells {
            let dst = self.cells.entry(cell).or_default();
            for (id, n) in items {
                *dst.entry(id).or_insert(0) += n;
            }
        }
        self
    }

    pub fn scaled(&self, factor: u64) -> FrequencyTable {
        FrequencyTable {
            cells: self
                .cells
                .iter()
                .map(|(c, items)| (c.clone(), items.iter().map(|(&id, &n)| (id, n * factor)).collect()))
                .collect(),
        }
    }
}

/// Where the in-window transactions went.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CountSummary {
    pub included: u64,
    pub excluded_pruned: u64,
    pub excluded_unmapped: u64,
    pub excluded_dangling: u64,
}

impl CountSummary {
    pub fn excluded(&self) -> u64 {
        self.excluded_pruned + self.excluded_unmapped + self.excluded_dangling
    }

    fn merge(self, o: CountSummary) -> CountSummary {
        CountSummary {
            included: self.included + o.included,
            excluded_pruned: self.excluded_pruned + o.excluded_pruned,
            excluded_unmapped: self.excluded_unmapped + o.excluded_unmapped,
            excluded_dangling: self.excluded_dangling + o.excluded_dangling,
        }
    }
}

const COUNT_CHUNK: usize = 16 * 1024;

pub fn count_frequencies(
    dataset: &Dataset,
    kept: &BTreeSet<u64>,
    season_map: &SeasonMap,
) -> (FrequencyTable, CountSummary) {
    let count_chunk = |chunk: &[TransactionRecord]| {
        let mut table = FrequencyTable::default();
        let mut summary = CountSummary::default();
        for t in chunk {
            let Some(item) = dataset.item(t.item_id) else {
                summary.excluded_dangling += 1;
                continue;
            };
            if !kept.contains(&t.item_id) {
                summary.excluded_pruned += 1;
                continue;
            }
            let Some(category) = &item.category else {
                summary.excluded_unmapped += 1;
                continue;
            };
            let cell = Cell::new(season_map.season_of(t.date.month()), category.clone());
            *table.cells.entry(cell).or_default().entry(t.item_id).or_insert(0) += 1;
            summary.included += 1;
        }
        (table, summary)
    };
    dataset.transactions().par_chunks(COUNT_CHUNK).map(count_chunk).reduce(
        || (FrequencyTable::default(), CountSummary::default()),
        |(ta, sa), (tb, sb)| (ta.merge(tb), sa.merge(sb)),
    )
}

/// Transactions per calendar month over the dataset window; empty months are present with 0.
pub fn monthly_histogram(dataset: &Dataset) -> BTreeMap<(i32, u32), u64> {
    let window = dataset.window();
    let mut hist: BTreeMap<(i32, u32), u64> = window.months().into_iter().map(|m| (m, 0)).collect();
    for t in dataset.transactions() {
        if window.contains(t.date) {
            *hist.entry((t.date.year(), t.date.month())).or_insert(0) += 1;
        }
    }
    hist
}

/// Share of a cell (in percent) that is selected as popular and as unpopular.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Percentile(f64);

impl Percentile {
    pub fn new(p: f64) -> Result<Self, PopularityError> {
        if p > 0.0 && p <= 50.0 {
            Ok(Percentile(p))
        } else {
            Err(PopularityError::Percentile(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// ⌈p% · n⌉, guarded against floating-point overshoot on exact products.
    pub fn slots(self, n: usize) -> usize {
        if n == 0 {
            return 0;
        }
        let exact = self.0 * n as f64 / 100.0;
        ((exact - 1e-9).ceil().max(1.0) as usize).min(n)
    }
}

impl Default for Percentile {
    fn default() -> Self {
        Percentile(10.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CellSelection {
    /// Highest sellers first.
    pub popular: Vec<u64>,
    /// In ranking order, i.e. the weakest seller last.
    pub unpopular: Vec<u64>,
    /// Items with at least one sale in the cell.
    pub ranked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularitySelection {
    pub percentile: Percentile,
    pub cells: BTreeMap<Cell, CellSelection>,
}

impl PopularitySelection {
    pub fn popular_in(&self, season: Season) -> BTreeSet<u64> {
        self.collect(season, |c| &c.popular)
    }

    pub fn unpopular_in(&self, season: Season) -> BTreeSet<u64> {
        self.collect(season, |c| &c.unpopular)
    }

    fn collect(&self, season: Season, f: impl Fn(&CellSelection) -> &Vec<u64>) -> BTreeSet<u64> {
        self.cells
            .iter()
            .filter(|(cell, _)| cell.season == season)
            .flat_map(|(_, sel)| f(sel).iter().copied())
            .collect()
    }
}

/// Ranks a cell by count descending, ties by ascending item id, ignoring zero counts.
pub fn rank_cell(counts: &BTreeMap<u64, u64>) -> Vec<u64> {
    let mut ranked: Vec<(u64, u64)> = counts.iter().filter(|(_, &n)| n > 0).map(|(&id, &n)| (id, n)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().map(|(id, _)| id).collect()
}

pub fn select_popular(freq: &FrequencyTable, percentile: Percentile) -> PopularitySelection {
    let cells = freq
        .cells
        .par_iter()
        .map(|(cell, counts)| {
            let ranked = rank_cell(counts);
            let n = ranked.len();
            let k = percentile.slots(n);
            let popular = ranked[..k].to_vec();
            // when the two ends overlap, the shared items stay popular
            let bottom_start = (n - k).max(k);
            let unpopular = ranked[bottom_start..].to_vec();
            (
                cell.clone(),
                CellSelection {
                    popular,
                    unpopular,
                    ranked: n,
                },
            )
        })
        .collect();
    PopularitySelection { percentile, cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{link_dataset, AttributeTable, DateWindow, ItemRecord, Taxonomy, Zone};
    use chrono::NaiveDate;

    fn tshirt() -> CategoryId {
        CategoryId::new(Zone::Upper, "T-shirt")
    }

    fn dataset(items: &[(u64, Option<CategoryId>)], txs: &[(u64, (i32, u32, u32))]) -> Dataset {
        let items = items
            .iter()
            .map(|(id, cat)| ItemRecord {
                item_id: *id,
                raw_cat_id: 0,
                name: String::new(),
                img_ref: String::new(),
                category: cat.clone(),
            })
            .collect();
        let txs = txs
            .iter()
            .map(|&(item_id, (y, m, d))| TransactionRecord {
                user_id: 1,
                item_id,
                date: NaiveDate::from_ymd_opt(y, m, d).unwrap(),
            })
            .collect();
        link_dataset(
            items,
            txs,
            AttributeTable::default(),
            DateWindow::default(),
            Taxonomy::default(),
        )
        .0
    }

    fn cell_of(counts: &[(u64, u64)]) -> FrequencyTable {
        FrequencyTable::from_counts(
            counts
                .iter()
                .map(|&(id, n)| (Cell::new(Season::Spring, tshirt()), id, n)),
        )
    }

    #[test]
    fn no_transactions_gives_empty_table() {
        let ds = dataset(&[(5, Some(tshirt()))], &[]);
        let (t, s) = count_frequencies(&ds, &BTreeSet::from([5]), &SeasonMap::default());
        assert!(t.is_empty());
        assert_eq!(s, CountSummary::default());
    }

    #[test]
    fn counts_by_season() {
        let ds = dataset(
            &[(5, Some(tshirt()))],
            &[(5, (2015, 3, 10)), (5, (2015, 4, 2)), (5, (2014, 12, 24))],
        );
        let (t, s) = count_frequencies(&ds, &BTreeSet::from([5]), &SeasonMap::default());
        assert_eq!(t.get(&Cell::new(Season::Spring, tshirt()), 5), 2);
        assert_eq!(t.get(&Cell::new(Season::Winter, tshirt()), 5), 1);
        assert_eq!(t.total(), 3);
        assert_eq!(s.included, 3);
    }

    #[test]
    fn exclusions_are_tallied() {
        let ds = dataset(
            &[(1, Some(tshirt())), (2, Some(tshirt())), (3, None)],
            &[
                (1, (2014, 7, 1)),
                (2, (2014, 7, 1)),
                (3, (2014, 7, 1)),
                (99, (2014, 7, 1)),
            ],
        );
        let (t, s) = count_frequencies(&ds, &BTreeSet::from([1, 3]), &SeasonMap::default());
        assert_eq!(t.total(), 1);
        assert_eq!(
            s,
            CountSummary {
                included: 1,
                excluded_pruned: 1,
                excluded_unmapped: 1,
                excluded_dangling: 1
            }
        );
    }

    #[test]
    fn monthly_histogram_covers_window() {
        let ds = dataset(&[(1, Some(tshirt()))], &[]);
        let h = monthly_histogram(&ds);
        assert_eq!(h.len(), 13);
        assert!(h.values().all(|&n| n == 0));

        let ds = dataset(&[(1, Some(tshirt()))], &[(1, (2014, 7, 1)); 5]);
        let h = monthly_histogram(&ds);
        assert_eq!(h[&(2014, 7)], 5);
        assert_eq!(h.values().sum::<u64>(), 5);

        let mut rows = vec![(1, (2014, 8, 3)); 3];
        rows.extend(vec![(1, (2015, 1, 9)); 4]);
        let h = monthly_histogram(&dataset(&[(1, Some(tshirt()))], &rows));
        assert_eq!((h[&(2014, 8)], h[&(2015, 1)]), (3, 4));
    }

    #[test]
    fn distinct_ranks_ten_percent() {
        let counts: Vec<(u64, u64)> = (1..=10).map(|i| (i, 11 - i)).collect();
        let sel = select_popular(&cell_of(&counts), Percentile::new(10.0).unwrap());
        let c = sel.cells.values().next().unwrap();
        assert_eq!(c.popular, vec![1]);
        assert_eq!(c.unpopular, vec![10]);
    }

    #[test]
    fn ties_broken_by_lower_id() {
        // ⌈0.34·3⌉ = 2 slots: [2, 9] popular; 9 overlaps the bottom two and stays popular
        let sel = select_popular(&cell_of(&[(2, 5), (9, 5), (4, 3)]), Percentile::new(34.0).unwrap());
        let c = sel.cells.values().next().unwrap();
        assert_eq!(c.popular, vec![2, 9]);
        assert_eq!(c.unpopular, vec![4]);

        let sel = select_popular(&cell_of(&[(2, 5), (9, 5), (4, 3)]), Percentile::new(33.0).unwrap());
        let c = sel.cells.values().next().unwrap();
        assert_eq!(c.popular, vec![2]);
        assert_eq!(c.unpopular, vec![4]);
    }

    #[test]
    fn single_item_cell() {
        let sel = select_popular(&cell_of(&[(7, 3)]), Percentile::new(10.0).unwrap());
        let c = sel.cells.values().next().unwrap();
        assert_eq!(c.popular, vec![7]);
        assert!(c.unpopular.is_empty());
    }

    #[test]
    fn zero_count_items_not_ranked() {
        let sel = select_popular(&cell_of(&[(1, 0), (2, 4), (3, 1)]), Percentile::new(50.0).unwrap());
        let c = sel.cells.values().next().unwrap();
        assert_eq!(c.ranked, 2);
        assert_eq!((c.popular.clone(), c.unpopular.clone()), (vec![2], vec![3]));
    }

    #[test]
    fn percentile_domain() {
        assert!(Percentile::new(0.0).is_err());
        assert!(Percentile::new(50.0).is_ok());
        assert_eq!(Percentile::new(60.0), Err(PopularityError::Percentile(60.0)));
        assert_eq!(Percentile::new(10.0).unwrap().slots(30), 3);
        assert_eq!(Percentile::new(10.0).unwrap().slots(31), 4);
    }

    #[test]
    fn season_map_json() {
        let m = SeasonMap::from_json_str(&SeasonMap::default().to_json_string()).unwrap();
        assert_eq!(m, SeasonMap::default());
        assert!(SeasonMap::from_json_str(r#"{"1": "winter"}"#).is_err());
        assert!(SeasonMap::from_json_str(r#"{"13": "winter"}"#).is_err());
    }
}
