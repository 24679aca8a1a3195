use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trendforge::ingest::{
    link_dataset, AttributeTable, CategoryId, DateWindow, ItemRecord, Taxonomy, TransactionRecord, Zone,
};
use trendforge::noise::{apply_filter, confusion, metrics, NoiseScore, Threshold};
use trendforge::popularity::{count_frequencies, select_popular, Cell, FrequencyTable, Percentile, Season, SeasonMap};

/// Full sort by (count desc, id asc); k = ⌈p·n/100⌉ in integer arithmetic;
/// the bottom k exclude anything already on top.
fn oracle(counts: &BTreeMap<u64, u64>, percent: u64) -> (Vec<u64>, Vec<u64>) {
    let mut all: Vec<(u64, u64)> = counts.iter().filter(|(_, &c)| c > 0).map(|(&i, &c)| (i, c)).collect();
    all.sort_by_key(|&(id, c)| (Reverse(c), id));
    let n = all.len() as u64;
    let k = ((percent * n).div_ceil(100)) as usize;
    let top: Vec<u64> = all[..k].iter().map(|p| p.0).collect();
    let bottom: Vec<u64> = all
        .iter()
        .rev()
        .take(k)
        .map(|p| p.0)
        .filter(|id| !top.contains(id))
        .collect();
    let mut bottom = bottom;
    bottom.reverse();
    (top, bottom)
}

fn cells() -> Vec<Cell> {
    let cats = [
        CategoryId::new(Zone::Upper, "T-shirt"),
        CategoryId::new(Zone::Lower, "jeans"),
    ];
    Season::ALL
        .iter()
        .flat_map(|&s| cats.iter().map(move |c| Cell::new(s, c.clone())))
        .collect()
}

fn table() -> impl Strategy<Value = FrequencyTable> {
    prop::collection::vec((0usize..8, 0u64..1000, 0u64..=100), 0..400).prop_map(|rows| {
        let cells = cells();
        FrequencyTable::from_counts(rows.into_iter().map(|(c, id, n)| (cells[c].clone(), id, n)))
    })
}

fn tiny_dataset(n_items: u64, sales: &[(u64, u32)]) -> trendforge::ingest::Dataset {
    let taxonomy = Taxonomy::clothing_default();
    let (raw_cat, _) = taxonomy.iter().next().unwrap();
    let items = (0..n_items)
        .map(|id| ItemRecord {
            item_id: id,
            raw_cat_id: raw_cat,
            name: format!("item {id}"),
            img_ref: String::new(),
            category: Some(CategoryId::new(Zone::Upper, "T-shirt")),
        })
        .collect();
    let txs = sales
        .iter()
        .enumerate()
        .map(|(k, &(item, day))| TransactionRecord {
            user_id: k as u64,
            item_id: item,
            date: NaiveDate::from_ymd_opt(2014, 6, 1).unwrap() + chrono::Days::new(day as u64),
        })
        .collect();
    link_dataset(items, txs, AttributeTable::default(), DateWindow::default(), taxonomy).0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn selection_matches_full_sort(freq in table(), percent in 1u64..=50) {
        let sel = select_popular(&freq, Percentile::new(percent as f64).unwrap());
        for (cell, counts) in freq.cells() {
            let (top, bottom) = oracle(counts, percent);
            let got = sel.cells.get(cell).cloned().unwrap_or_default();
            prop_assert_eq!(&got.popular, &top);
            prop_assert_eq!(&got.unpopular, &bottom);
        }
    }

    #[test]
    fn positive_scaling_keeps_membership(freq in table(), percent in 1u64..=50, factor in 1u64..50) {
        let p = Percentile::new(percent as f64).unwrap();
        prop_assert_eq!(select_popular(&freq, p).cells, select_popular(&freq.scaled(factor), p).cells);
    }

    #[test]
    fn transaction_order_and_conservation(
        sales in prop::collection::vec((0u64..25, 0u32..395), 1..300),
        pruned in prop::collection::btree_set(0u64..25, 0..5),
        seed in any::<u64>(),
    ) {
        let kept: BTreeSet<u64> = (0..20).filter(|id| !pruned.contains(id)).collect();
        let ds = tiny_dataset(20, &sales);
        let (freq, summary) = count_frequencies(&ds, &kept, &SeasonMap::default());
        let in_window = ds.transactions().iter().filter(|t| ds.window().contains(t.date)).count() as u64;
        prop_assert_eq!(summary.included + summary.excluded(), in_window);
        prop_assert_eq!(freq.total(), summary.included);

        let mut shuffled = sales.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (freq2, summary2) = count_frequencies(&tiny_dataset(20, &shuffled), &kept, &SeasonMap::default());
        prop_assert_eq!(summary, summary2);
        let p = Percentile::default();
        prop_assert_eq!(select_popular(&freq, p).cells, select_popular(&freq2, p).cells);
    }

    #[test]
    fn noise_threshold_monotone_partition(
        scores in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..60),
        t1 in 0.0f64..=1.0,
        t2 in 0.0f64..=1.0,
    ) {
        let ds = tiny_dataset(scores.len() as u64, &[]);
        let scores: Vec<NoiseScore> = scores
            .iter()
            .enumerate()
            .map(|(i, &(score, label))| NoiseScore { item_id: i as u64, score, label: Some(label) })
            .collect();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = apply_filter(&ds, &scores, Threshold::new(lo).unwrap());
        let b = apply_filter(&ds, &scores, Threshold::new(hi).unwrap());
        prop_assert!(b.pruned.is_subset(&a.pruned));
        for out in [&a, &b] {
            prop_assert!(out.kept.is_disjoint(&out.pruned));
            let all: BTreeSet<u64> = out.kept.union(&out.pruned).copied().collect();
            prop_assert_eq!(all, scores.iter().map(|s| s.item_id).collect::<BTreeSet<_>>());
        }

        let cm = confusion(&scores, lo).unwrap();
        let m = metrics(&cm).unwrap();
        let acc = m.accuracy.value().unwrap();
        prop_assert_eq!(acc, (cm.tp + cm.tn) as f64 / (cm.tp + cm.fp + cm.fn_ + cm.tn) as f64);
        for v in [m.accuracy, m.precision, m.recall, m.f1].into_iter().filter_map(|v| v.value()) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
