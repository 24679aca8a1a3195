use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trendforge::fpgrowth::{brute_force_oracle, miner_registry, AttributeSet, MinerParams};

/// Subset enumeration written independently of the library.
fn enumerate(transactions: &[AttributeSet], min_support: u64) -> BTreeMap<Vec<String>, u64> {
    let universe: Vec<String> = transactions
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = BTreeMap::new();
    for mask in 1u32..(1u32 << universe.len()) {
        let set: Vec<String> = (0..universe.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| universe[b].clone())
            .collect();
        let support = transactions
            .iter()
            .filter(|t| set.iter().all(|a| t.contains(a)))
            .count() as u64;
        if support >= min_support {
            out.insert(set, support);
        }
    }
    out
}

fn fpgrowth(transactions: &[AttributeSet], min_support: u64) -> BTreeMap<Vec<String>, u64> {
    miner_registry()
        .create("fpgrowth", &MinerParams::default())
        .unwrap()
        .mine(transactions, min_support)
        .unwrap()
        .into_iter()
        .map(|s| (s.items, s.support))
        .collect()
}

fn transactions() -> impl Strategy<Value = Vec<AttributeSet>> {
    (1usize..=12).prop_flat_map(|n_attrs| {
        prop::collection::vec(
            prop::collection::btree_set((0..n_attrs).prop_map(|a| format!("a{a:02}")), 0..=n_attrs.min(6)),
            0..=30,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn fpgrowth_matches_enumeration(txs in transactions(), min_support in 1u64..=3) {
        let expected = enumerate(&txs, min_support);
        prop_assert_eq!(&fpgrowth(&txs, min_support), &expected);
        let oracle: BTreeMap<_, _> = brute_force_oracle(&txs, min_support).unwrap().into_iter().map(|s| (s.items, s.support)).collect();
        prop_assert_eq!(oracle, expected);
    }

    #[test]
    fn downward_closure_and_exact_support(txs in transactions(), min_support in 1u64..=3) {
        let mined = fpgrowth(&txs, min_support);
        for (items, &support) in &mined {
            let rescan = txs.iter().filter(|t| items.iter().all(|a| t.contains(a))).count() as u64;
            prop_assert_eq!(rescan, support);
            for drop in 0..items.len() {
                let mut sub = items.clone();
                sub.remove(drop);
                if sub.is_empty() {
                    continue;
                }
                let sub_support = mined.get(&sub);
                prop_assert!(sub_support.is_some_and(|&s| s >= support), "{:?} missing or smaller", sub);
            }
        }
    }

    #[test]
    fn transaction_order_is_irrelevant(txs in transactions(), min_support in 1u64..=3, seed in any::<u64>()) {
        let base = fpgrowth(&txs, min_support);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = txs.clone();
        for _ in 0..5 {
            shuffled.shuffle(&mut rng);
            prop_assert_eq!(&fpgrowth(&shuffled, min_support), &base);
        }
    }

    #[test]
    fn size_limit_truncates(txs in transactions(), min_support in 1u64..=3, limit in 1usize..=3) {
        let full = fpgrowth(&txs, min_support);
        let limited: BTreeMap<_, _> = miner_registry()
            .create("fpgrowth", &MinerParams { max_itemset_size: Some(limit) })
            .unwrap()
            .mine(&txs, min_support)
            .unwrap()
            .into_iter()
            .map(|s| (s.items, s.support))
            .collect();
        let expected: BTreeMap<_, _> = full.into_iter().filter(|(k, _)| k.len() <= limit).collect();
        prop_assert_eq!(limited, expected);
    }
}
