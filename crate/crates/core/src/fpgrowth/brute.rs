use std::collections::BTreeSet;

use super::{sort_itemsets, AttributeItemset, AttributeSet, ItemsetMiner, MineError};

pub const MAX_ORACLE_ATTRIBUTES: usize = 20;

/// Exhaustive enumeration of every non-empty attribute subset, support
/// counted by scanning the transactions.
#[derive(Debug, Clone, Copy, Default)]
pub struct BruteForce {
    pub max_itemset_size: Option<usize>,
}

impl ItemsetMiner for BruteForce {
    fn name(&self) -> &'static str {
        "brute-force"
    }

    fn mine(&self, transactions: &[AttributeSet], min_support: u64) -> Result<Vec<AttributeItemset>, MineError> {
        enumerate(transactions, min_support, self.max_itemset_size)
    }
}

pub fn brute_force_oracle(transactions: &[AttributeSet], min_support: u64) -> Result<Vec<AttributeItemset>, MineError> {
    enumerate(transactions, min_support, None)
}

fn enumerate(
    transactions: &[AttributeSet],
    min_support: u64,
    max_size: Option<usize>,
) -> Result<Vec<AttributeItemset>, MineError> {
    if min_support < 1 {
        return Err(MineError::ZeroSupport);
    }
    let universe: Vec<&String> = transactions
        .iter()
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if universe.len() > MAX_ORACLE_ATTRIBUTES {
        return Err(MineError::TooManyAttributes {
            got: universe.len(),
            max: MAX_ORACLE_ATTRIBUTES,
        });
    }
    let masks: Vec<u32> = transactions
        .iter()
        .map(|t| {
            t.iter()
                .map(|a| 1u32 << universe.binary_search(&a).expect("attribute in universe"))
                .fold(0, |m, b| m | b)
        })
        .collect();
    let max_size = max_size.unwrap_or(usize::MAX) as u32;

    let mut out = Vec::new();
    for subset in 1u32..(1u32 << universe.len()) {
        if subset.count_ones() > max_size {
            continue;
        }
        let support = masks.iter().filter(|&&t| t & subset == subset).count() as u64;
        if support >= min_support {
            let items = (0..universe.len())
                .filter(|b| subset & (1 << b) != 0)
                .map(|b| universe[b].clone())
                .collect();
            out.push(AttributeItemset { items, support });
        }
    }
    sort_itemsets(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(rows: &[&[&str]]) -> Vec<AttributeSet> {
        rows.iter().map(|t| t.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn empty_input() {
        assert!(brute_force_oracle(&[], 1).unwrap().is_empty());
    }

    #[test]
    fn repeated_singleton() {
        let got = brute_force_oracle(&sets(&[&["a"], &["a"]]), 1).unwrap();
        assert_eq!(
            got,
            vec![AttributeItemset {
                items: vec!["a".into()],
                support: 2
            }]
        );
    }

    #[test]
    fn universe_bound() {
        let names: Vec<String> = (0..21).map(|i| format!("attr{i:02}")).collect();
        let tx = vec![names.into_iter().collect::<AttributeSet>()];
        assert_eq!(
            brute_force_oracle(&tx, 1).unwrap_err(),
            MineError::TooManyAttributes { got: 21, max: 20 }
        );
    }
}
