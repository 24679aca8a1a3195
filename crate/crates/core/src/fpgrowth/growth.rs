use rayon::prelude::*;

use super::tree::Tree;
use super::{sort_itemsets, AttributeItemset, AttributeSet, FpTree, ItemsetMiner, MineError};

/// Recursive FP-growth over conditional trees.
#[derive(Debug, Clone, Copy, Default)]
pub struct FpGrowth {
    pub max_itemset_size: Option<usize>,
}

impl ItemsetMiner for FpGrowth {
    fn name(&self) -> &'static str {
        "fpgrowth"
    }

    fn mine(&self, transactions: &[AttributeSet], min_support: u64) -> Result<Vec<AttributeItemset>, MineError> {
        let tree = FpTree::build(transactions, min_support)?;
        Ok(mine_with_limit(&tree, min_support, self.max_itemset_size))
    }
}

/// Mines every itemset of `tree` with support ≥ `min_support`.
pub fn mine(tree: &FpTree, min_support: u64) -> Vec<AttributeItemset> {
    mine_with_limit(tree, min_support, None)
}

pub fn mine_with_limit(tree: &FpTree, min_support: u64, max_size: Option<usize>) -> Vec<AttributeItemset> {
    let min_support = min_support.max(1);
    let max_size = max_size.unwrap_or(usize::MAX);
    if max_size == 0 {
        return Vec::new();
    }
    let n_items = tree.names.len();
    // top-level suffixes are independent
    let raw: Vec<(Vec<u32>, u64)> = (0..tree.tree.header.len())
        .into_par_iter()
        .flat_map_iter(|r| {
            let mut out = Vec::new();
            let mut suffix = Vec::new();
            grow_suffix(&tree.tree, r, &mut suffix, n_items, min_support, max_size, &mut out);
            out
        })
        .collect();

    let mut sets: Vec<AttributeItemset> = raw
        .into_iter()
        .map(|(ids, support)| {
            let mut items: Vec<String> = ids.iter().map(|&i| tree.names[i as usize].clone()).collect();
            items.sort();
            AttributeItemset { items, support }
        })
        .collect();
    sort_itemsets(&mut sets);
    sets
}

fn grow(
    tree: &Tree,
    suffix: &mut Vec<u32>,
    n_items: usize,
    min_support: u64,
    max_size: usize,
    out: &mut Vec<(Vec<u32>, u64)>,
) {
    for r in (0..tree.header.len()).rev() {
        grow_suffix(tree, r, suffix, n_items, min_support, max_size, out);
    }
}

fn grow_suffix(
    tree: &Tree,
    header_index: usize,
    suffix: &mut Vec<u32>,
    n_items: usize,
    min_support: u64,
    max_size: usize,
    out: &mut Vec<(Vec<u32>, u64)>,
) {
    let entry = &tree.header[header_index];
    suffix.push(entry.item);
    out.push((suffix.clone(), entry.support));

    if suffix.len() < max_size {
        // conditional pattern base: prefix paths weighted by the node count
        let mut base: Vec<(Vec<u32>, u64)> = Vec::new();
        let mut buf = Vec::new();
        for n in tree.chain(header_index) {
            tree.prefix_path(n, &mut buf);
            if !buf.is_empty() {
                base.push((buf.clone(), tree.nodes[n].count));
            }
        }
        if !base.is_empty() {
            let cond = Tree::from_weighted(base.iter().map(|(p, w)| (p.as_slice(), *w)), n_items, min_support);
            if !cond.header.is_empty() {
                grow(&cond, suffix, n_items, min_support, max_size, out);
            }
        }
    }
    suffix.pop();
}
