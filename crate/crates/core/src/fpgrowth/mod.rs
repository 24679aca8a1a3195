//! Frequent attribute-itemset mining.
//!
//! [`FpGrowth`] builds an FP-tree and mines it recursively through
//! conditional trees. [`BruteForce`] enumerates every attribute subset and is
//! kept as an independent oracle. Both implement [`ItemsetMiner`] and are
//! registered by name in [`miner_registry`].

mod brute;
mod growth;
mod tree;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::diag::Diagnostic;
use crate::ingest::AttributeTable;
use crate::registry::Registry;

pub use brute::{brute_force_oracle, BruteForce, MAX_ORACLE_ATTRIBUTES};
pub use growth::{mine, FpGrowth};
pub use tree::{build_tree, FpTree};

/// The set of attribute names exhibited by one item.
pub type AttributeSet = BTreeSet<String>;

#[derive(Debug, Error, PartialEq)]
pub enum MineError {
    #[error("min_support must be at least 1")]
    ZeroSupport,
    #[error("brute-force enumeration supports at most {max} distinct attributes, got {got}")]
    TooManyAttributes { got: usize, max: usize },
    #[error("relative min support must be in (0,1], got {0}")]
    RelativeSupport(f64),
    #[error("attribute cutoff must be in (0,1), got {0}")]
    Cutoff(f64),
}

/// A frequent itemset: sorted attribute names and absolute support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeItemset {
    pub items: Vec<String>,
    pub support: u64,
}

impl AttributeItemset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn joined(&self) -> String {
        self.items.join(";")
    }
}

/// Canonical output order: by size, then lexicographically by items.
pub fn sort_itemsets(sets: &mut [AttributeItemset]) {
    sets.sort_by(|a, b| a.items.len().cmp(&b.items.len()).then_with(|| a.items.cmp(&b.items)));
}

pub trait ItemsetMiner: Send + Sync {
    fn name(&self) -> &'static str;

    /// Every itemset with support ≥ `min_support` (absolute), in canonical order.
    fn mine(&self, transactions: &[AttributeSet], min_support: u64) -> Result<Vec<AttributeItemset>, MineError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MinerParams {
    /// Largest itemset size to emit; `None` for unlimited.
    pub max_itemset_size: Option<usize>,
}

pub fn miner_registry() -> Registry<dyn ItemsetMiner, MinerParams> {
    let mut r: Registry<dyn ItemsetMiner, MinerParams> = Registry::new("miner");
    r.register(
        "fpgrowth",
        &["fp-growth"],
        "FP-tree construction with recursive conditional-tree mining",
        |p| {
            Box::new(FpGrowth {
                max_itemset_size: p.max_itemset_size,
            })
        },
    );
    r.register(
        "brute-force",
        &["oracle", "bruteforce"],
        "exhaustive subset enumeration (at most 20 distinct attributes)",
        |p| {
            Box::new(BruteForce {
                max_itemset_size: p.max_itemset_size,
            })
        },
    );
    r
}

/// Converts a relative support fraction into the absolute count the miners
/// use: ⌈fraction · n⌉, never below 1.
pub fn absolute_min_support(fraction: f64, n_transactions: usize) -> Result<u64, MineError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(MineError::RelativeSupport(fraction));
    }
    let exact = fraction * n_transactions as f64;
    Ok(((exact - 1e-9).ceil() as u64).max(1))
}

/// Posterior cutoff above which an attribute counts as present.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Cutoff(f64);

impl Cutoff {
    pub fn new(value: f64) -> Result<Self, MineError> {
        if value > 0.0 && value < 1.0 {
            Ok(Cutoff(value))
        } else {
            Err(MineError::Cutoff(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff(0.5)
    }
}

/// Thresholds posteriors into attribute sets (inclusive at the cutoff).
/// Items without an attribute row are skipped with a diagnostic.
pub fn binarize(
    table: &AttributeTable,
    item_ids: impl IntoIterator<Item = u64>,
    cutoff: Cutoff,
) -> (Vec<(u64, AttributeSet)>, Vec<Diagnostic>) {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for id in item_ids {
        match table.get(id) {
            Some(v) => {
                let set = table
                    .vocabulary()
                    .iter()
                    .zip(v.values())
                    .filter(|(_, &p)| p >= cutoff.0)
                    .map(|(name, _)| name.clone())
                    .collect();
                out.push((id, set));
            }
            None => diags.push(Diagnostic::warning(
                "binarize",
                None,
                format!("item {id} has no attribute row; skipped"),
            )),
        }
    }
    (out, diags)
}

/// Support of `items` by direct scan.
pub fn count_support(transactions: &[AttributeSet], items: &[String]) -> u64 {
    transactions
        .iter()
        .filter(|t| items.iter().all(|a| t.contains(a)))
        .count() as u64
}
