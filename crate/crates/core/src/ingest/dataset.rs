use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::{
    load_attributes, load_items, load_transactions, write_attributes, write_items, write_transactions, AttributeTable,
    AttributeVector, DateWindow, ItemRecord, Result, Taxonomy, TransactionRecord, ATTRIBUTES_FILE, ITEMS_FILE,
    TAXONOMY_FILE, TRANSACTIONS_FILE,
};
use crate::diag::{Diagnostic, RowCounts};

/// Immutable, cross-linked view over the loaded inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    window: DateWindow,
    taxonomy: Taxonomy,
    items: BTreeMap<u64, ItemRecord>,
    transactions: Vec<TransactionRecord>,
    attributes: AttributeTable,
    by_item: BTreeMap<u64, Vec<usize>>,
    dangling: BTreeSet<usize>,
    attribute_less: BTreeSet<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LinkReport {
    pub dangling_transactions: usize,
    pub attribute_less_items: usize,
    pub orphan_attribute_rows: usize,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

pub fn link_dataset(
    items: Vec<ItemRecord>,
    transactions: Vec<TransactionRecord>,
    attributes: AttributeTable,
    window: DateWindow,
    taxonomy: Taxonomy,
) -> (Dataset, LinkReport) {
    let mut report = LinkReport::default();
    let mut by_id = BTreeMap::new();
    for it in items {
        let id = it.item_id;
        if by_id.contains_key(&id) {
            report.diagnostics.push(Diagnostic::fatal(
                "link",
                None,
                format!("duplicate item_id {id}; later record ignored"),
            ));
            continue;
        }
        by_id.insert(id, it);
    }

    let mut by_item: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut dangling = BTreeSet::new();
    for (idx, t) in transactions.iter().enumerate() {
        if by_id.contains_key(&t.item_id) {
            by_item.entry(t.item_id).or_default().push(idx);
        } else {
            dangling.insert(idx);
        }
    }
    if !dangling.is_empty() {
        let unknown: BTreeSet<u64> = dangling.iter().map(|&i| transactions[i].item_id).collect();
        report.diagnostics.push(Diagnostic::warning(
            "link",
            None,
            format!(
                "{} transaction(s) reference {} unknown item id(s)",
                dangling.len(),
                unknown.len()
            ),
        ));
    }

    let attribute_less: BTreeSet<u64> = by_id.keys().copied().filter(|id| !attributes.contains(*id)).collect();
    if !attribute_less.is_empty() {
        report.diagnostics.push(Diagnostic::warning(
            "link",
            None,
            format!("{} item(s) have no attribute row", attribute_less.len()),
        ));
    }
    report.orphan_attribute_rows = attributes.iter().filter(|(id, _)| !by_id.contains_key(id)).count();
    report.dangling_transactions = dangling.len();
    report.attribute_less_items = attribute_less.len();

    let dataset = Dataset {
        window,
        taxonomy,
        items: by_id,
        transactions,
        attributes,
        by_item,
        dangling,
        attribute_less,
    };
    (dataset, report)
}

impl Dataset {
    pub fn window(&self) -> &DateWindow {
        &self.window
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn item(&self, id: u64) -> Option<&ItemRecord> {
        self.items.get(&id)
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemRecord> {
        self.items.values()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn transactions(&self) -> &[TransactionRecord] {
        &self.transactions
    }

    pub fn transactions_for(&self, item_id: u64) -> impl Iterator<Item = &TransactionRecord> {
        self.by_item
            .get(&item_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.transactions[i])
    }

    pub fn is_dangling(&self, tx_index: usize) -> bool {
        self.dangling.contains(&tx_index)
    }

    pub fn dangling_count(&self) -> usize {
        self.dangling.len()
    }

    pub fn attributes(&self) -> &AttributeTable {
        &self.attributes
    }

    pub fn attribute_vector(&self, item_id: u64) -> Option<&AttributeVector> {
        self.attributes.get(item_id)
    }

    /// Items without an attribute row; these never take part in feature mining.
    pub fn is_attribute_less(&self, item_id: u64) -> bool {
        self.attribute_less.contains(&item_id)
    }

    pub fn attribute_less(&self) -> &BTreeSet<u64> {
        &self.attribute_less
    }

    /// Writes the canonical CSV/JSON forms that `load_dataset_dir` reads back.
    pub fn write_canonical(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let io_err = std::io::Error::other;
        write_items(BufWriter::new(File::create(dir.join(ITEMS_FILE))?), self.items.values()).map_err(io_err)?;
        write_transactions(
            BufWriter::new(File::create(dir.join(TRANSACTIONS_FILE))?),
            self.transactions.iter(),
        )
        .map_err(io_err)?;
        write_attributes(
            BufWriter::new(File::create(dir.join(ATTRIBUTES_FILE))?),
            &self.attributes,
        )
        .map_err(io_err)?;
        std::fs::write(dir.join(TAXONOMY_FILE), self.taxonomy.to_json_string())?;
        Ok(())
    }
}

/// Diagnostics and row accounting for one input file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct FileLoad {
    pub counts: RowCounts,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone)]
pub struct DatasetLoad {
    pub dataset: Dataset,
    pub items: FileLoad,
    pub transactions: FileLoad,
    pub attributes: FileLoad,
    pub link: LinkReport,
}

impl DatasetLoad {
    pub fn all_diagnostics(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items
            .diagnostics
            .iter()
            .chain(&self.transactions.diagnostics)
            .chain(&self.attributes.diagnostics)
            .chain(&self.link.diagnostics)
    }
}

/// Loads `taxonomy.json`, `items.csv`, `transactions.csv` and
/// `attributes.csv` from `dir`; the three CSV files are parsed concurrently.
pub fn load_dataset_dir(dir: &Path, window: DateWindow) -> Result<DatasetLoad> {
    load_dataset_files(
        &dir.join(TAXONOMY_FILE),
        &dir.join(ITEMS_FILE),
        &dir.join(TRANSACTIONS_FILE),
        &dir.join(ATTRIBUTES_FILE),
        window,
    )
}

pub fn load_dataset_files(
    taxonomy: &Path,
    items: &Path,
    transactions: &Path,
    attributes: &Path,
    window: DateWindow,
) -> Result<DatasetLoad> {
    let taxonomy = Taxonomy::load(taxonomy)?;
    let (items, txs, attrs) = std::thread::scope(|s| {
        let tax = &taxonomy;
        let h_items = s.spawn(move || load_items(items, tax));
        let h_tx = s.spawn(move || load_transactions(transactions, &window));
        let attrs = load_attributes(attributes);
        (
            h_items.join().expect("item loader panicked"),
            h_tx.join().expect("transaction loader panicked"),
            attrs,
        )
    });
    let (items, item_diags, item_counts) = items?;
    let (txs, tx_diags, tx_counts) = txs?;
    let (attrs, attr_diags, attr_counts) = attrs?;
    let (dataset, link) = link_dataset(items, txs, attrs, window, taxonomy);
    Ok(DatasetLoad {
        dataset,
        items: FileLoad {
            counts: item_counts,
            diagnostics: item_diags,
        },
        transactions: FileLoad {
            counts: tx_counts,
            diagnostics: tx_diags,
        },
        attributes: FileLoad {
            counts: attr_counts,
            diagnostics: attr_diags,
        },
        link,
    })
}
