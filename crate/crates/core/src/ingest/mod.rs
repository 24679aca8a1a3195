//! Loading and cross-linking of the catalog, transaction, attribute and
//! taxonomy inputs.
//!
//! Every loader returns its records together with row diagnostics. File-level
//! problems (unreadable file, wrong header, empty vocabulary) are errors;
//! row-level problems never abort a load.

mod attributes;
mod dataset;
mod items;
mod taxonomy;
mod transactions;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use attributes::{load_attributes, read_attributes, write_attributes, AttributeTable, AttributeVector};
pub use dataset::{link_dataset, load_dataset_dir, load_dataset_files, Dataset, DatasetLoad, FileLoad, LinkReport};
pub use items::{load_items, read_items, write_items, CategoryId, ItemRecord, UNMAPPED};
pub use taxonomy::{Taxonomy, TaxonomyEntry, Zone};
pub use transactions::{
    load_transactions, parse_compact_date, read_transactions, write_transactions, DateWindow, TransactionRecord,
};

pub const ITEMS_FILE: &str = "items.csv";
pub const TRANSACTIONS_FILE: &str = "transactions.csv";
pub const ATTRIBUTES_FILE: &str = "attributes.csv";
pub const TAXONOMY_FILE: &str = "taxonomy.json";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{file}: malformed header: expected `{expected}`, found `{found}`")]
    Header {
        file: String,
        expected: String,
        found: String,
    },
    #[error("{file}: header declares no attribute columns")]
    EmptyVocabulary { file: String },
    #[error("{file}: duplicate attribute column `{name}`")]
    DuplicateAttribute { file: String, name: String },
    #[error("{file}: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("taxonomy: {0}")]
    Taxonomy(String),
    #[error("dataset window is empty: {start} is after {end}")]
    EmptyWindow {
        start: chrono::NaiveDate,
        end: chrono::NaiveDate,
    },
}

pub type Result<T> = std::result::Result<T, IngestError>;

fn open(path: &std::path::Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_reader<R: io::Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(reader)
}

fn check_header<R: io::Read>(rdr: &mut csv::Reader<R>, file: &str, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(|source| IngestError::Csv {
        file: file.to_string(),
        source,
    })?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(IngestError::Header {
            file: file.to_string(),
            expected: expected.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}
