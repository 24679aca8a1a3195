use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Serialize, Serializer};

use super::{check_header, csv_reader, open, IngestError, Result, Taxonomy, Zone};
use crate::diag::{Diagnostic, RowCounts};

pub const UNMAPPED: &str = "unmapped";
const HEADER: [&str; 4] = ["item_id", "cat_id", "name", "img_ref"];

/// A taxonomy category. Names are only unique within a body zone, so the
/// zone is part of the identity; rendered as `zone/name`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoryId {
    pub zone: Zone,
    pub name: String,
}

impl CategoryId {
    pub fn new(zone: Zone, name: impl Into<String>) -> Self {
        CategoryId {
            zone,
            name: name.into(),
        }
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.zone.as_str(), self.name)
    }
}

impl Serialize for CategoryId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemRecord {
    pub item_id: u64,
    pub raw_cat_id: u64,
    pub name: String,
    pub img_ref: String,
    /// `None` when the raw category id is not in the taxonomy.
    pub category: Option<CategoryId>,
}

impl ItemRecord {
    pub fn category_label(&self) -> String {
        match &self.category {
            Some(c) => c.to_string(),
            None => UNMAPPED.to_string(),
        }
    }
}

pub fn load_items(path: &Path, taxonomy: &Taxonomy) -> Result<(Vec<ItemRecord>, Vec<Diagnostic>, RowCounts)> {
    read_items(open(path)?, taxonomy, &path.display().to_string())
}

pub fn read_items<R: io::Read>(
    reader: R,
    taxonomy: &Taxonomy,
    source: &str,
) -> Result<(Vec<ItemRecord>, Vec<Diagnostic>, RowCounts)> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &HEADER)?;

    let mut items = Vec::new();
    let mut diags = Vec::new();
    let mut counts = RowCounts::default();
    let mut seen = BTreeSet::new();

    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        counts.input_rows += 1;
        let record = record.map_err(|source_err| IngestError::Csv {
            file: source.to_string(),
            source: source_err,
        })?;
        if record.len() != HEADER.len() {
            diags.push(Diagnostic::fatal(
                source,
                Some(row),
                format!("expected {} fields, found {}", HEADER.len(), record.len()),
            ));
            counts.rejected += 1;
            continue;
        }
        let (Ok(item_id), Ok(raw_cat_id)) = (record[0].parse::<u64>(), record[1].parse::<u64>()) else {
            diags.push(Diagnostic::fatal(
                source,
                Some(row),
                format!(
                    "item_id/cat_id must be non-negative integers: `{}`, `{}`",
                    &record[0], &record[1]
                ),
            ));
            counts.rejected += 1;
            continue;
        };
        if !seen.insert(item_id) {
            diags.push(Diagnostic::fatal(
                source,
                Some(row),
                format!("duplicate item_id {item_id}"),
            ));
            counts.rejected += 1;
            continue;
        }
        let category = taxonomy
            .get(raw_cat_id)
            .map(|e| CategoryId::new(e.zone, e.name.clone()));
        if category.is_none() {
            diags.push(Diagnostic::warning(
                source,
                Some(row),
                format!("cat_id {raw_cat_id} not in taxonomy; item {item_id} is unmapped"),
            ));
        }
        items.push(ItemRecord {
            item_id,
            raw_cat_id,
            name: record[2].to_string(),
            img_ref: record[3].to_string(),
            category,
        });
        counts.kept += 1;
    }
    Ok((items, diags, counts))
}

pub fn write_items<'a, W: io::Write>(writer: W, items: impl IntoIterator<Item = &'a ItemRecord>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for it in items {
        w.write_record([
            it.item_id.to_string(),
            it.raw_cat_id.to_string(),
            it.name.clone(),
            it.img_ref.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
