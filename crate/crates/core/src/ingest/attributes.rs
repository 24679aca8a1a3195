use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::Path;

use super::{csv_reader, open, IngestError, Result};
use crate::diag::{Diagnostic, RowCounts};

/// Detector posteriors for one item, aligned with the table's vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeVector(pub Vec<f64>);

impl AttributeVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeTable {
    vocabulary: Vec<String>,
    rows: BTreeMap<u64, AttributeVector>,
}

impl AttributeTable {
    /// Panics if a vector's length differs from the vocabulary size or a value
    /// lies outside [0, 1]; loaders uphold both.
    pub fn new(vocabulary: Vec<String>, rows: BTreeMap<u64, AttributeVector>) -> Self {
        for (id, v) in &rows {
            assert_eq!(v.0.len(), vocabulary.len(), "item {id}: vector length mismatch");
            assert!(
                v.0.iter().all(|x| (0.0..=1.0).contains(x)),
                "item {id}: posterior outside [0,1]"
            );
        }
        AttributeTable { vocabulary, rows }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn get(&self, item_id: u64) -> Option<&AttributeVector> {
        self.rows.get(&item_id)
    }

    pub fn contains(&self, item_id: u64) -> bool {
        self.rows.contains_key(&item_id)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &AttributeVector)> {
        self.rows.iter().map(|(k, v)| (*k, v))
    }
}

pub fn load_attributes(path: &Path) -> Result<(AttributeTable, Vec<Diagnostic>, RowCounts)> {
    read_attributes(open(path)?, &path.display().to_string())
}

pub fn read_attributes<R: io::Read>(reader: R, source: &str) -> Result<(AttributeTable, Vec<Diagnostic>, RowCounts)> {
    let mut rdr = csv_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Csv {
            file: source.to_string(),
            source: e,
        })?
        .clone();
    if headers.get(0) != Some("item_id") {
        return Err(IngestError::Header {
            file: source.to_string(),
            expected: "item_id,<attr1>,...,<attrK>".to_string(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let vocabulary: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if vocabulary.is_empty() {
        return Err(IngestError::EmptyVocabulary {
            file: source.to_string(),
        });
    }
    let mut names = BTreeSet::new();
    for name in &vocabulary {
        if name.is_empty() || !names.insert(name.as_str()) {
            return Err(IngestError::DuplicateAttribute {
                file: source.to_string(),
                name: name.clone(),
            });
        }
    }

    let width = vocabulary.len() + 1;
    let mut rows = BTreeMap::new();
    let mut diags = Vec::new();
    let mut counts = RowCounts::default();
    'rows: for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        counts.input_rows += 1;
        let record = record.map_err(|e| IngestError::Csv {
            file: source.to_string(),
            source: e,
        })?;
        if record.len() != width {
            diags.push(Diagnostic::fatal(
                source,
                Some(row),
                format!("ragged row: expected {width} fields, found {}", record.len()),
            ));
            counts.rejected += 1;
            continue;
        }
        let Ok(item_id) = record[0].parse::<u64>() else {
            diags.push(Diagnostic::fatal(
                source,
                Some(row),
                format!("bad item_id `{}`", &record[0]),
            ));
            counts.rejected += 1;
            continue;
        };
        if rows.contains_key(&item_id) {
            diags.push(Diagnostic::fatal(
                source,
                Some(row),
                format!("duplicate item_id {item_id}"),
            ));
            counts.rejected += 1;
            continue;
        }
        let mut values = Vec::with_capacity(vocabulary.len());
        for (field, name) in record.iter().skip(1).zip(&vocabulary) {
            let v = match field.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                _ => {
                    diags.push(Diagnostic::fatal(
                        source,
                        Some(row),
                        format!("attribute `{name}`: `{field}` is not a finite number"),
                    ));
                    counts.rejected += 1;
                    continue 'rows;
                }
            };
            let clamped = v.clamp(0.0, 1.0);
            if clamped != v {
                diags.push(Diagnostic::warning(
                    source,
                    Some(row),
                    format!("attribute `{name}`: {v} clamped to {clamped}"),
                ));
            }
            values.push(clamped);
        }
        rows.insert(item_id, AttributeVector(values));
        counts.kept += 1;
    }
    Ok((AttributeTable { vocabulary, rows }, diags, counts))
}

pub fn write_attributes<W: io::Write>(writer: W, table: &AttributeTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["item_id".to_string()];
    header.extend(table.vocabulary.iter().cloned());
    w.write_record(&header)?;
    for (id, v) in &table.rows {
        let mut rec = Vec::with_capacity(v.0.len() + 1);
        rec.push(id.to_string());
        rec.extend(v.0.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
