use std::io;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use super::{check_header, csv_reader, open, IngestError, Result};
use crate::diag::{Diagnostic, RowCounts};

const HEADER: [&str; 3] = ["user_id", "item_id", "date"];

/// Inclusive calendar window that transactions must fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DateWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(IngestError::EmptyWindow { start, end });
        }
        Ok(DateWindow { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Every (year, month) touched by the window, in calendar order.
    pub fn months(&self) -> Vec<(i32, u32)> {
        let mut out = Vec::new();
        let (mut y, mut m) = (self.start.year(), self.start.month());
        let (ey, em) = (self.end.year(), self.end.month());
        while (y, m) <= (ey, em) {
            out.push((y, m));
            if m == 12 {
                y += 1;
                m = 1;
            } else {
                m += 1;
            }
        }
        out
    }
}

impl Default for DateWindow {
    fn default() -> Self {
        DateWindow {
            start: NaiveDate::from_ymd_opt(2014, 6, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2015, 6, 30).unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransactionRecord {
    pub user_id: u64,
    pub item_id: u64,
    pub date: NaiveDate,
}

/// Parses a `YYYYMMDD` date. Anything other than exactly eight ASCII digits
/// forming a valid calendar date is rejected.
pub fn parse_compact_date(s: &str) -> Option<NaiveDate> {
    if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let y: i32 = s[0..4].parse().ok()?;
    let m: u32 = s[4..6].parse().ok()?;
    let d: u32 = s[6..8].parse().ok()?;
    NaiveDate::from_ymd_opt(y, m, d)
}

pub fn load_transactions(
    path: &Path,
    window: &DateWindow,
) -> Result<(Vec<TransactionRecord>, Vec<Diagnostic>, RowCounts)> {
    read_transactions(open(path)?, window, &path.display().to_string())
}

pub fn read_transactions<R: io::Read>(
    reader: R,
    window: &DateWindow,
    source: &str,
) -> Result<(Vec<TransactionRecord>, Vec<Diagnostic>, RowCounts)> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, source, &HEADER)?;

    let mut out = Vec::new();
    let mut diags = Vec::new();
    let mut counts = RowCounts::default();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        counts.input_rows += 1;
        let record = record.map_err(|e| IngestError::Csv {
            file: source.to_string(),
            source: e,
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
        let (Ok(user_id), Ok(item_id)) = (record[0].parse::<u64>(), record[1].parse::<u64>()) else {
            diags.push(Diagnostic::fatal(
                source,
                Some(row),
                format!(
                    "user_id/item_id must be non-negative integers: `{}`, `{}`",
                    &record[0], &record[1]
                ),
            ));
            counts.rejected += 1;
            continue;
        };
        let Some(date) = parse_compact_date(&record[2]) else {
            diags.push(Diagnostic::error(
                source,
                Some(row),
                format!("unparseable date `{}` (expected YYYYMMDD)", &record[2]),
            ));
            counts.dropped += 1;
            continue;
        };
        if !window.contains(date) {
            diags.push(Diagnostic::warning(
                source,
                Some(row),
                format!("date {} outside window {}..={}", &record[2], window.start, window.end),
            ));
            counts.dropped += 1;
            continue;
        }
        out.push(TransactionRecord { user_id, item_id, date });
        counts.kept += 1;
    }
    Ok((out, diags, counts))
}

pub fn write_transactions<'a, W: io::Write>(
    writer: W,
    txs: impl IntoIterator<Item = &'a TransactionRecord>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for t in txs {
        w.write_record([
            t.user_id.to_string(),
            t.item_id.to_string(),
            t.date.format("%Y%m%d").to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
