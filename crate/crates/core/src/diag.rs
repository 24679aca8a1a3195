use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Informational; the row (or item) is still used.
    Warning,
    /// The row was dropped but the input as a whole is fine.
    Error,
    /// The row violates an input invariant and was rejected.
    Fatal,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
            Severity::Fatal => "fatal",
        }
    }
}

/// A row-level (or item-level) message produced while loading or processing data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub source: String,
    /// 1-based data row number (header excluded), when the message concerns a row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(severity: Severity, source: &str, row: Option<usize>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity,
            source: source.to_string(),
            row,
            message: message.into(),
        }
    }

    pub fn warning(source: &str, row: Option<usize>, message: impl Into<String>) -> Self {
        Self::new(Severity::Warning, source, row, message)
    }

    pub fn error(source: &str, row: Option<usize>, message: impl Into<String>) -> Self {
        Self::new(Severity::Error, source, row, message)
    }

    pub fn fatal(source: &str, row: Option<usize>, message: impl Into<String>) -> Self {
        Self::new(Severity::Fatal, source, row, message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = self.severity.as_str();
        match self.row {
            Some(row) => write!(f, "{sev}: {} row {row}: {}", self.source, self.message),
            None => write!(f, "{sev}: {}: {}", self.source, self.message),
        }
    }
}

/// Per-file row accounting. `kept + dropped + rejected == input_rows` always holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RowCounts {
    pub input_rows: usize,
    pub kept: usize,
    pub dropped: usize,
    pub rejected: usize,
}

impl RowCounts {
    pub fn is_conserved(&self) -> bool {
        self.kept + self.dropped + self.rejected == self.input_rows
    }
}

pub fn count_fatal(diags: &[Diagnostic]) -> usize {
    diags.iter().filter(|d| d.severity == Severity::Fatal).count()
}
