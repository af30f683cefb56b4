//! Typed result tables and their CSV wire format.
//!
//! Every experiment produces a [`ResultTable`]: named columns, typed rows,
//! and an ordered metadata block recording the exact configuration that
//! produced the numbers. The CSV emission is deterministic down to the
//! byte: metadata first as `# key = value` comment lines, then the header,
//! then the data, floats printed with 17 significant digits so the binary
//! value survives a round trip through text. `parse_csv` inverts
//! `to_csv_string` exactly.
//!
//! Text cells are always double-quoted and integers never are, so a cell's
//! type is recoverable from its spelling alone.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

/// One cell of a result table.
#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

/// Cell equality is spelling equality: floats compare by bit pattern, so a
/// table equals its own parse even at -0.0, and NaN payloads are the only
/// thing given up (no experiment emits NaN).
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    fn emit(&self, out: &mut String) {
        match self {
            Value::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Value::Float(x) => {
                let _ = write!(out, "{x:.16e}");
            }
            Value::Text(s) => emit_quoted(s, out),
        }
    }
}

fn emit_quoted(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        if c == '"' {
            out.push('"');
        }
        out.push(c);
    }
    out.push('"');
}

fn needs_quoting(s: &str) -> bool {
    s.is_empty() || s.contains(',') || s.contains('"') || s.starts_with(' ') || s.ends_with(' ')
}

/// Named columns, typed rows, and an ordered metadata block.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
    metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        assert!(!columns.is_empty(), "a table needs at least one column");
        ResultTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    /// Appends a metadata entry; emission preserves insertion order.
    /// Keys are identifier-shaped so `# key = value` parses back uniquely;
    /// values may be anything single-line.
    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        assert!(
            !key.is_empty()
                && key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'),
            "metadata key {key:?} is not identifier-shaped"
        );
        assert!(
            !value.contains('\n') && !value.contains('\r'),
            "metadata value for {key:?} spans lines"
        );
        self.metadata.push((key.to_string(), value));
    }

    pub fn meta_float(&mut self, key: &str, value: f64) {
        self.meta(key, format!("{value:.16e}"));
    }

    /// Appends a row; the length must match the column count.
    pub fn push_row(&mut self, row: Vec<Value>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width differs from column count"
        );
        for cell in &row {
            if let Value::Text(s) = cell {
                assert!(
                    !s.contains('\n') && !s.contains('\r'),
                    "text cell spans lines"
                );
            }
        }
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// Metadata lookup by key; first match wins.
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// The full CSV document: metadata comments, header, data rows. Equal
    /// tables emit byte-identical documents.
    #[must_use]
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            let _ = writeln!(out, "# {key} = {value}");
        }
        for (i, name) in self.columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if needs_quoting(name) || name.starts_with('#') {
                emit_quoted(name, &mut out);
            } else {
                out.push_str(name);
            }
        }
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.emit(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| CliError::io(path, e))
    }

    /// Inverse of [`to_csv_string`]: `parse_csv(t.to_csv_string()) == t`.
    ///
    /// [`to_csv_string`]: ResultTable::to_csv_string
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((i, line)) = lines.peek() {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            let rest = rest.strip_prefix(' ').unwrap_or(rest);
            let (key, value) = rest.split_once(" = ").ok_or_else(|| CliError::Csv {
                line: i + 1,
                what: "metadata comment without ' = ' separator".into(),
            })?;
            metadata.push((key.to_string(), value.to_string()));
            lines.next();
        }
        let (header_line_no, header) = lines.next().ok_or(CliError::Csv {
            line: metadata.len() + 1,
            what: "missing header row".into(),
        })?;
        let columns: Vec<String> = split_record(header, header_line_no + 1)?
            .into_iter()
            .map(|cell| match cell {
                Cell::Quoted(s) | Cell::Bare(s) => s,
            })
            .collect();
        if columns.is_empty() {
            return Err(CliError::Csv {
                line: header_line_no + 1,
                what: "empty header row".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let cells = split_record(line, i + 1)?;
            if cells.len() != columns.len() {
                return Err(CliError::Csv {
                    line: i + 1,
                    what: format!("{} cells in a {}-column table", cells.len(), columns.len()),
                });
            }
            let mut row = Vec::with_capacity(cells.len());
            for cell in cells {
                row.push(typed_cell(cell, i + 1)?);
            }
            rows.push(row);
        }
        Ok(ResultTable {
            columns,
            rows,
            metadata,
        })
    }
}

enum Cell {
    Quoted(String),
    Bare(String),
}

/// Splits one CSV record, honoring double-quote escaping. Records never
/// span lines in this format.
fn split_record(line: &str, line_no: usize) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        match chars.peek() {
            Some('"') => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            if chars.peek() == Some(&'"') {
                                chars.next();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                        None => {
                            return Err(CliError::Csv {
                                line: line_no,
                                what: "unterminated quoted cell".into(),
                            })
                        }
                    }
                }
                cells.push(Cell::Quoted(s));
                match chars.next() {
                    Some(',') => continue,
                    None => break,
                    Some(c) => {
                        return Err(CliError::Csv {
                            line: line_no,
                            what: format!("unexpected {c:?} after closing quote"),
                        })
                    }
                }
            }
            _ => {
                let mut s = String::new();
                let mut terminated = false;
                for c in chars.by_ref() {
                    if c == ',' {
                        terminated = true;
                        break;
                    }
                    s.push(c);
                }
                cells.push(Cell::Bare(s));
                if !terminated {
                    break;
                }
            }
        }
    }
    Ok(cells)
}

/// Quoted cells are text; bare cells are integers when they parse as i64
/// and floats otherwise.
fn typed_cell(cell: Cell, line_no: usize) -> Result<Value> {
    match cell {
        Cell::Quoted(s) => Ok(Value::Text(s)),
        Cell::Bare(s) => {
            if let Ok(i) = s.parse::<i64>() {
                return Ok(Value::Int(i));
            }
            s.parse::<f64>()
                .map(Value::Float)
                .map_err(|_| CliError::Csv {
                    line: line_no,
                    what: format!("cell {s:?} is neither integer nor float"),
                })
        }
    }
}
