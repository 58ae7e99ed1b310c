// Copyright 2026 The joinsample Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Row-oriented tables read from and written to CSV, and join-key canonicalization.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An opaque join-key value.
///
/// Integer-valued text is canonicalized to its decimal form (`"007"` and `"7"`
/// are the same key) so keys read from CSV hash identically to keys produced by
/// the synthetic generators.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JoinKey(String);

impl JoinKey {
    pub fn new(raw: &str) -> Self {
        let trimmed = raw.trim();
        match trimmed.parse::<i128>() {
            Ok(v) => JoinKey(v.to_string()),
            Err(_) => JoinKey(trimmed.to_string()),
        }
    }

    pub fn from_int(v: i64) -> Self {
        JoinKey(v.to_string())
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for JoinKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for JoinKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<i64> for JoinKey {
    fn from(v: i64) -> Self {
        JoinKey::from_int(v)
    }
}

impl From<&str> for JoinKey {
    fn from(v: &str) -> Self {
        JoinKey::new(v)
    }
}

/// A table with a header and string-valued cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn with_rows(columns: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        let mut table = Table::new(columns);
        for row in rows {
            table.push(row)?;
        }
        Ok(table)
    }

    /// Convenience constructor for a join column and an optional numeric column.
    pub fn from_keys(key_column: &str, keys: &[i64]) -> Self {
        Table {
            columns: vec![key_column.to_string()],
            rows: keys.iter().map(|k| vec![k.to_string()]).collect(),
        }
    }

    pub fn from_keys_and_values(
        key_column: &str,
        value_column: &str,
        rows: &[(i64, f64)],
    ) -> Self {
        Table {
            columns: vec![key_column.to_string(), value_column.to_string()],
            rows: rows
                .iter()
                .map(|(k, w)| vec![k.to_string(), format_number(*w)])
                .collect(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::schema(format!(
                "row has {} fields, header has {}",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::schema(format!("missing column `{name}`")))
    }

    /// Canonical join keys of one column, in row order.
    pub fn keys(&self, column: &str) -> Result<Vec<JoinKey>> {
        let idx = self.column_index(column)?;
        Ok(self.rows.iter().map(|r| JoinKey::new(&r[idx])).collect())
    }

    /// Values of a numeric column, in row order.
    pub fn numeric(&self, column: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(column)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = r[idx].trim();
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::Parse(format!(
                        "row {i}: `{cell}` in column `{column}` is not a finite number"
                    ))),
                }
            })
            .collect()
    }

    /// A new table with the rows selected by `keep`, in order.
    pub fn select(&self, keep: impl IntoIterator<Item = usize>) -> Table {
        Table {
            columns: self.columns.clone(),
            rows: keep.into_iter().map(|i| self.rows[i].clone()).collect(),
        }
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let columns = rdr.headers()?.iter().map(str::to_string).collect();
        let mut table = Table::new(columns);
        for record in rdr.records() {
            let record = record?;
            table.push(record.iter().map(str::to_string).collect())?;
        }
        Ok(table)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Table::from_reader(std::io::BufReader::new(file))
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.columns)?;
        for row in &self.rows {
            wtr.write_record(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.to_writer(std::io::BufWriter::new(file))
    }
}

/// Integral values print without a fractional part.
pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
