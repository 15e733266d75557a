//! Annotation tables: one row per video, one column marked as the label.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("target index {index} out of range for {columns} columns")]
    BadTargetIndex { index: usize, columns: usize },
    #[error("row {row} has {got} fields, header has {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },
    #[error("table has no header")]
    MissingHeader,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    target_index: Option<usize>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>, target_index: Option<usize>) -> Result<Self, TableError> {
        if let Some(index) = target_index {
            if index >= columns.len() {
                return Err(TableError::BadTargetIndex { index, columns: columns.len() });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(TableError::RaggedRows { row: i, expected: columns.len(), got: row.len() });
            }
        }
        Ok(Self { columns, rows, target_index })
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

    pub fn target_index(&self) -> Option<usize> {
        self.target_index
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[index].as_str())
    }

    /// Label values, when a target column is marked.
    pub fn labels(&self) -> Option<Vec<&str>> {
        self.target_index.map(|i| self.column(i).collect())
    }

    /// Row identifiers from the `d3mIndex` column, or row numbers.
    pub fn row_ids(&self) -> Vec<String> {
        match self.column_index("d3mIndex") {
            Some(i) => self.column(i).map(str::to_string).collect(),
            None => (0..self.rows.len()).map(|i| i.to_string()).collect(),
        }
    }

    pub fn with_target(mut self, target_index: Option<usize>) -> Result<Self, TableError> {
        if let Some(index) = target_index {
            if index >= self.columns.len() {
                return Err(TableError::BadTargetIndex { index, columns: self.columns.len() });
            }
        }
        self.target_index = target_index;
        Ok(self)
    }

    /// Subset of rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Table {
        Table {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            target_index: self.target_index,
        }
    }

    /// Plain CSV: header row, LF line endings, no quoting.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), TableError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Reads an annotation CSV with a header row and marks `target_index` as the
/// label column.
pub fn load_annotations(csv_path: &Path, target_index: usize) -> Result<Table, TableError> {
    let table = read_csv(csv_path)?;
    table.with_target(Some(target_index))
}

/// Reads a CSV without marking a label column.
pub fn read_csv(csv_path: &Path) -> Result<Table, TableError> {
    let file = fs::File::open(csv_path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if columns.is_empty() || (columns.len() == 1 && columns[0].is_empty()) {
        return Err(TableError::MissingHeader);
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != columns.len() {
            return Err(TableError::RaggedRows { row: i, expected: columns.len(), got: record.len() });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Table::new(columns, rows, None)
}
