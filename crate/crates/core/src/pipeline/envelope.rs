use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::frames::{RawFrames, TensorFrames};
use crate::table::Table;

/// Closed set of value kinds that may flow between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    Table,
    PathList,
    RawFrames,
    TensorFrames,
    FeatureMatrix,
    LabelVector,
    Probabilities,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Dense row-major `rows x cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, String> {
        if data.len() != rows * cols {
            return Err(format!("{} values for a {rows}x{cols} matrix", data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Stacks equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, String> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(format!("ragged rows: {} vs {cols}", bad.len()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Class-probability rows; each row sums to one within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities {
    classes: Vec<String>,
    matrix: FeatureMatrix,
}

pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

impl Probabilities {
    pub fn new(classes: Vec<String>, matrix: FeatureMatrix) -> Result<Self, String> {
        if matrix.cols() != classes.len() {
            return Err(format!("{} columns for {} classes", matrix.cols(), classes.len()));
        }
        for i in 0..matrix.rows() {
            let row = matrix.row(i);
            if row.iter().any(|p| !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(p)) {
                return Err(format!("row {i} has an entry outside [0, 1]"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(format!("row {i} sums to {sum}"));
            }
        }
        Ok(Self { classes, matrix })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }
    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }
    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    /// Index of the most probable class per row; earliest class on ties.
    pub fn argmax(&self) -> Vec<usize> {
        (0..self.rows())
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for (j, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn predicted_labels(&self) -> Vec<&str> {
        self.argmax().into_iter().map(|j| self.classes[j].as_str()).collect()
    }
}

/// A value passed between steps, tagged with its kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueEnvelope {
    Table(Table),
    PathList(Vec<PathBuf>),
    RawFrames(Vec<RawFrames>),
    TensorFrames(Vec<TensorFrames>),
    FeatureMatrix(FeatureMatrix),
    LabelVector(Vec<String>),
    Probabilities(Probabilities),
}

impl ValueEnvelope {
    pub fn kind(&self) -> ValueKind {
        match self {
            ValueEnvelope::Table(_) => ValueKind::Table,
            ValueEnvelope::PathList(_) => ValueKind::PathList,
            ValueEnvelope::RawFrames(_) => ValueKind::RawFrames,
            ValueEnvelope::TensorFrames(_) => ValueKind::TensorFrames,
            ValueEnvelope::FeatureMatrix(_) => ValueKind::FeatureMatrix,
            ValueEnvelope::LabelVector(_) => ValueKind::LabelVector,
            ValueEnvelope::Probabilities(_) => ValueKind::Probabilities,
        }
    }

    /// Number of data rows (videos, feature rows, predictions), when the kind
    /// is row-oriented.
    pub fn row_count(&self) -> Option<usize> {
        match self {
            ValueEnvelope::Table(t) => Some(t.len()),
            ValueEnvelope::PathList(_) => None,
            ValueEnvelope::RawFrames(v) => Some(v.len()),
            ValueEnvelope::TensorFrames(v) => Some(v.len()),
            ValueEnvelope::FeatureMatrix(m) => Some(m.rows()),
            ValueEnvelope::LabelVector(v) => Some(v.len()),
            ValueEnvelope::Probabilities(p) => Some(p.rows()),
        }
    }

    pub fn as_table(&self) -> Option<&Table> {
        match self {
            ValueEnvelope::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_probabilities(&self) -> Option<&Probabilities> {
        match self {
            ValueEnvelope::Probabilities(p) => Some(p),
            _ => None,
        }
    }
}
