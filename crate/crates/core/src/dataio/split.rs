//! Stratified train/validation split.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::seed::stream_rng;
use crate::table::Table;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("need at least 2 rows to split, got {0}")]
    TooFewRows(usize),
    #[error("valid_fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("table has no label column to stratify on")]
    MissingTarget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitWarning {
    /// A class with a single row was kept entirely in the training side.
    SingleRowClass { label: String },
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Table,
    pub valid: Table,
    pub warnings: Vec<SplitWarning>,
}

/// Per class, `ceil(valid_fraction * n_class)` rows go to validation, chosen
/// by a seed-derived shuffle. Both sides keep the original row order.
pub fn split_table(table: &Table, valid_fraction: f64, seed: u64) -> Result<Split, SplitError> {
    if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
        return Err(SplitError::BadFraction(valid_fraction));
    }
    if table.len() < 2 {
        return Err(SplitError::TooFewRows(table.len()));
    }
    let labels = table.labels().ok_or(SplitError::MissingTarget)?;

    let mut classes: Vec<(&str, Vec<usize>)> = Vec::new();
    for (row, label) in labels.iter().enumerate() {
        match classes.iter_mut().find(|(l, _)| l == label) {
            Some((_, rows)) => rows.push(row),
            None => classes.push((label, vec![row])),
        }
    }

    let mut is_valid = vec![false; table.len()];
    let mut warnings = Vec::new();
    for (ordinal, (label, mut rows)) in classes.into_iter().enumerate() {
        if rows.len() == 1 {
            warnings.push(SplitWarning::SingleRowClass { label: label.to_string() });
            continue;
        }
        let take = (valid_fraction * rows.len() as f64 - 1e-9).ceil() as usize;
        rows.shuffle(&mut stream_rng(seed, ordinal as u64));
        for &row in &rows[..take.min(rows.len())] {
            is_valid[row] = true;
        }
    }

    let (valid_rows, train_rows): (Vec<usize>, Vec<usize>) = (0..table.len()).partition(|&r| is_valid[r]);
    Ok(Split {
        train: table.select_rows(&train_rows),
        valid: table.select_rows(&valid_rows),
        warnings,
    })
}
