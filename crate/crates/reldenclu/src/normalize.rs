//! Column normalization onto the unit interval.
//!
//! Density estimation assumes every feature lives on `[0, 1]`. Columns
//! with bounded support are min-max rescaled; columns with unbounded
//! support are first squashed through an arctangent and then rescaled.
//! The rescaling is affine per column, so dense regions are invariant
//! under per-column affine maps of the raw data.

use crate::model::{ColumnNorm, DataMatrix, Error, NormalizedMatrix, Normalization};

/// Min-max rescales a column onto `[0, 1]`.
///
/// The minimum maps to exactly 0 and the maximum to exactly 1.
///
/// # Errors
///
/// Fails with [`Error::TooFewValues`] on fewer than 2 values and with
/// [`Error::ConstantColumn`] when all values are equal.
pub fn norm_bounded(column: &[f64]) -> Result<Vec<f64>, Error> {
    if column.len() < 2 {
        return Err(Error::TooFewValues {
            found: column.len(),
        });
    }
    let min = column.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::ConstantColumn);
    }
    let range = max - min;
    Ok(column.iter().map(|&v| (v - min) / range).collect())
}

/// Squashes a column through `atan(x) / pi + 0.5` and then min-max
/// rescales the result onto `[0, 1]`.
///
/// The arctangent is strictly increasing, so value order is preserved
/// and constant columns stay constant.
///
/// # Errors
///
/// Same conditions as [`norm_bounded`].
pub fn norm_unbounded(column: &[f64]) -> Result<Vec<f64>, Error> {
    let mapped: Vec<f64> = column
        .iter()
        .map(|&v| v.atan() / std::f64::consts::PI + 0.5)
        .collect();
    norm_bounded(&mapped)
}

/// Normalizes every column of a matrix with the chosen method.
///
/// Constant columns cannot be rescaled; they are set to all zeros and
/// flagged in the per-column stats so downstream stages exclude them
/// from pair analysis.
pub fn normalize_matrix(matrix: &DataMatrix, method: Normalization) -> NormalizedMatrix {
    let n_rows = matrix.n_rows();
    let n_cols = matrix.n_cols();
    let mut values = vec![0.0; n_rows * n_cols];
    let mut columns = Vec::with_capacity(n_cols);
    for c in 0..n_cols {
        let raw = matrix.column(c);
        let consumed: Vec<f64> = match method {
            Normalization::Bounded => raw,
            Normalization::Unbounded => raw
                .iter()
                .map(|&v| v.atan() / std::f64::consts::PI + 0.5)
                .collect(),
        };
        let min = consumed.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = consumed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            columns.push(ColumnNorm {
                method,
                min,
                max,
                constant: true,
            });
            continue;
        }
        let range = max - min;
        for (r, &v) in consumed.iter().enumerate() {
            values[r * n_cols + c] = (v - min) / range;
        }
        columns.push(ColumnNorm {
            method,
            min,
            max,
            constant: false,
        });
    }
    NormalizedMatrix::from_parts(values, n_rows, n_cols, columns)
}
