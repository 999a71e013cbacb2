//! Minimal row-major matrix used for marker blocks.
//!
//! Everything in this crate reduces to scoring rows by a coefficient vector
//! and iterating rows, so a flat `Vec<f64>` with a width is all we need.

use alloc::vec::Vec;

use crate::math::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: alloc::vec![0.0; rows * cols] }
    }

    /// Wrap a flat row-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat buffer does not match shape");
        Self { rows, cols, data }
    }

    pub fn with_capacity(rows: usize, cols: usize) -> Self {
        Self { rows: 0, cols, data: Vec::with_capacity(rows * cols) }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// Linear scores `theta' x` for every row.
    pub fn scores(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.cols);
        self.rows().map(|r| dot(r, theta)).collect()
    }
}
