//! Grouped case-control data: loading, validation, per-center views.
//!
//! A [`Dataset`] holds observations in file order together with an index of
//! centers in first-appearance order; every downstream weighted sum iterates
//! centers in that order, so results are deterministic. Centers containing
//! only cases or only controls ("concordant" centers) have no defined AUC
//! and are dropped by [`split_centers`], never silently kept.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;
use crate::matrix::Matrix;
use crate::Result;

/// One row of input: a center label, a binary outcome, and `p` markers.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub center: String,
    /// `true` for a case, `false` for a control.
    pub outcome: bool,
    pub markers: Vec<f64>,
}

/// Immutable, center-indexed collection of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    p: usize,
    marker_names: Vec<String>,
    markers: Matrix,
    outcomes: Vec<bool>,
    center_of: Vec<usize>,
    centers: Vec<String>,
    center_rows: Vec<Vec<usize>>,
}

/// Incrementally assembles a [`Dataset`], validating each row.
pub struct DatasetBuilder {
    p: usize,
    marker_names: Vec<String>,
    markers: Matrix,
    outcomes: Vec<bool>,
    center_of: Vec<usize>,
    centers: Vec<String>,
    center_rows: Vec<Vec<usize>>,
}

impl DatasetBuilder {
    /// `marker_names` defaults to `x1..xp` when `None`.
    pub fn new(p: usize, marker_names: Option<Vec<String>>) -> Self {
        let marker_names = marker_names
            .unwrap_or_else(|| (1..=p).map(|j| alloc::format!("x{j}")).collect());
        assert_eq!(marker_names.len(), p);
        Self {
            p,
            marker_names,
            markers: Matrix::with_capacity(0, p),
            outcomes: Vec::new(),
            center_of: Vec::new(),
            centers: Vec::new(),
            center_rows: Vec::new(),
        }
    }

    pub fn push(&mut self, center: &str, outcome: bool, markers: &[f64]) -> Result<()> {
        if markers.len() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, found: markers.len() });
        }
        if markers.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteScore);
        }
        // Rows typically arrive grouped by center; check the last slot first.
        let slot = match self.centers.last() {
            Some(last) if last == center => self.centers.len() - 1,
            _ => match self.centers.iter().position(|c| c == center) {
                Some(s) => s,
                None => {
                    self.centers.push(center.to_string());
                    self.center_rows.push(Vec::new());
                    self.centers.len() - 1
                }
            },
        };
        self.center_rows[slot].push(self.outcomes.len());
        self.center_of.push(slot);
        self.outcomes.push(outcome);
        self.markers.push_row(markers);
        Ok(())
    }

    pub fn finish(self) -> Result<Dataset> {
        if self.outcomes.is_empty() {
            return Err(Error::EmptyInput);
        }
        if self.p == 0 {
            return Err(Error::InvalidConfig("at least one marker column is required".into()));
        }
        Ok(Dataset {
            p: self.p,
            marker_names: self.marker_names,
            markers: self.markers,
            outcomes: self.outcomes,
            center_of: self.center_of,
            centers: self.centers,
            center_rows: self.center_rows,
        })
    }
}

impl Dataset {
    pub fn from_observations(observations: &[Observation]) -> Result<Self> {
        let p = observations.first().map(|o| o.markers.len()).unwrap_or(0);
        let mut b = DatasetBuilder::new(p, None);
        for o in observations {
            b.push(&o.center, o.outcome, &o.markers)?;
        }
        b.finish()
    }

    pub fn n(&self) -> usize {
        self.outcomes.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn marker_names(&self) -> &[String] {
        &self.marker_names
    }

    /// Center labels in first-appearance order.
    pub fn centers(&self) -> &[String] {
        &self.centers
    }

    pub fn outcome(&self, row: usize) -> bool {
        self.outcomes[row]
    }

    pub fn markers_row(&self, row: usize) -> &[f64] {
        self.markers.row(row)
    }

    pub fn center_slot(&self, row: usize) -> usize {
        self.center_of[row]
    }

    /// Row indices of a center, ascending.
    pub fn center_row_indices(&self, slot: usize) -> &[usize] {
        &self.center_rows[slot]
    }

    /// `(case rows, control rows)` of a center, each ascending.
    pub fn center_case_control_rows(&self, slot: usize) -> (Vec<usize>, Vec<usize>) {
        let mut cases = Vec::new();
        let mut controls = Vec::new();
        for &r in &self.center_rows[slot] {
            if self.outcomes[r] {
                cases.push(r);
            } else {
                controls.push(r);
            }
        }
        (cases, controls)
    }

    /// A copy of this dataset with every observation of `center` removed.
    pub fn excluding_center(&self, center: &str) -> Result<Self> {
        let names = Some(self.marker_names.clone());
        let mut b = DatasetBuilder::new(self.p, names);
        for row in 0..self.n() {
            let label = &self.centers[self.center_of[row]];
            if label != center {
                b.push(label, self.outcomes[row], self.markers.row(row))?;
            }
        }
        b.finish()
    }
}

/// Case and control marker rows of one non-concordant center.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterView {
    pub label: String,
    pub cases: Matrix,
    pub controls: Matrix,
}

impl CenterView {
    pub fn n_cases(&self) -> usize {
        self.cases.nrows()
    }

    pub fn n_controls(&self) -> usize {
        self.controls.nrows()
    }

    pub fn size(&self) -> usize {
        self.n_cases() + self.n_controls()
    }
}

/// Split into per-center case/control views, dropping concordant centers.
///
/// Returns the views in first-appearance center order plus the labels of the
/// dropped centers; errs with [`Error::UnusableData`] when nothing survives.
pub fn split_centers(data: &Dataset) -> Result<(Vec<CenterView>, Vec<String>)> {
    let mut views = Vec::new();
    let mut dropped = Vec::new();
    for (slot, label) in data.centers().iter().enumerate() {
        let (case_rows, control_rows) = data.center_case_control_rows(slot);
        if case_rows.is_empty() || control_rows.is_empty() {
            dropped.push(label.clone());
            continue;
        }
        let mut cases = Matrix::with_capacity(case_rows.len(), data.p());
        for r in case_rows {
            cases.push_row(data.markers_row(r));
        }
        let mut controls = Matrix::with_capacity(control_rows.len(), data.p());
        for r in control_rows {
            controls.push_row(data.markers_row(r));
        }
        views.push(CenterView { label: label.clone(), cases, controls });
    }
    if views.is_empty() {
        return Err(Error::UnusableData);
    }
    Ok((views, dropped))
}

/// Per-marker location and scale removed by [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRecord {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl ScalingRecord {
    /// Map coefficients fitted on standardized markers back to the original
    /// marker units. Scores differ only by a constant shift, so any AUC is
    /// unchanged.
    pub fn coefficients_to_original(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.scales).map(|(t, s)| t / s).collect()
    }

    /// Map coefficients stated in original marker units onto the
    /// standardized scale.
    pub fn coefficients_to_model(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter().zip(&self.scales).map(|(b, s)| b * s).collect()
    }
}

/// Rescale every marker column to sample mean 0 and sample variance 1
/// (divisor n - 1). A constant column cannot be scaled and is an error.
pub fn standardize(data: &Dataset) -> Result<(Dataset, ScalingRecord)> {
    let n = data.n();
    let p = data.p();
    let mut means = alloc::vec![0.0; p];
    for row in 0..n {
        for (j, x) in data.markers_row(row).iter().enumerate() {
            means[j] += x;
        }
    }
    for m in means.iter_mut() {
        *m /= n as f64;
    }
    let mut ss = alloc::vec![0.0; p];
    for row in 0..n {
        for (j, x) in data.markers_row(row).iter().enumerate() {
            let d = x - means[j];
            ss[j] += d * d;
        }
    }
    let mut scales = alloc::vec![0.0; p];
    for j in 0..p {
        let var = if n > 1 { ss[j] / (n - 1) as f64 } else { 0.0 };
        if var <= 0.0 {
            return Err(Error::DegenerateMarker(data.marker_names()[j].clone()));
        }
        scales[j] = num_traits::Float::sqrt(var);
    }

    let mut b = DatasetBuilder::new(p, Some(data.marker_names().to_vec()));
    let mut buf = alloc::vec![0.0; p];
    for row in 0..n {
        for (j, x) in data.markers_row(row).iter().enumerate() {
            buf[j] = (x - means[j]) / scales[j];
        }
        let label = &data.centers()[data.center_slot(row)];
        b.push(label, data.outcome(row), &buf)?;
    }
    Ok((b.finish()?, ScalingRecord { means, scales }))
}

/// Options for [`parse_table`].
#[derive(Debug, Clone)]
pub struct TableOptions {
    pub delimiter: char,
    pub center_column: String,
    pub outcome_column: String,
    /// `None` takes every non-center, non-outcome column as a marker, in
    /// header order.
    pub marker_columns: Option<Vec<String>>,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            delimiter: ',',
            center_column: "center".into(),
            outcome_column: "outcome".into(),
            marker_columns: None,
        }
    }
}

/// Parse delimited text with a header row into a [`Dataset`].
///
/// Data rows are numbered from 1 in parse errors. Missing values are not
/// supported: an empty or unparsable cell is a hard error naming the row
/// and column, as is any non-finite marker value.
pub fn parse_table(text: &str, options: &TableOptions) -> Result<Dataset> {
    let delim = options.delimiter;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or(Error::EmptyInput)?;
    let header: Vec<&str> = header_line.split(delim).map(str::trim).collect();

    let col_of = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let center_col = col_of(&options.center_column)?;
    let outcome_col = col_of(&options.outcome_column)?;
    let marker_cols: Vec<(usize, String)> = match &options.marker_columns {
        Some(names) => names
            .iter()
            .map(|n| Ok((col_of(n)?, n.clone())))
            .collect::<Result<_>>()?,
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != center_col && *i != outcome_col)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    if marker_cols.is_empty() {
        return Err(Error::InvalidConfig("no marker columns in header".into()));
    }

    let names: Vec<String> = marker_cols.iter().map(|(_, n)| n.clone()).collect();
    let mut b = DatasetBuilder::new(marker_cols.len(), Some(names));
    let mut markers = alloc::vec![0.0; marker_cols.len()];
    let mut row = 0usize;
    for line in lines {
        row += 1;
        let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
        if fields.len() != header.len() {
            let message = if fields.len() < header.len() {
                alloc::format!("missing value for column '{}'", header[fields.len()])
            } else {
                alloc::format!("expected {} fields, found {}", header.len(), fields.len())
            };
            return Err(Error::Parse { row, message });
        }
        let outcome = match fields[outcome_col] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    row,
                    message: alloc::format!(
                        "outcome must be 0 or 1, found '{other}' (column '{}')",
                        options.outcome_column
                    ),
                })
            }
        };
        for (k, (col, name)) in marker_cols.iter().enumerate() {
            let cell = fields[*col];
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                message: alloc::format!("cannot parse value '{cell}' for column '{name}'"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: alloc::format!("non-finite value for column '{name}'"),
                });
            }
            markers[k] = value;
        }
        b.push(fields[center_col], outcome, &markers)?;
    }
    if row == 0 {
        return Err(Error::EmptyInput);
    }
    b.finish()
}
