//! Leave-one-center-out cross-validation over a penalty grid.
//!
//! For every grid value of the penalty and every usable center, the
//! combination is fitted on the remaining centers (full pipeline, fresh
//! starting values and bandwidths) and its empirical AUC is taken in the
//! held-out center. The per-lambda aggregates back the cross-validation
//! plot: holdout aAUC, variability of holdout AUCs about it, and the mean
//! training-side variability across folds. Picking the penalty from the
//! plot is left to the analyst; no selector is shipped.
//!
//! Fold fits are independent, so callers may run [`run_fold`] over the
//! `grid x centers` product in parallel and hand the rows to
//! [`assemble_table`]; [`run_lococv`] is the sequential composition.

use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use crate::dataset::{split_centers, Dataset};
use crate::error::Error;
use crate::math::fmt17;
use crate::pipeline::{fit, FitConfig};
use crate::roc::{empirical_auc, Coefficients};
use crate::Result;

#[derive(Debug, Clone)]
pub struct CvConfig {
    /// Penalty grid; nonempty, strictly increasing, all nonnegative.
    pub grid: Vec<f64>,
    /// Fit configuration for every fold; its `lambda` is overwritten by the
    /// grid value.
    pub fit: FitConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { grid: default_lambda_grid(), fit: FitConfig::default() }
    }
}

/// 50 values log-equally spaced between 0.1 and 200.
pub fn default_lambda_grid() -> Vec<f64> {
    log_spaced_grid(50, 0.1, 200.0).expect("default grid is valid")
}

/// `size` values equally spaced on the log scale over `[min, max]`.
pub fn log_spaced_grid(size: usize, min: f64, max: f64) -> Result<Vec<f64>> {
    if size == 0 {
        return Err(Error::InvalidConfig("grid size must be positive".into()));
    }
    if !(min > 0.0) || !(max > min) {
        return Err(Error::InvalidConfig(
            "log-spaced grid needs 0 < min < max".into(),
        ));
    }
    if size == 1 {
        return Ok(alloc::vec![min]);
    }
    let (lo, hi) = (min.log10(), max.log10());
    let step = (hi - lo) / (size - 1) as f64;
    Ok((0..size)
        .map(|i| {
            if i + 1 == size {
                max
            } else {
                10.0f64.powf(lo + step * i as f64)
            }
        })
        .collect())
}

/// One (lambda, held-out center) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub lambda_index: usize,
    pub lambda: f64,
    pub center_index: usize,
    pub center: String,
    /// Empirical AUC of the fold's fit in the held-out center; NaN when the
    /// fold failed.
    pub holdout_auc: f64,
    pub holdout_cases: usize,
    /// Apparent aAUC of the fold's fit on its own training centers.
    pub train_aauc: f64,
    /// Apparent variability (variance scale) on the training centers.
    pub train_variability: f64,
    pub converged: bool,
    pub failed: bool,
    /// Fitted direction in original marker units.
    pub theta: Option<Coefficients>,
}

/// Per-lambda aggregates over the successful folds.
#[derive(Debug, Clone, PartialEq)]
pub struct CvAggregate {
    pub lambda: f64,
    /// Case-count-weighted mean of the holdout AUCs.
    pub cv_aauc: f64,
    /// Weighted variability of holdout AUCs about `cv_aauc` (variance scale).
    pub variability_about_cv: f64,
    /// Mean over folds of each fold's training variability about its own
    /// training aAUC (variance scale).
    pub mean_train_variability: f64,
    /// Successful folds divided by the number of centers.
    pub completeness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvTable {
    pub grid: Vec<f64>,
    pub centers: Vec<String>,
    /// `grid.len() * centers.len()` rows in (lambda, center) order.
    pub rows: Vec<CvRow>,
    pub aggregates: Vec<CvAggregate>,
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidConfig("lambda grid values must be nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("lambda grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Fit one fold (all centers except `center_index`) at one grid value and
/// evaluate in the held-out center. A fold-level fit failure is reported in
/// the row, not as an error.
pub fn run_fold(
    data: &Dataset,
    config: &CvConfig,
    lambda_index: usize,
    center_index: usize,
) -> Result<CvRow> {
    let (views, _) = split_centers(data)?;
    let holdout = &views[center_index];
    let lambda = config.grid[lambda_index];
    let train = data.excluding_center(&holdout.label)?;
    let mut fold_cfg = config.fit.clone();
    fold_cfg.lambda = lambda;

    match fit(&train, &fold_cfg) {
        Ok(report) => {
            let theta = report.theta_original.clone();
            let case_scores = holdout.cases.scores(theta.as_slice());
            let control_scores = holdout.controls.scores(theta.as_slice());
            let holdout_auc = empirical_auc(&case_scores, &control_scores)?;
            Ok(CvRow {
                lambda_index,
                lambda,
                center_index,
                center: holdout.label.clone(),
                holdout_auc,
                holdout_cases: holdout.n_cases(),
                train_aauc: report.apparent.aauc,
                train_variability: report.apparent.variability,
                converged: report.fit.converged,
                failed: false,
                theta: Some(theta),
            })
        }
        Err(_) => Ok(CvRow {
            lambda_index,
            lambda,
            center_index,
            center: holdout.label.clone(),
            holdout_auc: f64::NAN,
            holdout_cases: holdout.n_cases(),
            train_aauc: f64::NAN,
            train_variability: f64::NAN,
            converged: false,
            failed: true,
            theta: None,
        }),
    }
}

/// Sort rows into (lambda, center) order and compute per-lambda aggregates.
pub fn assemble_table(grid: Vec<f64>, centers: Vec<String>, mut rows: Vec<CvRow>) -> CvTable {
    rows.sort_by_key(|r| (r.lambda_index, r.center_index));
    let m = centers.len();
    let mut aggregates = Vec::with_capacity(grid.len());
    for (li, &lambda) in grid.iter().enumerate() {
        let fold_rows = &rows[li * m..(li + 1) * m];
        let ok: Vec<&CvRow> = fold_rows.iter().filter(|r| !r.failed).collect();
        if ok.is_empty() {
            aggregates.push(CvAggregate {
                lambda,
                cv_aauc: f64::NAN,
                variability_about_cv: f64::NAN,
                mean_train_variability: f64::NAN,
                completeness: 0.0,
            });
            continue;
        }
        let total_cases: usize = ok.iter().map(|r| r.holdout_cases).sum();
        let cv_aauc: f64 = ok
            .iter()
            .map(|r| r.holdout_auc * r.holdout_cases as f64 / total_cases as f64)
            .sum();
        let variability_about_cv: f64 = ok
            .iter()
            .map(|r| {
                let w = r.holdout_cases as f64 / total_cases as f64;
                w * (r.holdout_auc - cv_aauc) * (r.holdout_auc - cv_aauc)
            })
            .sum();
        let mean_train_variability: f64 =
            ok.iter().map(|r| r.train_variability).sum::<f64>() / ok.len() as f64;
        aggregates.push(CvAggregate {
            lambda,
            cv_aauc,
            variability_about_cv,
            mean_train_variability,
            completeness: ok.len() as f64 / m as f64,
        });
    }
    CvTable { grid, centers, rows, aggregates }
}

/// Run the full cross-validation sequentially. Needs at least 3 usable
/// centers so every penalized training fold keeps 2 or more.
pub fn run_lococv(data: &Dataset, config: &CvConfig) -> Result<CvTable> {
    validate_grid(&config.grid)?;
    config.fit.validate()?;
    let (views, _) = split_centers(data)?;
    let m = views.len();
    if m < 3 {
        return Err(Error::InvalidConfig(alloc::format!(
            "leave-one-center-out needs at least 3 usable centers, found {m}"
        )));
    }
    let centers: Vec<String> = views.iter().map(|v| v.label.clone()).collect();
    let mut rows = Vec::with_capacity(config.grid.len() * m);
    for lambda_index in 0..config.grid.len() {
        for center_index in 0..m {
            rows.push(run_fold(data, config, lambda_index, center_index)?);
        }
    }
    Ok(assemble_table(config.grid.clone(), centers, rows))
}

/// Render the table as delimited text, one line per (lambda, center) row.
///
/// Columns: `lambda, log10_lambda, center, holdout_auc, cv_aauc,
/// sd_about_cv_aauc, sd_about_train_aauc, fold_converged`. The sd columns
/// are square roots of the stored variances; numbers carry 17 significant
/// digits so a reparse reproduces them exactly.
pub fn render_cv_table(table: &CvTable) -> String {
    let mut out = String::from(
        "lambda,log10_lambda,center,holdout_auc,cv_aauc,sd_about_cv_aauc,sd_about_train_aauc,fold_converged\n",
    );
    for row in &table.rows {
        let agg = &table.aggregates[row.lambda_index];
        out.push_str(&alloc::format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt17(row.lambda),
            fmt17(row.lambda.log10()),
            row.center,
            fmt17(row.holdout_auc),
            fmt17(agg.cv_aauc),
            fmt17(agg.variability_about_cv.sqrt()),
            fmt17(agg.mean_train_variability.sqrt()),
            row.converged && !row.failed,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_table, DatasetBuilder, TableOptions};
    use alloc::string::ToString;
    use alloc::vec;

    /// Six small centers with overlap; prevalences vary.
    fn six_center_data() -> Dataset {
        let text = "center,outcome,x1,x2\n\
            a,1,0.8,-0.1\na,1,0.3,0.5\na,0,-0.1,0.4\na,0,0.2,0.1\na,0,-0.7,0.0\n\
            b,1,0.6,0.3\nb,1,0.1,-0.4\nb,0,0.1,-0.4\nb,0,-0.3,0.2\n\
            c,1,0.9,0.2\nc,0,0.4,0.6\nc,0,-0.2,-0.1\n\
            d,1,0.5,0.5\nd,1,-0.2,0.3\nd,0,0.0,-0.2\nd,0,0.3,0.3\n\
            e,1,1.0,0.0\ne,0,0.2,0.4\ne,0,-0.5,0.1\n\
            f,1,0.4,-0.2\nf,1,0.7,0.6\nf,0,-0.4,0.5\nf,0,0.1,0.0\n";
        parse_table(text, &TableOptions::default()).unwrap()
    }

    fn quick_config(grid: Vec<f64>) -> CvConfig {
        CvConfig { grid, fit: FitConfig::default() }
    }

    #[test]
    fn default_grid_is_fifty_log_spaced_values() {
        let grid = default_lambda_grid();
        assert_eq!(grid.len(), 50);
        assert!((grid[0] - 0.1).abs() < 1e-12);
        assert!((grid[49] - 200.0).abs() < 1e-12);
        let ratio = grid[1] / grid[0];
        for w in grid.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn row_count_is_grid_times_centers() {
        let data = six_center_data();
        let grid = log_spaced_grid(5, 0.5, 8.0).unwrap();
        let table = run_lococv(&data, &quick_config(grid)).unwrap();
        assert_eq!(table.rows.len(), 30);
        // Every (lambda, center) pair appears exactly once, in order.
        for (i, row) in table.rows.iter().enumerate() {
            assert_eq!(row.lambda_index, i / 6);
            assert_eq!(row.center_index, i % 6);
        }
    }

    #[test]
    fn cv_aauc_is_weighted_holdout_mean() {
        let data = six_center_data();
        let table = run_lococv(&data, &quick_config(vec![0.5, 2.0])).unwrap();
        for (li, agg) in table.aggregates.iter().enumerate() {
            let rows = &table.rows[li * 6..(li + 1) * 6];
            let total: usize = rows.iter().map(|r| r.holdout_cases).sum();
            let expected: f64 = rows
                .iter()
                .map(|r| r.holdout_auc * r.holdout_cases as f64 / total as f64)
                .sum();
            assert!((agg.cv_aauc - expected).abs() < 1e-12);
            assert_eq!(agg.completeness, 1.0);
        }
    }

    #[test]
    fn fold_matches_manual_recomputation() {
        let data = six_center_data();
        let config = quick_config(vec![1.5]);
        let table = run_lococv(&data, &config).unwrap();
        let row = &table.rows[2]; // center "c"
        let train = data.excluding_center("c").unwrap();
        let mut fit_cfg = config.fit.clone();
        fit_cfg.lambda = 1.5;
        let report = fit(&train, &fit_cfg).unwrap();
        assert_eq!(report.theta_original, *row.theta.as_ref().unwrap());
        let (views, _) = split_centers(&data).unwrap();
        let holdout = &views[2];
        let auc = empirical_auc(
            &holdout.cases.scores(report.theta_original.as_slice()),
            &holdout.controls.scores(report.theta_original.as_slice()),
        )
        .unwrap();
        assert_eq!(auc, row.holdout_auc);
        assert_eq!(report.apparent.aauc, row.train_aauc);
    }

    #[test]
    fn corrupting_the_held_out_center_does_not_move_its_fold_fit() {
        let data = six_center_data();
        let config = quick_config(vec![1.0]);
        let before = run_lococv(&data, &config).unwrap();

        // Rebuild with center "d" markers wrecked.
        let mut b = DatasetBuilder::new(data.p(), Some(data.marker_names().to_vec()));
        for row in 0..data.n() {
            let label = data.centers()[data.center_slot(row)].clone();
            let mut m = data.markers_row(row).to_vec();
            if label == "d" {
                for x in m.iter_mut() {
                    *x = *x * 25.0 + 3.0;
                }
            }
            b.push(&label, data.outcome(row), &m).unwrap();
        }
        let corrupted = b.finish().unwrap();
        let after = run_lococv(&corrupted, &config).unwrap();

        let d_index = 3;
        for (rb, ra) in before.rows.iter().zip(&after.rows) {
            if rb.center_index == d_index {
                // The fold that holds out "d" never saw the corruption.
                assert_eq!(rb.theta, ra.theta);
                assert_eq!(rb.train_aauc, ra.train_aauc);
            }
        }
    }

    #[test]
    fn determinism() {
        let data = six_center_data();
        let config = quick_config(vec![0.3, 3.0]);
        let a = run_lococv(&data, &config).unwrap();
        let b = run_lococv(&data, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_centers_rejected() {
        let text = "center,outcome,x1\na,1,1.0\na,0,0.0\nb,1,0.5\nb,0,0.7\n";
        let data = parse_table(text, &TableOptions::default()).unwrap();
        assert!(matches!(
            run_lococv(&data, &quick_config(vec![1.0])).unwrap_err(),
            Error::InvalidConfig(_)
        ));
    }

    #[test]
    fn invalid_grids_rejected() {
        let data = six_center_data();
        for grid in [vec![], vec![1.0, 1.0], vec![2.0, 1.0], vec![-1.0, 1.0]] {
            assert!(matches!(
                run_lococv(&data, &quick_config(grid)).unwrap_err(),
                Error::InvalidConfig(_)
            ));
        }
    }

    #[test]
    fn failed_fold_is_flagged_not_fatal() {
        // x2 varies only inside center "c": training folds that keep "c"
        // are fine, the fold holding it out has x2 collinear with the
        // intercepts and its logistic start fails.
        let text = "center,outcome,x1,x2\n\
            a,1,0.8,1.0\na,1,0.3,1.0\na,0,-0.1,1.0\na,0,0.2,1.0\n\
            b,1,0.6,1.0\nb,0,0.1,1.0\nb,0,-0.3,1.0\n\
            c,1,0.9,1.4\nc,1,0.2,0.6\nc,0,0.4,1.2\nc,0,-0.2,0.8\n";
        let data = parse_table(text, &TableOptions::default()).unwrap();
        let table = run_lococv(&data, &quick_config(vec![0.5])).unwrap();
        let failed: Vec<&CvRow> = table.rows.iter().filter(|r| r.failed).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].center, "c");
        assert!(failed[0].holdout_auc.is_nan());
        let agg = &table.aggregates[0];
        assert!((agg.completeness - 2.0 / 3.0).abs() < 1e-12);
        assert!(agg.cv_aauc.is_finite());
    }

    #[test]
    fn render_round_trips_and_sd_columns_are_roots() {
        let data = six_center_data();
        let table = run_lococv(&data, &quick_config(vec![0.5, 5.0])).unwrap();
        let text = render_cv_table(&table);
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 8);
        let mut n = 0;
        for (line, row) in lines.zip(&table.rows) {
            let f: Vec<&str> = line.split(',').collect();
            let agg = &table.aggregates[row.lambda_index];
            assert_eq!((f[0].parse::<f64>().unwrap() - row.lambda).abs(), 0.0);
            assert!((f[1].parse::<f64>().unwrap() - row.lambda.log10()).abs() < 1e-12);
            assert_eq!(f[2], row.center);
            assert!((f[3].parse::<f64>().unwrap() - row.holdout_auc).abs() < 1e-12);
            assert!((f[4].parse::<f64>().unwrap() - agg.cv_aauc).abs() < 1e-12);
            assert!(
                (f[5].parse::<f64>().unwrap() - agg.variability_about_cv.sqrt()).abs() < 1e-12
            );
            assert!(
                (f[6].parse::<f64>().unwrap() - agg.mean_train_variability.sqrt()).abs()
                    < 1e-12
            );
            assert_eq!(f[7], if row.converged { "true" } else { "false" });
            n += 1;
        }
        assert_eq!(n, table.rows.len());
        assert_eq!(table.centers.len(), 6);
        assert_eq!(table.centers[0], "a".to_string());
    }
}
