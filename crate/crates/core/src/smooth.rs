//! Probit-smoothed center AUCs, the penalized objective, and its gradient.
//!
//! Each center's empirical AUC is approximated by replacing the strict
//! indicator over case-control score differences with `Phi(d / h_c)`, where
//! `Phi` is the standard normal distribution function and `h_c` a per-center
//! bandwidth computed once from the starting direction and then frozen. The
//! objective maximized over the unit sphere is
//!
//! ```text
//! Q(theta; lambda) = aR(theta) - lambda * sum_c w_c (R_c(theta) - aR(theta))^2
//! ```
//!
//! with `aR = sum_c w_c R_c`. Pair sums are direct double loops over the
//! case-control pairs of each center, materialized once as difference
//! vectors; centers are reduced in fixed order so results are reproducible.

use alloc::vec::Vec;
use num_traits::Float;

use crate::dataset::CenterView;
use crate::error::Error;
use crate::math::{dot, normal_cdf, normal_pdf, sample_sd};
use crate::matrix::Matrix;
use crate::Result;

/// Relative bandwidth floor, as a fraction of the pooled score sd.
const FLOOR_REL: f64 = 1e-4;
/// Absolute bandwidth floor for fully degenerate scores.
const FLOOR_ABS: f64 = 1e-8;

/// Per-center smoothing bandwidths, frozen for the duration of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Bandwidths {
    values: Vec<f64>,
    floor: f64,
}

impl Bandwidths {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, c: usize) -> f64 {
        self.values[c]
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }
}

/// Bandwidths `h_c = sd_c * n_c^(-1/3)` from the starting direction.
///
/// `sd_c` is the sample standard deviation of the linear scores over all
/// observations in center `c` (cases and controls pooled). Degenerate
/// centers are floored at `1e-4` times the pooled score sd, never below
/// `1e-8`.
pub fn bandwidths(theta_start: &[f64], views: &[CenterView]) -> Bandwidths {
    let mut pooled: Vec<f64> = Vec::new();
    let mut per_center: Vec<(f64, usize)> = Vec::with_capacity(views.len());
    for view in views {
        let mut scores = view.cases.scores(theta_start);
        scores.extend(view.controls.scores(theta_start));
        pooled.extend_from_slice(&scores);
        per_center.push((sample_sd(&scores), scores.len()));
    }
    let floor = (FLOOR_REL * sample_sd(&pooled)).max(FLOOR_ABS);
    let values = per_center
        .into_iter()
        .map(|(sd, n)| (sd * (n as f64).powf(-1.0 / 3.0)).max(floor))
        .collect();
    Bandwidths { values, floor }
}

/// Smoothed AUC of one center: the mean of `Phi(theta'(case - control)/h)`
/// over its case-control pairs. Strictly inside (0, 1) for finite scores.
pub fn smooth_center_auc(theta: &[f64], view: &CenterView, h: f64) -> f64 {
    assert!(h > 0.0, "bandwidth must be positive");
    let p = view.cases.ncols();
    let mut d = alloc::vec![0.0; p];
    let mut sum = 0.0;
    for case in view.cases.rows() {
        for control in view.controls.rows() {
            for j in 0..p {
                d[j] = case[j] - control[j];
            }
            sum += normal_cdf(dot(theta, &d) / h);
        }
    }
    sum / (view.n_cases() * view.n_controls()) as f64
}

/// The smoothed, optionally penalized adjusted-AUC objective.
///
/// Construction materializes the per-center case-control difference vectors,
/// so repeated evaluations during optimization cost one `Phi` (and for
/// gradients one `phi`) per pair.
#[derive(Debug, Clone)]
pub struct SmoothObjective {
    p: usize,
    lambda: f64,
    weights: Vec<f64>,
    bandwidths: Vec<f64>,
    diffs: Vec<Matrix>,
}

impl SmoothObjective {
    pub fn new(
        views: &[CenterView],
        weights: Vec<f64>,
        bandwidths: &Bandwidths,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "penalty parameter must be nonnegative, got {lambda}"
            )));
        }
        if views.is_empty() {
            return Err(Error::UnusableData);
        }
        if weights.len() != views.len() || bandwidths.as_slice().len() != views.len() {
            return Err(Error::DimensionMismatch {
                expected: views.len(),
                found: weights.len().min(bandwidths.as_slice().len()),
            });
        }
        let wsum: f64 = weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidConfig("center weights must sum to 1".into()));
        }
        let p = views[0].cases.ncols();
        let mut diffs = Vec::with_capacity(views.len());
        for view in views {
            let mut m = Matrix::with_capacity(view.n_cases() * view.n_controls(), p);
            let mut d = alloc::vec![0.0; p];
            for case in view.cases.rows() {
                for control in view.controls.rows() {
                    for j in 0..p {
                        d[j] = case[j] - control[j];
                    }
                    m.push_row(&d);
                }
            }
            diffs.push(m);
        }
        Ok(Self { p, lambda, weights, bandwidths: bandwidths.as_slice().to_vec(), diffs })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_centers(&self) -> usize {
        self.diffs.len()
    }

    /// Smoothed AUC of center `c` at `theta`.
    pub fn center_smoothed(&self, c: usize, theta: &[f64]) -> f64 {
        let h = self.bandwidths[c];
        let m = &self.diffs[c];
        let mut sum = 0.0;
        for d in m.rows() {
            sum += normal_cdf(dot(theta, d) / h);
        }
        sum / m.nrows() as f64
    }

    fn center_values(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.n_centers()).map(|c| self.center_smoothed(c, theta)).collect()
    }

    /// The smoothed adjusted AUC `aR(theta)`, ignoring the penalty.
    pub fn smooth_aauc(&self, theta: &[f64]) -> f64 {
        let rs = self.center_values(theta);
        rs.iter().zip(&self.weights).map(|(r, w)| r * w).sum()
    }

    /// The penalized objective `Q(theta; lambda)`. With `lambda == 0` this
    /// is exactly [`Self::smooth_aauc`], same code path.
    pub fn value(&self, theta: &[f64]) -> f64 {
        let rs = self.center_values(theta);
        let ar: f64 = rs.iter().zip(&self.weights).map(|(r, w)| r * w).sum();
        if self.lambda == 0.0 {
            return ar;
        }
        let pen: f64 = rs
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * (r - ar) * (r - ar))
            .sum();
        ar - self.lambda * pen
    }

    /// Weighted variability of the smoothed center AUCs about their
    /// weighted mean, at `theta` (the quantity the penalty controls).
    pub fn smoothed_variability(&self, theta: &[f64]) -> f64 {
        let rs = self.center_values(theta);
        let ar: f64 = rs.iter().zip(&self.weights).map(|(r, w)| r * w).sum();
        rs.iter().zip(&self.weights).map(|(r, w)| w * (r - ar) * (r - ar)).sum()
    }

    /// Objective value and its (ambient) gradient at `theta`.
    ///
    /// Per center, `grad R_c = sum phi(u) d / (n_pairs h)` over difference
    /// vectors `d` with `u = theta'd / h`; the penalty contributes
    /// `-2 lambda sum_c w_c (R_c - aR)(grad R_c - grad aR)`.
    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let m = self.n_centers();
        let mut rs = alloc::vec![0.0; m];
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(m);
        for c in 0..m {
            let h = self.bandwidths[c];
            let mat = &self.diffs[c];
            let mut s = 0.0;
            let mut g = alloc::vec![0.0; self.p];
            for d in mat.rows() {
                let u = dot(theta, d) / h;
                s += normal_cdf(u);
                let phi = normal_pdf(u);
                for j in 0..self.p {
                    g[j] += phi * d[j];
                }
            }
            let pairs = mat.nrows() as f64;
            rs[c] = s / pairs;
            for gj in g.iter_mut() {
                *gj /= pairs * h;
            }
            grads.push(g);
        }
        let ar: f64 = rs.iter().zip(&self.weights).map(|(r, w)| r * w).sum();
        let mut ga = alloc::vec![0.0; self.p];
        for (g, w) in grads.iter().zip(&self.weights) {
            for j in 0..self.p {
                ga[j] += w * g[j];
            }
        }
        if self.lambda == 0.0 {
            return (ar, ga);
        }
        let pen: f64 = rs
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * (r - ar) * (r - ar))
            .sum();
        let mut gq = ga.clone();
        for c in 0..m {
            let coef = 2.0 * self.lambda * self.weights[c] * (rs[c] - ar);
            for j in 0..self.p {
                gq[j] -= coef * (grads[c][j] - ga[j]);
            }
        }
        (ar - self.lambda * pen, gq)
    }
}
