//! Logistic regression with center-specific intercepts, by IRLS.
//!
//! The model is `P(case | x, center c) = expit(alpha_c + beta'x)` with
//! shared slopes. The intercept block of the normal equations is diagonal,
//! so each IRLS step solves only the p x p Schur complement for the slopes
//! and back-substitutes the intercepts. Separation is handled by
//! step-halving plus a slope cap, reported as non-convergence rather than
//! an error. Used both as the comparator model and to produce starting
//! directions for the smoothed-AUC fit.

use alloc::vec::Vec;
use num_traits::Float;

use crate::dataset::CenterView;
use crate::error::Error;
use crate::math::{dot, log1p_exp, logit, normalized};
use crate::roc::Coefficients;
use crate::Result;

/// Ridge jitter added to the Schur complement diagonal.
const RIDGE: f64 = 1e-10;
/// Working weights are floored here to keep the intercept block invertible.
const MIN_WEIGHT: f64 = 1e-10;
/// Floor for the weight dividing the working response; much smaller than
/// `MIN_WEIGHT` so Newton steps stay honest deep into the tails.
const MIN_RESPONSE_WEIGHT: f64 = 1e-300;
/// A deviance this small means the fit is essentially saturated, which only
/// happens under (quasi-)separation; report it as non-convergence.
const DEGENERATE_DEVIANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LogisticConfig {
    pub max_iterations: usize,
    /// Relative deviance-change tolerance.
    pub tolerance: f64,
    /// Per-coordinate slope magnitude cap engaged under separation.
    pub slope_cap: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { max_iterations: 100, tolerance: 1e-10, slope_cap: 30.0 }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub slopes: Vec<f64>,
    /// One intercept per view, in view order.
    pub intercepts: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub deviance: f64,
    /// Deviance after each accepted iteration, starting value first.
    pub deviance_trace: Vec<f64>,
}

/// In-place lower Cholesky of a symmetric p x p matrix; `false` when a
/// pivot falls at or below `min_pivot`.
fn cholesky(a: &mut [f64], p: usize, min_pivot: f64) -> bool {
    for k in 0..p {
        let mut d = a[k * p + k];
        for j in 0..k {
            d -= a[k * p + j] * a[k * p + j];
        }
        if d <= min_pivot {
            return false;
        }
        let l = d.sqrt();
        a[k * p + k] = l;
        for i in (k + 1)..p {
            let mut s = a[i * p + k];
            for j in 0..k {
                s -= a[i * p + j] * a[k * p + j];
            }
            a[i * p + k] = s / l;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut y = alloc::vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * p + j] * y[j];
        }
        y[i] = s / l[i * p + i];
    }
    let mut x = alloc::vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for j in (i + 1)..p {
            s -= l[j * p + i] * x[j];
        }
        x[i] = s / l[i * p + i];
    }
    x
}

fn rows<'a>(
    views: &'a [CenterView],
) -> impl Iterator<Item = (usize, &'a [f64], f64)> + 'a {
    views.iter().enumerate().flat_map(|(c, v)| {
        v.cases
            .rows()
            .map(move |x| (c, x, 1.0))
            .chain(v.controls.rows().map(move |x| (c, x, 0.0)))
    })
}

/// `-2 log L`, evaluated without overflow.
fn deviance(views: &[CenterView], slopes: &[f64], intercepts: &[f64]) -> f64 {
    let mut dev = 0.0;
    for (c, x, y) in rows(views) {
        let eta = intercepts[c] + dot(slopes, x);
        dev += 2.0 * (log1p_exp(eta) - y * eta);
    }
    dev
}

/// Maximize the binomial likelihood by iteratively reweighted least squares.
///
/// Deviance is non-increasing across recorded iterations (step-halving on
/// any increase). A rank-deficient marker design is a
/// [`Error::SingularDesign`]; separation yields `converged = false` with
/// capped, finite slopes.
pub fn fit_logistic(views: &[CenterView], config: &LogisticConfig) -> Result<LogisticFit> {
    if views.is_empty() {
        return Err(Error::UnusableData);
    }
    let p = views[0].cases.ncols();
    let m = views.len();
    let cap = config.slope_cap;

    let mut slopes = alloc::vec![0.0; p];
    let mut intercepts: Vec<f64> = views
        .iter()
        .map(|v| logit(v.n_cases() as f64 / v.size() as f64))
        .collect();
    let mut dev = deviance(views, &slopes, &intercepts);
    let mut trace = alloc::vec![dev];
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..config.max_iterations {
        // Accumulate the weighted normal equations in Schur form.
        let mut a = alloc::vec![0.0; p * p]; // X'WX over markers
        let mut b = alloc::vec![0.0; p]; // X'Wz
        let mut s_c = alloc::vec![0.0; m]; // per-center weight sums
        let mut m_c = alloc::vec![0.0; m * p]; // per-center weighted marker sums
        let mut t_c = alloc::vec![0.0; m]; // per-center weighted working response
        for (c, x, y) in rows(views) {
            let eta = intercepts[c] + dot(&slopes, x);
            let mu = crate::math::expit(eta);
            let w_true = mu * (1.0 - mu);
            let w = w_true.max(MIN_WEIGHT);
            let z = eta + (y - mu) / w_true.max(MIN_RESPONSE_WEIGHT);
            for i in 0..p {
                let wxi = w * x[i];
                for j in 0..=i {
                    a[i * p + j] += wxi * x[j];
                }
                b[i] += wxi * z;
                m_c[c * p + i] += wxi;
            }
            s_c[c] += w;
            t_c[c] += w * z;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                a[i * p + j] = a[j * p + i];
            }
        }

        // Schur complement onto the slope block.
        let mut schur = a.clone();
        let mut rhs = b.clone();
        for c in 0..m {
            let inv_s = 1.0 / s_c[c];
            for i in 0..p {
                let mi = m_c[c * p + i];
                rhs[i] -= mi * t_c[c] * inv_s;
                for j in 0..p {
                    schur[i * p + j] -= mi * m_c[c * p + j] * inv_s;
                }
            }
        }
        let max_diag = (0..p).fold(0.0f64, |acc, i| acc.max(schur[i * p + i]));
        for i in 0..p {
            schur[i * p + i] += RIDGE;
        }
        if !cholesky(&mut schur, p, 1e-8 * max_diag) {
            if iter == 0 {
                return Err(Error::SingularDesign);
            }
            // The design degenerated mid-path (extreme weights); keep the
            // last accepted estimates.
            break;
        }
        let mut new_slopes = cholesky_solve(&schur, p, &rhs);
        for s in new_slopes.iter_mut() {
            *s = s.clamp(-cap, cap);
        }
        let mut new_intercepts = alloc::vec![0.0; m];
        for c in 0..m {
            let fitted = dot(&new_slopes, &m_c[c * p..(c + 1) * p]);
            new_intercepts[c] = ((t_c[c] - fitted) / s_c[c]).clamp(-cap, cap);
        }

        // Step-halve toward the previous iterate if the deviance rose.
        let mut new_dev = deviance(views, &new_slopes, &new_intercepts);
        let mut halvings = 0;
        while new_dev > dev && halvings < 20 {
            for (n, old) in new_slopes.iter_mut().zip(&slopes) {
                *n = 0.5 * (*n + old);
            }
            for (n, old) in new_intercepts.iter_mut().zip(&intercepts) {
                *n = 0.5 * (*n + old);
            }
            new_dev = deviance(views, &new_slopes, &new_intercepts);
            halvings += 1;
        }
        if new_dev > dev {
            // An increase at rounding level means the previous iterate is
            // already the optimum; anything larger is a genuine stall.
            if new_dev - dev <= 1e-12 * (dev.abs() + 1.0) {
                converged = true;
            }
            break;
        }

        let drop = dev - new_dev;
        slopes = new_slopes;
        intercepts = new_intercepts;
        dev = new_dev;
        iterations = iter + 1;
        trace.push(dev);
        if drop <= config.tolerance * (dev.abs() + 1e-10) {
            converged = true;
            break;
        }
    }

    let capped = slopes.iter().any(|s| s.abs() >= cap);
    let saturated = dev <= DEGENERATE_DEVIANCE;
    Ok(LogisticFit {
        slopes,
        intercepts,
        converged: converged && !capped && !saturated,
        iterations,
        deviance: dev,
        deviance_trace: trace,
    })
}

/// The unit-norm direction of the fitted slopes; intercepts are discarded
/// (any AUC is intercept-invariant). Zero slopes fall back to the uniform
/// direction `(1, ..., 1)/sqrt(p)`, flagged by the second return.
pub fn direction_from(fit: &LogisticFit) -> (Coefficients, bool) {
    match normalized(&fit.slopes) {
        Some(unit) => (Coefficients::new(unit).expect("unit vector"), false),
        None => {
            let p = fit.slopes.len();
            let uniform = alloc::vec![1.0 / (p as f64).sqrt(); p];
            (Coefficients::new(uniform).expect("uniform direction"), true)
        }
    }
}
