//! End-to-end fit: starting direction, bandwidths, sphere maximization,
//! and the apparent performance report.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{split_centers, standardize, Dataset, ScalingRecord};
use crate::error::Error;
use crate::logistic::{direction_from, fit_logistic, LogisticConfig, LogisticFit};
use crate::math::normalized;
use crate::optimize::{multi_start, FitResult, OptimizerConfig};
use crate::roc::{adjusted_auc_with_reference, center_weights, Coefficients, PerformanceReport};
use crate::smooth::{bandwidths, Bandwidths, SmoothObjective};
use crate::Result;

/// Where the optimizer's starting direction comes from.
#[derive(Debug, Clone, Default)]
pub enum StartPolicy {
    /// Unit-norm slopes of a fixed-intercept logistic fit. Combine with
    /// `optimizer.restarts > 0` for seeded random extra starts.
    #[default]
    Logistic,
    /// A caller-supplied direction, stated in original marker units.
    User(Coefficients),
}

#[derive(Debug, Clone, Default)]
pub struct FitConfig {
    /// Penalty on the variability of the smoothed center AUCs.
    pub lambda: f64,
    /// Rescale markers to unit variance before fitting; fitted coefficients
    /// are reported on both scales.
    pub standardize: bool,
    pub optimizer: OptimizerConfig,
    pub start: StartPolicy,
    pub logistic: LogisticConfig,
}

impl FitConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!(
                "lambda must be a nonnegative finite number, got {}",
                self.lambda
            )));
        }
        self.optimizer.validate()
    }
}

/// Everything produced by one fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Raw optimizer output on the fitting scale.
    pub fit: FitResult,
    /// Fitted direction on the fitting (possibly standardized) scale.
    pub theta: Coefficients,
    /// Fitted direction in original marker units, renormalized; equals
    /// `theta` when standardization was off.
    pub theta_original: Coefficients,
    /// Apparent (training data) performance of `theta`, empirical AUCs.
    pub apparent: PerformanceReport,
    pub bandwidths: Bandwidths,
    pub start_direction: Coefficients,
    /// The logistic slopes were all zero and the uniform fallback was used.
    pub start_fallback: bool,
    /// Penalized objective at the starting direction; the ascent guarantee
    /// is `fit.objective >= objective_at_start`.
    pub objective_at_start: f64,
    pub logistic: Option<LogisticFit>,
    pub lambda: f64,
    pub dropped_centers: Vec<String>,
    pub scaling: Option<ScalingRecord>,
}

/// Fit a linear combination by maximizing the smoothed, optionally
/// penalized, center-adjusted AUC over the unit sphere.
///
/// Composes center splitting, optional standardization, the logistic
/// starting direction, frozen bandwidths, and projected gradient ascent.
/// A penalized fit (`lambda > 0`) needs at least two usable centers.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let (work, scaling) = if config.standardize {
        let (d, record) = standardize(data)?;
        (d, Some(record))
    } else {
        (data.clone(), None)
    };
    let (views, dropped_centers) = split_centers(&work)?;
    if config.lambda > 0.0 && views.len() < 2 {
        return Err(Error::InvalidConfig(
            "a penalized fit needs at least 2 usable (non-concordant) centers".into(),
        ));
    }

    let (start_direction, start_fallback, logistic) = match &config.start {
        StartPolicy::Logistic => {
            let lf = fit_logistic(&views, &config.logistic)?;
            let (direction, fallback) = direction_from(&lf);
            (direction, fallback, Some(lf))
        }
        StartPolicy::User(direction) => {
            if direction.len() != work.p() {
                return Err(Error::DimensionMismatch {
                    expected: work.p(),
                    found: direction.len(),
                });
            }
            let direction = match &scaling {
                Some(record) => {
                    Coefficients::new(record.coefficients_to_model(direction.as_slice()))?
                }
                None => direction.clone(),
            };
            (direction, false, None)
        }
    };

    let h = bandwidths(start_direction.as_slice(), &views);
    let weights = center_weights(&views);
    let objective = SmoothObjective::new(&views, weights, &h, config.lambda)?;

    // Normalize exactly as the optimizer will, so the recorded start value
    // matches the first trace entry bit for bit.
    let theta0 = normalized(start_direction.as_slice()).expect("unit start");
    let objective_at_start = objective.value(&theta0);
    let result = multi_start(
        |t| objective.value(t),
        |t| objective.value_and_gradient(t).1,
        &[theta0],
        &config.optimizer,
    )?;

    let theta = Coefficients::new(result.theta.clone())?;
    let apparent = adjusted_auc_with_reference(&theta, &views, None)?;
    let theta_original = match &scaling {
        Some(record) => Coefficients::new(record.coefficients_to_original(theta.as_slice()))?,
        None => theta.clone(),
    };

    Ok(FitReport {
        fit: result,
        theta,
        theta_original,
        apparent,
        bandwidths: h,
        start_direction,
        start_fallback,
        objective_at_start,
        logistic,
        lambda: config.lambda,
        dropped_centers,
        scaling,
    })
}

/// Per-center empirical AUCs, weights, adjusted AUC, and variability of
/// `theta` on `data`; an external `reference` (for example a training
/// aAUC) adds the second variability variant.
pub fn evaluate(
    theta: &Coefficients,
    data: &Dataset,
    reference: Option<f64>,
) -> Result<PerformanceReport> {
    let (views, _) = split_centers(data)?;
    adjusted_auc_with_reference(theta, &views, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_table, TableOptions};
    use alloc::format;
    use alloc::vec;

    /// Two centers, two markers; x2 separates cases from controls with a
    /// wide margin in both centers, x1 is noise.
    fn separated_data() -> Dataset {
        let text = "center,outcome,x1,x2\n\
            a,1,0.1,2.0\na,1,-0.2,2.5\na,0,0.2,-2.0\na,0,0.0,-2.2\n\
            b,1,-0.1,1.8\nb,1,0.3,2.1\nb,0,0.1,-1.9\nb,0,-0.3,-2.4\n";
        parse_table(text, &TableOptions::default()).unwrap()
    }

    /// Two centers with interleaved case/control clouds; neither center is
    /// separable in any direction.
    fn overlapping_data() -> Dataset {
        let text = "center,outcome,x1,x2\n\
            a,1,0.9,0.1\na,1,0.1,0.8\na,1,-0.6,-0.2\na,1,0.3,0.3\n\
            a,0,0.7,0.5\na,0,-0.2,-0.7\na,0,-0.8,0.4\na,0,0.1,-0.1\n\
            b,1,0.5,-0.3\nb,1,-0.4,0.6\nb,1,0.2,0.2\n\
            b,0,0.6,0.4\nb,0,-0.5,-0.5\nb,0,0.0,0.3\n";
        parse_table(text, &TableOptions::default()).unwrap()
    }

    #[test]
    fn perfect_marker_dominates_the_fit() {
        let report = fit(&separated_data(), &FitConfig::default()).unwrap();
        assert_eq!(report.apparent.aauc, 1.0);
        assert!(report.theta.as_slice()[1].abs() > 0.9);
        let norm = crate::math::norm(report.theta.as_slice());
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ascent_from_the_starting_direction() {
        let report = fit(&overlapping_data(), &FitConfig::default()).unwrap();
        assert!(report.fit.objective >= report.objective_at_start);
        assert_eq!(report.fit.trace[0], report.objective_at_start);
        for w in report.fit.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn apparent_report_is_reproducible_from_theta() {
        let report = fit(&overlapping_data(), &FitConfig::with_lambda(2.0)).unwrap();
        let again = evaluate(&report.theta, &overlapping_data(), None).unwrap();
        assert!((again.aauc - report.apparent.aauc).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero_is_deterministic_and_identical() {
        let a = fit(&overlapping_data(), &FitConfig::with_lambda(0.0)).unwrap();
        let b = fit(&overlapping_data(), &FitConfig::default()).unwrap();
        assert_eq!(a.fit.theta, b.fit.theta);
        assert_eq!(a.fit.objective, b.fit.objective);
    }

    #[test]
    fn penalized_fit_requires_two_centers() {
        let text = "center,outcome,x1\na,1,1.0\na,0,0.0\na,1,0.5\na,0,0.2\n";
        let d = parse_table(text, &TableOptions::default()).unwrap();
        assert!(fit(&d, &FitConfig::default()).is_ok());
        assert!(matches!(
            fit(&d, &FitConfig::with_lambda(5.0)).unwrap_err(),
            Error::InvalidConfig(_)
        ));
        assert!(fit(&d, &FitConfig::with_lambda(-1.0)).is_err());
    }

    #[test]
    fn standardized_fit_round_trips_to_original_units() {
        // Blow up the scale of x1 so standardization matters.
        let base = overlapping_data();
        let mut text = String::from("center,outcome,x1,x2\n");
        for row in 0..base.n() {
            let m = base.markers_row(row);
            let label = &base.centers()[base.center_slot(row)];
            let y = base.outcome(row) as u8;
            text.push_str(&format!("{label},{y},{},{}\n", 1000.0 * m[0], m[1]));
        }
        let data = parse_table(&text, &TableOptions::default()).unwrap();
        let cfg = FitConfig { standardize: true, ..FitConfig::default() };
        let report = fit(&data, &cfg).unwrap();
        assert!(report.scaling.is_some());
        let on_original = evaluate(&report.theta_original, &data, None).unwrap();
        assert!((on_original.aauc - report.apparent.aauc).abs() < 1e-12);
    }

    #[test]
    fn user_start_skips_logistic() {
        let start = Coefficients::new(vec![1.0, 1.0]).unwrap();
        let cfg = FitConfig { start: StartPolicy::User(start), ..FitConfig::default() };
        let report = fit(&overlapping_data(), &cfg).unwrap();
        assert!(report.logistic.is_none());
        assert!(!report.start_fallback);

        let wrong = Coefficients::new(vec![1.0]).unwrap();
        let cfg = FitConfig { start: StartPolicy::User(wrong), ..FitConfig::default() };
        assert!(matches!(
            fit(&overlapping_data(), &cfg).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn evaluate_reference_variants() {
        let theta = Coefficients::new(vec![1.0, 0.5]).unwrap();
        let data = overlapping_data();
        let plain = evaluate(&theta, &data, None).unwrap();
        assert!(plain.reference.is_none());
        let same = evaluate(&theta, &data, Some(plain.aauc)).unwrap();
        assert!(
            (same.variability_about_reference.unwrap() - same.variability).abs() < 1e-15
        );
        let shifted = evaluate(&theta, &data, Some(plain.aauc + 0.1)).unwrap();
        assert!(shifted.variability_about_reference.unwrap() > shifted.variability);
    }

    #[test]
    fn evaluate_matches_hand_enumeration_on_three_centers() {
        // One marker; per-center pair counts are easy to enumerate.
        let text = "center,outcome,x1\n\
            a,1,3.0\na,0,1.0\na,0,4.0\n\
            b,1,2.0\nb,1,5.0\nb,0,1.0\n\
            c,1,2.0\nc,0,2.0\n";
        let d = parse_table(text, &TableOptions::default()).unwrap();
        let theta = Coefficients::new(vec![1.0]).unwrap();
        let rep = evaluate(&theta, &d, None).unwrap();
        // a: case 3 beats control 1 but not 4 -> 1/2.
        // b: cases 2,5 beat control 1 -> 2/2 = 1.
        // c: tie -> 0.
        assert_eq!(rep.centers[0].auc, 0.5);
        assert_eq!(rep.centers[1].auc, 1.0);
        assert_eq!(rep.centers[2].auc, 0.0);
        // Case counts 1, 2, 1 -> weights 0.25, 0.5, 0.25.
        let expected = 0.25 * 0.5 + 0.5 * 1.0 + 0.25 * 0.0;
        assert!((rep.aauc - expected).abs() < 1e-15);
        let var = 0.25 * (0.5 - expected).powi(2)
            + 0.5 * (1.0 - expected).powi(2)
            + 0.25 * (0.0 - expected).powi(2);
        assert!((rep.variability - var).abs() < 1e-15);
    }
}
