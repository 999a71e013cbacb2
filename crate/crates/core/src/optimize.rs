//! Projected gradient ascent over the unit sphere.
//!
//! The norm constraint is handled by retraction: project the gradient onto
//! the tangent space at the current iterate, step, and renormalize. A
//! backtracking (Armijo) line search makes every accepted step a strict
//! increase, so the objective trace is monotone. Non-convexity is addressed,
//! when asked, by seeded random restarts reduced deterministically.

use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::math::{dot, normalized};
use crate::Result;

/// Smallest line-search step before giving up on an iteration.
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step improves the objective by less than
    /// `objective_tol * (1 + |f|)`.
    pub objective_tol: f64,
    /// Stop when the tangent gradient norm falls below this.
    pub gradient_tol: f64,
    /// Line-search shrink factor, in (0, 1).
    pub shrink: f64,
    /// Sufficient-increase constant in the Armijo condition.
    pub armijo: f64,
    /// Extra random unit-vector starts beyond the supplied ones.
    pub restarts: usize,
    /// Seed for the restart directions.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            objective_tol: 1e-8,
            gradient_tol: 1e-6,
            shrink: 0.5,
            armijo: 1e-4,
            restarts: 0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.objective_tol > 0.0) || !(self.gradient_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidConfig("shrink factor must lie in (0, 1)".into()));
        }
        if !(self.armijo > 0.0) {
            return Err(Error::InvalidConfig("armijo constant must be positive".into()));
        }
        Ok(())
    }
}

/// Why an optimization run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    ObjectiveTolerance,
    MaxIterations,
    /// The line search could not find an improving step.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Final iterate; unit norm to 1e-12.
    pub theta: Vec<f64>,
    pub objective: f64,
    /// Objective at the start followed by every accepted step; non-decreasing.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    /// Which start won under [`multi_start`] (0 = first supplied start).
    pub start_index: usize,
}

fn ensure_finite_value(value: f64, theta: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what: "objective", theta: theta.to_vec() })
    }
}

/// Maximize `objective` over the unit sphere from `theta0`.
///
/// Iterates `theta <- normalize(theta + alpha * g_tan)` with `g_tan` the
/// tangent projection of the gradient and `alpha` from backtracking; stops
/// on gradient tolerance, relative objective change, or the iteration cap.
pub fn maximize_on_sphere<F, G>(
    objective: F,
    gradient: G,
    theta0: &[f64],
    config: &OptimizerConfig,
) -> Result<FitResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    config.validate()?;
    let mut theta = normalized(theta0)
        .ok_or_else(|| Error::InvalidConfig("starting vector has zero norm".into()))?;
    let mut value = ensure_finite_value(objective(&theta), &theta)?;
    let mut trace = alloc::vec![value];
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    for _ in 0..config.max_iterations {
        let grad = gradient(&theta);
        if grad.len() != theta.len() || grad.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "gradient", theta });
        }
        let radial = dot(&grad, &theta);
        let tangent: Vec<f64> =
            grad.iter().zip(&theta).map(|(g, t)| g - radial * t).collect();
        let tangent_norm_sq = dot(&tangent, &tangent);
        if tangent_norm_sq.sqrt() < config.gradient_tol {
            stop = StopReason::GradientTolerance;
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= MIN_STEP {
            let stepped: Vec<f64> =
                theta.iter().zip(&tangent).map(|(t, d)| t + alpha * d).collect();
            // The tangent is orthogonal to theta, so the norm is >= 1 here.
            let candidate = normalized(&stepped).expect("retraction from the sphere");
            let candidate_value = ensure_finite_value(objective(&candidate), &candidate)?;
            if candidate_value >= value + config.armijo * alpha * tangent_norm_sq {
                accepted = Some((candidate, candidate_value));
                break;
            }
            alpha *= config.shrink;
        }
        let Some((candidate, candidate_value)) = accepted else {
            stop = StopReason::Stalled;
            break;
        };
        let increase = candidate_value - value;
        theta = candidate;
        value = candidate_value;
        iterations += 1;
        trace.push(value);
        if increase <= config.objective_tol * (1.0 + value.abs()) {
            stop = StopReason::ObjectiveTolerance;
            break;
        }
    }

    let converged =
        matches!(stop, StopReason::GradientTolerance | StopReason::ObjectiveTolerance);
    Ok(FitResult {
        theta,
        objective: value,
        trace,
        iterations,
        converged,
        stop,
        start_index: 0,
    })
}

fn random_unit(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if let Some(unit) = normalized(&raw) {
            return unit;
        }
    }
}

/// Lexicographically smaller vector, used only to break exact objective ties.
fn lex_smaller(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            core::cmp::Ordering::Less => return true,
            core::cmp::Ordering::Greater => return false,
            core::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Run [`maximize_on_sphere`] from every supplied start plus
/// `config.restarts` seeded random unit directions, and keep the best final
/// objective. Ties break toward the lexicographically smaller iterate, so
/// the reduction is deterministic. Errors only propagate if every start
/// fails.
pub fn multi_start<F, G>(
    objective: F,
    gradient: G,
    starts: &[Vec<f64>],
    config: &OptimizerConfig,
) -> Result<FitResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if starts.is_empty() {
        return Err(Error::InvalidConfig("at least one start is required".into()));
    }
    let p = starts[0].len();
    let mut all: Vec<Vec<f64>> = starts.to_vec();
    if config.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.restarts {
            all.push(random_unit(&mut rng, p));
        }
    }

    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for (index, start) in all.iter().enumerate() {
        match maximize_on_sphere(&objective, &gradient, start, config) {
            Ok(mut run) => {
                run.start_index = index;
                best = Some(match best.take() {
                    None => run,
                    Some(current) => {
                        if run.objective > current.objective
                            || (run.objective == current.objective
                                && lex_smaller(&run.theta, &current.theta))
                        {
                            run
                        } else {
                            current
                        }
                    }
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("no result and no error"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::norm;
    use alloc::vec;

    fn quad(theta: &[f64]) -> f64 {
        2.0 * theta[0] * theta[0] + theta[1] * theta[1]
    }

    fn quad_grad(theta: &[f64]) -> Vec<f64> {
        vec![4.0 * theta[0], 2.0 * theta[1]]
    }

    #[test]
    fn quadratic_on_circle_finds_dominant_axis() {
        let start = [core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::FRAC_1_SQRT_2];
        let r = maximize_on_sphere(quad, quad_grad, &start, &OptimizerConfig::default())
            .unwrap();
        assert!(r.converged);
        assert!((r.objective - 2.0).abs() < 1e-6);
        assert!((r.theta[0].abs() - 1.0).abs() < 1e-3);
        assert!((norm(&r.theta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let r = maximize_on_sphere(quad, quad_grad, &[1.0, 0.0], &OptimizerConfig::default())
            .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.stop, StopReason::GradientTolerance);
        assert_eq!(r.theta, vec![1.0, 0.0]);
    }

    #[test]
    fn trace_is_non_decreasing() {
        let start = [0.6, 0.8];
        let r = maximize_on_sphere(quad, quad_grad, &start, &OptimizerConfig::default())
            .unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(r.trace.len(), r.iterations + 1);
        assert!(r.objective >= quad(&crate::math::normalized(&start).unwrap()));
    }

    #[test]
    fn zero_start_is_rejected() {
        let err =
            maximize_on_sphere(quad, quad_grad, &[0.0, 0.0], &OptimizerConfig::default())
                .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let err = maximize_on_sphere(
            |_: &[f64]| f64::NAN,
            quad_grad,
            &[1.0, 0.0],
            &OptimizerConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { what: "objective", .. }));
    }

    #[test]
    fn multi_start_single_matches_direct_run() {
        let start = vec![0.6, 0.8];
        let cfg = OptimizerConfig::default();
        let direct = maximize_on_sphere(quad, quad_grad, &start, &cfg).unwrap();
        let multi = multi_start(quad, quad_grad, &[start], &cfg).unwrap();
        assert_eq!(multi.theta, direct.theta);
        assert_eq!(multi.objective, direct.objective);
        assert_eq!(multi.start_index, 0);
    }

    #[test]
    fn multi_start_takes_the_better_branch() {
        // Linear objective along e1: the -e1 start sits at the stationary
        // minimum, so the e1 branch must win.
        let f = |t: &[f64]| t[0];
        let g = |_: &[f64]| vec![1.0, 0.0];
        let starts = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let r = multi_start(f, g, &starts, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.start_index, 0);
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restarts_can_escape_a_local_maximum() {
        // f = y + 4 x^4 on the circle: local max 1 at (0, 1), global
        // maximum about 4.03 near (1, 0.063).
        let f = |t: &[f64]| t[1] + 4.0 * t[0].powi(4);
        let g = |t: &[f64]| vec![16.0 * t[0].powi(3), 1.0];
        let cfg = OptimizerConfig::default();
        let stuck = multi_start(&f, &g, &[vec![0.0, 1.0]], &cfg).unwrap();
        assert!((stuck.objective - 1.0).abs() < 1e-9);

        let cfg = OptimizerConfig { restarts: 5, seed: 11, ..OptimizerConfig::default() };
        let escaped = multi_start(&f, &g, &[vec![0.0, 1.0]], &cfg).unwrap();
        assert!(escaped.objective >= stuck.objective);
        assert!(escaped.objective > 1.5);
        assert!(escaped.start_index > 0);

        // Seeded restarts are deterministic.
        let again = multi_start(&f, &g, &[vec![0.0, 1.0]], &cfg).unwrap();
        assert_eq!(again.theta, escaped.theta);
    }
}
