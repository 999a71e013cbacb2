//! Scalar numerics: normal distribution, stable logistic links, moments.

use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

/// 1/sqrt(2*pi), the normal density normalizing constant.
const INV_SQRT_2PI: f64 = 0.3989422804014326779;
/// 1/sqrt(2).
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Standard normal distribution function.
///
/// Evaluated as `0.5 * erfc(-x / sqrt(2))`, which stays accurate in both
/// tails (no cancellation for large negative `x`); absolute error is well
/// below 1e-12 everywhere.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Logistic function `1 / (1 + exp(-v))`, evaluated without overflow for
/// any finite argument.
pub fn expit(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`expit`]; requires `p` strictly inside (0, 1).
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + exp(v))` without overflow.
pub fn log1p_exp(v: f64) -> f64 {
    if v > 30.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// Asymmetric logistic link: `expit(v/3)` for negative arguments and
/// `expit(3v)` otherwise. Continuous at 0, where both branches give 0.5.
pub fn piecewise_logistic(v: f64) -> f64 {
    if v < 0.0 {
        expit(v / 3.0)
    } else {
        expit(3.0 * v)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Rescale to unit Euclidean norm; `None` for zero or non-finite input.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n <= 0.0 || !n.is_finite() {
        return None;
    }
    Some(a.iter().map(|x| x / n).collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor n - 1); 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Render with 17 significant digits so a reparse reproduces the value.
pub fn fmt17(x: f64) -> String {
    alloc::format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Phi(1) and Phi(-1), to full double precision.
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-15);
        assert!((normal_cdf(-1.0) - 0.15865525393145705).abs() < 1e-15);
        // Deep tails: no cancellation on the left, saturation on the right.
        assert!(normal_cdf(-37.0) > 0.0);
        assert_eq!(normal_cdf(40.0), 1.0);
        assert!(normal_cdf(-8.5) < 1e-16);
    }

    #[test]
    fn normal_pdf_reference_values() {
        assert!((normal_pdf(0.0) - INV_SQRT_2PI).abs() < 1e-16);
        assert!((normal_pdf(1.0) - 0.24197072451914337).abs() < 1e-15);
    }

    #[test]
    fn expit_is_stable_at_extremes() {
        assert_eq!(expit(800.0), 1.0);
        assert_eq!(expit(-800.0), 0.0);
        assert!((expit(0.0) - 0.5).abs() < 1e-16);
        assert!((logit(expit(1.3)) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn piecewise_logistic_continuous_at_zero() {
        assert_eq!(piecewise_logistic(0.0), 0.5);
        assert!((piecewise_logistic(-1e-12) - 0.5).abs() < 1e-12);
        assert!(piecewise_logistic(1.0) > piecewise_logistic(-1.0));
    }

    #[test]
    fn moments() {
        assert_eq!(mean(&[1.0, 3.0]), 2.0);
        assert!((sample_sd(&[0.0, 2.0]) - core::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(sample_sd(&[5.0]), 0.0);
    }

    #[test]
    fn fmt17_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 123456.789, -2.5e-7] {
            let s = fmt17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x);
        }
    }
}
