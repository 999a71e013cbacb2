//! Exact empirical AUC, center weights, adjusted AUC, and variability.
//!
//! The indicator convention is strict throughout: a case-control pair with
//! tied scores contributes 0, so `empirical_auc(x, x)` is 0, not 0.5. The
//! half-credit convention exists behind [`TieRule::HalfCredit`] for
//! comparison with other software but is never used by the fitting paths.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::CenterView;
use crate::error::Error;
use crate::math;
use crate::Result;

/// A direction in marker space, kept at unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    /// Normalizes to unit norm; zero or non-finite input is rejected.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "coefficient", theta: raw });
        }
        match math::normalized(&raw) {
            Some(unit) => Ok(Self(unit)),
            None => Err(Error::InvalidConfig("coefficient vector has zero norm".into())),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for Coefficients {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// How tied case-control pairs count toward the AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Ties contribute 0 (the convention used everywhere in this crate).
    #[default]
    Strict,
    /// Ties contribute 1/2 (the Mann-Whitney convention).
    HalfCredit,
}

fn check_scores(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteScore);
    }
    Ok(())
}

/// Empirical AUC with a chosen tie rule, in O(n log n).
///
/// Sorts the controls once and counts, for every case, the controls strictly
/// below it (plus half the ties under [`TieRule::HalfCredit`]). The counts
/// are integers, so the result agrees exactly with the pairwise definition.
pub fn empirical_auc_with(case_scores: &[f64], control_scores: &[f64], ties: TieRule) -> Result<f64> {
    check_scores(case_scores)?;
    check_scores(control_scores)?;
    let mut sorted: Vec<f64> = control_scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut below: u64 = 0;
    let mut tied: u64 = 0;
    for &c in case_scores {
        let lo = sorted.partition_point(|&s| s < c);
        below += lo as u64;
        if ties == TieRule::HalfCredit {
            let hi = sorted.partition_point(|&s| s <= c);
            tied += (hi - lo) as u64;
        }
    }
    let pairs = (case_scores.len() as u64 * control_scores.len() as u64) as f64;
    Ok(match ties {
        TieRule::Strict => below as f64 / pairs,
        TieRule::HalfCredit => (below as f64 + 0.5 * tied as f64) / pairs,
    })
}

/// Empirical AUC under the strict tie rule.
pub fn empirical_auc(case_scores: &[f64], control_scores: &[f64]) -> Result<f64> {
    empirical_auc_with(case_scores, control_scores, TieRule::Strict)
}

/// The O(n^2) double loop over case-control pairs, kept as an oracle for
/// the rank-based implementation. Strict tie rule.
pub fn empirical_auc_pairwise(case_scores: &[f64], control_scores: &[f64]) -> Result<f64> {
    check_scores(case_scores)?;
    check_scores(control_scores)?;
    let mut count: u64 = 0;
    for &c in case_scores {
        for &k in control_scores {
            if c > k {
                count += 1;
            }
        }
    }
    let pairs = (case_scores.len() as u64 * control_scores.len() as u64) as f64;
    Ok(count as f64 / pairs)
}

/// Case-count weights `w_c = n_cases(c) / total cases`; they sum to 1.
pub fn center_weights(views: &[CenterView]) -> Vec<f64> {
    let total: usize = views.iter().map(CenterView::n_cases).sum();
    views.iter().map(|v| v.n_cases() as f64 / total as f64).collect()
}

/// Weighted squared deviation of center AUCs about `reference`, on the
/// variance scale. `weights` must sum to 1.
pub fn variability(center_aucs: &[f64], weights: &[f64], reference: f64) -> Result<f64> {
    if center_aucs.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: center_aucs.len(),
            found: weights.len(),
        });
    }
    Ok(center_aucs
        .iter()
        .zip(weights)
        .map(|(a, w)| w * (a - reference) * (a - reference))
        .sum())
}

/// Per-center AUC of one center under a fitted combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterPerformance {
    pub label: String,
    pub auc: f64,
    pub weight: f64,
    pub cases: usize,
    pub controls: usize,
}

/// Center-specific AUCs with their weights, the adjusted AUC, and the
/// weighted variability of the AUCs (variance scale).
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    pub centers: Vec<CenterPerformance>,
    /// `sum_c w_c AUC_c`.
    pub aauc: f64,
    /// Variability about `aauc`.
    pub variability: f64,
    /// External reference value, when one was supplied.
    pub reference: Option<f64>,
    /// Variability about `reference`.
    pub variability_about_reference: Option<f64>,
}

impl PerformanceReport {
    /// Variability about the internal aAUC on the standard deviation scale.
    pub fn sd(&self) -> f64 {
        num_traits::Float::sqrt(self.variability)
    }

    pub fn sd_about_reference(&self) -> Option<f64> {
        self.variability_about_reference.map(num_traits::Float::sqrt)
    }

    pub fn center_aucs(&self) -> Vec<f64> {
        self.centers.iter().map(|c| c.auc).collect()
    }
}

/// Score every row of every view by `theta` and report per-center empirical
/// AUCs, case-count weights, the adjusted AUC, and variability; an external
/// `reference` (for example a training aAUC) adds the second variability.
pub fn adjusted_auc_with_reference(
    theta: &Coefficients,
    views: &[CenterView],
    reference: Option<f64>,
) -> Result<PerformanceReport> {
    if views.is_empty() {
        return Err(Error::UnusableData);
    }
    let p = views[0].cases.ncols();
    if theta.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: theta.len() });
    }
    let weights = center_weights(views);
    let mut centers = Vec::with_capacity(views.len());
    for (view, w) in views.iter().zip(&weights) {
        let case_scores = view.cases.scores(theta.as_slice());
        let control_scores = view.controls.scores(theta.as_slice());
        let auc = empirical_auc(&case_scores, &control_scores)?;
        centers.push(CenterPerformance {
            label: view.label.clone(),
            auc,
            weight: *w,
            cases: view.n_cases(),
            controls: view.n_controls(),
        });
    }
    let aucs: Vec<f64> = centers.iter().map(|c| c.auc).collect();
    let aauc: f64 = aucs.iter().zip(&weights).map(|(a, w)| a * w).sum();
    let var = variability(&aucs, &weights, aauc)?;
    let var_ref = match reference {
        Some(r) => Some(variability(&aucs, &weights, r)?),
        None => None,
    };
    Ok(PerformanceReport {
        centers,
        aauc,
        variability: var,
        reference,
        variability_about_reference: var_ref,
    })
}

/// [`adjusted_auc_with_reference`] without an external reference.
pub fn adjusted_auc(theta: &Coefficients, views: &[CenterView]) -> Result<PerformanceReport> {
    adjusted_auc_with_reference(theta, views, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_table, split_centers, TableOptions};
    use alloc::vec;

    #[test]
    fn perfect_separation() {
        assert_eq!(empirical_auc(&[2.0], &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn single_tie_is_zero_under_strict_rule() {
        assert_eq!(empirical_auc(&[1.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(empirical_auc_with(&[1.0], &[1.0], TieRule::HalfCredit).unwrap(), 0.5);
    }

    #[test]
    fn enumerated_four_pairs() {
        // Pairs: (3>2), (3>0), (1<2), (1>0) -> 3 of 4.
        assert_eq!(empirical_auc(&[3.0, 1.0], &[2.0, 0.0]).unwrap(), 0.75);
    }

    #[test]
    fn empty_scores_error() {
        assert_eq!(empirical_auc(&[], &[1.0]).unwrap_err(), Error::EmptyScores);
        assert_eq!(empirical_auc(&[1.0], &[]).unwrap_err(), Error::EmptyScores);
    }

    #[test]
    fn rank_path_matches_pairwise_with_ties() {
        let cases = [1.0, 2.0, 2.0, 3.0, 0.5];
        let controls = [2.0, 2.0, 0.5, 1.5];
        let fast = empirical_auc(&cases, &controls).unwrap();
        let slow = empirical_auc_pairwise(&cases, &controls).unwrap();
        assert_eq!(fast, slow);
    }

    fn view(label: &str, cases: &[&[f64]], controls: &[&[f64]]) -> CenterView {
        let p = cases[0].len();
        let mut cm = crate::matrix::Matrix::with_capacity(cases.len(), p);
        for r in cases {
            cm.push_row(r);
        }
        let mut km = crate::matrix::Matrix::with_capacity(controls.len(), p);
        for r in controls {
            km.push_row(r);
        }
        CenterView { label: label.into(), cases: cm, controls: km }
    }

    #[test]
    fn weights_from_case_counts() {
        let a = view("a", &[&[1.0]], &[&[0.0]]);
        let b = view("b", &[&[1.0], &[2.0], &[3.0]], &[&[0.0]]);
        assert_eq!(center_weights(&[a.clone(), b]), vec![0.25, 0.75]);
        assert_eq!(center_weights(&[a]), vec![1.0]);
        let c = |l: &str| view(l, &[&[1.0], &[1.0]], &[&[0.0]]);
        let w = center_weights(&[c("a"), c("b"), c("c")]);
        for x in w {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn adjusted_auc_single_center_is_center_auc() {
        let v = view("a", &[&[3.0], &[1.0]], &[&[2.0], &[0.0]]);
        let theta = Coefficients::new(vec![1.0]).unwrap();
        let rep = adjusted_auc(&theta, &[v]).unwrap();
        assert_eq!(rep.aauc, 0.75);
        assert_eq!(rep.centers.len(), 1);
        assert_eq!(rep.variability, 0.0);
    }

    #[test]
    fn adjusted_auc_weighted_average() {
        // Center a: 1 case, AUC 0.6 from 5 controls (3 below, 2 above).
        let a = view(
            "a",
            &[&[1.0]],
            &[&[0.0], &[0.5], &[0.9], &[1.5], &[2.0]],
        );
        // Center b: 3 cases with AUC 0.8 against 5 controls -> 12 of 15 pairs.
        let b = view(
            "b",
            &[&[2.0], &[3.0], &[1.2]],
            &[&[0.0], &[0.5], &[1.0], &[1.5], &[2.5]],
        );
        let theta = Coefficients::new(vec![1.0]).unwrap();
        let rep = adjusted_auc(&theta, &[a, b]).unwrap();
        assert!((rep.centers[0].auc - 0.6).abs() < 1e-15);
        assert!((rep.centers[1].auc - 0.8).abs() < 1e-15);
        assert!((rep.aauc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn identical_marker_gives_zero_aauc_under_strict_ties() {
        let text = "center,outcome,x1,x2\na,1,7.0,1.0\na,0,7.0,2.0\nb,1,7.0,3.0\nb,0,7.0,0.0\n";
        let d = parse_table(text, &TableOptions::default()).unwrap();
        let (views, _) = split_centers(&d).unwrap();
        let theta = Coefficients::new(vec![1.0, 0.0]).unwrap();
        let rep = adjusted_auc(&theta, &views).unwrap();
        assert_eq!(rep.aauc, 0.0);
    }

    #[test]
    fn variability_examples() {
        assert_eq!(variability(&[0.7, 0.7], &[0.5, 0.5], 0.7).unwrap(), 0.0);
        let v = variability(&[0.6, 0.8], &[0.5, 0.5], 0.7).unwrap();
        assert!((v - 0.01).abs() < 1e-15);
        // Moving the reference away from the weighted mean only adds
        // (mean - r)^2.
        let at_mean = variability(&[0.6, 0.8], &[0.5, 0.5], 0.7).unwrap();
        let off = variability(&[0.6, 0.8], &[0.5, 0.5], 0.75).unwrap();
        assert!(off > at_mean);
        assert_eq!(
            variability(&[0.5], &[0.5, 0.5], 0.5).unwrap_err(),
            Error::DimensionMismatch { expected: 1, found: 2 }
        );
    }

    #[test]
    fn report_invariants() {
        let a = view("a", &[&[1.0], &[0.2]], &[&[0.0]]);
        let b = view("b", &[&[2.0]], &[&[0.3], &[0.1]]);
        let theta = Coefficients::new(vec![2.0]).unwrap();
        let rep = adjusted_auc_with_reference(&theta, &[a, b], Some(0.9)).unwrap();
        let wsum: f64 = rep.centers.iter().map(|c| c.weight).sum();
        assert!((wsum - 1.0).abs() < 1e-12);
        let recomputed: f64 = rep.centers.iter().map(|c| c.weight * c.auc).sum();
        assert!((recomputed - rep.aauc).abs() < 1e-12);
        assert!(rep.centers.iter().all(|c| (0.0..=1.0).contains(&c.auc)));
        assert!(rep.variability_about_reference.unwrap() >= rep.variability);
        assert_eq!(rep.sd(), num_traits::Float::sqrt(rep.variability));
    }

    #[test]
    fn coefficients_normalize() {
        let c = Coefficients::new(vec![3.0, 4.0]).unwrap();
        assert!((c.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((c.as_slice()[1] - 0.8).abs() < 1e-15);
        assert!(Coefficients::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn dimension_mismatch_detected() {
        let v = view("a", &[&[1.0, 2.0]], &[&[0.0, 0.0]]);
        let theta = Coefficients::new(vec![1.0]).unwrap();
        assert!(matches!(
            adjusted_auc(&theta, &[v]).unwrap_err(),
            Error::DimensionMismatch { expected: 2, found: 1 }
        ));
    }
}
