//! Seeded simulation populations and the replication-study driver.
//!
//! Three data families are generated: a two-marker model with an optional
//! outlier mixture component, a ten-marker model of which only the first
//! two markers are exposed for analysis, and a configurable four-marker
//! model with center-specific variances and coefficients. A study draws a
//! population of centers, samples training centers and observations from
//! it, fits each method on the training data, and evaluates on the held-out
//! centers; replications use derived random streams so parallel execution
//! cannot change any result.

use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{split_centers, standardize, CenterView, Dataset, DatasetBuilder};
use crate::error::Error;
use crate::logistic::{direction_from, fit_logistic};
use crate::math::{expit, fmt17, mean, piecewise_logistic, sample_sd};
use crate::matrix::Matrix;
use crate::pipeline::{fit, FitConfig};
use crate::roc::{adjusted_auc, Coefficients};
use crate::Result;

/// Link from the linear predictor to the success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkKind {
    /// `expit(v)`.
    #[default]
    Logistic,
    /// `expit(v/3)` for `v < 0`, `expit(3v)` otherwise.
    PiecewiseLogistic,
}

impl LinkKind {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            LinkKind::Logistic => expit(v),
            LinkKind::PiecewiseLogistic => piecewise_logistic(v),
        }
    }
}

/// How marker variances vary in the four-marker family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// One scale per marker per center.
    #[default]
    PerMarkerPerCenter,
    /// One shared scale per center.
    PerCenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourMarkerParams {
    pub link: LinkKind,
    pub variance: VarianceMode,
    /// Uniform range for the marker scales.
    pub sigma_range: (f64, f64),
    /// Uniform range for the per-center coefficient magnitudes.
    pub gamma_range: (f64, f64),
    /// Uniform range for the center intercepts.
    pub alpha_range: (f64, f64),
}

impl Default for FourMarkerParams {
    fn default() -> Self {
        Self {
            link: LinkKind::default(),
            variance: VarianceMode::default(),
            sigma_range: (0.5, 1.5),
            gamma_range: (0.5, 1.5),
            alpha_range: (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Correlated bivariate-normal markers contaminated by a wide
    /// independent component with probability `pi`; cubic-interaction
    /// outcome model.
    TwoMarkerOutlier { pi: f64 },
    /// Ten standard-normal markers with center-band means; only the first
    /// two are exposed for analysis.
    TenMarker,
    /// Four independent normal markers with configurable heterogeneity.
    FourMarker(FourMarkerParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub family: Family,
    /// Number of centers in the population (M).
    pub population_centers: usize,
    /// Observations per population center (N_c).
    pub center_size: usize,
    /// Centers sampled into the training data (m).
    pub sampled_centers: usize,
    /// Observations sampled per training center (n_c).
    pub sampled_per_center: usize,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.population_centers == 0 || self.center_size == 0 {
            return Err(Error::InvalidConfig("population dimensions must be positive".into()));
        }
        if self.sampled_centers == 0 || self.sampled_centers > self.population_centers {
            return Err(Error::InvalidConfig(
                "sampled centers must lie in 1..=population centers".into(),
            ));
        }
        if self.sampled_per_center == 0 || self.sampled_per_center > self.center_size {
            return Err(Error::InvalidConfig(
                "sampled observations must lie in 1..=center size".into(),
            ));
        }
        match &self.family {
            Family::TwoMarkerOutlier { pi } => {
                if !(0.0..=1.0).contains(pi) {
                    return Err(Error::InvalidConfig("pi must lie in [0, 1]".into()));
                }
            }
            Family::TenMarker => {}
            Family::FourMarker(p) => {
                for (name, (lo, hi)) in [
                    ("sigma", p.sigma_range),
                    ("gamma", p.gamma_range),
                    ("alpha", p.alpha_range),
                ] {
                    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::InvalidConfig(alloc::format!(
                            "invalid {name} range ({lo}, {hi})"
                        )));
                    }
                }
                if !(p.sigma_range.0 > 0.0) {
                    return Err(Error::InvalidConfig("sigma range must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Marker dimension exposed to the analysis.
    pub fn exposed_markers(&self) -> usize {
        match self.family {
            Family::TwoMarkerOutlier { .. } => 2,
            Family::TenMarker => 2,
            Family::FourMarker(_) => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopCenter {
    pub label: String,
    /// `center_size x dim` marker rows.
    pub markers: Matrix,
    pub outcomes: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub centers: Vec<PopCenter>,
    /// Full generated marker dimension.
    pub dim: usize,
    /// Leading markers visible to the analysis.
    pub exposed: usize,
    /// Two-marker family only: how many observations came from the outlier
    /// component.
    pub outlier_draws: usize,
}

fn uniform_in(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    range.0 + (range.1 - range.0) * rng.random::<f64>()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn gen_two_marker(spec: &PopulationSpec, pi: f64, rng: &mut ChaCha8Rng) -> Population {
    // Cholesky factor of 0.2 * [[1, 0.9], [0.9, 1]].
    let l11 = 0.2f64.sqrt();
    let l21 = 0.18 / l11;
    let l22 = (0.2 - l21 * l21).sqrt();
    let wide = 2.0f64.sqrt();

    let mut centers = Vec::with_capacity(spec.population_centers);
    let mut outlier_draws = 0;
    for c in 0..spec.population_centers {
        let theta0 = -1.0 + 2.0 * rng.random::<f64>();
        let mut markers = Matrix::with_capacity(spec.center_size, 2);
        let mut outcomes = Vec::with_capacity(spec.center_size);
        for _ in 0..spec.center_size {
            let (n1, n2, n3, n4) = (normal(rng), normal(rng), normal(rng), normal(rng));
            let is_outlier = rng.random::<f64>() < pi;
            let (x1, x2) = if is_outlier {
                outlier_draws += 1;
                (wide * n3, wide * n4)
            } else {
                (l11 * n1, l21 * n1 + l22 * n2)
            };
            let d = x1 - x2;
            let v = theta0 + 4.0 * x1 - 3.0 * x2 - d * d * d;
            outcomes.push(rng.random::<f64>() < expit(v));
            markers.push_row(&[x1, x2]);
        }
        centers.push(PopCenter { label: alloc::format!("c{}", c + 1), markers, outcomes });
    }
    Population { centers, dim: 2, exposed: 2, outlier_draws }
}

/// Center-band mean for the ten-marker family: the first fifth of centers
/// at -1, the next three fifths at +1, the rest at 0.
fn ten_marker_mu(center_index: usize, population_centers: usize) -> f64 {
    if center_index * 5 < population_centers {
        -1.0
    } else if center_index * 5 < 4 * population_centers {
        1.0
    } else {
        0.0
    }
}

fn gen_ten_marker(spec: &PopulationSpec, rng: &mut ChaCha8Rng) -> Population {
    let mut centers = Vec::with_capacity(spec.population_centers);
    for c in 0..spec.population_centers {
        let mu = ten_marker_mu(c, spec.population_centers);
        let alpha = uniform_in(rng, (0.2, 0.8));
        let mut markers = Matrix::with_capacity(spec.center_size, 10);
        let mut outcomes = Vec::with_capacity(spec.center_size);
        let mut x = [0.0; 10];
        for _ in 0..spec.center_size {
            for xv in x.iter_mut() {
                *xv = mu + normal(rng);
            }
            let v = alpha + x[0] * x[0] - 2.0 * x[1] + x[2] - 3.0 * x[3] + x[4]
                - 4.0 * x[5]
                + x[6]
                - x[7]
                + x[8]
                - x[9];
            outcomes.push(rng.random::<f64>() < expit(v));
            markers.push_row(&x);
        }
        centers.push(PopCenter { label: alloc::format!("c{}", c + 1), markers, outcomes });
    }
    Population { centers, dim: 10, exposed: 2, outlier_draws: 0 }
}

struct FourMarkerCenter {
    sigmas: [f64; 4],
    gammas: [f64; 4],
    alpha: f64,
}

fn four_marker_center_params(
    params: &FourMarkerParams,
    rng: &mut ChaCha8Rng,
) -> FourMarkerCenter {
    let mut sigmas = [0.0; 4];
    match params.variance {
        VarianceMode::PerMarkerPerCenter => {
            for s in sigmas.iter_mut() {
                *s = uniform_in(rng, params.sigma_range);
            }
        }
        VarianceMode::PerCenter => {
            let shared = uniform_in(rng, params.sigma_range);
            sigmas = [shared; 4];
        }
    }
    let mut gammas = [0.0; 4];
    for g in gammas.iter_mut() {
        *g = uniform_in(rng, params.gamma_range);
    }
    let alpha = uniform_in(rng, params.alpha_range);
    FourMarkerCenter { sigmas, gammas, alpha }
}

fn gen_four_marker(
    spec: &PopulationSpec,
    params: &FourMarkerParams,
    rng: &mut ChaCha8Rng,
) -> Population {
    let mut centers = Vec::with_capacity(spec.population_centers);
    for c in 0..spec.population_centers {
        let cp = four_marker_center_params(params, rng);
        let mut markers = Matrix::with_capacity(spec.center_size, 4);
        let mut outcomes = Vec::with_capacity(spec.center_size);
        let mut x = [0.0; 4];
        for _ in 0..spec.center_size {
            for (xv, s) in x.iter_mut().zip(&cp.sigmas) {
                *xv = s * normal(rng);
            }
            let v = cp.alpha + cp.gammas[0] * x[0] - cp.gammas[1] * x[1]
                + cp.gammas[2] * x[2]
                - cp.gammas[3] * x[3];
            outcomes.push(rng.random::<f64>() < params.link.apply(v));
            markers.push_row(&x);
        }
        centers.push(PopCenter { label: alloc::format!("c{}", c + 1), markers, outcomes });
    }
    Population { centers, dim: 4, exposed: 4, outlier_draws: 0 }
}

/// Generate the full population for `spec`, drawing from `rng`.
pub fn generate_population(spec: &PopulationSpec, rng: &mut ChaCha8Rng) -> Population {
    match &spec.family {
        Family::TwoMarkerOutlier { pi } => gen_two_marker(spec, *pi, rng),
        Family::TenMarker => gen_ten_marker(spec, rng),
        Family::FourMarker(params) => gen_four_marker(spec, params, rng),
    }
}

/// Sample `m` centers without replacement and `n_c` observations within
/// each to form the training data; every observation of the remaining
/// centers becomes test data. Only the exposed markers are emitted.
/// Returns `(train, test views, concordant test centers dropped)`.
pub fn sample_study(
    population: &Population,
    spec: &PopulationSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, Vec<CenterView>, usize)> {
    let m_total = population.centers.len();
    let mut chosen =
        rand::seq::index::sample(rng, m_total, spec.sampled_centers).into_vec();
    chosen.sort_unstable();
    let mut is_train = alloc::vec![false; m_total];
    for &c in &chosen {
        is_train[c] = true;
    }

    let exposed = population.exposed;
    let mut builder = DatasetBuilder::new(exposed, None);
    for &c in &chosen {
        let center = &population.centers[c];
        let mut rows =
            rand::seq::index::sample(rng, center.outcomes.len(), spec.sampled_per_center)
                .into_vec();
        rows.sort_unstable();
        for r in rows {
            builder.push(&center.label, center.outcomes[r], &center.markers.row(r)[..exposed])?;
        }
    }
    let train = builder.finish()?;

    let mut test = Vec::with_capacity(m_total - chosen.len());
    let mut dropped = 0;
    for (c, center) in population.centers.iter().enumerate() {
        if is_train[c] {
            continue;
        }
        let n_cases = center.outcomes.iter().filter(|y| **y).count();
        if n_cases == 0 || n_cases == center.outcomes.len() {
            dropped += 1;
            continue;
        }
        let mut cases = Matrix::with_capacity(n_cases, exposed);
        let mut controls =
            Matrix::with_capacity(center.outcomes.len() - n_cases, exposed);
        for (r, y) in center.outcomes.iter().enumerate() {
            let row = &center.markers.row(r)[..exposed];
            if *y {
                cases.push_row(row);
            } else {
                controls.push_row(row);
            }
        }
        test.push(CenterView { label: center.label.clone(), cases, controls });
    }
    Ok((train, test, dropped))
}

/// The combination-fitting methods compared in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Logistic regression with center-specific intercepts; the fitted
    /// slopes, normalized, are the combination.
    Glm,
    /// The smoothed adjusted-AUC maximizer (full pipeline).
    Saauc,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Glm => "GLM",
            Method::Saauc => "SaAUC",
        }
    }
}

/// Test-data performance of one method in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub test_aauc: f64,
    pub min_center_auc: f64,
    pub max_center_auc: f64,
    /// Smoothed objective `(at start, at fit)`; present for SaAUC only.
    pub objective: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    /// One slot per requested method; `None` records a failed fit.
    pub outcomes: Vec<Option<MethodOutcome>>,
    pub dropped_train_centers: usize,
    pub dropped_test_centers: usize,
}

fn fit_direction(
    method: Method,
    train: &Dataset,
    config: &FitConfig,
) -> Result<(Coefficients, Option<(f64, f64)>)> {
    match method {
        Method::Glm => {
            let (work, scaling) = if config.standardize {
                let (d, r) = standardize(train)?;
                (d, Some(r))
            } else {
                (train.clone(), None)
            };
            let (views, _) = split_centers(&work)?;
            let lf = fit_logistic(&views, &config.logistic)?;
            let (direction, _) = direction_from(&lf);
            let direction = match scaling {
                Some(rec) => {
                    Coefficients::new(rec.coefficients_to_original(direction.as_slice()))?
                }
                None => direction,
            };
            Ok((direction, None))
        }
        Method::Saauc => {
            let report = fit(train, config)?;
            Ok((
                report.theta_original.clone(),
                Some((report.objective_at_start, report.fit.objective)),
            ))
        }
    }
}

/// Run replication `replication` (0-based) of a study: regenerate the
/// population on its own random stream, sample, fit every method, and
/// evaluate on the test centers with their realized case-count weights.
pub fn run_replication(
    spec: &PopulationSpec,
    methods: &[Method],
    config: &FitConfig,
    replication: usize,
) -> ReplicationRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(replication as u64 + 1);
    let population = generate_population(spec, &mut rng);
    let sampled = sample_study(&population, spec, &mut rng);
    let Ok((train, test, dropped_test)) = sampled else {
        return ReplicationRecord {
            replication,
            outcomes: methods.iter().map(|_| None).collect(),
            dropped_train_centers: 0,
            dropped_test_centers: 0,
        };
    };
    let dropped_train = match split_centers(&train) {
        Ok((_, dropped)) => dropped.len(),
        Err(_) => spec.sampled_centers,
    };
    let outcomes = methods
        .iter()
        .map(|method| {
            let (theta, objective) = fit_direction(*method, &train, config).ok()?;
            let perf = adjusted_auc(&theta, &test).ok()?;
            let aucs = perf.center_aucs();
            let min = aucs.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = aucs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Some(MethodOutcome {
                test_aauc: perf.aauc,
                min_center_auc: min,
                max_center_auc: max,
                objective,
            })
        })
        .collect();
    ReplicationRecord {
        replication,
        outcomes,
        dropped_train_centers: dropped_train,
        dropped_test_centers: dropped_test,
    }
}

/// Mean and sd (over replications) of the test aAUC and of the extreme
/// center-specific test AUCs, per method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_aauc: f64,
    pub sd_aauc: f64,
    pub mean_min_auc: f64,
    pub sd_min_auc: f64,
    pub mean_max_auc: f64,
    pub sd_max_auc: f64,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub methods: Vec<Method>,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<ReplicationRecord>,
    pub replications: usize,
    pub dropped_train_total: usize,
}

/// Reduce replication records, excluding failed fits per method.
pub fn summarize(methods: &[Method], records: Vec<ReplicationRecord>) -> StudySummary {
    let replications = records.len();
    let dropped_train_total = records.iter().map(|r| r.dropped_train_centers).sum();
    let summaries = methods
        .iter()
        .enumerate()
        .map(|(k, method)| {
            let ok: Vec<&MethodOutcome> =
                records.iter().filter_map(|r| r.outcomes[k].as_ref()).collect();
            let col = |f: fn(&MethodOutcome) -> f64| -> Vec<f64> {
                ok.iter().map(|o| f(o)).collect()
            };
            let aauc = col(|o| o.test_aauc);
            let mins = col(|o| o.min_center_auc);
            let maxs = col(|o| o.max_center_auc);
            MethodSummary {
                method: *method,
                mean_aauc: mean(&aauc),
                sd_aauc: sample_sd(&aauc),
                mean_min_auc: mean(&mins),
                sd_min_auc: sample_sd(&mins),
                mean_max_auc: mean(&maxs),
                sd_max_auc: sample_sd(&maxs),
                successes: ok.len(),
            }
        })
        .collect();
    StudySummary { methods: methods.to_vec(), summaries, records, replications, dropped_train_total }
}

/// Run a full replication study sequentially.
pub fn run_study(
    spec: &PopulationSpec,
    replications: usize,
    methods: &[Method],
    config: &FitConfig,
) -> Result<StudySummary> {
    if replications == 0 {
        return Err(Error::InvalidConfig("at least 1 replication is required".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("at least one method is required".into()));
    }
    spec.validate()?;
    config.validate()?;
    let records: Vec<ReplicationRecord> = (0..replications)
        .map(|r| run_replication(spec, methods, config, r))
        .collect();
    Ok(summarize(methods, records))
}

/// Delimited summary table: one row per method, mean/sd of the test aAUC
/// and of the minimum and maximum center-specific test AUCs.
pub fn render_study_summary(summary: &StudySummary) -> String {
    let mut out = String::from(
        "method,mean_aauc,sd_aauc,mean_min_auc,sd_min_auc,mean_max_auc,sd_max_auc,successes,replications\n",
    );
    for s in &summary.summaries {
        out.push_str(&alloc::format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.method.name(),
            fmt17(s.mean_aauc),
            fmt17(s.sd_aauc),
            fmt17(s.mean_min_auc),
            fmt17(s.sd_min_auc),
            fmt17(s.mean_max_auc),
            fmt17(s.sd_max_auc),
            s.successes,
            summary.replications,
        ));
    }
    out
}
