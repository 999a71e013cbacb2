//! Bootstrap correction of resubstitution bias in the apparent aAUC.
//!
//! Each replicate resamples the data, refits the full pipeline, and
//! measures its optimism: apparent performance on the bootstrap data minus
//! performance of the same fit on the original data. The mean optimism
//! estimates the resubstitution bias and is subtracted from the apparent
//! estimate. Replicates draw from per-index random streams, so they can run
//! in parallel without changing any draw.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, DatasetBuilder};
use crate::error::Error;
use crate::pipeline::{evaluate, fit, FitConfig};
use crate::Result;

/// A replicate whose fit fails is redrawn this many times, then skipped.
const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleScheme {
    /// Within each center, resample cases and controls separately with
    /// replacement, preserving every per-center case and control count
    /// (and therefore all weights). Never creates a concordant center.
    #[default]
    StratifiedWithinCenter,
    /// Resample whole centers with replacement, carrying each selected
    /// center's observations intact; duplicated draws become distinct
    /// pseudo-centers. May produce concordant pseudo-centers, which the
    /// replicate fit then drops under the usual rules.
    ByCenter,
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub scheme: ResampleScheme,
    pub seed: u64,
    pub fit: FitConfig,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, scheme: ResampleScheme::default(), seed, fit: FitConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapReport {
    pub apparent: f64,
    /// `apparent - mean(optimism)`, exactly.
    pub corrected: f64,
    pub mean_optimism: f64,
    /// One entry per successful replicate, in replicate order.
    pub optimism: Vec<f64>,
    pub skipped: usize,
}

/// One bootstrap draw of the dataset under the given scheme.
pub fn resample(data: &Dataset, scheme: ResampleScheme, rng: &mut ChaCha8Rng) -> Dataset {
    let names = Some(data.marker_names().to_vec());
    let mut b = DatasetBuilder::new(data.p(), names);
    match scheme {
        ResampleScheme::StratifiedWithinCenter => {
            for (slot, label) in data.centers().iter().enumerate() {
                let (cases, controls) = data.center_case_control_rows(slot);
                for _ in 0..cases.len() {
                    let r = cases[rng.random_range(0..cases.len())];
                    b.push(label, true, data.markers_row(r)).expect("valid row");
                }
                for _ in 0..controls.len() {
                    let r = controls[rng.random_range(0..controls.len())];
                    b.push(label, false, data.markers_row(r)).expect("valid row");
                }
            }
        }
        ResampleScheme::ByCenter => {
            let m = data.centers().len();
            for draw in 0..m {
                let slot = rng.random_range(0..m);
                let label = alloc::format!("{}#{}", data.centers()[slot], draw + 1);
                for &r in data.center_row_indices(slot) {
                    b.push(&label, data.outcome(r), data.markers_row(r)).expect("valid row");
                }
            }
        }
    }
    b.finish().expect("resample of a nonempty dataset")
}

/// Result of one replicate; `optimism` is `None` when every redraw failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub optimism: Option<f64>,
    pub attempts: usize,
}

/// Run replicate `index` (1-based; selects the random stream). Fit failures
/// are redrawn from the same stream up to [`MAX_REDRAWS`] times.
pub fn run_replicate(data: &Dataset, config: &BootstrapConfig, index: usize) -> ReplicateOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    for attempt in 1..=(1 + MAX_REDRAWS) {
        let drawn = resample(data, config.scheme, &mut rng);
        let Ok(report) = fit(&drawn, &config.fit) else { continue };
        let Ok(on_original) = evaluate(&report.theta_original, data, None) else { continue };
        return ReplicateOutcome {
            index,
            optimism: Some(report.apparent.aauc - on_original.aauc),
            attempts: attempt,
        };
    }
    ReplicateOutcome { index, optimism: None, attempts: 1 + MAX_REDRAWS }
}

/// Combine replicate outcomes (in index order) with the apparent estimate.
pub fn assemble_report(
    apparent: f64,
    outcomes: &[ReplicateOutcome],
) -> Result<BootstrapReport> {
    let optimism: Vec<f64> = outcomes.iter().filter_map(|o| o.optimism).collect();
    if optimism.is_empty() {
        return Err(Error::BootstrapFailed(outcomes.len()));
    }
    let skipped = outcomes.len() - optimism.len();
    let mean_optimism = optimism.iter().sum::<f64>() / optimism.len() as f64;
    Ok(BootstrapReport {
        apparent,
        corrected: apparent - mean_optimism,
        mean_optimism,
        optimism,
        skipped,
    })
}

/// Apparent and optimism-corrected adjusted AUC under `config.fit`.
pub fn bootstrap_corrected_aauc(
    data: &Dataset,
    config: &BootstrapConfig,
) -> Result<BootstrapReport> {
    if config.replicates == 0 {
        return Err(Error::InvalidConfig("bootstrap needs at least 1 replicate".into()));
    }
    config.fit.validate()?;
    let base = fit(data, &config.fit)?;
    let outcomes: Vec<ReplicateOutcome> = (1..=config.replicates)
        .map(|b| run_replicate(data, config, b))
        .collect();
    assemble_report(base.apparent.aauc, &outcomes)
}
