//! Anomaly detection on a stream of graph snapshots.
//!
//! Consecutive snapshots are scored with DeltaCon and the scores are run
//! through an individuals / moving-range control chart. Only drops below the
//! lower limit are anomalies; unusually high similarity is reported but not
//! flagged.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::deltacon::{signatures, DeltaConOptions, Variant};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Divisor turning the mean moving range of span 2 into a sigma estimate.
pub const MR_D2: f64 = 1.128;

/// `scores[t] = sim(G_t, G_{t+1})`, all snapshots hosted on the union node
/// set with one epsilon for the whole stream.
pub fn similarity_timeline(
    snapshots: &[Graph],
    variant: &Variant,
    opts: &DeltaConOptions,
) -> Result<Vec<f64>> {
    if snapshots.len() < 2 {
        return Err(Error::validation("a timeline needs at least 2 snapshots"));
    }
    let sigs = signatures(snapshots, variant, opts)?;
    sigs.windows(2).map(|w| w[0].similarity(&w[1])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub scores: Vec<f64>,
    pub median: f64,
    pub sigma_hat: f64,
    pub lower_limit: f64,
    pub upper_limit: f64,
    /// Steps scoring strictly below the lower limit.
    pub flagged: Vec<usize>,
    /// Steps strictly above the upper limit; informational only.
    pub above_upper: Vec<usize>,
}

impl AnomalyReport {
    pub fn is_flagged(&self, step: usize) -> bool {
        self.flagged.binary_search(&step).is_ok()
    }

    /// `step,score,lower,upper,flag` with one row per score.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "step,score,lower,upper,flag")?;
        for (t, s) in self.scores.iter().enumerate() {
            writeln!(
                out,
                "{t},{s},{},{},{}",
                self.lower_limit,
                self.upper_limit,
                u8::from(self.is_flagged(t))
            )?;
        }
        Ok(())
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Limits at `median ± 3 sigma_hat`, `sigma_hat = mean(|x_t - x_{t-1}|) / 1.128`.
pub fn control_limits(scores: &[f64]) -> Result<AnomalyReport> {
    if scores.len() < 3 {
        return Err(Error::validation(format!(
            "control limits need at least 3 scores, got {}",
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::validation("scores must be finite"));
    }
    let mr_mean =
        scores.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (scores.len() - 1) as f64;
    let sigma_hat = mr_mean / MR_D2;
    let median = median(scores);
    let lower_limit = median - 3.0 * sigma_hat;
    let upper_limit = median + 3.0 * sigma_hat;
    let select = |pred: &dyn Fn(f64) -> bool| {
        scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| pred(s))
            .map(|(t, _)| t)
            .collect::<Vec<_>>()
    };
    Ok(AnomalyReport {
        scores: scores.to_vec(),
        median,
        sigma_hat,
        lower_limit,
        upper_limit,
        flagged: select(&|s| s < lower_limit),
        above_upper: select(&|s| s > upper_limit),
    })
}

/// Timeline plus control chart in one call.
pub fn detect_anomalies(
    snapshots: &[Graph],
    variant: &Variant,
    opts: &DeltaConOptions,
) -> Result<AnomalyReport> {
    control_limits(&similarity_timeline(snapshots, variant, opts)?)
}
