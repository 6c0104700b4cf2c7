// SPDX-License-Identifier: MIT OR Apache-2.0

//! Distribution distances, ranking statistics, and a linear concept probe.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::activations::ActivationMatrix;
use crate::error::{invalid, Result};
use crate::probe::{LogisticProbe, ProbeConfig};
use crate::transport::sorted;

/// Empirical 1-Wasserstein distance between two equal-size samples:
/// the mean absolute gap between order statistics.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!(
            "W1 needs equal sample sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(invalid("W1 of empty samples"));
    }
    let (sa, sb) = (sorted(a), sorted(b));
    Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Probability that a random `pos` sample exceeds a random `neg` sample,
/// ties counting one half.
pub fn auroc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(invalid("AUROC needs both classes"));
    }
    // Rank-sum form: for each positive count negatives below and tied.
    let sn = sorted(neg);
    let mut wins = 0.0;
    for &p in pos {
        let below = sn.partition_point(|&v| v < p);
        let not_above = sn.partition_point(|&v| v <= p);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

/// Average precision of the score as a detector of `pos`, ranking by value
/// descending. Tied scores enter the precision-recall curve together.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() {
        return Err(invalid("average precision needs at least one positive"));
    }
    let mut scored: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    scored.sort_by(|x, y| y.0.total_cmp(&x.0));

    let total_pos = pos.len() as f64;
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < scored.len() {
        let threshold = scored[i].0;
        let mut new_tp = 0;
        while i < scored.len() && scored[i].0 == threshold {
            if scored[i].1 {
                new_tp += 1;
            }
            seen += 1;
            i += 1;
        }
        if new_tp > 0 {
            tp += new_tp;
            let precision = tp as f64 / seen as f64;
            ap += precision * new_tp as f64 / total_pos;
        }
    }
    Ok(ap)
}

/// Balanced test accuracy of a logistic probe trained to tell `train_pos`
/// from `train_neg`.
pub fn probe_accuracy(
    train_pos: &ActivationMatrix,
    train_neg: &ActivationMatrix,
    test_pos: &ActivationMatrix,
    test_neg: &ActivationMatrix,
) -> Result<f64> {
    for m in [train_pos, train_neg, test_pos, test_neg] {
        if m.n_samples() < 4 {
            return Err(invalid("probe splits need at least 4 samples each"));
        }
    }
    let probe = LogisticProbe::fit(
        train_pos.data().view(),
        train_neg.data().view(),
        ProbeConfig::default(),
    )?;
    if test_pos.n_activations() != probe.weights().len()
        || test_neg.n_activations() != probe.weights().len()
    {
        return Err(invalid("test width differs from training width"));
    }
    Ok(probe.balanced_accuracy(test_pos.data().view(), test_neg.data().view()))
}

/// Per-layer source→target distances before and after an intervention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDistance {
    pub layer_id: usize,
    /// Mean over activations of W1(source, target) without intervention.
    pub w1_before: f64,
    /// Same with the transported source.
    pub w1_after: f64,
}

/// Result of evaluating one map set at one strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub lambda_semantics: String,
    pub lambda: f64,
    pub layers: Vec<LayerDistance>,
    /// Probe accuracy telling source from target at the last evaluated layer.
    pub probe_before: f64,
    pub probe_after: f64,
}

impl EvalReport {
    pub fn final_w1_after(&self) -> f64 {
        self.layers.last().map_or(f64::NAN, |l| l.w1_after)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// One CSV row per layer and λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: String,
    pub lambda_semantics: String,
    pub lambda: f64,
    pub layer_id: usize,
    pub w1_before: f64,
    pub w1_after: f64,
    pub probe_before: f64,
    pub probe_after: f64,
}

/// Flattens reports into CSV, in the order given.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in reports {
        for layer in &r.layers {
            out.serialize(EvalRow {
                method: r.method.clone(),
                lambda_semantics: r.lambda_semantics.clone(),
                lambda: r.lambda,
                layer_id: layer.layer_id,
                w1_before: layer.w1_before,
                w1_after: layer.w1_after,
                probe_before: r.probe_before,
                probe_after: r.probe_after,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}
