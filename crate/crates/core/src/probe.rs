// SPDX-License-Identifier: MIT OR Apache-2.0

//! Binary logistic regression trained by full-batch gradient descent.
//!
//! Shared by the ITI-c baseline (which reads the learned direction) and by
//! the probe metric (which reads its accuracy).

use ndarray::{Array1, ArrayView2, Axis};

use crate::error::{invalid, Error, Result};

/// Fixed optimizer settings. Recorded in map files next to ITI-c maps.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub step: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            step: 0.1,
        }
    }
}

/// A fitted linear classifier `p(y = 1 | x) = σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticProbe {
    weights: Array1<f64>,
    bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticProbe {
    /// Fits `positive` rows as class 1 and `negative` rows as class 0,
    /// starting from zero weights. No regularization.
    pub fn fit(
        positive: ArrayView2<'_, f64>,
        negative: ArrayView2<'_, f64>,
        config: ProbeConfig,
    ) -> Result<Self> {
        let m = positive.ncols();
        if negative.ncols() != m {
            return Err(invalid(format!(
                "class widths differ: {} vs {}",
                m,
                negative.ncols()
            )));
        }
        if positive.nrows() == 0 || negative.nrows() == 0 {
            return Err(invalid("both classes need at least one sample"));
        }
        let x = ndarray::concatenate(Axis(0), &[positive, negative])
            .map_err(|e| invalid(e.to_string()))?;
        let n = x.nrows();
        let labels: Array1<f64> = (0..n)
            .map(|i| if i < positive.nrows() { 1.0 } else { 0.0 })
            .collect();

        let first = x.row(0);
        if x.outer_iter().all(|r| r == first) {
            return Err(Error::DegenerateClassifier(
                "all samples are identical".into(),
            ));
        }

        let mut w = Array1::<f64>::zeros(m);
        let mut b = 0.0;
        let scale = 1.0 / n as f64;
        for _ in 0..config.epochs {
            let z = x.dot(&w) + b;
            let residual: Array1<f64> = z.mapv(sigmoid) - &labels;
            let grad_w = x.t().dot(&residual) * scale;
            let grad_b = residual.sum() * scale;
            w.scaled_add(-config.step, &grad_w);
            b -= config.step * grad_b;
        }
        let probe = Self {
            weights: w,
            bias: b,
        };
        if probe.weights.iter().all(|v| v.abs() < 1e-12) {
            return Err(Error::DegenerateClassifier(
                "no separating direction found (classes indistinguishable)".into(),
            ));
        }
        Ok(probe)
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Class-1 probability for one sample.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let z: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        sigmoid(z)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) >= 0.5
    }

    /// Mean of per-class recalls.
    pub fn balanced_accuracy(
        &self,
        positive: ArrayView2<'_, f64>,
        negative: ArrayView2<'_, f64>,
    ) -> f64 {
        let recall = |rows: ArrayView2<'_, f64>, want: bool| {
            let hits = rows
                .outer_iter()
                .filter(|r| (sigmoid(self.weights.dot(r) + self.bias) >= 0.5) == want)
                .count();
            hits as f64 / rows.nrows() as f64
        };
        0.5 * (recall(positive, true) + recall(negative, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separates_a_simple_1d_problem() {
        let pos = array![[2.0], [3.0], [2.5], [4.0]];
        let neg = array![[-1.0], [0.0], [-2.0], [0.5]];
        let p = LogisticProbe::fit(pos.view(), neg.view(), ProbeConfig::default()).unwrap();
        assert!(p.weights()[0] > 0.0);
        assert_eq!(p.balanced_accuracy(pos.view(), neg.view()), 1.0);
    }

    #[test]
    fn identical_classes_are_degenerate() {
        let a = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [2.0, 2.0]];
        let err = LogisticProbe::fit(a.view(), a.view(), ProbeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateClassifier(_)));
        let same = array![[1.0], [1.0]];
        assert!(matches!(
            LogisticProbe::fit(same.view(), same.view(), ProbeConfig::default()),
            Err(Error::DegenerateClassifier(_))
        ));
    }

    #[test]
    fn width_mismatch() {
        let a = array![[1.0, 2.0]];
        let b = array![[1.0]];
        assert!(LogisticProbe::fit(a.view(), b.view(), ProbeConfig::default()).is_err());
    }
}
