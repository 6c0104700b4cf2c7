// SPDX-License-Identifier: MIT OR Apache-2.0

//! Earlier steering methods written as per-activation affine maps.
//!
//! | method    | slope ω        | intercept β                | gate                 |
//! |-----------|----------------|----------------------------|----------------------|
//! | ActAdd    | 1              | `a⁺ − a⁻`                  | none                 |
//! | CAA/ITI-m | 1              | `m_b − m_a`                | none                 |
//! | ITI-c     | 1              | classifier direction × σ   | none                 |
//! | AurA      | `1 − Gini`     | 0                          | `AUROC(A, B) > 0.5`  |
//! | Det_zero  | 0              | `m_b`                      | `AP(A, B) > ε`       |
//!
//! The bias-style methods scale β by λ (`ωa + λβ`) instead of interpolating.
//! RePE and EAST are not provided.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activations::ActivationMatrix;
use crate::error::{invalid, Error, Result};
use crate::metrics::{auroc, average_precision};
use crate::probe::{LogisticProbe, ProbeConfig};
use crate::transport::{mean, AffineMap1D, SupportBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Actadd,
    CaaItim,
    ItiC,
    Aura,
    Detzero,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Actadd,
        BaselineKind::CaaItim,
        BaselineKind::ItiC,
        BaselineKind::Aura,
        BaselineKind::Detzero,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Actadd => "actadd",
            BaselineKind::CaaItim => "caa_itim",
            BaselineKind::ItiC => "iti_c",
            BaselineKind::Aura => "aura",
            BaselineKind::Detzero => "detzero",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "actadd" => Ok(BaselineKind::Actadd),
            "caa" | "caa_itim" | "iti_m" => Ok(BaselineKind::CaaItim),
            "iti_c" => Ok(BaselineKind::ItiC),
            "aura" => Ok(BaselineKind::Aura),
            "detzero" => Ok(BaselineKind::Detzero),
            other => Err(Error::Config(format!("unknown baseline `{other}`"))),
        }
    }
}

/// `β = a⁺ − a⁻` from a single contrast pair.
pub fn actadd_bias(a_plus: &[f64], a_minus: &[f64]) -> Result<Vec<f64>> {
    if a_plus.len() != a_minus.len() {
        return Err(invalid(format!(
            "contrast pair widths differ: {} vs {}",
            a_plus.len(),
            a_minus.len()
        )));
    }
    Ok(a_plus.iter().zip(a_minus).map(|(p, m)| p - m).collect())
}

/// `β_m = mean(B_m) − mean(A_m)`.
pub fn caa_bias(a: &ActivationMatrix, b: &ActivationMatrix) -> Result<Vec<f64>> {
    check_widths(a, b)?;
    Ok((0..a.n_activations())
        .map(|m| mean(&b.column_vec(m)) - mean(&a.column_vec(m)))
        .collect())
}

/// Direction of a logistic classifier separating `b` (label 1) from `a`
/// (label 0), normalized to unit length and scaled by the standard deviation
/// of all samples projected onto it. Oriented so that B projects higher.
pub fn iti_c_bias(
    a: &ActivationMatrix,
    b: &ActivationMatrix,
    config: ProbeConfig,
) -> Result<Vec<f64>> {
    check_widths(a, b)?;
    if a.n_samples() < 4 || b.n_samples() < 4 {
        return Err(invalid("ITI-c needs at least 4 samples per class"));
    }
    let probe = LogisticProbe::fit(b.data().view(), a.data().view(), config)?;
    let w = probe.weights();
    let norm = w.dot(w).sqrt();
    let mut theta = w / norm;

    let gap = (b.column_means() - a.column_means()).dot(&theta);
    if gap < 0.0 {
        theta.mapv_inplace(|v| -v);
    }

    let proj: Vec<f64> = a
        .data()
        .outer_iter()
        .chain(b.data().outer_iter())
        .map(|row| row.dot(&theta))
        .collect();
    let m = mean(&proj);
    let sigma = (proj.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / proj.len() as f64).sqrt();
    Ok(theta.iter().map(|t| t * sigma).collect())
}

/// Dampens activations that separate the concept (A) from the rest (B).
///
/// `Gini = 2·AUROC − 1` clipped to `[0, 1]`; returns `ω = 1 − Gini` when
/// `AUROC > 0.5` and the identity otherwise.
pub fn aura_map(a: &[f64], b: &[f64]) -> Result<AffineMap1D> {
    if a.len() < 2 || b.len() < 2 {
        return Err(invalid("AurA needs at least 2 samples per class"));
    }
    let score = auroc(a, b)?;
    if score > 0.5 {
        let gini = (2.0 * score - 1.0).clamp(0.0, 1.0);
        AffineMap1D::new(1.0 - gini, 0.0, SupportBounds::infinite())
    } else {
        Ok(AffineMap1D::identity())
    }
}

/// Replaces an activation by `m_b` when it detects A with `AP > ε`.
pub fn detzero_map(a: &[f64], b: &[f64], epsilon: f64) -> Result<AffineMap1D> {
    if a.len() < 2 || b.len() < 2 {
        return Err(invalid("Det_zero needs at least 2 samples per class"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    if average_precision(a, b)? > epsilon {
        AffineMap1D::new(0.0, mean(b), SupportBounds::infinite())
    } else {
        Ok(AffineMap1D::identity())
    }
}

/// Unit-slope, ungated maps carrying the given biases.
pub fn bias_maps(betas: &[f64]) -> Result<Vec<AffineMap1D>> {
    betas
        .iter()
        .map(|&b| AffineMap1D::new(1.0, b, SupportBounds::infinite()))
        .collect()
}

fn check_widths(a: &ActivationMatrix, b: &ActivationMatrix) -> Result<()> {
    if a.n_activations() != b.n_activations() {
        return Err(invalid(format!(
            "activation widths differ: {} vs {}",
            a.n_activations(),
            b.n_activations()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{apply, apply_with, estimate_mean, LambdaSemantics, Strength};
    use ndarray::Array2;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_matrix(
        rng: &mut ChaCha8Rng,
        n: usize,
        m: usize,
        shift: &[f64],
    ) -> ActivationMatrix {
        let data = Array2::from_shape_fn((n, m), |(_, j)| {
            let z: f64 = StandardNormal.sample(rng);
            z + shift[j]
        });
        ActivationMatrix::new(data, 0).unwrap()
    }

    #[test]
    fn actadd_examples() {
        assert_eq!(
            actadd_bias(&[1.0, 2.0], &[1.0, 2.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            actadd_bias(&[3.0, 1.0], &[1.0, 1.0]).unwrap(),
            vec![2.0, 0.0]
        );
        assert!(actadd_bias(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn actadd_single_pair_is_biased_relative_to_caa() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = gaussian_matrix(&mut rng, 100, 4, &[0.0; 4]);
        let b = gaussian_matrix(&mut rng, 100, 4, &[1.0; 4]);
        let caa = caa_bias(&a, &b).unwrap();
        let single = actadd_bias(&b.data().row(0).to_vec(), &a.data().row(0).to_vec()).unwrap();
        let diff: f64 = caa.iter().zip(&single).map(|(x, y)| (x - y).abs()).sum();
        assert!(
            diff > 0.1,
            "single pair unexpectedly close to mean difference: {diff}"
        );

        // Exact agreement when the pair is the pair of class means.
        let exact = actadd_bias(&b.column_means().to_vec(), &a.column_means().to_vec()).unwrap();
        for (x, y) in caa.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn caa_examples() {
        let a = ActivationMatrix::from_rows(&[vec![1.0], vec![3.0]], 0).unwrap();
        let b = ActivationMatrix::from_rows(&[vec![5.0], vec![7.0]], 0).unwrap();
        assert_eq!(caa_bias(&a, &a).unwrap(), vec![0.0]);
        assert_eq!(caa_bias(&a, &b).unwrap(), vec![4.0]);
        let wide = ActivationMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], 0).unwrap();
        assert!(caa_bias(&a, &wide).is_err());
    }

    #[test]
    fn caa_matches_mean_shift_per_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = gaussian_matrix(&mut rng, 50, 3, &[0.0, 1.0, -2.0]);
        let b = gaussian_matrix(&mut rng, 50, 3, &[2.0, 0.0, 4.0]);
        let caa = caa_bias(&a, &b).unwrap();
        for (m, beta) in caa.iter().enumerate() {
            let shift = estimate_mean(&a.column_vec(m), &b.column_vec(m)).unwrap();
            assert!((shift.beta() - beta).abs() < 1e-12);
        }
    }

    #[test]
    fn iti_c_recovers_separating_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = gaussian_matrix(&mut rng, 400, 5, &[0.0; 5]);
        let b = gaussian_matrix(&mut rng, 400, 5, &[4.0, 0.0, 0.0, 0.0, 0.0]);
        let beta = iti_c_bias(&a, &b, ProbeConfig::default()).unwrap();
        // For isotropic classes the Fisher direction is the mean difference, e0.
        let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cosine = beta[0] / norm;
        assert!(cosine > 0.99, "cosine to e0 = {cosine}");
    }

    #[test]
    fn iti_c_degenerate_and_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian_matrix(&mut rng, 10, 3, &[0.0; 3]);
        assert!(matches!(
            iti_c_bias(&a, &a, ProbeConfig::default()),
            Err(Error::DegenerateClassifier(_))
        ));
        let tiny = gaussian_matrix(&mut rng, 3, 3, &[0.0; 3]);
        assert!(matches!(
            iti_c_bias(&tiny, &a, ProbeConfig::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    /// Logistic loss of `σ(w x + c)` on a 1-D problem, minimized over a grid.
    fn grid_logistic_sign(a: &[f64], b: &[f64]) -> f64 {
        let loss = |w: f64, c: f64| -> f64 {
            let nll = |x: f64, y: f64| {
                let z = w * x + c;
                let p = 1.0 / (1.0 + (-z).exp());
                -(y * p.max(1e-300).ln() + (1.0 - y) * (1.0 - p).max(1e-300).ln())
            };
            a.iter().map(|&x| nll(x, 0.0)).sum::<f64>()
                + b.iter().map(|&x| nll(x, 1.0)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0);
        for i in -100..=100 {
            for j in -100..=100 {
                let (w, c) = (i as f64 * 0.05, j as f64 * 0.05);
                let l = loss(w, c);
                if l < best.0 {
                    best = (l, w);
                }
            }
        }
        best.1.signum()
    }

    #[test]
    fn iti_c_one_dimensional_sign() {
        for (shift, seed) in [(1.5, 2u64), (-1.5, 4)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = gaussian_matrix(&mut rng, 40, 1, &[0.0]);
            let b = gaussian_matrix(&mut rng, 40, 1, &[shift]);
            let beta = iti_c_bias(&a, &b, ProbeConfig::default()).unwrap();
            let gap = mean(&b.column_vec(0)) - mean(&a.column_vec(0));
            assert_eq!(beta[0].signum(), gap.signum());
            assert_eq!(
                beta[0].signum(),
                grid_logistic_sign(&a.column_vec(0), &b.column_vec(0))
            );
        }
    }

    #[test]
    fn aura_examples() {
        let id = aura_map(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((id.omega(), id.beta()), (1.0, 0.0));
        let full = aura_map(&[2.0, 3.0], &[0.0, 1.0]).unwrap();
        assert_eq!((full.omega(), full.beta()), (0.0, 0.0));
        // AUROC below 0.5: activation fires less on A, left alone.
        let low = aura_map(&[0.0, 1.0], &[2.0, 3.0]).unwrap();
        assert_eq!(low, AffineMap1D::identity());
    }

    #[test]
    fn detzero_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(
            detzero_map(&a, &[0.0, 0.5], 1.0).unwrap(),
            AffineMap1D::identity()
        );

        // Ten points: five positives all ranked above five negatives, AP = 1.
        let pos = [5.0, 6.0, 7.0, 8.0, 9.0];
        let neg = [0.0, 1.0, 2.0, 3.0, 4.0];
        let m = detzero_map(&pos, &neg, 0.9).unwrap();
        assert_eq!((m.omega(), m.beta()), (0.0, 2.0));
        assert_eq!(m.eval(123.0), 2.0);

        // Identical classes: AP equals the prevalence 0.5.
        assert_eq!(
            detzero_map(&neg, &neg, 0.6).unwrap(),
            AffineMap1D::identity()
        );
        assert!(detzero_map(&pos, &neg, 0.0).is_err());
    }

    #[test]
    fn random_ranking_ap_matches_prevalence() {
        // Equal class sizes, so prevalence is 0.5. The expected AP of a random
        // ranking exceeds prevalence by O(log n / n); n = 1000 keeps that small.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut labels: Vec<bool> = (0..1000).map(|i| i < 500).collect();
        let scores: Vec<f64> = (0..labels.len()).map(|i| -(i as f64)).collect();
        let trials = 1000;
        let mut total = 0.0;
        for _ in 0..trials {
            labels.shuffle(&mut rng);
            let pos: Vec<f64> = scores
                .iter()
                .zip(&labels)
                .filter(|p| *p.1)
                .map(|p| *p.0)
                .collect();
            let neg: Vec<f64> = scores
                .iter()
                .zip(&labels)
                .filter(|p| !*p.1)
                .map(|p| *p.0)
                .collect();
            total += average_precision(&pos, &neg).unwrap();
        }
        let avg = total / trials as f64;
        assert!((avg - 0.5).abs() < 0.02, "average AP {avg}");

        // Fully tied scores give exactly the prevalence.
        let ties = [1.0, 2.0, 3.0];
        assert_eq!(average_precision(&ties, &ties).unwrap(), 0.5);
    }

    #[test]
    fn all_baselines_share_the_application_path() {
        let maps = bias_maps(&[2.0, -1.0]).unwrap();
        let lambda = Strength::new(0.5).unwrap();
        for map in &maps {
            let a = 3.0;
            let bias = apply_with(map, a, lambda, LambdaSemantics::BiasMultiplier);
            assert_eq!(bias, a + 0.5 * map.beta());
            // With unit slope the two conventions coincide.
            assert!((apply(map, a, lambda) - bias).abs() < 1e-12);
        }
    }
}
