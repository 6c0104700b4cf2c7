// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded toy networks and two-population datasets.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `ToyConfig::seed`. Weights, source inputs, and target inputs are drawn
//! from independent streams 0, 1, and 2 of that generator, so changing
//! `n_samples` never changes the model.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Layer, LayeredModel, LinearLayerParams, ModelFile};

/// Name recorded in files describing how synthetic data was drawn.
pub const PRNG_NAME: &str = "chacha8";

const WEIGHT_STREAM: u64 = 0;
const SOURCE_STREAM: u64 = 1;
const TARGET_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub seed: u64,
    /// Input width followed by the output width of each block.
    pub widths: Vec<usize>,
    pub nonlinearity: Nonlinearity,
    pub n_samples: usize,
    /// Mean of the target inputs; the source inputs are centered.
    pub concept_shift: Vec<f64>,
    /// Standard deviation of the target inputs; the source has unit scale.
    pub concept_scale: f64,
}

/// Named configurations shipped with the CLI's `demo` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalConfig {
    Identity2Layer,
    Tanh3Layer,
    WideShallow,
}

impl CanonicalConfig {
    pub const ALL: [CanonicalConfig; 3] = [
        CanonicalConfig::Identity2Layer,
        CanonicalConfig::Tanh3Layer,
        CanonicalConfig::WideShallow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CanonicalConfig::Identity2Layer => "identity-2-layer",
            CanonicalConfig::Tanh3Layer => "tanh-3-layer",
            CanonicalConfig::WideShallow => "wide-shallow",
        }
    }

    pub fn config(self) -> ToyConfig {
        match self {
            CanonicalConfig::Identity2Layer => ToyConfig {
                seed: 7,
                widths: vec![4, 4, 4],
                nonlinearity: Nonlinearity::Identity,
                n_samples: 1000,
                concept_shift: axis_shift(4, 2.0),
                concept_scale: 1.5,
            },
            CanonicalConfig::Tanh3Layer => ToyConfig {
                seed: 7,
                widths: vec![8, 8, 8, 8],
                nonlinearity: Nonlinearity::Tanh,
                n_samples: 2000,
                concept_shift: vec![3.0; 8],
                concept_scale: 2.0,
            },
            CanonicalConfig::WideShallow => ToyConfig {
                seed: 7,
                widths: vec![4, 64],
                nonlinearity: Nonlinearity::Tanh,
                n_samples: 1000,
                concept_shift: axis_shift(4, 1.5),
                concept_scale: 1.0,
            },
        }
    }
}

impl fmt::Display for CanonicalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CanonicalConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown demo config `{s}`")))
    }
}

/// `value` in the first coordinate, zero elsewhere.
pub fn axis_shift(width: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; width];
    if let Some(first) = v.first_mut() {
        *first = value;
    }
    v
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::Config(
                "toy config needs an input width and at least one block".into(),
            ));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config("toy widths must be >= 1".into()));
        }
        if self.n_samples < 4 {
            return Err(Error::Config("toy config needs n_samples >= 4".into()));
        }
        if !(self.concept_scale.is_finite() && self.concept_scale > 0.0) {
            return Err(Error::Config("concept_scale must be > 0".into()));
        }
        if self.concept_shift.len() != self.widths[0] {
            return Err(Error::Config(format!(
                "concept_shift has {} entries but the input width is {}",
                self.concept_shift.len(),
                self.widths[0]
            )));
        }
        if self.concept_shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("concept_shift must be finite".into()));
        }
        Ok(())
    }

    /// Layer ids of block outputs: after the nonlinearity when there is one.
    pub fn block_outputs(&self) -> Vec<usize> {
        let blocks = self.widths.len() - 1;
        match self.nonlinearity {
            Nonlinearity::Tanh => (0..blocks).map(|b| 2 * b + 1).collect(),
            Nonlinearity::Identity => (0..blocks).collect(),
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let cfg: ToyConfig = serde_json::from_reader(r)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Builds the network: a linear layer per block, followed by `tanh` when
/// configured. Weights and biases are standard normal scaled by `1/√fan_in`.
pub fn make_model(config: &ToyConfig) -> Result<LayeredModel> {
    config.validate()?;
    let mut rng = stream(config.seed, WEIGHT_STREAM);
    let mut layers = Vec::new();
    for pair in config.widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let scale = 1.0 / (fan_in as f64).sqrt();
        let gamma = Array2::from_shape_simple_fn((fan_out, fan_in), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        let delta = Array1::from_shape_simple_fn(fan_out, || {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        layers.push(Layer::Linear(LinearLayerParams::new(gamma, delta)?));
        if config.nonlinearity == Nonlinearity::Tanh {
            layers.push(Layer::Tanh { width: fan_out });
        }
    }
    LayeredModel::new(config.widths[0], layers)
}

/// Model file tagged with the generator that produced it.
pub fn model_file(config: &ToyConfig) -> Result<ModelFile> {
    let mut file = make_model(config)?.to_file();
    file.prng = Some(format!("{PRNG_NAME}:seed={}", config.seed));
    Ok(file)
}

/// Source inputs `N(0, I)` and target inputs `N(shift, scale² I)`.
#[allow(clippy::type_complexity)]
pub fn sample_populations(config: &ToyConfig) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    config.validate()?;
    let d = config.widths[0];
    let draw = |id: u64, shift: &[f64], scale: f64| -> Vec<Vec<f64>> {
        let mut rng = stream(config.seed, id);
        (0..config.n_samples)
            .map(|_| {
                (0..d)
                    .map(|j| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        shift[j] + scale * z
                    })
                    .collect()
            })
            .collect()
    };
    let zeros = vec![0.0; d];
    Ok((
        draw(SOURCE_STREAM, &zeros, 1.0),
        draw(TARGET_STREAM, &config.concept_shift, config.concept_scale),
    ))
}
