// SPDX-License-Identifier: MIT OR Apache-2.0

//! A minimal layered model with per-layer hook points.
//!
//! Each layer is a function of the previous layer's output. Hook points sit
//! on layer outputs: whatever a hook writes there is what the next layer
//! reads.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameters of an affine layer `γa + δ`. `gamma` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayerParams {
    gamma: Array2<f64>,
    delta: Array1<f64>,
}

impl LinearLayerParams {
    pub fn new(gamma: Array2<f64>, delta: Array1<f64>) -> Result<Self> {
        if gamma.nrows() != delta.len() {
            return Err(invalid(format!(
                "weight matrix has {} rows but bias has {} entries",
                gamma.nrows(),
                delta.len()
            )));
        }
        if gamma.ncols() == 0 || gamma.nrows() == 0 {
            return Err(invalid("linear layer must have non-zero widths"));
        }
        if gamma.iter().chain(delta.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("linear layer has non-finite parameters"));
        }
        Ok(Self { gamma, delta })
    }

    pub fn gamma(&self) -> &Array2<f64> {
        &self.gamma
    }

    pub fn delta(&self) -> &Array1<f64> {
        &self.delta
    }

    pub fn in_width(&self) -> usize {
        self.gamma.ncols()
    }

    pub fn out_width(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.gamma
            .outer_iter()
            .zip(self.delta.iter())
            .map(|(row, d)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + d)
            .collect()
    }
}

/// One layer `f_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Linear(LinearLayerParams),
    Tanh { width: usize },
    LayerNorm { width: usize, eps: f64 },
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Linear(_) => "linear",
            Layer::Tanh { .. } => "tanh",
            Layer::LayerNorm { .. } => "layernorm",
        }
    }

    pub fn in_width(&self) -> usize {
        match self {
            Layer::Linear(p) => p.in_width(),
            Layer::Tanh { width } | Layer::LayerNorm { width, .. } => *width,
        }
    }

    pub fn out_width(&self) -> usize {
        match self {
            Layer::Linear(p) => p.out_width(),
            Layer::Tanh { width } | Layer::LayerNorm { width, .. } => *width,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Layer::Linear(p) => p.forward(x),
            Layer::Tanh { .. } => x.iter().map(|v| v.tanh()).collect(),
            Layer::LayerNorm { eps, .. } => {
                let n = x.len() as f64;
                let mean = x.iter().sum::<f64>() / n;
                let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let inv = 1.0 / (var + eps).sqrt();
                x.iter().map(|v| (v - mean) * inv).collect()
            }
        }
    }
}

/// Anything that can run an input forward and report layer outputs.
pub trait ActivationSource: Sync {
    fn input_width(&self) -> usize;
    fn num_layers(&self) -> usize;
    fn layer_width(&self, layer_id: usize) -> usize;

    /// Outputs of `layer_ids` (in that order) for one input.
    fn trace(&self, x: &[f64], layer_ids: &[usize]) -> Result<Vec<Vec<f64>>>;

    /// Output of the last layer.
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let last = self.num_layers() - 1;
        Ok(self.trace(x, &[last])?.pop().unwrap_or_default())
    }
}

/// Ordered layers with compatible widths.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredModel {
    input_width: usize,
    layers: Vec<Layer>,
}

impl LayeredModel {
    pub fn new(input_width: usize, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        let mut width = input_width;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_width() != width {
                return Err(Error::Config(format!(
                    "layer {i} ({}) expects width {} but receives {width}",
                    layer.kind(),
                    layer.in_width()
                )));
            }
            if let Layer::LayerNorm { eps, .. } = layer {
                if !(eps.is_finite() && *eps > 0.0) {
                    return Err(Error::Config(format!(
                        "layer {i}: layernorm eps must be > 0"
                    )));
                }
            }
            width = layer.out_width();
        }
        Ok(Self {
            input_width,
            layers,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, layer_id: usize) -> Option<&Layer> {
        self.layers.get(layer_id)
    }

    /// Runs `x` through every layer, letting `hook` rewrite each output
    /// before the next layer reads it.
    pub fn forward_hooked<H>(
        &self,
        x: &[f64],
        mut hook: H,
        mut visit: impl FnMut(usize, &[f64]),
    ) -> Result<Vec<f64>>
    where
        H: FnMut(usize, &mut Vec<f64>),
    {
        if x.len() != self.input_width {
            return Err(invalid(format!(
                "input has width {} but model expects {}",
                x.len(),
                self.input_width
            )));
        }
        let mut act = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            act = layer.forward(&act);
            hook(l, &mut act);
            visit(l, &act);
        }
        Ok(act)
    }

    /// FNV-1a over the bit patterns of every parameter and shape.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(&(self.input_width as u64).to_le_bytes());
        for layer in &self.layers {
            feed(layer.kind().as_bytes());
            feed(&(layer.out_width() as u64).to_le_bytes());
            match layer {
                Layer::Linear(p) => {
                    for v in p.gamma.iter().chain(p.delta.iter()) {
                        feed(&v.to_bits().to_le_bytes());
                    }
                }
                Layer::LayerNorm { eps, .. } => feed(&eps.to_bits().to_le_bytes()),
                Layer::Tanh { .. } => {}
            }
        }
        h
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            version: 1,
            input_width: self.input_width,
            prng: None,
            layers: self
                .layers
                .iter()
                .map(|layer| match layer {
                    Layer::Linear(p) => LayerSpec::Linear {
                        in_width: p.in_width(),
                        out_width: p.out_width(),
                        weights: p.gamma.iter().copied().collect(),
                        bias: p.delta.to_vec(),
                    },
                    Layer::Tanh { width } => LayerSpec::Tanh { width: *width },
                    Layer::LayerNorm { width, eps } => LayerSpec::Layernorm {
                        width: *width,
                        eps: *eps,
                    },
                })
                .collect(),
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        if file.version != 1 {
            return Err(Error::Config(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        let layers = file
            .layers
            .iter()
            .map(|spec| -> Result<Layer> {
                Ok(match spec {
                    LayerSpec::Linear {
                        in_width,
                        out_width,
                        weights,
                        bias,
                    } => {
                        let gamma =
                            Array2::from_shape_vec((*out_width, *in_width), weights.clone())
                                .map_err(|_| {
                                    Error::Config(format!(
                                "linear layer declares {out_width}x{in_width} but has {} weights",
                                weights.len()
                            ))
                                })?;
                        Layer::Linear(LinearLayerParams::new(gamma, Array1::from(bias.clone()))?)
                    }
                    LayerSpec::Tanh { width } => Layer::Tanh { width: *width },
                    LayerSpec::Layernorm { width, eps } => Layer::LayerNorm {
                        width: *width,
                        eps: *eps,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.input_width, layers)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_file())?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        Self::from_file(&file)
    }
}

impl ActivationSource for LayeredModel {
    fn input_width(&self) -> usize {
        self.input_width
    }

    fn num_layers(&self) -> usize {
        self.layers.len()
    }

    fn layer_width(&self, layer_id: usize) -> usize {
        self.layers[layer_id].out_width()
    }

    fn trace(&self, x: &[f64], layer_ids: &[usize]) -> Result<Vec<Vec<f64>>> {
        trace_with(self, x, layer_ids, |_, _| {})
    }
}

/// Forward pass with a hook, capturing the post-hook outputs of `layer_ids`.
pub(crate) fn trace_with<H>(
    model: &LayeredModel,
    x: &[f64],
    layer_ids: &[usize],
    hook: H,
) -> Result<Vec<Vec<f64>>>
where
    H: FnMut(usize, &mut Vec<f64>),
{
    if let Some(&bad) = layer_ids.iter().find(|&&l| l >= model.layers.len()) {
        return Err(Error::Config(format!(
            "layer id {bad} out of range for a model with {} layers",
            model.layers.len()
        )));
    }
    let mut out = vec![Vec::new(); layer_ids.len()];
    model.forward_hooked(x, hook, |l, act| {
        for (slot, &want) in out.iter_mut().zip(layer_ids) {
            if want == l {
                *slot = act.to_vec();
            }
        }
    })?;
    Ok(out)
}

/// JSON model description. Weights are row-major `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub input_width: usize,
    /// Generator used to draw the weights, when the model is synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<String>,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Linear {
        #[serde(rename = "in")]
        in_width: usize,
        #[serde(rename = "out")]
        out_width: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Tanh {
        width: usize,
    },
    Layernorm {
        width: usize,
        eps: f64,
    },
}
