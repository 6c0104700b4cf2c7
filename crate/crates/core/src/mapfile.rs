// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON file holding a model-wide intervention.
//!
//! ```json
//! {"version":1,"method":"linear","layers":[
//!   {"layer_id":1,"omega":[...],"beta":[...],"lo":[...],"hi":[...]}]}
//! ```
//!
//! `lo`/`hi` are `null` when every map of the layer is ungated; inside an
//! array, `null` stands for an infinite bound. Bias-style baselines add
//! `"lambda_semantics":"bias_multiplier"`. Exact quantile maps store
//! `src_sorted`/`tgt_sorted` per activation instead of `omega`/`beta`.
//! Floats are written with 17 significant digits.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{ExactLayerMaps, LayerMaps};
use crate::probe::ProbeConfig;
use crate::transport::{AffineMap1D, LambdaSemantics, QuantileMap, SupportBounds};

/// How the maps were produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MapMetadata {
    pub causal: bool,
    pub estimation_strength: f64,
    pub support: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_refresh: Option<String>,
    pub seed: u64,
    pub prng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iti_c: Option<ProbeConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapLayers {
    Affine(Vec<LayerMaps>),
    Exact(Vec<ExactLayerMaps>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub method: String,
    pub lambda_semantics: LambdaSemantics,
    pub metadata: Option<MapMetadata>,
    pub layers: MapLayers,
}

#[derive(Serialize, Deserialize)]
struct RawFile {
    version: u32,
    method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_semantics: Option<LambdaSemantics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<MapMetadata>,
    layers: Vec<RawLayer>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawLayer {
    Affine {
        layer_id: usize,
        omega: Vec<f64>,
        beta: Vec<f64>,
        #[serde(default)]
        lo: Option<Vec<Option<f64>>>,
        #[serde(default)]
        hi: Option<Vec<Option<f64>>>,
    },
    Exact {
        layer_id: usize,
        src_sorted: Vec<Vec<f64>>,
        tgt_sorted: Vec<Vec<f64>>,
    },
}

struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

fn bound_vec(
    maps: &[AffineMap1D],
    pick: impl Fn(&SupportBounds) -> f64,
) -> Option<Vec<Option<f64>>> {
    if maps.iter().all(|m| m.support().is_unbounded()) {
        return None;
    }
    Some(
        maps.iter()
            .map(|m| {
                let v = pick(&m.support());
                v.is_finite().then_some(v)
            })
            .collect(),
    )
}

impl MapFile {
    pub fn affine(layers: Vec<LayerMaps>, metadata: Option<MapMetadata>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("map file needs at least one layer".into()))?;
        let (method, semantics) = (first.method.clone(), first.lambda_semantics);
        if layers
            .iter()
            .any(|l| l.method != method || l.lambda_semantics != semantics)
        {
            return Err(Error::Config(
                "all layers of a map file must share one method".into(),
            ));
        }
        Ok(Self {
            method,
            lambda_semantics: semantics,
            metadata,
            layers: MapLayers::Affine(layers),
        })
    }

    pub fn exact(layers: Vec<ExactLayerMaps>, metadata: Option<MapMetadata>) -> Self {
        Self {
            method: "exact_oracle".into(),
            lambda_semantics: LambdaSemantics::Interpolation,
            metadata,
            layers: MapLayers::Exact(layers),
        }
    }

    pub fn layer_ids(&self) -> Vec<usize> {
        match &self.layers {
            MapLayers::Affine(l) => l.iter().map(|m| m.layer_id).collect(),
            MapLayers::Exact(l) => l.iter().map(|m| m.layer_id).collect(),
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        let layers = match &self.layers {
            MapLayers::Affine(layers) => layers
                .iter()
                .map(|l| RawLayer::Affine {
                    layer_id: l.layer_id,
                    omega: l.maps.iter().map(AffineMap1D::omega).collect(),
                    beta: l.maps.iter().map(AffineMap1D::beta).collect(),
                    lo: bound_vec(&l.maps, SupportBounds::lo),
                    hi: bound_vec(&l.maps, SupportBounds::hi),
                })
                .collect(),
            MapLayers::Exact(layers) => layers
                .iter()
                .map(|l| RawLayer::Exact {
                    layer_id: l.layer_id,
                    src_sorted: l.maps.iter().map(|m| m.src_sorted().to_vec()).collect(),
                    tgt_sorted: l.maps.iter().map(|m| m.tgt_sorted().to_vec()).collect(),
                })
                .collect(),
        };
        let raw = RawFile {
            version: 1,
            method: self.method.clone(),
            lambda_semantics: (self.lambda_semantics == LambdaSemantics::BiasMultiplier)
                .then_some(self.lambda_semantics),
            metadata: self.metadata.clone(),
            layers,
        };
        let mut ser = serde_json::Serializer::with_formatter(w, FullPrecision);
        raw.serialize(&mut ser)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let raw: RawFile = serde_json::from_reader(r)?;
        if raw.version != 1 {
            return Err(Error::Config(format!(
                "unsupported map file version {}",
                raw.version
            )));
        }
        let semantics = raw.lambda_semantics.unwrap_or_default();
        if raw.layers.is_empty() {
            return Err(Error::Config("map file has no layers".into()));
        }
        let exact = matches!(raw.layers[0], RawLayer::Exact { .. });
        let mut affine = Vec::new();
        let mut quantile = Vec::new();
        for layer in raw.layers {
            match layer {
                RawLayer::Affine {
                    layer_id,
                    omega,
                    beta,
                    lo,
                    hi,
                } if !exact => {
                    let m = omega.len();
                    let bad = |what: &str| {
                        Error::Config(format!(
                            "layer {layer_id}: {what} length differs from omega"
                        ))
                    };
                    if beta.len() != m {
                        return Err(bad("beta"));
                    }
                    let lo = lo.unwrap_or_else(|| vec![None; m]);
                    let hi = hi.unwrap_or_else(|| vec![None; m]);
                    if lo.len() != m {
                        return Err(bad("lo"));
                    }
                    if hi.len() != m {
                        return Err(bad("hi"));
                    }
                    let maps = (0..m)
                        .map(|i| {
                            let support = SupportBounds::new(
                                lo[i].unwrap_or(f64::NEG_INFINITY),
                                hi[i].unwrap_or(f64::INFINITY),
                            )?;
                            AffineMap1D::new(omega[i], beta[i], support)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    affine.push(LayerMaps::new(
                        layer_id,
                        maps,
                        raw.method.clone(),
                        semantics,
                    ));
                }
                RawLayer::Exact {
                    layer_id,
                    src_sorted,
                    tgt_sorted,
                } if exact => {
                    if src_sorted.len() != tgt_sorted.len() {
                        return Err(Error::Config(format!(
                            "layer {layer_id}: knot arrays differ in count"
                        )));
                    }
                    let maps = src_sorted
                        .into_iter()
                        .zip(tgt_sorted)
                        .map(|(s, t)| QuantileMap::from_sorted(s, t))
                        .collect::<Result<Vec<_>>>()?;
                    quantile.push(ExactLayerMaps { layer_id, maps });
                }
                _ => {
                    return Err(Error::Config(
                        "map file mixes affine and exact layers".into(),
                    ))
                }
            }
        }
        Ok(Self {
            method: raw.method,
            lambda_semantics: semantics,
            metadata: raw.metadata,
            layers: if exact {
                MapLayers::Exact(quantile)
            } else {
                MapLayers::Affine(affine)
            },
        })
    }
}
