// SPDX-License-Identifier: MIT OR Apache-2.0

//! Whole-model estimation and application of per-activation maps.
//!
//! Causal estimation fits layers in model order. Before fitting layer `ℓ`
//! both populations are re-run through the model with every map fitted so
//! far applied, so each map sees the activations it will actually receive
//! at inference time. Simultaneous estimation fits every layer from one
//! unintervened pass.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::activations::{collect_activations, ActivationMatrix, PoolingMode};
use crate::baselines::{
    actadd_bias, aura_map, bias_maps, caa_bias, detzero_map, iti_c_bias, BaselineKind,
};
use crate::error::{invalid, Error, Result};
use crate::metrics::{probe_accuracy, wasserstein1, EvalReport, LayerDistance};
use crate::model::{trace_with, ActivationSource, LayeredModel, LinearLayerParams};
use crate::probe::ProbeConfig;
use crate::transport::{
    apply_exact, apply_with, estimate_exact, estimate_gaussian, estimate_linear_with,
    estimate_mean, AffineMap1D, LambdaSemantics, LinearDenominator, QuantileMap, Strength,
    SupportPolicy,
};

/// Every estimator the pipeline can fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Linear,
    Mean,
    Gaussian,
    /// Exact empirical quantile map; an oracle, not a deployable intervention.
    ExactOracle,
    Baseline(BaselineKind),
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::Mean => "mean",
            Method::Gaussian => "gaussian",
            Method::ExactOracle => "exact_oracle",
            Method::Baseline(BaselineKind::CaaItim) => "caa",
            Method::Baseline(kind) => kind.as_str(),
        }
    }

    pub fn lambda_semantics(self) -> LambdaSemantics {
        match self {
            Method::Baseline(_) => LambdaSemantics::BiasMultiplier,
            _ => LambdaSemantics::Interpolation,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Method::Linear),
            "mean" => Ok(Method::Mean),
            "gaussian" => Ok(Method::Gaussian),
            "exact_oracle" => Ok(Method::ExactOracle),
            other => other
                .parse::<BaselineKind>()
                .map(Method::Baseline)
                .map_err(|_| Error::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

/// A set of per-activation transports attached to one layer output.
pub trait Intervention: Sync {
    fn layer_id(&self) -> usize;
    fn width(&self) -> usize;
    /// Transports a layer output in place.
    fn transport(&self, activations: &mut [f64], strength: Strength);
}

/// The affine maps of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMaps {
    pub layer_id: usize,
    pub maps: Vec<AffineMap1D>,
    pub method: String,
    pub lambda_semantics: LambdaSemantics,
}

impl LayerMaps {
    pub fn new(
        layer_id: usize,
        maps: Vec<AffineMap1D>,
        method: impl Into<String>,
        lambda_semantics: LambdaSemantics,
    ) -> Self {
        Self {
            layer_id,
            maps,
            method: method.into(),
            lambda_semantics,
        }
    }

    pub fn identity(layer_id: usize, width: usize) -> Self {
        Self::new(
            layer_id,
            vec![AffineMap1D::identity(); width],
            "identity",
            LambdaSemantics::Interpolation,
        )
    }

    /// Slope and intercept of activation `m` at `strength`, ignoring support.
    pub fn effective(&self, m: usize, strength: Strength) -> (f64, f64) {
        let map = &self.maps[m];
        let lambda = strength.lambda();
        match self.lambda_semantics {
            LambdaSemantics::Interpolation => {
                (lambda * (map.omega() - 1.0) + 1.0, lambda * map.beta())
            }
            LambdaSemantics::BiasMultiplier => (map.omega(), lambda * map.beta()),
        }
    }
}

impl Intervention for LayerMaps {
    fn layer_id(&self) -> usize {
        self.layer_id
    }

    fn width(&self) -> usize {
        self.maps.len()
    }

    fn transport(&self, activations: &mut [f64], strength: Strength) {
        for (a, map) in activations.iter_mut().zip(&self.maps) {
            *a = apply_with(map, *a, strength, self.lambda_semantics);
        }
    }
}

/// Exact quantile maps of one layer, interpolated by λ like the affine maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLayerMaps {
    pub layer_id: usize,
    pub maps: Vec<QuantileMap>,
}

impl Intervention for ExactLayerMaps {
    fn layer_id(&self) -> usize {
        self.layer_id
    }

    fn width(&self) -> usize {
        self.maps.len()
    }

    fn transport(&self, activations: &mut [f64], strength: Strength) {
        let lambda = strength.lambda();
        for (a, map) in activations.iter_mut().zip(&self.maps) {
            *a = (1.0 - lambda) * *a + lambda * apply_exact(map, *a);
        }
    }
}

/// Fits the maps of one layer from source and target activations.
pub trait LayerEstimator: Sync {
    type Maps: Intervention;

    fn name(&self) -> &str;
    fn fit(&self, source: &ActivationMatrix, target: &ActivationMatrix) -> Result<Self::Maps>;
}

/// Settings for the affine estimators and baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    method: Method,
    /// Gate for linear, mean, and Gaussian maps. Baselines carry their own.
    pub support: SupportPolicy,
    pub denominator: LinearDenominator,
    pub detzero_epsilon: f64,
    pub probe: ProbeConfig,
}

impl Estimator {
    pub fn new(method: Method) -> Result<Self> {
        if method == Method::ExactOracle {
            return Err(Error::Config(
                "exact_oracle produces quantile maps; use ExactEstimator".into(),
            ));
        }
        Ok(Self {
            method,
            support: SupportPolicy::Observed,
            denominator: LinearDenominator::Source,
            detzero_epsilon: 0.6,
            probe: ProbeConfig::default(),
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::new(name.parse()?)
    }

    pub fn with_support(mut self, support: SupportPolicy) -> Self {
        self.support = support;
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    fn fit_column(&self, a: &[f64], b: &[f64]) -> Result<AffineMap1D> {
        let map = match self.method {
            Method::Linear => estimate_linear_with(a, b, self.denominator)?,
            Method::Mean => estimate_mean(a, b)?,
            Method::Gaussian => match estimate_gaussian(a, b) {
                Err(Error::DegenerateSource(msg)) => {
                    log::warn!("{msg}; falling back to mean shift");
                    estimate_mean(a, b)?
                }
                other => other?,
            },
            Method::Baseline(BaselineKind::Aura) => return aura_map(a, b),
            Method::Baseline(BaselineKind::Detzero) => {
                return detzero_map(a, b, self.detzero_epsilon)
            }
            Method::ExactOracle | Method::Baseline(_) => unreachable!("handled per layer"),
        };
        Ok(map.with_support(self.support.bounds(a)?))
    }
}

impl LayerEstimator for Estimator {
    type Maps = LayerMaps;

    fn name(&self) -> &str {
        self.method.as_str()
    }

    fn fit(&self, source: &ActivationMatrix, target: &ActivationMatrix) -> Result<LayerMaps> {
        if source.n_activations() != target.n_activations() {
            return Err(invalid("source and target widths differ"));
        }
        let layer_id = source.layer_id();
        let maps = match self.method {
            Method::Baseline(BaselineKind::Actadd) => {
                // One contrast pair: the first sample of each population.
                let plus = target.data().row(0).to_vec();
                let minus = source.data().row(0).to_vec();
                bias_maps(&actadd_bias(&plus, &minus)?)?
            }
            Method::Baseline(BaselineKind::CaaItim) => bias_maps(&caa_bias(source, target)?)?,
            Method::Baseline(BaselineKind::ItiC) => {
                bias_maps(&iti_c_bias(source, target, self.probe)?)?
            }
            _ => (0..source.n_activations())
                .into_par_iter()
                .map(|m| self.fit_column(&source.column_vec(m), &target.column_vec(m)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(LayerMaps::new(
            layer_id,
            maps,
            self.method.as_str(),
            self.method.lambda_semantics(),
        ))
    }
}

/// Fits exact quantile maps.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactEstimator;

impl LayerEstimator for ExactEstimator {
    type Maps = ExactLayerMaps;

    fn name(&self) -> &str {
        "exact_oracle"
    }

    fn fit(&self, source: &ActivationMatrix, target: &ActivationMatrix) -> Result<ExactLayerMaps> {
        if source.n_activations() != target.n_activations() {
            return Err(invalid("source and target widths differ"));
        }
        let maps = (0..source.n_activations())
            .into_par_iter()
            .map(|m| estimate_exact(&source.column_vec(m), &target.column_vec(m)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExactLayerMaps {
            layer_id: source.layer_id(),
            maps,
        })
    }
}

/// A base model with maps hooked onto some layer outputs.
pub struct IntervenedModel<'a, I: Intervention> {
    base: &'a LayeredModel,
    slots: Vec<Option<&'a I>>,
    strength: Strength,
}

impl<I: Intervention> fmt::Debug for IntervenedModel<'_, I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hooked: Vec<usize> = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(l, s)| s.map(|_| l))
            .collect();
        f.debug_struct("IntervenedModel")
            .field("hooked_layers", &hooked)
            .field("strength", &self.strength)
            .finish()
    }
}

impl<'a, I: Intervention> IntervenedModel<'a, I> {
    pub fn strength(&self) -> Strength {
        self.strength
    }

    pub fn base(&self) -> &LayeredModel {
        self.base
    }

    fn hook(&self, layer: usize, act: &mut [f64]) {
        if let Some(maps) = self.slots[layer] {
            maps.transport(act, self.strength);
        }
    }
}

impl<I: Intervention> ActivationSource for IntervenedModel<'_, I> {
    fn input_width(&self) -> usize {
        self.base.input_width()
    }

    fn num_layers(&self) -> usize {
        self.base.num_layers()
    }

    fn layer_width(&self, layer_id: usize) -> usize {
        self.base.layer_width(layer_id)
    }

    fn trace(&self, x: &[f64], layer_ids: &[usize]) -> Result<Vec<Vec<f64>>> {
        trace_with(self.base, x, layer_ids, |l, act| self.hook(l, act))
    }
}

/// Wraps `model` so its forward pass transports each hooked layer output
/// before the next layer reads it. The base model is not modified.
pub fn apply_to_model<'a, I: Intervention>(
    model: &'a LayeredModel,
    maps: &'a [I],
    strength: Strength,
) -> Result<IntervenedModel<'a, I>> {
    let mut slots = vec![None; model.num_layers()];
    for m in maps {
        let l = m.layer_id();
        if l >= model.num_layers() {
            return Err(Error::Config(format!(
                "maps target layer {l} but the model has {} layers",
                model.num_layers()
            )));
        }
        if m.width() != model.layer_width(l) {
            return Err(Error::Config(format!(
                "layer {l} has width {} but its maps cover {} activations",
                model.layer_width(l),
                m.width()
            )));
        }
        if slots[l].is_some() {
            return Err(Error::Config(format!("two map sets target layer {l}")));
        }
        slots[l] = Some(m);
    }
    Ok(IntervenedModel {
        base: model,
        slots,
        strength,
    })
}

/// Where causal estimation takes its target observations from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetRefresh {
    /// Targets flow through the maps fitted so far, like the sources.
    Intervened,
    /// Targets always come from the unintervened model.
    #[default]
    Base,
}

impl TargetRefresh {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetRefresh::Intervened => "intervened",
            TargetRefresh::Base => "base",
        }
    }
}

impl fmt::Display for TargetRefresh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetRefresh {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intervened" => Ok(TargetRefresh::Intervened),
            "base" => Ok(TargetRefresh::Base),
            other => Err(Error::Config(format!("unknown target refresh `{other}`"))),
        }
    }
}

/// Maps plus the observations each layer was fitted on.
#[derive(Debug, Clone)]
pub struct CausalFit<M> {
    pub maps: Vec<M>,
    pub sources: Vec<ActivationMatrix>,
    pub targets: Vec<ActivationMatrix>,
}

fn check_request(
    model: &LayeredModel,
    src: &[Vec<f64>],
    tgt: &[Vec<f64>],
    layer_ids: &[usize],
) -> Result<()> {
    if src.len() != tgt.len() {
        return Err(invalid(format!(
            "source and target sample counts differ: {} vs {}",
            src.len(),
            tgt.len()
        )));
    }
    if layer_ids.is_empty() {
        return Err(Error::Config("no layers requested".into()));
    }
    if !layer_ids.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config("layer ids must be strictly ascending".into()));
    }
    if let Some(&l) = layer_ids.iter().find(|&&l| l >= model.num_layers()) {
        return Err(Error::Config(format!(
            "layer id {l} out of range for a model with {} layers",
            model.num_layers()
        )));
    }
    Ok(())
}

/// Layer-by-layer estimation where each layer is fitted on activations
/// produced with all earlier maps applied at `strength`.
pub fn estimate_causal<E: LayerEstimator>(
    model: &LayeredModel,
    src: &[Vec<f64>],
    tgt: &[Vec<f64>],
    layer_ids: &[usize],
    estimator: &E,
    strength: Strength,
) -> Result<Vec<E::Maps>> {
    Ok(estimate_causal_with(
        model,
        src,
        tgt,
        layer_ids,
        estimator,
        strength,
        TargetRefresh::default(),
    )?
    .maps)
}

/// [`estimate_causal`] with a choice of target refresh, also returning the
/// observations used at each layer.
pub fn estimate_causal_with<E: LayerEstimator>(
    model: &LayeredModel,
    src: &[Vec<f64>],
    tgt: &[Vec<f64>],
    layer_ids: &[usize],
    estimator: &E,
    strength: Strength,
    refresh: TargetRefresh,
) -> Result<CausalFit<E::Maps>> {
    check_request(model, src, tgt, layer_ids)?;
    let mut fit = CausalFit {
        maps: Vec::with_capacity(layer_ids.len()),
        sources: Vec::with_capacity(layer_ids.len()),
        targets: Vec::with_capacity(layer_ids.len()),
    };
    for &l in layer_ids {
        let (source, target) = {
            let view = apply_to_model(model, &fit.maps, strength)?;
            let source = collect_activations(&view, src, &[l], PoolingMode::Mean)?.remove(0);
            let target = match refresh {
                TargetRefresh::Intervened => {
                    collect_activations(&view, tgt, &[l], PoolingMode::Mean)?
                }
                TargetRefresh::Base => collect_activations(model, tgt, &[l], PoolingMode::Mean)?,
            }
            .remove(0);
            (source, target)
        };
        let maps = estimator.fit(&source, &target)?;
        log::debug!("fitted {} maps at layer {l}", estimator.name());
        fit.maps.push(maps);
        fit.sources.push(source);
        fit.targets.push(target);
    }
    Ok(fit)
}

/// Fits every layer independently from a single unintervened pass.
pub fn estimate_simultaneous<E: LayerEstimator>(
    model: &LayeredModel,
    src: &[Vec<f64>],
    tgt: &[Vec<f64>],
    layer_ids: &[usize],
    estimator: &E,
) -> Result<Vec<E::Maps>> {
    check_request(model, src, tgt, layer_ids)?;
    let sources = collect_activations(model, src, layer_ids, PoolingMode::Mean)?;
    let targets = collect_activations(model, tgt, layer_ids, PoolingMode::Mean)?;
    sources
        .iter()
        .zip(&targets)
        .map(|(s, t)| estimator.fit(s, t))
        .collect()
}

/// Composes interpolated affine maps into the linear layer that feeds them:
/// row `m` of γ is scaled by `ω̃_m = λ(ω_m − 1) + 1` and
/// `δ'_m = ω̃_m δ_m + λβ_m`.
pub fn fold_into_linear(
    layer: &LinearLayerParams,
    maps: &[AffineMap1D],
    strength: Strength,
) -> Result<LinearLayerParams> {
    let lm = LayerMaps::new(0, maps.to_vec(), "folded", LambdaSemantics::Interpolation);
    fold_layer_maps(layer, &lm, strength)
}

/// Like [`fold_into_linear`], honoring the map set's λ convention.
pub fn fold_layer_maps(
    layer: &LinearLayerParams,
    maps: &LayerMaps,
    strength: Strength,
) -> Result<LinearLayerParams> {
    if maps.maps.len() != layer.out_width() {
        return Err(Error::Config(format!(
            "layer has {} outputs but {} maps were given",
            layer.out_width(),
            maps.maps.len()
        )));
    }
    if let Some((index, map)) = maps
        .maps
        .iter()
        .enumerate()
        .find(|(_, m)| !m.support().is_unbounded())
    {
        return Err(Error::FoldUnsupported {
            index,
            lo: map.support().lo(),
            hi: map.support().hi(),
        });
    }
    let mut gamma: Array2<f64> = layer.gamma().clone();
    let mut delta: Array1<f64> = layer.delta().clone();
    for m in 0..maps.maps.len() {
        let (slope, intercept) = maps.effective(m, strength);
        gamma.row_mut(m).mapv_inplace(|w| slope * w);
        delta[m] = slope * delta[m] + intercept;
    }
    LinearLayerParams::new(gamma, delta)
}

/// Bytes needed to store the maps: 2 floats per activation, 4 with support.
pub fn memory_footprint(maps: &[LayerMaps], with_support: bool, bytes_per_float: usize) -> u64 {
    let floats_per_activation: u64 = if with_support { 4 } else { 2 };
    let activations: u64 = maps.iter().map(|l| l.maps.len() as u64).sum();
    floats_per_activation * activations * bytes_per_float as u64
}

/// Scores `maps` at `strength` against the target population.
///
/// Distances compare the (transported) source activations with target
/// activations from the unintervened model, per layer in `layer_ids`. The
/// probe is trained on the first half of each population and tested on the
/// second half, at the last layer of `layer_ids`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate<I: Intervention>(
    model: &LayeredModel,
    maps: &[I],
    src: &[Vec<f64>],
    tgt: &[Vec<f64>],
    layer_ids: &[usize],
    strength: Strength,
    method: &str,
    semantics: LambdaSemantics,
) -> Result<EvalReport> {
    check_request(model, src, tgt, layer_ids)?;
    if src.len() < 8 {
        return Err(invalid(
            "evaluation needs at least 8 samples per population",
        ));
    }
    let view = apply_to_model(model, maps, strength)?;
    let before = collect_activations(model, src, layer_ids, PoolingMode::Mean)?;
    let after = collect_activations(&view, src, layer_ids, PoolingMode::Mean)?;
    let target = collect_activations(model, tgt, layer_ids, PoolingMode::Mean)?;

    let mean_w1 = |x: &ActivationMatrix, y: &ActivationMatrix| -> Result<f64> {
        let total = (0..x.n_activations())
            .map(|m| wasserstein1(&x.column_vec(m), &y.column_vec(m)))
            .sum::<Result<f64>>()?;
        Ok(total / x.n_activations() as f64)
    };
    let layers = layer_ids
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            Ok(LayerDistance {
                layer_id: l,
                w1_before: mean_w1(&before[j], &target[j])?,
                w1_after: mean_w1(&after[j], &target[j])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let last = layer_ids.len() - 1;
    let probe_before = split_probe(&before[last], &target[last])?;
    let probe_after = split_probe(&after[last], &target[last])?;
    Ok(EvalReport {
        method: method.to_string(),
        lambda_semantics: semantics.as_str().to_string(),
        lambda: strength.lambda(),
        layers,
        probe_before,
        probe_after,
    })
}

/// Balanced accuracy of telling `source` from `target` on held-out halves.
/// Indistinguishable training data scores as chance.
pub fn split_probe(source: &ActivationMatrix, target: &ActivationMatrix) -> Result<f64> {
    let half = |m: &ActivationMatrix, first: bool| -> Result<ActivationMatrix> {
        let n = m.n_samples();
        let mid = n / 2;
        let rows = if first { 0..mid } else { mid..n };
        let data = m.data().slice(ndarray::s![rows, ..]).to_owned();
        ActivationMatrix::new(data, m.layer_id())
    };
    match probe_accuracy(
        &half(target, true)?,
        &half(source, true)?,
        &half(target, false)?,
        &half(source, false)?,
    ) {
        Err(Error::DegenerateClassifier(_)) => Ok(0.5),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Layer;
    use crate::transport::SupportBounds;
    use ndarray::array;

    fn identity_model(width: usize) -> LayeredModel {
        let gamma = Array2::eye(width);
        let delta = Array1::zeros(width);
        LayeredModel::new(
            width,
            vec![Layer::Linear(LinearLayerParams::new(gamma, delta).unwrap())],
        )
        .unwrap()
    }

    #[test]
    fn method_names() {
        for name in [
            "linear",
            "mean",
            "gaussian",
            "exact_oracle",
            "actadd",
            "caa",
            "iti_c",
            "aura",
            "detzero",
        ] {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.as_str(), name);
        }
        assert!(matches!("median".parse::<Method>(), Err(Error::Config(_))));
        assert!(Estimator::by_name("exact_oracle").is_err());
        assert_eq!(
            Method::Baseline(BaselineKind::ItiC).lambda_semantics(),
            LambdaSemantics::BiasMultiplier
        );
    }

    #[test]
    fn apply_to_identity_model() {
        let model = identity_model(1);
        let map = AffineMap1D::new(2.0, 2.0, SupportBounds::infinite()).unwrap();
        let maps = vec![LayerMaps::new(
            0,
            vec![map],
            "linear",
            LambdaSemantics::Interpolation,
        )];
        let view = apply_to_model(&model, &maps, Strength::FULL).unwrap();
        assert_eq!(view.forward(&[3.0]).unwrap(), vec![8.0]);
        let off = apply_to_model(&model, &maps, Strength::ZERO).unwrap();
        assert_eq!(off.forward(&[3.0]).unwrap(), model.forward(&[3.0]).unwrap());
    }

    #[test]
    fn apply_rejects_mismatched_maps() {
        let model = identity_model(2);
        let narrow = vec![LayerMaps::identity(0, 1)];
        assert!(matches!(
            apply_to_model(&model, &narrow, Strength::FULL),
            Err(Error::Config(_))
        ));
        let missing = vec![LayerMaps::identity(3, 2)];
        assert!(apply_to_model(&model, &missing, Strength::FULL).is_err());
        let twice = vec![LayerMaps::identity(0, 2), LayerMaps::identity(0, 2)];
        assert!(apply_to_model(&model, &twice, Strength::FULL).is_err());
    }

    #[test]
    fn fold_scalar_example() {
        let layer = LinearLayerParams::new(array![[2.0]], array![1.0]).unwrap();
        let map = AffineMap1D::new(3.0, 0.5, SupportBounds::infinite()).unwrap();
        let folded = fold_into_linear(&layer, &[map], Strength::FULL).unwrap();
        assert_eq!(folded.gamma()[[0, 0]], 6.0);
        assert_eq!(folded.delta()[0], 3.5);
        let same = fold_into_linear(&layer, &[map], Strength::ZERO).unwrap();
        assert_eq!(same, layer);
    }

    #[test]
    fn fold_rejects_gated_maps() {
        let layer = LinearLayerParams::new(array![[2.0]], array![1.0]).unwrap();
        let map = AffineMap1D::new(3.0, 0.5, SupportBounds::new(-1.0, 1.0).unwrap()).unwrap();
        assert!(matches!(
            fold_into_linear(&layer, &[map], Strength::FULL),
            Err(Error::FoldUnsupported { index: 0, .. })
        ));
        assert!(fold_into_linear(&layer, &[], Strength::FULL).is_err());
    }

    #[test]
    fn memory_examples() {
        let maps: Vec<LayerMaps> = (0..52).map(|l| LayerMaps::identity(l, 2304)).collect();
        assert_eq!(memory_footprint(&maps, false, 4), 958_464);
        assert_eq!(memory_footprint(&maps, true, 4), 1_916_928);
        assert_eq!(memory_footprint(&[], true, 4), 0);
    }

    #[test]
    fn request_validation() {
        let model = identity_model(1);
        let x = vec![vec![1.0], vec![2.0]];
        let est = Estimator::new(Method::Linear).unwrap();
        assert!(estimate_simultaneous(&model, &x, &x[..1], &[0], &est).is_err());
        assert!(matches!(
            estimate_simultaneous(&model, &x, &x, &[1], &est),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            estimate_causal(&model, &x, &x, &[], &est, Strength::FULL),
            Err(Error::Config(_))
        ));
    }
}
