// SPDX-License-Identifier: MIT OR Apache-2.0

use std::time::Instant;

use actsteer::metrics::write_reports_csv;
use actsteer::pipeline::{
    estimate_causal_with, estimate_simultaneous, evaluate, memory_footprint, CausalFit,
};
use actsteer::probe::ProbeConfig;
use actsteer::toymodel::{make_model, model_file, sample_populations, PRNG_NAME};
use actsteer::transport::{apply_exact, sorted_pair_cost};
use actsteer::{
    collect_activations, ActivationMatrix, ActivationSource, BaselineKind, Error, Estimator,
    EvalReport, ExactEstimator, ExactLayerMaps, InputSet, Intervention, LayerEstimator,
    LayeredModel, MapFile, MapLayers, MapMetadata, Method, PoolingMode, Strength,
};

use crate::files::{ensure_dir, read_inputs, read_maps, read_model, write_atomic};
use crate::{ApplyArgs, CollectArgs, DemoArgs, EstimateArgs, EvalArgs, ScoreArgs, SweepArgs};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::FoldUnsupported { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn strength(lambda: f64) -> Result<Strength, Failure> {
    Strength::new(lambda).map_err(|e| Failure::Usage(e.to_string()))
}

pub fn collect(args: CollectArgs) -> Outcome {
    let model = read_model(&args.model)?;
    let inputs = read_inputs(&args.src)?;
    let matrices = collect_activations(&model, inputs.rows(), &args.layers, args.pooling)?;
    ensure_dir(&args.out)?;
    for m in &matrices {
        let path = args.out.join(format!("layer{}.act", m.layer_id()));
        write_atomic(&path, |w| m.write_text(w))?;
        println!(
            "{}: {} × {}",
            path.display(),
            m.n_samples(),
            m.n_activations()
        );
    }
    Ok(())
}

/// Fitted maps together with the activations they were fitted on.
fn fit<E: LayerEstimator>(
    args: &EstimateArgs,
    model: &LayeredModel,
    src: &InputSet,
    tgt: &InputSet,
    estimator: &E,
) -> Result<CausalFit<E::Maps>, Failure> {
    if args.causal {
        return Ok(estimate_causal_with(
            model,
            src.rows(),
            tgt.rows(),
            &args.layers,
            estimator,
            strength(args.lambda)?,
            args.target_refresh,
        )?);
    }
    let maps = estimate_simultaneous(model, src.rows(), tgt.rows(), &args.layers, estimator)?;
    Ok(CausalFit {
        maps,
        sources: collect_activations(model, src.rows(), &args.layers, PoolingMode::Mean)?,
        targets: collect_activations(model, tgt.rows(), &args.layers, PoolingMode::Mean)?,
    })
}

/// Mean squared residual between sorted target samples and the mapped
/// sorted source samples, averaged over activations.
fn fit_cost(
    source: &ActivationMatrix,
    target: &ActivationMatrix,
    eval: impl Fn(usize, &[f64], &[f64]) -> f64,
) -> f64 {
    let n = source.n_samples() as f64;
    let m = source.n_activations();
    (0..m)
        .map(|j| eval(j, &source.column_vec(j), &target.column_vec(j)) / n)
        .sum::<f64>()
        / m as f64
}

pub fn estimate(args: EstimateArgs) -> Outcome {
    if !(args.epsilon > 0.0 && args.epsilon <= 1.0) {
        return Err(Failure::Usage(format!(
            "--epsilon must lie in (0, 1], got {}",
            args.epsilon
        )));
    }
    strength(args.lambda)?;
    let model = read_model(&args.model)?;
    let src = read_inputs(&args.src)?;
    let tgt = read_inputs(&args.tgt)?;

    let metadata = MapMetadata {
        causal: args.causal,
        estimation_strength: args.lambda,
        support: args.support.to_string(),
        target_refresh: args.causal.then(|| args.target_refresh.to_string()),
        seed: args.seed,
        prng: PRNG_NAME.to_string(),
        iti_c: (args.method == Method::Baseline(BaselineKind::ItiC)).then(ProbeConfig::default),
    };
    println!(
        "method={} lambda_semantics={} causal={} support={}",
        args.method,
        args.method.lambda_semantics(),
        args.causal,
        args.support
    );

    let start = Instant::now();
    let file = if args.method == Method::ExactOracle {
        let fitted = fit(&args, &model, &src, &tgt, &ExactEstimator)?;
        for (layer, (a, b)) in fitted
            .maps
            .iter()
            .zip(fitted.sources.iter().zip(&fitted.targets))
        {
            let cost = fit_cost(a, b, |j, x, y| {
                let moved: Vec<f64> = x.iter().map(|&v| apply_exact(&layer.maps[j], v)).collect();
                sorted_pair_cost(&moved, y, 1.0, 0.0)
            });
            println!(
                "layer {}: {} maps, fit cost {cost:.6e}",
                layer.layer_id,
                layer.width()
            );
        }
        let floats: usize = fitted.maps.iter().map(quantile_floats).sum();
        println!(
            "quantile tables: {floats} floats ({} bytes at 8 bytes each)",
            floats * 8
        );
        MapFile::exact(fitted.maps, Some(metadata))
    } else {
        let mut estimator = Estimator::new(args.method)?.with_support(args.support);
        estimator.detzero_epsilon = args.epsilon;
        let fitted = fit(&args, &model, &src, &tgt, &estimator)?;
        for (layer, (a, b)) in fitted
            .maps
            .iter()
            .zip(fitted.sources.iter().zip(&fitted.targets))
        {
            let cost = fit_cost(a, b, |j, x, y| {
                let map = &layer.maps[j];
                sorted_pair_cost(x, y, map.omega(), map.beta())
            });
            println!(
                "layer {}: {} maps, fit cost {cost:.6e}",
                layer.layer_id,
                layer.width()
            );
        }
        println!(
            "memory_footprint: {} bytes, {} with support (4-byte floats)",
            memory_footprint(&fitted.maps, false, 4),
            memory_footprint(&fitted.maps, true, 4)
        );
        MapFile::affine(fitted.maps, Some(metadata))?
    };
    println!("fitted in {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
    write_atomic(&args.out, |w| file.write_json(w))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn quantile_floats(layer: &ExactLayerMaps) -> usize {
    layer.maps.iter().map(|m| 2 * m.len()).sum()
}

fn forward_all<I: Intervention>(
    model: &LayeredModel,
    maps: &[I],
    inputs: &InputSet,
    s: Strength,
) -> Result<Vec<Vec<f64>>, Failure> {
    let view = actsteer::apply_to_model(model, maps, s)?;
    inputs
        .rows()
        .iter()
        .map(|x| view.forward(x).map_err(Failure::from))
        .collect()
}

pub fn apply(args: ApplyArgs) -> Outcome {
    let s = strength(args.lambda)?;
    let model = read_model(&args.model)?;
    let maps = read_maps(&args.maps)?;
    let inputs = read_inputs(&args.src)?;
    let outputs = match &maps.layers {
        MapLayers::Affine(layers) => forward_all(&model, layers, &inputs, s)?,
        MapLayers::Exact(layers) => forward_all(&model, layers, &inputs, s)?,
    };
    let matrix = ActivationMatrix::from_rows(&outputs, model.num_layers() - 1)?;
    println!(
        "method={} lambda_semantics={} lambda={}",
        maps.method, maps.lambda_semantics, args.lambda
    );
    write_atomic(&args.out, |w| matrix.write_text(w))?;
    println!(
        "wrote {}: {} × {}",
        args.out.display(),
        matrix.n_samples(),
        matrix.n_activations()
    );
    Ok(())
}

struct Scoring {
    model: LayeredModel,
    maps: MapFile,
    src: InputSet,
    tgt: InputSet,
    layers: Vec<usize>,
}

impl Scoring {
    fn load(args: &ScoreArgs) -> Result<Self, Failure> {
        let model = read_model(&args.model)?;
        let maps = read_maps(&args.maps)?;
        let layers = match &args.layers {
            Some(l) => l.clone(),
            None => {
                let mut l = maps.layer_ids();
                l.push(model.num_layers() - 1);
                l.sort_unstable();
                l.dedup();
                l
            }
        };
        Ok(Self {
            src: read_inputs(&args.src)?,
            tgt: read_inputs(&args.tgt)?,
            model,
            maps,
            layers,
        })
    }

    fn report(&self, lambda: f64) -> Result<EvalReport, Failure> {
        let s = strength(lambda)?;
        let (src, tgt) = (self.src.rows(), self.tgt.rows());
        let (method, semantics) = (self.maps.method.as_str(), self.maps.lambda_semantics);
        Ok(match &self.maps.layers {
            MapLayers::Affine(l) => {
                evaluate(&self.model, l, src, tgt, &self.layers, s, method, semantics)?
            }
            MapLayers::Exact(l) => {
                evaluate(&self.model, l, src, tgt, &self.layers, s, method, semantics)?
            }
        })
    }

    fn header(&self) -> String {
        format!(
            "method={} lambda_semantics={}",
            self.maps.method, self.maps.lambda_semantics
        )
    }
}

pub fn eval(args: EvalArgs) -> Outcome {
    let scoring = Scoring::load(&args.score)?;
    let report = scoring.report(args.lambda)?;
    let Some(out) = &args.out else {
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("{json}");
        return Ok(());
    };
    println!("{} lambda={}", scoring.header(), args.lambda);
    for l in &report.layers {
        println!(
            "layer {}: W1 {:.6} -> {:.6}",
            l.layer_id, l.w1_before, l.w1_after
        );
    }
    println!(
        "probe accuracy {:.4} -> {:.4}",
        report.probe_before, report.probe_after
    );
    write_atomic(out, |w| report.write_json(w))?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Outcome {
    let mut lambdas = args.lambdas.clone();
    for &l in &lambdas {
        strength(l)?;
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let scoring = Scoring::load(&args.score)?;
    println!("{}", scoring.header());
    let reports = lambdas
        .iter()
        .map(|&l| scoring.report(l))
        .collect::<Result<Vec<_>, _>>()?;
    for r in &reports {
        println!(
            "lambda={}: final-layer W1 {:.6}, probe accuracy {:.4}",
            r.lambda,
            r.final_w1_after(),
            r.probe_after
        );
    }
    write_atomic(&args.out, |w| write_reports_csv(&reports, w))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn demo(args: DemoArgs) -> Outcome {
    let mut config = args.config.config();
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    // Built here so a bad config fails before anything is written.
    make_model(&config)?;
    let file = model_file(&config)?;
    let (src, tgt) = sample_populations(&config)?;
    let (src, tgt) = (InputSet::new(src)?, InputSet::new(tgt)?);

    ensure_dir(&args.out)?;
    write_atomic(&args.out.join("model.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &file)?;
        Ok(())
    })?;
    write_atomic(&args.out.join("src.txt"), |w| src.write_text(w))?;
    write_atomic(&args.out.join("tgt.txt"), |w| tgt.write_text(w))?;
    write_atomic(&args.out.join("config.json"), |w| config.write_json(w))?;

    let blocks: Vec<String> = config
        .block_outputs()
        .iter()
        .map(usize::to_string)
        .collect();
    println!(
        "{} (seed {}) written to {}",
        args.config,
        config.seed,
        args.out.display()
    );
    println!("block outputs: {}", blocks.join(","));
    Ok(())
}
