// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-activation transport maps for steering the activations of layered
//! models.
//!
//! Each activation of each layer gets a univariate map estimated from two
//! samples: activations on source inputs (`A`) and on target inputs (`B`).
//! The maps are affine, so they can be stored as two floats per activation
//! and folded into a preceding linear layer. Several earlier steering
//! methods are expressed in the same affine form in [`baselines`].
//!
//! ```
//! use actsteer::transport::{apply, estimate_linear, Strength};
//!
//! let a = [0.0, 1.0, 2.0, 3.0];
//! let b = [1.0, 3.0, 5.0, 7.0];
//! let map = estimate_linear(&a, &b).unwrap();
//! assert!((map.omega() - 2.0).abs() < 1e-12);
//! assert!((apply(&map, 1.5, Strength::FULL) - 4.0).abs() < 1e-12);
//! ```
//!
//! Modules:
//! - [`activations`]: activation matrices, token pooling, collection.
//! - [`transport`]: univariate estimators, support, λ-interpolated application.
//! - [`baselines`]: ActAdd, CAA/ITI-m, ITI-c, AurA, Det_zero as affine maps.
//! - [`model`] and [`pipeline`]: layered models, causal and simultaneous
//!   estimation, application, folding, memory accounting.
//! - [`toymodel`]: seeded networks and two-population datasets.
//! - [`metrics`]: W1, AUROC, AP, probe accuracy, evaluation reports.

pub mod activations;
pub mod baselines;
pub mod error;
pub mod mapfile;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod probe;
pub mod toymodel;
pub mod transport;

pub use activations::{
    collect_activations, pool, ActivationMatrix, InputSet, PoolingMode, TokenActivations,
};
pub use baselines::BaselineKind;
pub use error::{Error, Result};
pub use mapfile::{MapFile, MapLayers, MapMetadata};
pub use metrics::EvalReport;
pub use model::{ActivationSource, Layer, LayeredModel, LinearLayerParams};
pub use pipeline::{
    apply_to_model, estimate_causal, estimate_simultaneous, Estimator, ExactEstimator,
    ExactLayerMaps, IntervenedModel, Intervention, LayerEstimator, LayerMaps, Method,
    TargetRefresh,
};
pub use toymodel::{CanonicalConfig, ToyConfig};
pub use transport::{
    AffineMap1D, LambdaSemantics, QuantileMap, Strength, SupportBounds, SupportPolicy,
};
