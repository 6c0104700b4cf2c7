// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation matrices, token pooling, and activation collection.
//!
//! An [`ActivationMatrix`] holds `n` pooled samples of the `M` activations
//! produced by one layer. It is the empirical distribution that every
//! estimator in [`crate::transport`] and [`crate::baselines`] consumes,
//! one column at a time.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ActivationSource;

/// Reduction applied over the token axis before estimation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    #[default]
    Mean,
    Max,
    Last,
}

impl PoolingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolingMode::Mean => "mean",
            PoolingMode::Max => "max",
            PoolingMode::Last => "last",
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PoolingMode::Mean),
            "max" => Ok(PoolingMode::Max),
            "last" => Ok(PoolingMode::Last),
            other => Err(Error::Config(format!("unknown pooling mode `{other}`"))),
        }
    }
}

/// Per-token activations of one layer for a single input: `K` rows × `M` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenActivations {
    data: Array2<f64>,
}

impl TokenActivations {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(invalid("token activations must have at least one row"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("token activations contain non-finite values"));
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_array(rows)?)
    }

    pub fn num_tokens(&self) -> usize {
        self.data.nrows()
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }
}

/// Reduces the token axis to one value per activation.
pub fn pool(tokens: &TokenActivations, mode: PoolingMode) -> Array1<f64> {
    let data = &tokens.data;
    match mode {
        PoolingMode::Mean => {
            let k = data.nrows() as f64;
            data.sum_axis(Axis(0)) / k
        }
        PoolingMode::Max => data.fold_axis(Axis(0), f64::NEG_INFINITY, |acc, &v| acc.max(v)),
        PoolingMode::Last => data.row(data.nrows() - 1).to_owned(),
    }
}

/// `n` pooled samples × `M` activations captured at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    data: Array2<f64>,
    layer_id: usize,
    pooling: PoolingMode,
}

impl ActivationMatrix {
    /// Builds a matrix, checking `n >= 2` and finiteness.
    pub fn new(data: Array2<f64>, layer_id: usize) -> Result<Self> {
        Self::with_pooling(data, layer_id, PoolingMode::default())
    }

    pub fn with_pooling(data: Array2<f64>, layer_id: usize, pooling: PoolingMode) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(invalid(format!(
                "activation matrix needs at least 2 samples, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(invalid("activation matrix has no columns"));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "non-finite activation at flat index {pos} (layer {layer_id})"
            )));
        }
        Ok(Self {
            data,
            layer_id,
            pooling,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], layer_id: usize) -> Result<Self> {
        Self::new(rows_to_array(rows)?, layer_id)
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_activations(&self) -> usize {
        self.data.ncols()
    }

    pub fn layer_id(&self) -> usize {
        self.layer_id
    }

    pub fn pooling(&self) -> PoolingMode {
        self.pooling
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Samples of activation `m`.
    pub fn column(&self, m: usize) -> ArrayView1<'_, f64> {
        self.data.column(m)
    }

    /// Samples of activation `m` as an owned contiguous vector.
    pub fn column_vec(&self, m: usize) -> Vec<f64> {
        self.data.column(m).to_vec()
    }

    /// Column means `m_a`.
    pub fn column_means(&self) -> Array1<f64> {
        self.data.sum_axis(Axis(0)) / self.n_samples() as f64
    }

    /// Writes the `act v1` text format.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "act v1 n={} m={} layer={} pooling={}",
            self.n_samples(),
            self.n_activations(),
            self.layer_id,
            self.pooling
        )?;
        write_rows(&mut w, &self.data)?;
        Ok(())
    }

    /// Parses the `act v1` text format.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })??;
        let fields = parse_header(&header, "act", &["n", "m", "layer", "pooling"])?;
        let n: usize = parse_field(&fields[0], "n")?;
        let m: usize = parse_field(&fields[1], "m")?;
        let layer: usize = parse_field(&fields[2], "layer")?;
        let pooling: PoolingMode = fields[3].parse().map_err(|e: Error| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        let data = read_rows(lines, n, m)?;
        Self::with_pooling(data, layer, pooling)
    }
}

/// A set of raw model inputs, one row per sample.
///
/// Stored as `inputs v1 n=<n> d=<d>` followed by `n` rows of `d` floats.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSet {
    rows: Vec<Vec<f64>>,
}

impl InputSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("input set is empty"));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("input rows have differing widths"));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("input set contains non-finite values"));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "inputs v1 n={} d={}", self.len(), self.width())?;
        for row in &self.rows {
            write_row(&mut w, row.iter().copied())?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })??;
        let fields = parse_header(&header, "inputs", &["n", "d"])?;
        let n: usize = parse_field(&fields[0], "n")?;
        let d: usize = parse_field(&fields[1], "d")?;
        let data = read_rows(lines, n, d)?;
        Self::new(data.outer_iter().map(|r| r.to_vec()).collect())
    }
}

/// Captures pooled activations of `layer_ids` for every input.
///
/// Each input is a single position (`K = 1`), so pooling returns the row
/// unchanged; use [`collect_token_activations`] for multi-position inputs.
pub fn collect_activations<S: ActivationSource + ?Sized>(
    model: &S,
    inputs: &[Vec<f64>],
    layer_ids: &[usize],
    mode: PoolingMode,
) -> Result<Vec<ActivationMatrix>> {
    let sequences: Vec<Vec<Vec<f64>>> = inputs.iter().map(|x| vec![x.clone()]).collect();
    collect_token_activations(model, &sequences, layer_ids, mode)
}

/// Captures activations for inputs made of several positions, running every
/// position through the model and pooling per layer.
///
/// The returned matrices follow the order of `layer_ids`; row `i` of each
/// corresponds to `inputs[i]` regardless of how the work was scheduled.
pub fn collect_token_activations<S: ActivationSource + ?Sized>(
    model: &S,
    inputs: &[Vec<Vec<f64>>],
    layer_ids: &[usize],
    mode: PoolingMode,
) -> Result<Vec<ActivationMatrix>> {
    if inputs.is_empty() {
        return Err(invalid("no inputs to collect activations from"));
    }
    for &l in layer_ids {
        if l >= model.num_layers() {
            return Err(Error::Config(format!(
                "layer id {l} out of range for a model with {} layers",
                model.num_layers()
            )));
        }
    }

    let pooled: Vec<Vec<Array1<f64>>> = inputs
        .par_iter()
        .map(|positions| -> Result<Vec<Array1<f64>>> {
            if positions.is_empty() {
                return Err(invalid("input sequence has no positions"));
            }
            // traces[k][j] = activations of layer_ids[j] at position k
            let traces = positions
                .iter()
                .map(|x| model.trace(x, layer_ids))
                .collect::<Result<Vec<_>>>()?;
            layer_ids
                .iter()
                .enumerate()
                .map(|(j, _)| {
                    let rows: Vec<Vec<f64>> = traces.iter().map(|t| t[j].clone()).collect();
                    Ok(pool(&TokenActivations::from_rows(&rows)?, mode))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    layer_ids
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let width = model.layer_width(l);
            let mut data = Array2::zeros((inputs.len(), width));
            for (i, sample) in pooled.iter().enumerate() {
                data.row_mut(i).assign(&sample[j]);
            }
            ActivationMatrix::with_pooling(data, l, mode)
        })
        .collect()
}

pub(crate) fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(invalid("rows have differing lengths"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((n, m), flat).map_err(|e| invalid(e.to_string()))
}

fn write_row<W: Write>(w: &mut W, row: impl Iterator<Item = f64>) -> Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v:e}")?;
        first = false;
    }
    w.write_all(b"\n")?;
    Ok(())
}

fn write_rows<W: Write>(w: &mut W, data: &Array2<f64>) -> Result<()> {
    for row in data.outer_iter() {
        write_row(w, row.iter().copied())?;
    }
    Ok(())
}

fn parse_header(header: &str, magic: &str, keys: &[&str]) -> Result<Vec<String>> {
    let bad = |msg: String| Error::Parse { line: 1, msg };
    let mut parts = header.split_whitespace();
    if parts.next() != Some(magic) || parts.next() != Some("v1") {
        return Err(bad(format!("expected `{magic} v1` header, got `{header}`")));
    }
    let mut values = Vec::with_capacity(keys.len());
    for key in keys {
        let part = parts
            .next()
            .ok_or_else(|| bad(format!("missing `{key}=` field")))?;
        let value = part
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| bad(format!("expected `{key}=`, got `{part}`")))?;
        values.push(value.to_string());
    }
    Ok(values)
}

fn parse_field<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("bad value `{value}` for `{key}`"),
    })
}

fn read_rows<I>(lines: I, n: usize, m: usize) -> Result<Array2<f64>>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut data = Array2::zeros((n, m));
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        if count == n {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("more than the declared {n} rows"),
            });
        }
        let mut cols = 0;
        for (j, tok) in line.split_whitespace().enumerate() {
            if j >= m {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("more than the declared {m} columns"),
                });
            }
            data[[count, j]] = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad float `{tok}`"),
            })?;
            cols += 1;
        }
        if cols != m {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {m} columns, got {cols}"),
            });
        }
        count += 1;
    }
    if count != n {
        return Err(Error::Parse {
            line: count + 2,
            msg: format!("expected {n} rows, got {count}"),
        });
    }
    Ok(data)
}
