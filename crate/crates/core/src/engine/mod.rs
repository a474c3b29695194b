//! Tensorized circuits over quad-tree region graphs.
//!
//! Every internal region holds a CP layer: product unit `j` multiplies unit
//! `j` of each child region, and output unit `s` mixes the products with
//! weights `w[s, u, j]`. Probabilities are evaluated through per-region pair
//! matrices
//!
//! ```text
//! Y_R[s, s'] = Σ_u Σ_{j, j'} conj(w[s, u, j]) · w[s', u, j'] · Π_children Y_c[j, j']
//! ```
//!
//! which is the squared Inception circuit without materializing it: the
//! latent `U` of each region is summed outside the square and the product
//! index plays the role of `W`. Leaves hold one categorical table per unit.
//!
//! Each matrix is kept scaled by its own largest entry together with a real
//! log-scale, so values stay finite at any depth. Cheaper paths are used when
//! they compute the same number: a plain monotone pass for [`Mode::Monotone`]
//! and a rank-one amplitude pass for the squared modes at a full assignment.

mod fast;
mod pair;
mod region;
mod symbolic;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::numerics::LogComplex;
use crate::{math, Complex};

pub use pair::PairMatrix;
pub use region::{build_quadtree, Region, RegionGraph};
pub use symbolic::{latent_sizes, to_circuit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("image shape must be positive, got {height}×{width}")]
    Shape { height: usize, width: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("partition function is zero; the model is degenerate")]
    ZeroPartition,
    #[error("sample has {found} values, model expects {expected}")]
    RowLength { expected: usize, found: usize },
    #[error("variable {var} has value {value}, cardinality is {cardinality}")]
    Value { var: usize, value: u32, cardinality: u32 },
    #[error("root value has argument {arg} rad; squared values must be real and non-negative")]
    NotReal { arg: f64 },
    #[error("parameter vector has {found} entries, model expects {expected}")]
    ParamCount { expected: usize, found: usize },
    #[error("empty batch")]
    EmptyBatch,
}

/// Parameterization of a tensorized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Non-negative weights and tables stored as logarithms.
    Monotone,
    /// `|f|²` with real weights and tables.
    SquaredReal,
    /// `|f|²` with complex weights and tables.
    SquaredComplex,
    /// `Σ_u |Σ_w f_aug|²` with `K_U` complex weight slices per layer.
    Inception,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Monotone, Mode::SquaredReal, Mode::SquaredComplex, Mode::Inception];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Monotone => "monotone",
            Mode::SquaredReal => "squared-real",
            Mode::SquaredComplex => "squared-complex",
            Mode::Inception => "inception",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Real numbers stored per weight or table entry.
    pub fn components(self) -> usize {
        match self {
            Mode::Monotone | Mode::SquaredReal => 1,
            Mode::SquaredComplex | Mode::Inception => 2,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluation unit: the input layer of a leaf region or a CP layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unit {
    Leaf { region: usize, var: usize, offset: usize },
    Layer { region: usize, inputs: Vec<usize>, n_out: usize, offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorizedModel {
    pub rg: RegionGraph,
    pub mode: Mode,
    pub n_s: usize,
    /// Weight slices per layer; 1 except in [`Mode::Inception`].
    pub k_u: usize,
    pub cardinality: u32,
    pub seed: u64,
    /// Flat parameters, one block per unit in region order: leaf tables
    /// `[s][value]`, layer weights `[s][u][j]`; complex entries as `(re, im)`.
    pub params: Vec<f64>,
    units: Vec<Unit>,
}

/// Evaluation route for full assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    /// Cheapest exact route for the mode.
    Auto,
    /// Always the pair-matrix recurrence.
    Pair,
}

fn build_units(rg: &RegionGraph, mode: Mode, n_s: usize, k_u: usize, card: u32) -> (Vec<Unit>, usize) {
    let comps = mode.components();
    let mut units = Vec::with_capacity(rg.regions.len() + 1);
    let mut offset = 0;
    let root = rg.root();
    for (idx, region) in rg.regions.iter().enumerate() {
        if region.is_leaf() {
            units.push(Unit::Leaf { region: idx, var: region.vars[0] as usize, offset });
            offset += n_s * card as usize * comps;
        } else {
            let n_out = if idx == root { 1 } else { n_s };
            units.push(Unit::Layer { region: idx, inputs: region.children.clone(), n_out, offset });
            offset += n_out * k_u * n_s * comps;
        }
    }
    if rg.regions[root].is_leaf() {
        units.push(Unit::Layer { region: root, inputs: vec![root], n_out: 1, offset });
        offset += k_u * n_s * comps;
    }
    (units, offset)
}

/// Builds a model with seeded Gaussian parameters.
///
/// Weights have mean 0 and deviation `(N_P·K_U)^{-1/2}` per real component,
/// tables deviation 1; monotone log-parameters are standard normal.
/// Monotone and squared modes require `k_u = 1`.
pub fn init_model(
    rg: &RegionGraph,
    mode: Mode,
    n_s: usize,
    k_u: usize,
    cardinality: u32,
    seed: u64,
) -> Result<TensorizedModel, EngineError> {
    if n_s == 0 {
        return Err(EngineError::Config("N_S must be at least 1".into()));
    }
    if k_u == 0 {
        return Err(EngineError::Config("K_U must be at least 1".into()));
    }
    if mode != Mode::Inception && k_u != 1 {
        return Err(EngineError::Config(alloc::format!("{mode} models have K_U = 1, got {k_u}")));
    }
    if cardinality == 0 {
        return Err(EngineError::Config("cardinality must be at least 1".into()));
    }
    let (units, count) = build_units(rg, mode, n_s, k_u, cardinality);
    let mut model = TensorizedModel {
        rg: rg.clone(),
        mode,
        n_s,
        k_u,
        cardinality,
        seed,
        params: vec![0.0; count],
        units,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight_sd = 1.0 / math::sqrt((n_s * k_u) as f64);
    for u in 0..model.units.len() {
        let (offset, len, sd) = match &model.units[u] {
            Unit::Leaf { offset, .. } => (*offset, n_s * cardinality as usize * mode.components(), 1.0),
            Unit::Layer { offset, n_out, .. } => (*offset, n_out * k_u * n_s * mode.components(), weight_sd),
        };
        let sd = if mode == Mode::Monotone { 1.0 } else { sd };
        for p in &mut model.params[offset..offset + len] {
            let z: f64 = rng.sample(StandardNormal);
            *p = sd * z;
        }
    }
    Ok(model)
}

impl TensorizedModel {
    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn num_vars(&self) -> usize {
        self.rg.num_vars()
    }

    /// Replaces the parameter vector.
    pub fn set_params(&mut self, params: Vec<f64>) -> Result<(), EngineError> {
        if params.len() != self.params.len() {
            return Err(EngineError::ParamCount { expected: self.params.len(), found: params.len() });
        }
        self.params = params;
        Ok(())
    }

    /// Rebuilds a model around stored parameters (for checkpoints).
    pub fn from_parts(
        rg: RegionGraph,
        mode: Mode,
        n_s: usize,
        k_u: usize,
        cardinality: u32,
        seed: u64,
        params: Vec<f64>,
    ) -> Result<Self, EngineError> {
        let mut m = init_model(&rg, mode, n_s, k_u, cardinality, seed)?;
        m.set_params(params)?;
        Ok(m)
    }

    /// Unit owning the stored parameter `idx`.
    pub fn param_unit(&self, idx: usize) -> Option<usize> {
        let starts = |u: &Unit| match u {
            Unit::Leaf { offset, .. } | Unit::Layer { offset, .. } => *offset,
        };
        if idx >= self.params.len() {
            return None;
        }
        Some(self.units.partition_point(|u| starts(u) <= idx) - 1)
    }

    /// Index of the first component of table entry `(s, value)` of a leaf.
    fn leaf_index(&self, offset: usize, s: usize, value: usize) -> usize {
        offset + (s * self.cardinality as usize + value) * self.mode.components()
    }

    /// Index of the first component of weight `(s, u, j)` of a layer.
    fn weight_index(&self, offset: usize, s: usize, u: usize, j: usize) -> usize {
        offset + ((s * self.k_u + u) * self.n_s + j) * self.mode.components()
    }

    /// Circuit amplitude stored at `idx`; monotone entries are `e^{θ/2}`.
    fn amplitude(&self, idx: usize) -> Complex {
        match self.mode {
            Mode::Monotone => Complex::new(math::exp(self.params[idx] / 2.0), 0.0),
            Mode::SquaredReal => Complex::new(self.params[idx], 0.0),
            Mode::SquaredComplex | Mode::Inception => Complex::new(self.params[idx], self.params[idx + 1]),
        }
    }

    /// Adds `g = ∂L/∂Re z + i·∂L/∂Im z` for the amplitude `z` stored at `idx`.
    fn add_grad(&self, grads: &mut [f64], idx: usize, z: Complex, g: Complex) {
        match self.mode {
            Mode::Monotone => grads[idx] += g.re * z.re / 2.0,
            Mode::SquaredReal => grads[idx] += g.re,
            Mode::SquaredComplex | Mode::Inception => {
                grads[idx] += g.re;
                grads[idx + 1] += g.im;
            }
        }
    }

    fn check_row(&self, x: &[u8]) -> Result<(), EngineError> {
        if x.len() != self.num_vars() {
            return Err(EngineError::RowLength { expected: self.num_vars(), found: x.len() });
        }
        if let Some((var, &value)) = x.iter().enumerate().find(|(_, &v)| u32::from(v) >= self.cardinality) {
            return Err(EngineError::Value { var, value: u32::from(value), cardinality: self.cardinality });
        }
        Ok(())
    }
}

/// Root value of the pair recurrence, projected onto the reals after checking
/// that its argument is within `1e-6` rad of zero.
pub fn forward_pair(model: &TensorizedModel, x: Option<&[u8]>) -> Result<LogComplex, EngineError> {
    if let Some(x) = x {
        model.check_row(x)?;
    }
    let trace = pair::forward(model, x);
    pair::root_value(&trace).map(LogComplex::from_ln)
}

/// `Z = Σ_v p̂(v)` in log form.
pub fn partition_function(model: &TensorizedModel) -> Result<LogComplex, EngineError> {
    let z = if model.mode == Mode::Monotone {
        fast::monotone_forward(model, None).root_ln()
    } else {
        pair::root_value(&pair::forward(model, None))?
    };
    if z == f64::NEG_INFINITY || z.is_nan() {
        return Err(EngineError::ZeroPartition);
    }
    Ok(LogComplex::from_ln(z))
}

/// Unnormalized `ln p̂(x)`.
pub fn log_value(model: &TensorizedModel, x: &[u8], path: Path) -> Result<f64, EngineError> {
    model.check_row(x)?;
    match (model.mode, path) {
        (Mode::Monotone, Path::Auto) => Ok(fast::monotone_forward(model, Some(x)).root_ln()),
        (Mode::SquaredReal | Mode::SquaredComplex, Path::Auto) => Ok(fast::amplitude_forward(model, x).root_ln()),
        _ => pair::root_value(&pair::forward(model, Some(x))),
    }
}

/// Per-sample `ln p(x) = ln p̂(x) - ln Z`, with `Z` computed once.
pub fn log_likelihood(model: &TensorizedModel, rows: &[&[u8]]) -> Result<Vec<f64>, EngineError> {
    let ln_z = partition_function(model)?.ln_modulus();
    let values = par::map(rows.len(), |i| log_value(model, rows[i], Path::Auto));
    values.into_iter().map(|v| v.map(|l| l - ln_z)).collect()
}

/// Mean negative log-likelihood of a batch.
pub fn mean_nll(model: &TensorizedModel, rows: &[&[u8]]) -> Result<f64, EngineError> {
    if rows.is_empty() {
        return Err(EngineError::EmptyBatch);
    }
    let ll = log_likelihood(model, rows)?;
    Ok(-ll.iter().sum::<f64>() / rows.len() as f64)
}

fn sample_backward(model: &TensorizedModel, x: &[u8], path: Path, seed: f64, grads: &mut [f64]) -> f64 {
    match (model.mode, path) {
        (Mode::Monotone, Path::Auto) => {
            let t = fast::monotone_forward(model, Some(x));
            fast::monotone_backward(model, Some(x), &t, seed, grads);
            t.root_ln()
        }
        (Mode::SquaredReal | Mode::SquaredComplex, Path::Auto) => {
            let t = fast::amplitude_forward(model, x);
            fast::amplitude_backward(model, x, &t, seed, grads);
            t.root_ln()
        }
        _ => {
            let t = pair::forward(model, Some(x));
            pair::backward(model, Some(x), &t, seed, grads);
            pair::root_value(&t).unwrap_or(f64::NAN)
        }
    }
}

/// Mean NLL of the batch and its gradient with respect to every stored real
/// parameter. Complex entries get `(∂/∂re, ∂/∂im)`.
pub fn nll_and_gradients(model: &TensorizedModel, rows: &[&[u8]], path: Path) -> Result<(f64, Vec<f64>), EngineError> {
    if rows.is_empty() {
        return Err(EngineError::EmptyBatch);
    }
    for x in rows {
        model.check_row(x)?;
    }
    let n = model.num_params();
    let inv = 1.0 / rows.len() as f64;
    let parts = par::chunks(rows.len(), |range| {
        let mut g = vec![0.0; n];
        let mut ln_sum = 0.0;
        for i in range {
            ln_sum += sample_backward(model, rows[i], path, inv, &mut g);
        }
        (ln_sum, g)
    });
    let mut grads = vec![0.0; n];
    let mut ln_sum = 0.0;
    for (l, g) in parts {
        ln_sum += l;
        for (a, b) in grads.iter_mut().zip(&g) {
            *a += b;
        }
    }
    // + ln Z: the same backward pass with the opposite sign.
    let ln_z = if model.mode == Mode::Monotone {
        let t = fast::monotone_forward(model, None);
        fast::monotone_backward(model, None, &t, -1.0, &mut grads);
        t.root_ln()
    } else {
        let t = pair::forward(model, None);
        let z = pair::root_value(&t)?;
        pair::backward(model, None, &t, -1.0, &mut grads);
        z
    };
    if ln_z == f64::NEG_INFINITY || ln_z.is_nan() {
        return Err(EngineError::ZeroPartition);
    }
    Ok((ln_z - ln_sum * inv, grads))
}

/// Gradient of the mean NLL.
pub fn backward_gradients(model: &TensorizedModel, rows: &[&[u8]]) -> Result<Vec<f64>, EngineError> {
    nll_and_gradients(model, rows, Path::Auto).map(|(_, g)| g)
}

/// Worst relative error between analytic gradients and central differences,
/// `|g - fd| / max(|g|, |fd|, 1e-8)`, over every parameter.
pub fn finite_difference_check(model: &TensorizedModel, rows: &[&[u8]], step: f64) -> Result<f64, EngineError> {
    let grads = backward_gradients(model, rows)?;
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (i, g) in grads.iter().enumerate() {
        let x0 = model.params[i];
        probe.params[i] = x0 + step;
        let up = mean_nll(&probe, rows)?;
        probe.params[i] = x0 - step;
        let down = mean_nll(&probe, rows)?;
        probe.params[i] = x0;
        let fd = (up - down) / (2.0 * step);
        let err = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Pair matrices of every unit at `x` (or the marginal when `None`).
pub fn pair_matrices(model: &TensorizedModel, x: Option<&[u8]>) -> Result<Vec<PairMatrix>, EngineError> {
    if let Some(x) = x {
        model.check_row(x)?;
    }
    Ok(pair::forward(model, x).units)
}

/// Batch helpers with a fixed chunking, so reductions are ordered the same
/// way whether or not they run in parallel.
mod par {
    use alloc::vec::Vec;
    use core::ops::Range;

    pub const CHUNK: usize = 16;

    fn ranges(n: usize) -> Vec<Range<usize>> {
        (0..n.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(n)).collect()
    }

    #[cfg(feature = "parallel")]
    pub fn chunks<T: Send, F: Fn(Range<usize>) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
        use rayon::prelude::*;
        ranges(n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn chunks<T, F: Fn(Range<usize>) -> T>(n: usize, f: F) -> Vec<T> {
        ranges(n).into_iter().map(f).collect()
    }

    #[cfg(feature = "parallel")]
    pub fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
        (0..n).map(f).collect()
    }
}
