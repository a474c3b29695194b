//! Adam on the mean negative log-likelihood with a seeded train/valid split
//! and early stopping on validation NLL.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::Dataset;
use crate::engine::{self, EngineError, Path, TensorizedModel};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub split_fraction: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            batch_size: 256,
            max_epochs: 250,
            patience: 10,
            split_fraction: 0.95,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &'static str| Err(TrainError::Config(what));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad("split_fraction must lie strictly between 0 and 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        // A zero rate is allowed: it freezes the model, which is useful for
        // exercising the stopping logic.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
    #[error("dataset is empty")]
    EmptyData,
    #[error("validation split is empty; {n} rows with fraction {fraction} leave nothing to validate on")]
    EmptyValidation { n: usize, fraction: f64 },
    #[error("non-finite gradient at parameter {index}")]
    NonFinite { index: usize },
    #[error("epoch {epoch}, batch {batch}: non-finite gradient at parameter {index} (unit {unit:?})")]
    NonFiniteGradient { epoch: usize, batch: usize, index: usize, unit: Option<usize> },
    #[error("epoch {epoch}, batch {batch:?}: {source}")]
    Engine { epoch: usize, batch: Option<usize>, source: EngineError },
    #[error("parameter and gradient lengths differ: {params} vs {grads}")]
    Shape { params: usize, grads: usize },
}

/// Seeded shuffle split with `⌈n·fraction⌉` rows in the first part.
pub fn split_train_valid(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(TrainError::Config("split fraction must lie strictly between 0 and 1"));
    }
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (math::ceil(n as f64 * fraction) as usize).min(n);
    Ok((data.select(&order[..n_train]), data.select(&order[n_train..])))
}

/// First and second moments plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam step. The step is rejected before any state
/// changes if a gradient entry is not finite.
pub fn adam_update(params: &mut [f64], grads: &[f64], state: &mut AdamState, config: &TrainConfig) -> Result<(), TrainError> {
    if params.len() != grads.len() || state.m.len() != grads.len() {
        return Err(TrainError::Shape { params: params.len(), grads: grads.len() });
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFinite { index });
    }
    state.t += 1;
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let c1 = 1.0 - libm::pow(b1, state.t as f64);
    let c2 = 1.0 - libm::pow(b2, state.t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (math::sqrt(v_hat) + config.adam_epsilon);
    }
    Ok(())
}

/// Bits per dimension of a mean NLL in nats.
pub fn bits_per_dimension(mean_nll_nats: f64, dims: usize) -> f64 {
    mean_nll_nats / (dims as f64 * math::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    MaxEpochs,
    Patience,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean NLL over the whole training split after the epoch's updates.
    pub train_nll: f64,
    pub valid_nll: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_valid_nll: f64,
    /// Validation NLL of the last epoch run, before the best weights were
    /// restored.
    pub final_valid_nll: f64,
    pub stop: StopReason,
}

/// Time source and progress sink for [`fit`]. The defaults make `()` a
/// silent monitor whose epochs take zero seconds.
pub trait Monitor {
    /// Seconds since an arbitrary origin.
    fn now(&self) -> f64 {
        0.0
    }

    fn on_epoch(&mut self, _record: &EpochRecord) {}
}

impl Monitor for () {}

/// Splits `data` with the configured fraction and seed, then runs [`fit`].
pub fn train_loop(
    model: &TensorizedModel,
    data: &Dataset,
    config: &TrainConfig,
    monitor: &mut dyn Monitor,
) -> Result<(TensorizedModel, TrainReport), TrainError> {
    config.validate()?;
    let (train, valid) = split_train_valid(data, config.split_fraction, config.seed)?;
    if valid.is_empty() {
        return Err(TrainError::EmptyValidation { n: data.len(), fraction: config.split_fraction });
    }
    fit(model, &train, &valid, config, monitor)
}

/// Mini-batch Adam with early stopping; returns the parameters of the epoch
/// with the strictly lowest validation NLL.
pub fn fit(
    model: &TensorizedModel,
    train: &Dataset,
    valid: &Dataset,
    config: &TrainConfig,
    monitor: &mut dyn Monitor,
) -> Result<(TensorizedModel, TrainReport), TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyData);
    }
    if valid.is_empty() {
        return Err(TrainError::EmptyValidation { n: train.len(), fraction: config.split_fraction });
    }
    let train_rows = train.row_refs();
    let valid_rows = valid.row_refs();
    let mut current = model.clone();
    let mut best = model.clone();
    let mut state = AdamState::new(model.num_params());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    let mut epochs = Vec::new();
    let mut best_epoch = 0;
    let mut best_valid = f64::INFINITY;
    let mut since_best = 0;
    let mut stop = StopReason::MaxEpochs;
    let mut batch_rows: Vec<&[u8]> = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.max_epochs {
        let start = monitor.now();
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            batch_rows.clear();
            batch_rows.extend(chunk.iter().map(|&i| train_rows[i]));
            let (_, grads) = engine::nll_and_gradients(&current, &batch_rows, Path::Auto)
                .map_err(|source| TrainError::Engine { epoch, batch: Some(batch), source })?;
            adam_update(&mut current.params, &grads, &mut state, config).map_err(|e| match e {
                TrainError::NonFinite { index } => {
                    TrainError::NonFiniteGradient { epoch, batch, index, unit: current.param_unit(index) }
                }
                other => other,
            })?;
        }
        let eval = |rows: &[&[u8]]| {
            engine::mean_nll(&current, rows).map_err(|source| TrainError::Engine { epoch, batch: None, source })
        };
        let train_nll = eval(&train_rows)?;
        let valid_nll = eval(&valid_rows)?;
        let record = EpochRecord { epoch, train_nll, valid_nll, seconds: monitor.now() - start };
        monitor.on_epoch(&record);
        epochs.push(record);
        if valid_nll < best_valid {
            best_valid = valid_nll;
            best_epoch = epoch;
            best.params.clone_from(&current.params);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stop = StopReason::Patience;
                break;
            }
        }
    }
    let final_valid_nll = epochs.last().map_or(f64::NAN, |r| r.valid_nll);
    let report = TrainReport { config: config.clone(), epochs, best_epoch, best_valid_nll: best_valid, final_valid_nll, stop };
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use alloc::vec;

    use super::*;
    use crate::data::synthetic_mixture;
    use crate::engine::{build_quadtree, init_model, Mode};

    #[test]
    fn defaults_follow_the_reference_protocol() {
        let c = TrainConfig::default();
        assert_eq!((c.learning_rate, c.batch_size, c.max_epochs, c.patience), (0.005, 256, 250, 10));
        assert_eq!((c.split_fraction, c.adam_beta1, c.adam_beta2, c.adam_epsilon), (0.95, 0.9, 0.999, 1e-8));
        assert!(c.validate().is_ok());
        assert!(TrainConfig { patience: 0, ..c.clone() }.validate().is_err());
        assert!(TrainConfig { split_fraction: 1.0, ..c }.validate().is_err());
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = Dataset::new((0..100u8).collect(), 1, 1, 256).unwrap();
        let (a, b) = split_train_valid(&d, 0.95, 3).unwrap();
        assert_eq!((a.len(), b.len()), (95, 5));
        let mut all: Vec<u8> = a.as_bytes().iter().chain(b.as_bytes()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, d.as_bytes());
        assert_eq!(split_train_valid(&d, 0.95, 3).unwrap(), (a.clone(), b));
        let (c, _) = split_train_valid(&Dataset::new(vec![0; 7], 1, 1, 2).unwrap(), 0.5, 0).unwrap();
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn split_seed_changes_permutation() {
        let d = Dataset::new((0..10_000u32).flat_map(|i| [(i % 256) as u8, (i / 256) as u8]).collect(), 1, 2, 256).unwrap();
        let (a, _) = split_train_valid(&d, 0.5, 1).unwrap();
        let (b, _) = split_train_valid(&d, 0.5, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn first_adam_step_is_sign_like() {
        let c = TrainConfig::default();
        let mut p = [1.0, -2.0, 0.5];
        let g = [0.3, -4.0, 1e-3];
        let mut s = AdamState::new(3);
        adam_update(&mut p, &g, &mut s, &c).unwrap();
        for ((x, x0), gi) in p.iter().zip([1.0, -2.0, 0.5]).zip(g) {
            let want = x0 - c.learning_rate * gi / (gi.abs() + c.adam_epsilon);
            assert!((x - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_adam_steps_match_hand_trace() {
        let c = TrainConfig { learning_rate: 0.1, adam_beta1: 0.5, adam_beta2: 0.75, adam_epsilon: 0.0, ..Default::default() };
        let mut p = [0.0, 1.0, 2.0];
        let mut s = AdamState::new(3);
        adam_update(&mut p, &[1.0, 2.0, -1.0], &mut s, &c).unwrap();
        adam_update(&mut p, &[3.0, 0.0, 1.0], &mut s, &c).unwrap();
        // Step 2 moments, bias corrections 0.75 and 0.4375:
        // m = (1.75, 0.5, 0.25), v = (2.4375, 0.75, 0.4375)
        let m_hat = [1.75 / 0.75, 0.5 / 0.75, 0.25 / 0.75];
        let v_hat = [2.4375 / 0.4375, 0.75 / 0.4375, 1.0];
        let after_one = [-0.1, 0.9, 2.1];
        for i in 0..3 {
            let want = after_one[i] - 0.1 * m_hat[i] / libm::sqrt(v_hat[i]);
            assert!((p[i] - want).abs() <= 1e-12, "{i}: {} vs {want}", p[i]);
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = [1.0, 2.0];
        let mut s = AdamState { m: vec![0.5, -0.5], v: vec![1.0, 1.0], t: 3 };
        adam_update(&mut p, &[0.0, 0.0], &mut s, &TrainConfig { learning_rate: 0.0, ..Default::default() }).unwrap();
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(s.m, vec![0.45, -0.45]);
        assert!(matches!(
            adam_update(&mut p, &[0.0, f64::NAN], &mut s, &TrainConfig::default()),
            Err(TrainError::NonFinite { index: 1 })
        ));
        assert_eq!(s.t, 4);
    }

    #[test]
    fn bpd_examples() {
        assert!((bits_per_dimension(784.0 * math::LN_2, 784) - 1.0).abs() <= 1e-15);
        assert!((bits_per_dimension(709.0, 784) - 1.3047).abs() <= 1e-4);
        assert!((bits_per_dimension(709.0, 1568) * 2.0 - bits_per_dimension(709.0, 784)).abs() <= 1e-15);
    }

    #[test]
    fn frozen_model_stops_on_patience() {
        let (data, _) = synthetic_mixture(2, 200, 2, 2, 2, 2).unwrap();
        let m = init_model(&build_quadtree(2, 2).unwrap(), Mode::SquaredReal, 2, 1, 2, 0).unwrap();
        let config = TrainConfig { learning_rate: 0.0, patience: 1, batch_size: 64, ..Default::default() };
        let (best, report) = train_loop(&m, &data, &config, &mut ()).unwrap();
        assert_eq!(report.stop, StopReason::Patience);
        assert_eq!(report.epochs.len(), 2);
        assert_eq!(report.best_epoch, 1);
        assert_eq!(best.params, m.params);
    }

    #[test]
    fn learns_a_small_mixture() {
        let (data, entropy) = synthetic_mixture(7, 2000, 2, 2, 2, 2).unwrap();
        let m = init_model(&build_quadtree(2, 2).unwrap(), Mode::Monotone, 4, 1, 2, 1).unwrap();
        let config = TrainConfig { batch_size: 64, max_epochs: 60, learning_rate: 0.05, ..Default::default() };
        let (best, report) = train_loop(&m, &data, &config, &mut ()).unwrap();
        let nll = engine::mean_nll(&best, &data.row_refs()).unwrap();
        assert!((nll - entropy).abs() <= 0.05 * entropy, "{nll} vs {entropy}");
        let min = report.epochs.iter().map(|r| r.valid_nll).fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_valid_nll, min);
        assert_eq!(report.epochs[report.best_epoch - 1].valid_nll, min);
    }

    #[test]
    fn training_is_reproducible() {
        let (data, _) = synthetic_mixture(4, 300, 2, 2, 3, 2).unwrap();
        let m = init_model(&build_quadtree(2, 2).unwrap(), Mode::Inception, 2, 2, 3, 5).unwrap();
        let config = TrainConfig { batch_size: 32, max_epochs: 3, ..Default::default() };
        let a = train_loop(&m, &data, &config, &mut ()).unwrap();
        let b = train_loop(&m, &data, &config, &mut ()).unwrap();
        assert_eq!(a, b);
    }
}
