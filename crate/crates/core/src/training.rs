//! Losses, metrics, gradients, Adam, and the multi-seed runner.

use rayon::prelude::*;

use crate::datasets::Dataset;
use crate::error::{Result, SpqcError};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean squared error against real-valued targets.
    Mse,
    /// Mean squared error against `±1` labels; accuracy is also reported.
    MseOnLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMethod {
    /// Reverse-mode sweep through the circuit.
    Adjoint,
    /// Central differences with `TrainConfig::fd_step`.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub loss: LossKind,
    pub fd_step: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub gradient: GradientMethod,
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 5000,
            seeds: (0..5).collect(),
            loss: LossKind::Mse,
            fd_step: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            gradient: GradientMethod::Adjoint,
            divergence_threshold: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SpqcError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(SpqcError::Config("epochs must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(SpqcError::Config("at least one seed is required".into()));
        }
        if self.fd_step.is_nan() || self.fd_step <= 0.0 {
            return Err(SpqcError::Config(format!("fd_step must be positive, got {}", self.fd_step)));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(SpqcError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(SpqcError::Config("Adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

fn check_lengths(preds: &[f64], targets: &[f64]) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(SpqcError::DimensionMismatch { expected: targets.len(), actual: preds.len() });
    }
    if preds.is_empty() {
        return Err(SpqcError::UndefinedMetric("empty prediction set".into()));
    }
    Ok(())
}

pub fn loss_mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(preds, targets)?;
    Ok(preds.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / preds.len() as f64)
}

pub fn metric_mae(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(preds, targets)?;
    Ok(preds.iter().zip(targets).map(|(p, t)| (p - t).abs()).sum::<f64>() / preds.len() as f64)
}

/// `1 − SS_res / SS_tot`.
pub fn metric_r2(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(preds, targets)?;
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(SpqcError::UndefinedMetric("R² needs targets with non-zero variance".into()));
    }
    let ss_res: f64 = preds.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Percentage of samples with `sign(pred) == label`; a zero prediction
/// counts as `+1`.
pub fn metric_accuracy(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|(p, l)| {
            let sign = if **p >= 0.0 { 1.0 } else { -1.0 };
            sign == **l
        })
        .count();
    Ok(100.0 * hits as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub r2: f64,
    pub accuracy: Option<f64>,
}

impl Metrics {
    pub fn evaluate(preds: &[f64], targets: &[f64], loss: LossKind) -> Result<Self> {
        Ok(Self {
            mse: loss_mse(preds, targets)?,
            mae: metric_mae(preds, targets)?,
            r2: metric_r2(preds, targets)?,
            accuracy: match loss {
                LossKind::Mse => None,
                LossKind::MseOnLabels => Some(metric_accuracy(preds, targets)?),
            },
        })
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSummary {
    pub mse: Stat,
    pub mae: Stat,
    pub r2: Stat,
    pub accuracy: Option<Stat>,
}

impl MetricsSummary {
    pub fn from_runs(runs: &[RunRecord]) -> Self {
        let collect = |f: fn(&Metrics) -> f64| runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>();
        let accuracy: Option<Vec<f64>> = runs.iter().map(|r| r.metrics.accuracy).collect();
        Self {
            mse: Stat::of(&collect(|m| m.mse)),
            mae: Stat::of(&collect(|m| m.mae)),
            r2: Stat::of(&collect(|m| m.r2)),
            accuracy: accuracy.map(|a| Stat::of(&a)),
        }
    }
}

/// Central differences, one coordinate at a time.
pub fn gradient_fd<F>(f: F, theta: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..theta.len())
        .into_par_iter()
        .map(|k| {
            let mut shifted = theta.to_vec();
            shifted[k] = theta[k] + step;
            let plus = f(&shifted)?;
            shifted[k] = theta[k] - step;
            let minus = f(&shifted)?;
            Ok((plus - minus) / (2.0 * step))
        })
        .collect()
}

/// Full-batch loss over `data`.
pub fn dataset_loss<M: Model + ?Sized>(model: &M, params: &[f64], data: &Dataset) -> Result<f64> {
    let preds = predict_all(model, params, data)?;
    loss_mse(&preds, &data.targets)
}

pub fn predict_all<M: Model + ?Sized>(model: &M, params: &[f64], data: &Dataset) -> Result<Vec<f64>> {
    data.inputs.iter().map(|x| model.predict(params, x)).collect()
}

/// Full-batch loss and its gradient.
pub fn loss_and_grad<M: Model + ?Sized>(
    model: &M,
    params: &[f64],
    data: &Dataset,
    method: GradientMethod,
    fd_step: f64,
) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(SpqcError::Config("empty dataset".into()));
    }
    match method {
        GradientMethod::FiniteDifference => {
            let loss = dataset_loss(model, params, data)?;
            let grad = gradient_fd(|t| dataset_loss(model, t, data), params, fd_step)?;
            Ok((loss, grad))
        }
        GradientMethod::Adjoint => {
            let scale = 1.0 / data.len() as f64;
            let mut grad = vec![0.0; params.len()];
            let mut sample = vec![0.0; params.len()];
            let mut loss = 0.0;
            for (x, y) in data.inputs.iter().zip(&data.targets) {
                let f = model.predict_with_grad(params, x, &mut sample)?;
                let residual = f - y;
                loss += residual * residual;
                let w = 2.0 * residual * scale;
                for (g, s) in grad.iter_mut().zip(&sample) {
                    *g += w * s;
                }
            }
            Ok((loss * scale, grad))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self { learning_rate, beta1, beta2, epsilon, m: vec![0.0; num_params], v: vec![0.0; num_params], t: 0 }
    }

    pub fn from_config(num_params: usize, config: &TrainConfig) -> Self {
        Self::new(num_params, config.learning_rate, config.beta1, config.beta2, config.epsilon)
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        assert_eq!(theta.len(), self.m.len(), "parameter length changed between Adam steps");
        assert_eq!(grad.len(), self.m.len(), "gradient length does not match parameters");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for k in 0..theta.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            theta[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    /// Loss at the start of each epoch, before that epoch's update.
    pub losses: Vec<f64>,
    pub params: Vec<f64>,
    pub metrics: Metrics,
}

/// One full-batch Adam run from `model.init_params(seed)`.
pub fn train<M: Model + ?Sized>(model: &M, data: &Dataset, config: &TrainConfig, seed: u64) -> Result<RunRecord> {
    config.validate()?;
    let mut params = model.init_params(seed);
    let mut adam = Adam::from_config(params.len(), config);
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, grad) = loss_and_grad(model, &params, data, config.gradient, config.fd_step)?;
        if !loss.is_finite() || loss > config.divergence_threshold || grad.iter().any(|g| !g.is_finite()) {
            return Err(SpqcError::Divergence { epoch, loss });
        }
        losses.push(loss);
        adam.step(&mut params, &grad);
    }
    let preds = predict_all(model, &params, data)?;
    let metrics = Metrics::evaluate(&preds, &data.targets, config.loss)?;
    Ok(RunRecord { seed, losses, params, metrics })
}

/// Thread cap from `SPQC_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("SPQC_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(SpqcError::Config(format!("SPQC_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs `job` on a pool capped by `SPQC_THREADS`, or on the global pool.
pub fn with_thread_cap<T: Send>(job: impl FnOnce() -> T + Send) -> Result<T> {
    match thread_cap()? {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SpqcError::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Trains one run per configured seed in parallel. Records come back in seed
/// order and do not depend on the thread count.
pub fn train_seeds<M: Model + ?Sized>(model: &M, data: &Dataset, config: &TrainConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    with_thread_cap(|| config.seeds.par_iter().map(|&seed| train(model, data, config, seed)).collect())?
}

/// Element-wise mean of the per-seed loss curves.
pub fn mean_loss_curve(runs: &[RunRecord]) -> Vec<f64> {
    let Some(first) = runs.first() else { return Vec::new() };
    (0..first.losses.len())
        .map(|e| runs.iter().map(|r| r.losses[e]).sum::<f64>() / runs.len() as f64)
        .collect()
}

/// Trailing moving average with the given window (shorter at the start).
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if i >= window {
            acc -= values[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}

/// Epochs `t` where the smoothed loss rose over the following `span` epochs.
pub fn smoothed_increases(losses: &[f64], window: usize, span: usize) -> Vec<usize> {
    let smooth = moving_average(losses, window);
    (0..smooth.len().saturating_sub(span)).filter(|&t| smooth[t + span] > smooth[t]).collect()
}
