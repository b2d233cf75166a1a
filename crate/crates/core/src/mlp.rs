//! One-hidden-layer perceptron `ŷ = w₂·act(W₁x + b₁) + b₂` trained full-batch.

use std::time::Instant;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datasets::Samples;
use crate::error::{Error, Result};
use crate::metrics::mse;
use crate::regressor::{log_search, LogSearch};
use crate::report::{EarlyStop, EpochLoss, FitReport, TraceRow};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Self::Relu => z.max(0.0),
            Self::Tanh => z.tanh(),
        }
    }

    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh => 1.0 - a * a,
        }
    }
}

/// Parameters live in one flat vector laid out as `[W₁ (H×N, row-major), b₁, w₂, b₂]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    inputs: usize,
    hidden: usize,
    activation: Activation,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(inputs: usize, hidden: usize, activation: Activation) -> Self {
        Self { inputs, hidden, activation, params: vec![0.0; Self::count(inputs, hidden)] }
    }

    /// `N·H + H + H + 1`.
    pub fn count(inputs: usize, hidden: usize) -> usize {
        inputs * hidden + 2 * hidden + 1
    }

    /// Weights from `Uniform[−1/√fan_in, 1/√fan_in]`, biases zero.
    pub fn init(inputs: usize, hidden: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mlp = Self::zeros(inputs, hidden, activation);
        let (d1, d2) = (1.0 / (inputs as f64).sqrt(), 1.0 / (hidden as f64).sqrt());
        let (w1, w2) = (inputs * hidden, inputs * hidden + hidden);
        for p in &mut mlp.params[..w1] {
            *p = rng.random_range(-d1..=d1);
        }
        for p in &mut mlp.params[w2..w2 + hidden] {
            *p = rng.random_range(-d2..=d2);
        }
        mlp
    }

    /// Every weight and bias drawn from `N(0, sd²)`.
    pub fn gaussian(inputs: usize, hidden: usize, activation: Activation, sd: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sd).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mlp = Self::zeros(inputs, hidden, activation);
        mlp.params.iter_mut().for_each(|p| *p = normal.sample(&mut rng));
        Ok(mlp)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.inputs * self.hidden;
        (w1, w1 + self.hidden, w1 + 2 * self.hidden)
    }

    /// Hidden pre-activations `W₁x + b₁`.
    pub fn pre_activations(&self, x: &[f64]) -> Vec<f64> {
        let (b1, _, _) = self.offsets();
        (0..self.hidden)
            .map(|j| {
                let row = &self.params[j * self.inputs..(j + 1) * self.inputs];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.params[b1 + j]
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let (_, w2, b2) = self.offsets();
        let z = self.pre_activations(x);
        z.iter().zip(&self.params[w2..b2]).map(|(&z, w)| w * self.activation.apply(z)).sum::<f64>() + self.params[b2]
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.inputs {
            return Err(Error::Shape(format!("{} input columns for a {}-input network", x.cols(), self.inputs)));
        }
        Ok((0..x.rows()).map(|i| self.forward(x.row(i))).collect())
    }

    /// Accumulates `weight · ∂(ŷ − y)²/∂params` for one sample into `grad`;
    /// returns the prediction.
    fn accumulate(&self, x: &[f64], y: f64, weight: f64, grad: &mut [f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let z = self.pre_activations(x);
        let a: Vec<f64> = z.iter().map(|&v| self.activation.apply(v)).collect();
        let yhat = a.iter().zip(&self.params[w2..b2]).map(|(a, w)| a * w).sum::<f64>() + self.params[b2];
        let g = weight * 2.0 * (yhat - y);
        grad[b2] += g;
        for j in 0..self.hidden {
            grad[w2 + j] += g * a[j];
            let dz = g * self.params[w2 + j] * self.activation.derivative(z[j], a[j]);
            if dz == 0.0 {
                continue;
            }
            grad[b1 + j] += dz;
            for (gw, &xv) in grad[j * self.inputs..(j + 1) * self.inputs].iter_mut().zip(x) {
                *gw += dz * xv;
            }
        }
        yhat
    }

    /// Gradient of the squared error `(ŷ − y)²` of one sample.
    pub fn backward(&self, x: &[f64], y: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate(x, y, 1.0, &mut grad);
        grad
    }

    /// Mean squared error over the batch and its gradient.
    pub fn loss_and_grad(&self, x: &Matrix, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.rows() != y.len() || x.cols() != self.inputs || y.is_empty() {
            return Err(Error::Shape(format!("batch {}x{} with {} targets", x.rows(), x.cols(), y.len())));
        }
        let mut grad = vec![0.0; self.params.len()];
        let w = 1.0 / y.len() as f64;
        let mut loss = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            let yhat = self.accumulate(x.row(i), yi, w, &mut grad);
            loss += (yhat - yi).powi(2);
        }
        Ok((loss * w, grad))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Apply the usual `1 − βᵗ` bias corrections. Off by default.
    pub debias: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { alpha: 0.001, beta1: 0.9, beta2: 0.99, eps: 1e-8, debias: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let (c1, c2) = if cfg.debias {
            (1.0 - cfg.beta1.powi(self.t as i32), 1.0 - cfg.beta2.powi(self.t as i32))
        } else {
            (1.0, 1.0)
        };
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.alpha * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
        }
    }
}

/// Plain gradient step `p ← p − lr·g`.
pub fn sgd_step(params: &mut [f64], grad: &[f64], lr: f64) {
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= lr * g;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearningRate {
    Fixed(f64),
    /// Log-scale search on validation loss after `tuning_epochs` short runs.
    Search { search: LogSearch, tuning_epochs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Sgd(LearningRate),
    Adam(AdamConfig),
}

impl Optimizer {
    /// SGD with the learning rate searched over `2^-10 … 2^2`.
    pub fn sgd_search() -> Self {
        Self::Sgd(LearningRate::Search { search: LogSearch { lo: -10, hi: 2, gss_iters: 8 }, tuning_epochs: 200 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub activation: Activation,
    pub optimizer: Optimizer,
    pub max_epochs: usize,
    pub tol: f64,
    pub patience_frac: f64,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(hidden: usize, activation: Activation, optimizer: Optimizer) -> Self {
        Self { hidden, activation, optimizer, max_epochs: 2000, tol: 1e-6, patience_frac: 0.2, seed: 0 }
    }
}

fn check(d: &Samples, n: usize, name: &str) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Data(format!("{name} split is empty")));
    }
    if d.x.cols() != n {
        return Err(Error::Shape(format!("{name} inputs have {} columns, expected {n}", d.x.cols())));
    }
    Ok(())
}

struct Run {
    best: (f64, Mlp, usize),
    report: FitReport,
}

fn run_epochs(init: Mlp, train: &Samples, val: &Samples, cfg: &MlpConfig, lr: f64, epochs: usize) -> Result<Run> {
    let mut mlp = init;
    let mut adam = AdamState::new(mlp.param_count());
    let mut stop = EarlyStop::new(cfg.tol, cfg.patience_frac, epochs);
    let initial = mse(&val.y, &mlp.predict(&val.x)?)?;
    let mut best = (initial, mlp.clone(), 0);
    let mut report = FitReport::default();
    for epoch in 1..=epochs {
        let (_, grad) = mlp.loss_and_grad(&train.x, &train.y)?;
        match cfg.optimizer {
            Optimizer::Sgd(_) => sgd_step(&mut mlp.params, &grad, lr),
            Optimizer::Adam(a) => adam.step(&a, &mut mlp.params, &grad),
        }
        let loss = EpochLoss {
            train_mse: mse(&train.y, &mlp.predict(&train.x)?)?,
            val_mse: mse(&val.y, &mlp.predict(&val.x)?)?,
        };
        if !loss.train_mse.is_finite() || !loss.val_mse.is_finite() {
            return Err(Error::Training(format!("loss diverged at epoch {epoch} (learning rate {lr:e})")));
        }
        report.trace.push(TraceRow { sweep: epoch, core: None, lambda: lr, train_mse: loss.train_mse, val_mse: loss.val_mse });
        report.epochs.push(loss);
        if loss.val_mse < best.0 {
            best = (loss.val_mse, mlp.clone(), epoch);
        }
        if stop.update(loss.val_mse) {
            report.stopped_at = Some(epoch);
            break;
        }
    }
    Ok(Run { best, report })
}

/// Trains from the seeded uniform initialization and returns the snapshot
/// with the lowest validation loss.
pub fn train(train: &Samples, val: &Samples, cfg: &MlpConfig) -> Result<(Mlp, FitReport)> {
    let start = Instant::now();
    let n = train.x.cols();
    check(train, n, "training")?;
    check(val, n, "validation")?;
    if cfg.hidden == 0 || cfg.max_epochs == 0 {
        return Err(Error::Config("hidden width and max epochs must be >= 1".into()));
    }
    let init = Mlp::init(n, cfg.hidden, cfg.activation, cfg.seed);
    let lr = match cfg.optimizer {
        Optimizer::Sgd(LearningRate::Fixed(lr)) => lr,
        Optimizer::Sgd(LearningRate::Search { search, tuning_epochs }) => {
            let best = log_search(&search, |lr| {
                match run_epochs(init.clone(), train, val, cfg, lr, tuning_epochs) {
                    Ok(run) => Ok(run.best.0),
                    Err(Error::Training(_)) => Ok(f64::INFINITY),
                    Err(e) => Err(e),
                }
            })?;
            debug!("selected learning rate {:.4e} (val {:.3e})", best.value, best.loss);
            best.value
        }
        Optimizer::Adam(a) => a.alpha,
    };
    let Run { best, mut report } = run_epochs(init, train, val, cfg, lr, cfg.max_epochs)?;
    report.best_epoch = best.2;
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok((best.1, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::explained_variance;

    fn random_samples(m: usize, n: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..m).map(|i| f(x.row(i))).collect();
        Samples { x, y }
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(Mlp::count(10, 200), 2401);
        assert_eq!(Mlp::count(4, 4), 25);
        assert_eq!(Mlp::zeros(4, 15, Activation::Relu).param_count(), 91);
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut mlp = Mlp::zeros(3, 5, Activation::Tanh);
        let last = mlp.param_count() - 1;
        mlp.params_mut()[last] = 0.7;
        assert_eq!(mlp.forward(&[0.3, -1.0, 2.0]), 0.7);
    }

    #[test]
    fn init_bounds_zero_biases_and_determinism() {
        let a = Mlp::init(4, 15, Activation::Relu, 3);
        assert_eq!(a, Mlp::init(4, 15, Activation::Relu, 3));
        assert_ne!(a, Mlp::init(4, 15, Activation::Relu, 4));
        let p = a.params();
        assert!(p[..60].iter().all(|v| v.abs() <= 0.5));
        assert!(p[60..75].iter().all(|&v| v == 0.0));
        assert!(p[75..90].iter().all(|v| v.abs() <= 1.0 / 15f64.sqrt()));
        assert_eq!(p[90], 0.0);
    }

    #[test]
    fn backprop_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..20 {
            let (n, h) = (rng.random_range(1..=5), rng.random_range(1..=8));
            let act = if trial % 2 == 0 { Activation::Tanh } else { Activation::Relu };
            let mut mlp = Mlp::init(n, h, act, trial);
            mlp.params_mut().iter_mut().for_each(|p| *p += rng.random_range(-0.3..0.3));
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = rng.random_range(-1.0..1.0);
            let grad = mlp.backward(&x, y);
            let eps = 1e-5;
            let mut fd = vec![0.0; grad.len()];
            for i in 0..grad.len() {
                let mut plus = mlp.clone();
                plus.params_mut()[i] += eps;
                let mut minus = mlp.clone();
                minus.params_mut()[i] -= eps;
                fd[i] = ((plus.forward(&x) - y).powi(2) - (minus.forward(&x) - y).powi(2)) / (2.0 * eps);
            }
            let diff: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            assert!(diff / norm < 1e-6, "trial {trial}: {}", diff / norm);
        }
    }

    #[test]
    fn sgd_step_follows_negative_gradient() {
        let mlp = Mlp::init(3, 4, Activation::Tanh, 1);
        let d = random_samples(10, 3, 2, |x| x[0]);
        let (_, grad) = mlp.loss_and_grad(&d.x, &d.y).unwrap();
        let lr = 1e-9;
        let mut p = mlp.params().to_vec();
        sgd_step(&mut p, &grad, lr);
        for ((a, b), g) in p.iter().zip(mlp.params()).zip(&grad) {
            assert!(((a - b) / lr + g).abs() < 1e-6 * g.abs().max(1.0));
        }
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut params = vec![0.5, -1.0, 2.0];
        let mut state = AdamState::new(3);
        for _ in 0..10 {
            state.step(&AdamConfig::default(), &mut params, &[0.0; 3]);
        }
        assert_eq!(params, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn adam_minimizes_quadratic_bowl() {
        let target = [0.3, -0.2, 0.1];
        let mut p = vec![0.0; 3];
        let mut state = AdamState::new(3);
        let cfg = AdamConfig { alpha: 0.01, ..Default::default() };
        for _ in 0..5000 {
            let g: Vec<f64> = p.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            state.step(&cfg, &mut p, &g);
        }
        let f: f64 = p.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(f < 1e-6, "objective {f}");
    }

    #[test]
    fn tanh_net_fits_linear_target() {
        let f = |x: &[f64]| 0.5 * x[0] - 0.3 * x[1] + 0.1;
        let tr = random_samples(200, 2, 5, f);
        let va = random_samples(60, 2, 6, f);
        let cfg = MlpConfig {
            max_epochs: 3000,
            ..MlpConfig::new(8, Activation::Tanh, Optimizer::Adam(AdamConfig { alpha: 0.01, ..Default::default() }))
        };
        let (mlp, report) = train(&tr, &va, &cfg).unwrap();
        let score = explained_variance(&tr.y, &mlp.predict(&tr.x).unwrap()).unwrap();
        assert!(score >= 0.99, "score {score}");
        assert!(report.best_epoch > 0);
    }

    #[test]
    fn divergence_aborts() {
        let tr = random_samples(50, 2, 7, |x| 10.0 * x[0]);
        let cfg = MlpConfig::new(4, Activation::Relu, Optimizer::Sgd(LearningRate::Fixed(1e6)));
        assert!(matches!(train(&tr, &tr, &cfg), Err(Error::Training(_))));
    }
}
