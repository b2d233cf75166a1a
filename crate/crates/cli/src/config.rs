//! TOML experiment descriptions.
//!
//! ```toml
//! kind = "mackey-glass"
//! trials = 20
//! seed = 0
//!
//! [data]
//! horizon = 6
//! noise = 0.0
//!
//! [[tt]]
//! s = 3
//! r = 4
//!
//! [[mlp]]
//! hidden = 15
//! activation = "relu"
//! optimizer = "sgd"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ttmr_core::mlp::{Activation, AdamConfig, LearningRate, MlpConfig, Optimizer};
use ttmr_core::regressor::{LambdaMode, SolverKind};
use ttmr_core::{FeatureMap, TrainConfig, TtTensor};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RecoverMlp,
    MackeyGlass,
    CsvForecast,
    PlantedTt,
}

impl ExperimentKind {
    /// Monte-Carlo trial counts used with `--full`.
    pub fn full_trials(self) -> usize {
        match self {
            Self::RecoverMlp => 100,
            Self::MackeyGlass => 400,
            Self::CsvForecast => 200,
            Self::PlantedTt => 100,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::RecoverMlp => "recover-mlp",
            Self::MackeyGlass => "mackey-glass",
            Self::CsvForecast => "csv-forecast",
            Self::PlantedTt => "planted-tt",
        };
        f.write_str(s)
    }
}

/// Dataset parameters. Fields that do not apply to the chosen kind are
/// ignored; missing ones take the kind's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Forecast horizon in samples (mackey-glass, csv-forecast).
    pub horizon: Option<usize>,
    /// Lag spacing in samples (mackey-glass, csv-forecast).
    pub spacing: Option<usize>,
    /// Additive Gaussian noise sd (mackey-glass, planted-tt).
    pub noise: Option<f64>,
    /// Series length (mackey-glass) or sample count (recover-mlp, planted-tt).
    pub samples: Option<usize>,
    /// Teacher activation (recover-mlp).
    pub activation: Option<Activation>,
    /// Feature size per input (planted-tt).
    pub s: Option<usize>,
    /// Number of inputs (planted-tt).
    pub order: Option<usize>,
    /// TT rank of the planted model (planted-tt).
    pub rank: Option<usize>,
    /// Price file, relative to the config file (csv-forecast).
    pub path: Option<PathBuf>,
    pub date_column: Option<String>,
    pub close_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtSpec {
    pub s: usize,
    pub r: usize,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    /// Fixed ridge weight; searched on the validation set when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
}

fn default_sweeps() -> usize {
    12
}

fn default_solver() -> SolverKind {
    SolverKind::Gsvd
}

impl TtSpec {
    pub fn new(s: usize, r: usize) -> Self {
        Self { s, r, max_sweeps: default_sweeps(), lambda: None, solver: default_solver() }
    }

    pub fn label(&self) -> String {
        format!("tt-s{}-r{}", self.s, self.r)
    }

    pub fn param_count(&self, inputs: usize) -> Result<usize> {
        Ok(TtTensor::random_init(&vec![self.s; inputs], self.r, 0)?.param_count())
    }

    pub fn train_config(&self, inputs: usize, seed: u64) -> Result<TrainConfig> {
        let maps = vec![FeatureMap::polynomial(self.s)?; inputs];
        let mut cfg = TrainConfig::new(maps, self.r);
        cfg.max_sweeps = self.max_sweeps;
        cfg.solver = self.solver;
        cfg.seed = seed;
        if let Some(l) = self.lambda {
            cfg.lambda = LambdaMode::Fixed(l);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub hidden: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    /// SGD step or Adam `α`. SGD searches it when absent.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
}

fn default_activation() -> Activation {
    Activation::Relu
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Sgd
}

fn default_epochs() -> usize {
    2000
}

impl MlpSpec {
    pub fn new(hidden: usize, activation: Activation) -> Self {
        Self {
            hidden,
            activation,
            optimizer: default_optimizer(),
            learning_rate: None,
            max_epochs: default_epochs(),
        }
    }

    pub fn label(&self, inputs: usize) -> String {
        let act = match self.activation {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        };
        let opt = match self.optimizer {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        };
        format!("mlp-{inputs}-{}-1-{act}-{opt}", self.hidden)
    }

    pub fn param_count(&self, inputs: usize) -> usize {
        ttmr_core::Mlp::count(inputs, self.hidden)
    }

    pub fn mlp_config(&self, seed: u64) -> MlpConfig {
        let optimizer = match (self.optimizer, self.learning_rate) {
            (OptimizerKind::Sgd, None) => Optimizer::sgd_search(),
            (OptimizerKind::Sgd, Some(lr)) => Optimizer::Sgd(LearningRate::Fixed(lr)),
            (OptimizerKind::Adam, lr) => {
                let mut a = AdamConfig::default();
                if let Some(lr) = lr {
                    a.alpha = lr;
                }
                Optimizer::Adam(a)
            }
        };
        let mut cfg = MlpConfig::new(self.hidden, self.activation, optimizer);
        cfg.max_epochs = self.max_epochs;
        cfg.seed = seed;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub tt: Vec<TtSpec>,
    #[serde(default)]
    pub mlp: Vec<MlpSpec>,
}

fn default_trials() -> usize {
    20
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            trials: default_trials(),
            seed: 0,
            out: None,
            data: DataConfig::default(),
            tt: Vec::new(),
            mlp: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `data.path` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::parse(&text)?;
        if let Some(p) = cfg.data.path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be >= 1".into()));
        }
        if self.tt.is_empty() && self.mlp.is_empty() {
            return Err(CliError::Config("no [[tt]] or [[mlp]] model configured".into()));
        }
        for t in &self.tt {
            if t.s == 0 || t.r == 0 || t.max_sweeps == 0 {
                return Err(CliError::Config(format!("{}: s, r and max_sweeps must be >= 1", t.label())));
            }
            if t.lambda.is_some_and(|l| !(l >= 0.0) || !l.is_finite()) {
                return Err(CliError::Config(format!("{}: lambda must be finite and >= 0", t.label())));
            }
        }
        for m in &self.mlp {
            if m.hidden == 0 || m.max_epochs == 0 {
                return Err(CliError::Config("mlp hidden and max_epochs must be >= 1".into()));
            }
        }
        if let Some(n) = self.data.noise {
            if !(n >= 0.0) || !n.is_finite() {
                return Err(CliError::Config(format!("noise sd {n} must be finite and >= 0")));
            }
        }
        if self.kind == ExperimentKind::CsvForecast {
            match &self.data.path {
                None => return Err(CliError::Config("csv-forecast needs data.path".into())),
                Some(p) if p.is_absolute() && !p.exists() => {
                    return Err(CliError::Config(format!("data file {} does not exist", p.display())))
                }
                _ => {}
            }
        }
        Ok(())
    }
}
