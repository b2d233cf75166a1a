//! Per-trial datasets for each experiment kind.

use ttmr_core::datasets::{
    build_windows, ingest_csv, mackey_glass, planted_tt_data, teacher_mlp_data, CsvColumns, PlantedSpec, SeriesSpec,
    TeacherSpec, WindowSpec,
};
use ttmr_core::mlp::Activation;
use ttmr_core::{Samples, Scaler, Split};

use crate::config::{DataConfig, ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};

pub const SPLIT: (f64, f64, f64) = (0.6, 0.2, 0.2);

/// Data shared by all trials. Mackey-Glass keeps only the series spec
/// because every trial draws its own noise.
#[derive(Debug, Clone)]
pub enum DataSource {
    Series { spec: SeriesSpec, window: WindowSpec },
    Fixed(Samples),
}

impl DataSource {
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        let d = &cfg.data;
        match cfg.kind {
            ExperimentKind::MackeyGlass => {
                let spec = SeriesSpec {
                    noise_sd: d.noise.unwrap_or(0.0),
                    length: d.samples.unwrap_or(1000),
                    ..SeriesSpec::default()
                };
                Ok(Self::Series { spec, window: window(d, 6, 6) })
            }
            ExperimentKind::RecoverMlp => {
                let mut spec = TeacherSpec::new(d.activation.unwrap_or(Activation::Tanh));
                if let Some(m) = d.samples {
                    spec.samples = m;
                }
                Ok(Self::Fixed(teacher_mlp_data(&spec, cfg.seed)?.0))
            }
            ExperimentKind::PlantedTt => {
                let dims = vec![d.s.unwrap_or(3); d.order.unwrap_or(4)];
                let mut spec = PlantedSpec::new(dims, d.rank.unwrap_or(2), d.samples.unwrap_or(2000));
                spec.noise_sd = d.noise.unwrap_or(0.0);
                Ok(Self::Fixed(planted_tt_data(&spec, cfg.seed)?.0))
            }
            ExperimentKind::CsvForecast => {
                let path = d.path.as_ref().ok_or_else(|| CliError::Config("csv-forecast needs data.path".into()))?;
                let defaults = CsvColumns::default();
                let cols = CsvColumns {
                    date: d.date_column.clone().unwrap_or(defaults.date),
                    close: d.close_column.clone().unwrap_or(defaults.close),
                };
                let series = ingest_csv(path, &cols)?;
                if series.dropped > 0 {
                    log::warn!("{}: dropped {} rows with missing prices", path.display(), series.dropped);
                }
                Ok(Self::Fixed(build_windows(&series.close, &window(d, 1, 1))?))
            }
        }
    }

    pub fn inputs(&self) -> usize {
        match self {
            Self::Series { window, .. } => window.lags,
            Self::Fixed(s) => s.x.cols(),
        }
    }

    /// Scaled train/val/test split for one trial.
    pub fn trial(&self, seed: u64) -> Result<(Split, Scaler)> {
        let split = match self {
            Self::Series { spec, window } => {
                let series = mackey_glass(spec, seed)?;
                Split::new(&build_windows(&series, window)?, SPLIT, seed)?
            }
            Self::Fixed(samples) => Split::new(samples, SPLIT, seed)?,
        };
        Ok(split.scaled()?)
    }
}

fn window(d: &DataConfig, spacing: usize, horizon: usize) -> WindowSpec {
    WindowSpec::new(d.spacing.unwrap_or(spacing), d.horizon.unwrap_or(horizon))
}
