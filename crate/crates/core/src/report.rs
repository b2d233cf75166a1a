//! Training traces shared by the TT trainer and the MLP baseline.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One solve (TT: one core update, MLP: one epoch).
///
/// For the MLP `core` is empty and `lambda` carries the learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: usize,
    pub core: Option<usize>,
    pub lambda: f64,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Losses at the end of one sweep (TT) or epoch (MLP).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub trace: Vec<TraceRow>,
    /// One entry per completed sweep or epoch.
    pub epochs: Vec<EpochLoss>,
    /// 1-based sweep/epoch whose model was returned; 0 for the initial model.
    pub best_epoch: usize,
    /// 1-based sweep/epoch at which the early-stop rule fired, if it did.
    pub stopped_at: Option<usize>,
    /// TT ranks of the returned model.
    pub ranks: Vec<usize>,
    /// Constant target: the model is the training mean.
    pub degenerate: bool,
    /// Core solves that fell back from the GSVD path to the normal equations.
    pub fallbacks: usize,
    pub wall_time_secs: f64,
}

impl FitReport {
    /// Trace rows as CSV: `sweep,core,lambda,train_mse,val_mse`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sweep", "core", "lambda", "train_mse", "val_mse"])?;
        for r in &self.trace {
            out.write_record([
                r.sweep.to_string(),
                r.core.map(|c| c.to_string()).unwrap_or_default(),
                r.lambda.to_string(),
                r.train_mse.to_string(),
                r.val_mse.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// The early-stop rule: stop once the relative improvement between
/// consecutive validation losses, `(prev − cur)/prev`, has stayed below `tol`
/// for `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct EarlyStop {
    tol: f64,
    patience: usize,
    prev: f64,
    stalled: usize,
}

impl EarlyStop {
    /// `patience = ceil(fraction · budget)`, at least 1.
    pub fn new(tol: f64, fraction: f64, budget: usize) -> Self {
        let patience = ((fraction * budget as f64).ceil() as usize).max(1);
        Self { tol, patience, prev: f64::INFINITY, stalled: 0 }
    }

    pub fn patience(&self) -> usize {
        self.patience
    }

    /// Feed one validation loss; returns `true` when training should stop.
    pub fn update(&mut self, val: f64) -> bool {
        let improved = if self.prev.is_finite() {
            (self.prev - val) > self.tol * self.prev.abs()
        } else {
            val.is_finite()
        };
        if improved {
            self.stalled = 0;
        } else {
            self.stalled += 1;
        }
        self.prev = val;
        self.stalled >= self.patience
    }
}
