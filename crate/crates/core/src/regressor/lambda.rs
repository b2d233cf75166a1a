//! Coarse grid scan plus golden-section refinement on a log₂ scale.
//!
//! Used for the ridge parameter here and for the MLP learning rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSearch {
    /// Smallest grid exponent (base 2).
    pub lo: i32,
    /// Largest grid exponent (base 2).
    pub hi: i32,
    /// Golden-section iterations inside the bracket around the best grid point.
    pub gss_iters: usize,
}

impl Default for LogSearch {
    fn default() -> Self {
        Self { lo: -10, hi: 10, gss_iters: 20 }
    }
}

/// A candidate evaluation: parameter value and its validation loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub loss: f64,
}

fn better(a: Evaluation, b: Option<Evaluation>) -> bool {
    match b {
        None => true,
        Some(b) => a.loss < b.loss || (a.loss == b.loss && a.value < b.value),
    }
}

/// Minimizes `loss(2^e)` over `e ∈ [lo, hi]`.
///
/// The grid `{2^lo, …, 2^hi}` is scanned first; golden-section search then
/// refines `e` between the neighbours of the best grid point. The winner is
/// the lowest loss among every evaluation, ties going to the smaller value.
/// Non-finite losses are skipped.
pub fn log_search(cfg: &LogSearch, mut loss: impl FnMut(f64) -> Result<f64>) -> Result<Evaluation> {
    if cfg.lo > cfg.hi {
        return Err(Error::Config(format!("empty search grid {}..{}", cfg.lo, cfg.hi)));
    }
    let mut best: Option<Evaluation> = None;
    let mut best_exp = cfg.lo;
    let mut eval = |e: f64, best: &mut Option<Evaluation>| -> Result<f64> {
        let value = e.exp2();
        let l = loss(value)?;
        if l.is_finite() {
            let cand = Evaluation { value, loss: l };
            if better(cand, *best) {
                *best = Some(cand);
            }
            Ok(l)
        } else {
            Ok(f64::INFINITY)
        }
    };

    let mut grid_best = f64::INFINITY;
    for e in cfg.lo..=cfg.hi {
        let l = eval(e as f64, &mut best)?;
        if l < grid_best {
            grid_best = l;
            best_exp = e;
        }
    }
    if best.is_none() {
        return Err(Error::Training("every search candidate produced a non-finite loss".into()));
    }

    let (mut a, mut b) = ((best_exp - 1).max(cfg.lo) as f64, (best_exp + 1).min(cfg.hi) as f64);
    if cfg.gss_iters > 0 && b > a {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let mut fc = eval(c, &mut best)?;
        let mut fd = eval(d, &mut best)?;
        for _ in 0..cfg.gss_iters {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c, &mut best)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d, &mut best)?;
            }
        }
    }
    Ok(best.expect("checked above"))
}
