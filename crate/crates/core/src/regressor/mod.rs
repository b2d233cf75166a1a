//! Alternating ridge regression over the cores of a TT weight tensor.
//!
//! Each core update solves `min ‖y − P_k θ‖² + λ·M·‖L_k θ‖²`, where `P_k`
//! is the design matrix built from cached partial contractions and
//! `‖L_k θ‖ = ‖W‖_F`. After each solve the core is orthogonalized by QR and
//! the triangular factor is pushed into the next core in the sweep direction.

mod cache;
mod lambda;

use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

pub use cache::{encode_inputs, Direction, SweepCache};
pub use lambda::{log_search, Evaluation, LogSearch};

use crate::datasets::Samples;
use crate::error::{Error, Result};
use crate::features::{FeatureMap, Scaler};
use crate::linalg::{cholesky_solve_jittered, gram_factor, gsvd, qr_pivoted, GsvdFactors};
use crate::metrics::mse;
use crate::report::{EarlyStop, EpochLoss, FitReport, TraceRow};
use crate::tensor::{kronecker, DenseTensor, Matrix};
use crate::tt::TtTensor;

/// How the ridge parameter is chosen for each core solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// Grid scan plus golden-section search on the validation loss.
    Search(LogSearch),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Generalized SVD of `(P_k, L_k)`, refactored once per core and reused
    /// across λ. Falls back to `Direct` when the pair is rank deficient or
    /// has fewer samples than unknowns.
    Gsvd,
    /// Normal equations with a Cholesky solve per λ.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub maps: Vec<FeatureMap>,
    pub rank_cap: usize,
    pub lambda: LambdaMode,
    pub solver: SolverKind,
    /// Budget in sweeps; one sweep is one pass in one direction.
    pub max_sweeps: usize,
    pub tol: f64,
    pub patience_frac: f64,
    /// Right-orthogonalize the random initial train before the first sweep.
    pub orthogonalize_init: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(maps: Vec<FeatureMap>, rank_cap: usize) -> Self {
        Self {
            maps,
            rank_cap,
            lambda: LambdaMode::Search(LogSearch::default()),
            solver: SolverKind::Gsvd,
            max_sweeps: 12,
            tol: 1e-6,
            patience_frac: 0.2,
            orthogonalize_init: true,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.maps.is_empty() {
            return Err(Error::Config("at least one feature map is required".into()));
        }
        if self.rank_cap == 0 {
            return Err(Error::Config("rank cap must be >= 1".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max sweeps must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("stop tolerance must be > 0".into()));
        }
        if let LambdaMode::Fixed(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("fixed lambda must be finite and >= 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// The ridge penalty at core `k`: `L_k = I_S ⊗ (G̃⁻ ⊗ G̃⁺)`, held through the
/// interface Gram matrices so `L_k` itself is never formed.
#[derive(Debug, Clone)]
pub struct Regularizer {
    s: usize,
    gram_left: Matrix,
    gram_right: Matrix,
}

impl Regularizer {
    pub fn new(tt: &TtTensor, k: usize) -> Self {
        let (gram_left, gram_right) = tt.interface_grams(k);
        Self { s: tt.dims()[k], gram_left, gram_right }
    }

    /// Densified `L_k` from the explicit interfaces; exponential in `N`.
    pub fn explicit(tt: &TtTensor, k: usize) -> Matrix {
        let pair = tt.interfaces(k);
        kronecker(&Matrix::identity(tt.dims()[k]), &kronecker(&pair.left, &pair.right))
    }

    /// `BᵀB = (G̃⁻ᵀG̃⁻) ⊗ (G̃⁺ᵀG̃⁺)`.
    pub fn block_gram(&self) -> Matrix {
        kronecker(&self.gram_left, &self.gram_right)
    }

    /// `L_kᵀL_k = I_S ⊗ BᵀB`.
    pub fn gram(&self) -> Matrix {
        kronecker(&Matrix::identity(self.s), &self.block_gram())
    }

    /// Square `F` with `FᵀF = L_kᵀL_k`; interchangeable with `L_k` in the solves.
    pub fn factor(&self) -> Result<Matrix> {
        let f = kronecker(&gram_factor(&self.gram_left)?, &gram_factor(&self.gram_right)?);
        Ok(kronecker(&Matrix::identity(self.s), &f))
    }
}

/// Right-hand side machinery for one core, reusable across λ.
enum CoreSolver {
    Gsvd { factors: GsvdFactors, uty: Vec<f64> },
    Direct { ptp: Matrix, pty: Vec<f64>, ltl: Matrix },
}

impl CoreSolver {
    fn new(kind: SolverKind, p: &Matrix, reg: &Regularizer, y: &[f64], fallbacks: &mut usize) -> Result<Self> {
        if kind == SolverKind::Gsvd {
            match gsvd(p, &reg.factor()?) {
                Ok(factors) => {
                    let uty = factors.project(y)?;
                    return Ok(Self::Gsvd { factors, uty });
                }
                Err(e @ (Error::SingularPair { .. } | Error::Underdetermined { .. })) => {
                    debug!("GSVD unavailable ({e}); using normal equations");
                    *fallbacks += 1;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Self::Direct { ptp: p.t_matmul(p)?, pty: p.t_matvec(y)?, ltl: reg.gram() })
    }

    fn solve(&self, lambda: f64, m: usize) -> Result<Vec<f64>> {
        match self {
            Self::Gsvd { factors, uty } => Ok(factors.solve_projected(uty, lambda, m)),
            Self::Direct { ptp, pty, ltl } => {
                let mut a = ptp.clone();
                let scale = lambda * m as f64;
                for (x, v) in a.data_mut().iter_mut().zip(ltl.data()) {
                    *x += scale * v;
                }
                cholesky_solve_jittered(a, pty)
            }
        }
    }
}

/// QR-orthogonalizes core `k` and moves the triangular factor into the
/// neighbour in the sweep direction. Ranks are truncated to the numerical
/// rank of the unfolding, which leaves the represented tensor unchanged.
/// Returns the new bond rank.
pub fn orthogonalize_and_shift(tt: &mut TtTensor, k: usize, dir: Direction) -> Result<usize> {
    let core = tt.core(k);
    let [ra, s, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
    match dir {
        Direction::LeftToRight => {
            if k + 1 >= tt.order() {
                return Err(Error::Training(format!("no core to the right of {k}")));
            }
            let a = Matrix::from_vec(ra * s, rb, core.data().to_vec())?;
            let f = qr_pivoted(&a);
            let r = f.rank.max(1).min(f.q.cols());
            let q = f.q.top_left(ra * s, r);
            let rmat = f.r_unpermuted().top_left(r, rb);
            let next = tt.core(k + 1);
            let (s2, rc) = (next.shape()[1], next.shape()[2]);
            let merged = rmat.matmul(&Matrix::from_vec(rb, s2 * rc, next.data().to_vec())?)?;
            tt.replace_pair(
                k,
                DenseTensor::from_vec(&[ra, s, r], q.into_data())?,
                DenseTensor::from_vec(&[r, s2, rc], merged.into_data())?,
            )?;
            Ok(r)
        }
        Direction::RightToLeft => {
            if k == 0 {
                return Err(Error::Training("no core to the left of 0".into()));
            }
            let a = Matrix::from_vec(ra, s * rb, core.data().to_vec())?.transpose();
            let f = qr_pivoted(&a);
            let r = f.rank.max(1).min(f.q.cols());
            let qt = f.q.top_left(s * rb, r).transpose();
            let rmat_t = f.r_unpermuted().top_left(r, ra).transpose();
            let prev = tt.core(k - 1);
            let (rp, sp) = (prev.shape()[0], prev.shape()[1]);
            let merged = Matrix::from_vec(rp * sp, ra, prev.data().to_vec())?.matmul(&rmat_t)?;
            tt.replace_pair(
                k - 1,
                DenseTensor::from_vec(&[rp, sp, r], merged.into_data())?,
                DenseTensor::from_vec(&[r, s, rb], qt.into_data())?,
            )?;
            Ok(r)
        }
    }
}

/// Writes `θ = vec(G_2)` back as an `R_k × S_k × R_{k+1}` core.
fn core_from_theta(shape: &[usize], theta: &[f64]) -> Result<DenseTensor> {
    let (ra, s, rb) = (shape[0], shape[1], shape[2]);
    if theta.len() != ra * s * rb {
        return Err(Error::Shape(format!("θ has {} entries for a core of {}", theta.len(), ra * s * rb)));
    }
    DenseTensor::from_fn(shape, |i| theta[(i[1] * ra + i[0]) * rb + i[2]])
}

/// `vec(G_2)` of core `k`: ordered by `s`, then left rank, then right rank.
pub fn theta_of(tt: &TtTensor, k: usize) -> Vec<f64> {
    tt.core(k).unfold(1).expect("cores have order 3").into_data()
}

/// A trained model: TT weights plus the feature maps that encode inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TtRegressor {
    pub tt: TtTensor,
    pub maps: Vec<FeatureMap>,
}

impl TtRegressor {
    /// `ŷ⁽ᵐ⁾ = W ×₁ φ(x₁⁽ᵐ⁾) ⋯ ×_N φ(x_N⁽ᵐ⁾)` on already scaled inputs.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        predict(&self.tt, &self.maps, x)
    }

    pub fn predict_raw(&self, scaler: &Scaler, raw: &Matrix) -> Result<Vec<f64>> {
        self.predict(&scaler.apply(raw)?)
    }
}

/// Per-sample left-to-right contraction; `W` is never densified.
pub fn predict(tt: &TtTensor, maps: &[FeatureMap], x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != tt.order() || maps.len() != tt.order() {
        return Err(Error::Shape(format!(
            "input width {} and {} maps for an order-{} model",
            x.cols(),
            maps.len(),
            tt.order()
        )));
    }
    let mut out = Vec::with_capacity(x.rows());
    let mut phi = Vec::new();
    for i in 0..x.rows() {
        let mut v = vec![1.0];
        for (n, (core, map)) in tt.cores().iter().zip(maps).enumerate() {
            let [ra, s, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
            phi.clear();
            phi.extend(map.encode(x[(i, n)]).map_err(|e| match e {
                Error::Domain { msg, .. } => Error::Domain { row: i, msg },
                e => e,
            })?);
            let g = core.data();
            let mut next = vec![0.0; rb];
            for (a, &va) in v.iter().enumerate().take(ra) {
                for (si, &fs) in phi.iter().enumerate().take(s) {
                    let w = va * fs;
                    for (o, &gv) in next.iter_mut().zip(&g[(a * s + si) * rb..(a * s + si + 1) * rb]) {
                        *o += w * gv;
                    }
                }
            }
            v = next;
        }
        out.push(v[0]);
    }
    Ok(out)
}

/// A TT whose prediction is `value` for every input (every map has `φ₀ = 1`).
fn constant_tt(dims: &[usize], cap: usize, value: f64) -> Result<TtTensor> {
    TtTensor::from_fn(dims, cap, |n, a, s, b| {
        if a == 0 && s == 0 && b == 0 {
            if n == 0 {
                value
            } else {
                1.0
            }
        } else {
            0.0
        }
    })
}

fn check_samples(name: &str, d: &Samples, width: usize) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Data(format!("{name} split is empty")));
    }
    if d.x.cols() != width {
        return Err(Error::Shape(format!("{name} inputs have {} columns, expected {width}", d.x.cols())));
    }
    if !d.x.is_finite() || !d.y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("training data"));
    }
    Ok(())
}

struct CoreStep {
    lambda: f64,
    train: Vec<f64>,
    val: Vec<f64>,
}

/// Solves for core `k` given current caches, writes it into `tt`.
fn update_core(
    tt: &mut TtTensor,
    k: usize,
    train: (&SweepCache, &[f64]),
    val: (&SweepCache, &[f64]),
    cfg: &TrainConfig,
    fallbacks: &mut usize,
) -> Result<CoreStep> {
    let (tc, y) = train;
    let (vc, yv) = val;
    let p = tc.design_matrix(k)?;
    let pv = vc.design_matrix(k)?;
    let reg = Regularizer::new(tt, k);
    let solver = CoreSolver::new(cfg.solver, &p, &reg, y, fallbacks)?;
    let m = y.len();
    let lambda = match cfg.lambda {
        LambdaMode::Fixed(l) => l,
        LambdaMode::Search(search) => {
            log_search(&search, |l| match solver.solve(l, m) {
                Ok(theta) => mse(yv, &pv.matvec(&theta)?),
                Err(Error::Singular(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            })?
            .value
        }
    };
    let theta = solver.solve(lambda, m)?;
    if !theta.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("core solution"));
    }
    let shape = tt.core(k).shape().to_vec();
    tt.set_core(k, core_from_theta(&shape, &theta)?)?;
    Ok(CoreStep { lambda, train: p.matvec(&theta)?, val: pv.matvec(&theta)? })
}

/// Trains a TT model on `train`, selecting λ and stopping on `val`.
///
/// Inputs must already be scaled to the feature maps' domain. The returned
/// model is the snapshot with the lowest validation loss over all sweeps.
pub fn fit(train: &Samples, val: &Samples, cfg: &TrainConfig) -> Result<(TtRegressor, FitReport)> {
    let start = Instant::now();
    cfg.validate()?;
    let n = cfg.maps.len();
    check_samples("training", train, n)?;
    check_samples("validation", val, n)?;
    let dims: Vec<usize> = cfg.maps.iter().map(FeatureMap::dim).collect();
    let mut report = FitReport::default();

    let mean = train.y.iter().sum::<f64>() / train.len() as f64;
    if train.y.iter().all(|&v| v == train.y[0]) {
        warn!("constant training target; returning the mean predictor");
        let tt = constant_tt(&dims, cfg.rank_cap, mean)?;
        report.degenerate = true;
        report.ranks = tt.ranks();
        report.wall_time_secs = start.elapsed().as_secs_f64();
        return Ok((TtRegressor { tt, maps: cfg.maps.clone() }, report));
    }

    let mut tt = TtTensor::random_init(&dims, cfg.rank_cap, cfg.seed)?;
    if cfg.orthogonalize_init {
        for k in (1..n).rev() {
            orthogonalize_and_shift(&mut tt, k, Direction::RightToLeft)?;
        }
    }
    let mut tc = SweepCache::new(&tt, encode_inputs(&cfg.maps, &train.x)?)?;
    let mut vc = SweepCache::new(&tt, encode_inputs(&cfg.maps, &val.x)?)?;

    let initial_val = mse(&val.y, &vc.predict_at(&tt, 0)?)?;
    let mut best = (initial_val, tt.clone(), 0usize);
    let mut stop = EarlyStop::new(cfg.tol, cfg.patience_frac, cfg.max_sweeps);

    for sweep in 1..=cfg.max_sweeps {
        let dir = if sweep % 2 == 1 { Direction::LeftToRight } else { Direction::RightToLeft };
        let positions: Vec<usize> = match (n, dir) {
            (1, _) => vec![0],
            (_, Direction::LeftToRight) => (0..n - 1).collect(),
            (_, Direction::RightToLeft) => (1..n).rev().collect(),
        };
        let mut last = EpochLoss { train_mse: f64::NAN, val_mse: f64::NAN };
        for k in positions {
            let step = update_core(&mut tt, k, (&tc, &train.y), (&vc, &val.y), cfg, &mut report.fallbacks)?;
            last = EpochLoss { train_mse: mse(&train.y, &step.train)?, val_mse: mse(&val.y, &step.val)? };
            report.trace.push(TraceRow {
                sweep,
                core: Some(k),
                lambda: step.lambda,
                train_mse: last.train_mse,
                val_mse: last.val_mse,
            });
            if n == 1 {
                continue;
            }
            orthogonalize_and_shift(&mut tt, k, dir)?;
            let neighbour = if dir == Direction::LeftToRight { k + 1 } else { k - 1 };
            for c in [&mut tc, &mut vc] {
                c.invalidate(k);
                c.invalidate(neighbour);
                c.advance(&tt, dir, k)?;
            }
        }
        if !last.val_mse.is_finite() || !last.train_mse.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        debug!("sweep {sweep}: train {:.3e} val {:.3e}", last.train_mse, last.val_mse);
        report.epochs.push(last);
        if last.val_mse < best.0 {
            best = (last.val_mse, tt.clone(), sweep);
        }
        if stop.update(last.val_mse) {
            report.stopped_at = Some(sweep);
            break;
        }
    }

    let (_, tt, best_sweep) = best;
    report.best_epoch = best_sweep;
    report.ranks = tt.ranks();
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok((TtRegressor { tt, maps: cfg.maps.clone() }, report))
}
