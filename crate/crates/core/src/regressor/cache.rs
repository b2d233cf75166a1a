//! Per-sample partial contractions to the left and right of the active core.

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::tensor::Matrix;
use crate::tt::TtTensor;

/// Encodes each input column with its feature map. Entry `n` is the
/// `M × S_n` matrix whose row `m` is `φ_n(x_n⁽ᵐ⁾)`, i.e. `Φ_nᵀ`.
pub fn encode_inputs(maps: &[FeatureMap], x: &Matrix) -> Result<Vec<Matrix>> {
    if maps.len() != x.cols() {
        return Err(Error::Shape(format!("{} feature maps for {} input columns", maps.len(), x.cols())));
    }
    maps.iter()
        .enumerate()
        .map(|(n, map)| Ok(map.encode_batch(&x.column(n))?.transpose()))
        .collect()
}

/// Left caches `P⁻` and right caches `P⁺` for one set of inputs.
///
/// `left(k)` is `M × R_k`: row `m` contracts cores `0..k` with the sample's
/// features. `right(k)` is `M × R_{k+1}`: the contraction of cores `k+1..N`.
/// Both are stored sample-major (the transpose of the `R × M` layout).
#[derive(Debug, Clone)]
pub struct SweepCache {
    phis: Vec<Matrix>,
    left: Vec<Matrix>,
    right: Vec<Matrix>,
    /// `left[0..=left_ready]` are current.
    left_ready: usize,
    /// `right[right_ready..]` are current.
    right_ready: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl SweepCache {
    /// Builds every right cache by the backward recursion; the left side
    /// holds only the boundary row of ones.
    pub fn new(tt: &TtTensor, phis: Vec<Matrix>) -> Result<Self> {
        let n = tt.order();
        if phis.len() != n {
            return Err(Error::Shape(format!("{} encoded inputs for an order-{n} TT", phis.len())));
        }
        let m = phis[0].rows();
        for (k, (phi, s)) in phis.iter().zip(tt.dims()).enumerate() {
            if phi.cols() != s || phi.rows() != m {
                return Err(Error::Shape(format!(
                    "encoded input {k} is {}x{}, expected {m}x{s}",
                    phi.rows(),
                    phi.cols()
                )));
            }
        }
        let ones = Matrix::from_fn(m, 1, |_, _| 1.0);
        let mut cache = Self {
            phis,
            left: vec![ones.clone(); n],
            right: vec![ones; n],
            left_ready: 0,
            right_ready: n - 1,
        };
        for k in (1..n).rev() {
            cache.advance(tt, Direction::RightToLeft, k)?;
        }
        Ok(cache)
    }

    pub fn samples(&self) -> usize {
        self.phis[0].rows()
    }

    pub fn phi(&self, k: usize) -> &Matrix {
        &self.phis[k]
    }

    pub fn left(&self, k: usize) -> &Matrix {
        &self.left[k]
    }

    pub fn right(&self, k: usize) -> &Matrix {
        &self.right[k]
    }

    pub fn is_current(&self, k: usize) -> bool {
        k <= self.left_ready && k >= self.right_ready
    }

    /// Marks caches depending on core `k` as stale.
    pub fn invalidate(&mut self, k: usize) {
        self.left_ready = self.left_ready.min(k);
        self.right_ready = self.right_ready.max(k);
    }

    /// Moves the active position past core `k`: left-to-right computes
    /// `left(k+1)` from `left(k)`, right-to-left computes `right(k-1)`
    /// from `right(k)`. Cost `O(S·R²)` per sample.
    pub fn advance(&mut self, tt: &TtTensor, dir: Direction, k: usize) -> Result<()> {
        let core = tt.core(k);
        let [ra, s, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
        let g = core.data();
        let phi = &self.phis[k];
        let m = self.samples();
        match dir {
            Direction::LeftToRight => {
                if k + 1 >= tt.order() || self.left_ready < k {
                    return Err(Error::Training(format!("cannot advance left cache past core {k}")));
                }
                let prev = &self.left[k];
                let mut next = Matrix::zeros(m, rb);
                let mut tmp = vec![0.0; rb];
                for i in 0..m {
                    let (p, f) = (prev.row(i), phi.row(i));
                    let out = next.row_mut(i);
                    for (a, &pa) in p.iter().enumerate().take(ra) {
                        tmp.iter_mut().for_each(|t| *t = 0.0);
                        for (si, &fs) in f.iter().enumerate() {
                            let row = &g[(a * s + si) * rb..(a * s + si + 1) * rb];
                            for (t, &gv) in tmp.iter_mut().zip(row) {
                                *t += fs * gv;
                            }
                        }
                        for (o, &t) in out.iter_mut().zip(&tmp) {
                            *o += pa * t;
                        }
                    }
                }
                self.left[k + 1] = next;
                self.left_ready = k + 1;
            }
            Direction::RightToLeft => {
                if k == 0 || self.right_ready > k {
                    return Err(Error::Training(format!("cannot advance right cache past core {k}")));
                }
                let prev = &self.right[k];
                let mut next = Matrix::zeros(m, ra);
                for i in 0..m {
                    let (p, f) = (prev.row(i), phi.row(i));
                    let out = next.row_mut(i);
                    for (a, o) in out.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (si, &fs) in f.iter().enumerate() {
                            let row = &g[(a * s + si) * rb..(a * s + si + 1) * rb];
                            acc += fs * row.iter().zip(p).map(|(x, y)| x * y).sum::<f64>();
                        }
                        *o = acc;
                    }
                }
                self.right[k - 1] = next;
                self.right_ready = k - 1;
            }
        }
        Ok(())
    }

    /// `P_k = (Φ_k ⋄ P⁻ ⋄ P⁺)ᵀ`: an `M × (S_k·R_k·R_{k+1})` matrix whose
    /// columns run over `(s, r_left, r_right)` with `s` slowest.
    pub fn design_matrix(&self, k: usize) -> Result<Matrix> {
        if !self.is_current(k) {
            return Err(Error::Training(format!("stale cache at core {k}")));
        }
        let (phi, l, r) = (&self.phis[k], &self.left[k], &self.right[k]);
        let (s, ra, rb) = (phi.cols(), l.cols(), r.cols());
        let m = self.samples();
        let mut p = Matrix::zeros(m, s * ra * rb);
        for i in 0..m {
            let (f, lr, rr) = (phi.row(i), l.row(i), r.row(i));
            let out = p.row_mut(i);
            let mut c = 0;
            for &fs in f {
                for &la in lr {
                    let w = fs * la;
                    for &rv in rr {
                        out[c] = w * rv;
                        c += 1;
                    }
                }
            }
        }
        Ok(p)
    }

    /// Predictions of the current TT, `P_k·vec(G_k)`, without forming `P_k`.
    pub fn predict_at(&self, tt: &TtTensor, k: usize) -> Result<Vec<f64>> {
        if !self.is_current(k) {
            return Err(Error::Training(format!("stale cache at core {k}")));
        }
        let core = tt.core(k);
        let [ra, s, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
        let g = core.data();
        let (phi, l, r) = (&self.phis[k], &self.left[k], &self.right[k]);
        Ok((0..self.samples())
            .map(|i| {
                let (f, lr, rr) = (phi.row(i), l.row(i), r.row(i));
                let mut acc = 0.0;
                for (a, &la) in lr.iter().enumerate().take(ra) {
                    for (si, &fs) in f.iter().enumerate() {
                        let row = &g[(a * s + si) * rb..(a * s + si + 1) * rb];
                        acc += la * fs * row.iter().zip(rr).map(|(x, y)| x * y).sum::<f64>();
                    }
                }
                acc
            })
            .collect())
    }
}
