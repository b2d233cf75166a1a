//! Scalar feature encodings and min-max input scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Encoding `φ: ℝ → ℝ^S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureMap {
    /// `(1, x, x², …, x^{S-1})`.
    Polynomial { dim: usize },
    /// `(1, x, ln x)`, defined for `x > 0`.
    Exponential,
}

impl FeatureMap {
    pub fn polynomial(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("polynomial feature dimension must be >= 1".into()));
        }
        Ok(Self::Polynomial { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Polynomial { dim } => *dim,
            Self::Exponential => 3,
        }
    }

    /// Writes `φ(x)` into `out` (length [`FeatureMap::dim`]).
    fn encode_into(&self, x: f64, row: usize, out: &mut [f64]) -> Result<()> {
        match self {
            Self::Polynomial { .. } => {
                let mut v = 1.0;
                for o in out.iter_mut() {
                    *o = v;
                    v *= x;
                }
            }
            Self::Exponential => {
                if !(x > 0.0) {
                    return Err(Error::Domain { row, msg: format!("logarithm of non-positive input {x}") });
                }
                out.copy_from_slice(&[1.0, x, x.ln()]);
            }
        }
        Ok(())
    }

    pub fn encode(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.encode_into(x, 0, &mut out)?;
        Ok(out)
    }

    /// `Φ = [φ(x⁽¹⁾) ⋯ φ(x⁽ᴹ⁾)]`, an `S × M` matrix.
    pub fn encode_batch(&self, xs: &[f64]) -> Result<Matrix> {
        let (s, m) = (self.dim(), xs.len());
        let mut phi = Matrix::zeros(s, m);
        let mut col = vec![0.0; s];
        for (j, &x) in xs.iter().enumerate() {
            self.encode_into(x, j, &mut col)?;
            for (i, &v) in col.iter().enumerate() {
                phi[(i, j)] = v;
            }
        }
        Ok(phi)
    }
}

/// Per-column affine map sending the training min to −1 and max to +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    /// Fit on the rows of `x` (samples × inputs). Pass only training rows.
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Data("cannot fit a scaler on zero rows".into()));
        }
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for i in 0..x.rows() {
            for (j, &v) in x.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        if let Some(j) = (0..x.cols()).find(|&j| !(max[j] > min[j])) {
            return Err(Error::DegenerateScale(j));
        }
        Ok(Self { min, max })
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.min.len() {
            return Err(Error::Shape(format!("scaler fitted on {} columns, got {}", self.min.len(), x.cols())));
        }
        Ok(())
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            2.0 * (x[(i, j)] - self.min[j]) / (self.max[j] - self.min[j]) - 1.0
        }))
    }

    pub fn inverse(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x[(i, j)] + 1.0) * 0.5 * (self.max[j] - self.min[j]) + self.min[j]
        }))
    }
}
