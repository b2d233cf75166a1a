//! Tensor-train multilinear regression.
//!
//! A regression model `ŷ = ⟨W, φ(x₁) ∘ ⋯ ∘ φ(x_N)⟩` whose weight tensor `W`
//! is kept in tensor-train form and trained one core at a time by ridge
//! regression, plus a one-hidden-layer perceptron for comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datasets;
pub mod error;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod mlp;
pub mod regressor;
pub mod report;
pub mod tensor;
pub mod tt;

pub use error::{Error, Result};
pub use features::{FeatureMap, Scaler};
pub use datasets::{Samples, Split};
pub use metrics::MetricReport;
pub use mlp::{Activation, Mlp};
pub use regressor::{fit, TrainConfig, TtRegressor};
pub use report::FitReport;
pub use tensor::{DenseTensor, Matrix};
pub use tt::TtTensor;
