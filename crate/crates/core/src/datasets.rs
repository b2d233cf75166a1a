//! Series generation, windowing, splitting and CSV I/O.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate, NaiveDateTime};
use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMap, Scaler};
use crate::mlp::{Activation, Mlp};
use crate::regressor::predict;
use crate::tensor::Matrix;
use crate::tt::TtTensor;

/// Inputs (`M × N`) and targets (`M`).
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl Samples {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Shape(format!("{} input rows for {} targets", x.rows(), y.len())));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Samples {
        let x = Matrix::from_fn(rows.len(), self.x.cols(), |i, j| self.x[(rows[i], j)]);
        Samples { x, y: rows.iter().map(|&r| self.y[r]).collect() }
    }

    /// Header `x0,…,x{N-1},y`, one row per sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.x.cols()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.x.row(i).iter().map(f64::to_string).collect();
            row.push(self.y[i].to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Mackey-Glass parameters: `dx/dt = a·x(t−τ)/(1 + x(t−τ)ⁿ) − b·x(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeriesSpec {
    pub a: f64,
    pub b: f64,
    pub n: f64,
    pub tau: f64,
    /// Integration step; samples are taken every 1.0 time units.
    pub dt: f64,
    pub x0: f64,
    pub length: usize,
    /// Leading samples discarded before `length` are kept.
    pub transient: usize,
    pub noise_sd: f64,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        Self { a: 0.2, b: 0.1, n: 10.0, tau: 17.0, dt: 1.0, x0: 1.2, length: 1000, transient: 100, noise_sd: 0.0 }
    }
}

impl SeriesSpec {
    pub fn is_chaotic(&self) -> bool {
        self.tau >= 17.0
    }
}

/// Cubic Hermite interpolation on `[0, 1]` with endpoint slopes scaled by `h`.
fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * x0 + (t3 - 2.0 * t2 + t) * h * f0 + (-2.0 * t3 + 3.0 * t2) * x1 + (t3 - t2) * h * f1
}

/// RK4 integration of the delay equation on the grid `t = i·dt`,
/// `i = 0..=steps`, with constant history `x(t) = x0` for `t ≤ 0`.
///
/// Delayed values between grid points come from cubic Hermite interpolation
/// of the stored states and derivatives.
pub fn integrate_mackey_glass(spec: &SeriesSpec, steps: usize) -> Vec<f64> {
    let SeriesSpec { a, b, n, tau, dt, x0, .. } = *spec;
    let rhs = |x: f64, xd: f64| a * xd / (1.0 + xd.powf(n)) - b * x;
    let mut xs = Vec::with_capacity(steps + 1);
    let mut fs: Vec<f64> = Vec::with_capacity(steps + 1);
    xs.push(x0);

    let delayed = |t: f64, xs: &[f64], fs: &[f64]| -> f64 {
        let s = (t - tau) / dt;
        if s <= 0.0 {
            return x0;
        }
        let i = s.floor() as usize;
        let frac = s - i as f64;
        if frac < 1e-12 {
            return xs[i];
        }
        if 1.0 - frac < 1e-12 {
            return xs[i + 1];
        }
        hermite(xs[i], xs[i + 1], fs[i], fs[i + 1], dt, frac)
    };

    for i in 0..steps {
        let t = i as f64 * dt;
        let x = xs[i];
        let k1 = rhs(x, delayed(t, &xs, &fs));
        fs.push(k1);
        let dm = delayed(t + 0.5 * dt, &xs, &fs);
        let k2 = rhs(x + 0.5 * dt * k1, dm);
        let k3 = rhs(x + 0.5 * dt * k2, dm);
        let k4 = rhs(x + dt * k3, delayed(t + dt, &xs, &fs));
        xs.push(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    xs
}

/// Noise-free samples at integer times `transient..transient + length`.
pub fn mackey_glass_clean(spec: &SeriesSpec) -> Result<Vec<f64>> {
    if !(spec.dt > 0.0) || spec.tau < spec.dt {
        return Err(Error::Config(format!("need 0 < dt <= tau, got dt={} tau={}", spec.dt, spec.tau)));
    }
    let stride = (1.0 / spec.dt).round() as usize;
    if stride == 0 || ((stride as f64) * spec.dt - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("dt={} must divide the unit sample spacing", spec.dt)));
    }
    let total = spec.transient + spec.length;
    let grid = integrate_mackey_glass(spec, total * stride);
    Ok((spec.transient..total).map(|i| grid[i * stride]).collect())
}

/// The series rescaled to `[−1, 1]`, plus `N(0, σ²)` noise when `noise_sd > 0`.
pub fn mackey_glass(spec: &SeriesSpec, seed: u64) -> Result<Vec<f64>> {
    let mut series = normalize(&mackey_glass_clean(spec)?)?;
    if spec.noise_sd > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        series.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    Ok(series)
}

/// Affine map of `series` onto `[−1, 1]`.
pub fn normalize(series: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateScale(0));
    }
    Ok(series.iter().map(|v| 2.0 * (v - lo) / (hi - lo) - 1.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeacherSpec {
    pub inputs: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub samples: usize,
    pub weight_sd: f64,
}

impl TeacherSpec {
    pub fn new(activation: Activation) -> Self {
        Self { inputs: 10, hidden: 200, activation, samples: 10_000, weight_sd: 2.0 }
    }
}

/// Inputs `Uniform[−1, 1]^N`, targets from a random network with all
/// weights and biases `N(0, sd²)`.
pub fn teacher_mlp_data(spec: &TeacherSpec, seed: u64) -> Result<(Samples, Mlp)> {
    let teacher = Mlp::gaussian(spec.inputs, spec.hidden, spec.activation, spec.weight_sd, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let u = Uniform::new_inclusive(-1.0, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let x = Matrix::from_fn(spec.samples, spec.inputs, |_, _| u.sample(&mut rng));
    let y = teacher.predict(&x)?;
    Ok((Samples { x, y }, teacher))
}

/// A random TT weight tensor with polynomial feature maps of sizes `dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub samples: usize,
    pub noise_sd: f64,
}

impl PlantedSpec {
    pub fn new(dims: Vec<usize>, rank: usize, samples: usize) -> Self {
        Self { dims, rank, samples, noise_sd: 0.0 }
    }
}

/// Inputs `Uniform[−1, 1]^N`, targets from a randomly initialized TT model
/// plus optional `N(0, noise_sd²)` noise.
pub fn planted_tt_data(spec: &PlantedSpec, seed: u64) -> Result<(Samples, TtTensor)> {
    let teacher = TtTensor::random_init(&spec.dims, spec.rank, seed)?;
    let maps = spec.dims.iter().map(|&s| FeatureMap::polynomial(s)).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let u = Uniform::new_inclusive(-1.0, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let x = Matrix::from_fn(spec.samples, spec.dims.len(), |_, _| u.sample(&mut rng));
    let mut y = predict(&teacher, &maps, &x)?;
    if spec.noise_sd > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Config(e.to_string()))?;
        y.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    Ok((Samples { x, y }, teacher))
}

/// Lag layout: row `t` holds `x(t−(L−1)Δ), …, x(t−Δ), x(t)` and the target `x(t+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub spacing: usize,
    pub lags: usize,
    pub horizon: usize,
}

impl WindowSpec {
    pub fn new(spacing: usize, horizon: usize) -> Self {
        Self { spacing, lags: 4, horizon }
    }

    /// First usable (0-based) time index.
    pub fn first_index(&self) -> usize {
        (self.lags - 1) * self.spacing
    }
}

pub fn build_windows(series: &[f64], w: &WindowSpec) -> Result<Samples> {
    if w.lags == 0 || w.spacing == 0 || w.horizon == 0 {
        return Err(Error::Config("window spacing, lags and horizon must be >= 1".into()));
    }
    let first = w.first_index();
    if series.len() <= first + w.horizon {
        return Err(Error::Data(format!(
            "series of length {} is too short for lag span {first} and horizon {}",
            series.len(),
            w.horizon
        )));
    }
    let ts: Vec<usize> = (first..series.len() - w.horizon).collect();
    let x = Matrix::from_fn(ts.len(), w.lags, |i, j| series[ts[i] - (w.lags - 1 - j) * w.spacing]);
    let y = ts.iter().map(|&t| series[t + w.horizon]).collect();
    Ok(Samples { x, y })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random disjoint partition of `0..m` with sizes `round(r₀m)`, `round(r₁m)`
/// and the remainder.
pub fn split_indices(m: usize, ratios: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (a, b, c) = ratios;
    if a < 0.0 || b < 0.0 || c < 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let n_train = (a * m as f64).round() as usize;
    let n_val = ((b * m as f64).round() as usize).min(m - n_train.min(m));
    if n_train == 0 || n_val == 0 || n_train + n_val >= m {
        return Err(Error::Data(format!("{m} samples are too few for a three-way split")));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(SplitIndices { train: idx, val, test })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Samples,
    pub val: Samples,
    pub test: Samples,
}

impl Split {
    pub fn new(data: &Samples, ratios: (f64, f64, f64), seed: u64) -> Result<Self> {
        let idx = split_indices(data.len(), ratios, seed)?;
        Ok(Self { train: data.select(&idx.train), val: data.select(&idx.val), test: data.select(&idx.test) })
    }

    /// Min-max scales inputs to `[−1, 1]` using training rows only.
    pub fn scaled(&self) -> Result<(Split, Scaler)> {
        let scaler = Scaler::fit(&self.train.x)?;
        let apply = |s: &Samples| -> Result<Samples> { Ok(Samples { x: scaler.apply(&s.x)?, y: s.y.clone() }) };
        Ok((Split { train: apply(&self.train)?, val: apply(&self.val)?, test: apply(&self.test)? }, scaler))
    }
}

/// Column names for [`ingest_csv`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvColumns {
    pub date: String,
    pub close: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self { date: "date".into(), close: "close".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub close: Vec<f64>,
    /// Rows skipped because the close value was missing.
    pub dropped: usize,
}

fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S").ok().map(|d| d.date()))
        .or_else(|| chrono::DateTime::parse_from_rfc3339(text).ok().map(|d| d.date_naive()))
}

/// Reads a `date`/`close` table, drops rows with a missing close
/// (empty, `null`, `NaN`) and returns the prices in chronological order.
/// Column names are matched case-insensitively.
pub fn read_price_csv<R: Read>(reader: R, cols: &CsvColumns) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing column '{name}'") })
    };
    let (di, ci) = (find(&cols.date)?, find(&cols.close)?);
    let mut rows = Vec::new();
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse { line, msg: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let date_text = rec.get(di).unwrap_or("");
        let date = parse_date(date_text)
            .ok_or_else(|| Error::Parse { line, msg: format!("unparseable date '{date_text}'") })?;
        let close_text = rec.get(ci).unwrap_or("");
        if close_text.is_empty() || close_text.eq_ignore_ascii_case("null") || close_text.eq_ignore_ascii_case("nan") {
            dropped += 1;
            continue;
        }
        let close: f64 = close_text
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("unparseable close '{close_text}'") })?;
        if !close.is_finite() {
            return Err(Error::Parse { line, msg: format!("non-finite close '{close_text}'") });
        }
        rows.push((date, close));
    }
    if dropped > 0 {
        warn!("dropped {dropped} rows with missing close values");
    }
    rows.sort_by_key(|r| r.0);
    let (dates, close) = rows.into_iter().unzip();
    Ok(PriceSeries { dates, close, dropped })
}

pub fn ingest_csv(path: &Path, cols: &CsvColumns) -> Result<PriceSeries> {
    read_price_csv(std::fs::File::open(path)?, cols)
}

/// Writes a series in the ingestible `date,close` shape; without dates,
/// consecutive days from 2000-01-01 are used.
pub fn write_series_csv<W: Write>(w: W, dates: Option<&[NaiveDate]>, values: &[f64]) -> Result<()> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["date", "close"])?;
    for (i, v) in values.iter().enumerate() {
        let d = match dates {
            Some(d) => d[i],
            None => start.checked_add_days(Days::new(i as u64)).expect("date in range"),
        };
        out.write_record([d.format("%Y-%m-%d").to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn pure_decay_without_feedback() {
        let spec = SeriesSpec { a: 0.0, ..Default::default() };
        let xs = integrate_mackey_glass(&spec, 10);
        assert!((xs[10] - 1.2 * (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn series_is_deterministic_bounded_and_aperiodic() {
        let spec = SeriesSpec::default();
        assert!(spec.is_chaotic());
        let a = mackey_glass_clean(&spec).unwrap();
        assert_eq!(a, mackey_glass_clean(&spec).unwrap());
        assert_eq!(a.len(), 1000);
        assert!(a.iter().all(|v| v.is_finite() && *v > 0.0 && *v < 2.0));
        // No exact-period repeat: for every lag some pair differs by more than 1e-6.
        for p in 1..500 {
            assert!((0..a.len() - p).any(|i| (a[i] - a[i + p]).abs() > 1e-6), "period {p}");
        }
    }

    #[test]
    fn rk4_self_convergence_is_fourth_order() {
        let at = |dt: f64| {
            let spec = SeriesSpec { dt, ..Default::default() };
            let steps = (100.0 / dt).round() as usize;
            integrate_mackey_glass(&spec, steps)[steps]
        };
        let reference = at(0.0625);
        let e1 = (at(0.5) - reference).abs();
        let e2 = (at(0.25) - reference).abs();
        let ratio = e1 / e2;
        assert!((10.0..24.0).contains(&ratio), "error ratio {ratio} ({e1:e} / {e2:e})");
    }

    #[test]
    fn noise_after_normalization() {
        let clean = mackey_glass(&SeriesSpec::default(), 0).unwrap();
        let lo = clean.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = clean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let spec = SeriesSpec { noise_sd: 0.1, ..Default::default() };
        let a = mackey_glass(&spec, 5).unwrap();
        assert_eq!(a, mackey_glass(&spec, 5).unwrap());
        assert_ne!(a, mackey_glass(&spec, 6).unwrap());
        let resid: Vec<f64> = a.iter().zip(&clean).map(|(x, y)| x - y).collect();
        let sd = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
        assert!((sd - 0.1).abs() < 0.01, "noise sd {sd}");
    }

    #[test]
    fn window_boundaries_and_alignment() {
        let series: Vec<f64> = (1..=100).map(f64::from).collect();
        let w = WindowSpec::new(6, 6);
        let d = build_windows(&series, &w).unwrap();
        // First row uses t = 19 (1-based): x(1), x(7), x(13), x(19) → x(25).
        assert_eq!(d.x.row(0), &[1.0, 7.0, 13.0, 19.0]);
        assert_eq!(d.y[0], 25.0);
        assert_eq!(d.len(), 100 - 18 - 6);
        for i in 0..d.len() {
            let t = d.x[(i, 3)] as usize;
            assert_eq!(d.y[i], series[t - 1 + 6]);
        }
        let ar = build_windows(&series, &WindowSpec::new(1, 1)).unwrap();
        assert_eq!(ar.x.row(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ar.y[0], 5.0);
        let flat = build_windows(&[2.5; 40], &w).unwrap();
        assert!(flat.x.data().iter().chain(&flat.y).all(|&v| v == 2.5));
        assert!(build_windows(&series[..24], &w).is_err());
    }

    #[test]
    fn split_sizes_partition_and_seeds() {
        let s = split_indices(10, (0.6, 0.2, 0.2), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        let s = split_indices(997, (0.6, 0.2, 0.2), 1).unwrap();
        let all: HashSet<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        assert_eq!(all.len(), 997);
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 997);
        assert_eq!(s, split_indices(997, (0.6, 0.2, 0.2), 1).unwrap());
        let other = split_indices(997, (0.6, 0.2, 0.2), 2).unwrap();
        assert_ne!(s.train, other.train);
        assert!(split_indices(3, (0.6, 0.2, 0.2), 0).is_err());
        assert!(split_indices(10, (0.5, 0.2, 0.2), 0).is_err());
    }

    #[test]
    fn teacher_statistics() {
        let spec = TeacherSpec { samples: 2000, ..TeacherSpec::new(Activation::Relu) };
        let (d, teacher) = teacher_mlp_data(&spec, 3).unwrap();
        assert_eq!(teacher.param_count(), 2401);
        assert_eq!(d.x.shape(), (2000, 10));
        assert!(d.x.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        let (neg, total) = (0..d.len()).fold((0usize, 0usize), |(n, t), i| {
            let z = teacher.pre_activations(d.x.row(i));
            (n + z.iter().filter(|&&v| v < 0.0).count(), t + z.len())
        });
        let frac = neg as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.1, "negative fraction {frac}");
        let (again, _) = teacher_mlp_data(&spec, 3).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn csv_ingestion() {
        let two = "date,close\n2024-01-02,10.5\n2024-01-03,11\n";
        assert_eq!(read_price_csv(two.as_bytes(), &CsvColumns::default()).unwrap().close, vec![10.5, 11.0]);

        let shuffled = "Date,Open,Close\n2024-01-05,1,3\n2024-01-02,1,1\n2024-01-03,1,2\n";
        let s = read_price_csv(shuffled.as_bytes(), &CsvColumns::default()).unwrap();
        assert_eq!(s.close, vec![1.0, 2.0, 3.0]);
        assert!(s.dates.windows(2).all(|w| w[0] < w[1]));

        let missing = "date,close\n2024-01-02,1\n2024-01-03,null\n2024-01-04,3\n";
        let s = read_price_csv(missing.as_bytes(), &CsvColumns::default()).unwrap();
        assert_eq!((s.close.len(), s.dropped), (2, 1));

        let bad = "date,close\n2024-01-02,1\n2024-01-03,abc\n";
        match read_price_csv(bad.as_bytes(), &CsvColumns::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let ragged = "date,close\n2024-01-02,1,9\n";
        assert!(matches!(read_price_csv(ragged.as_bytes(), &CsvColumns::default()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn series_csv_round_trip() {
        let mut buf = Vec::new();
        write_series_csv(&mut buf, None, &[0.5, -0.25, 1.0]).unwrap();
        let back = read_price_csv(buf.as_slice(), &CsvColumns::default()).unwrap();
        assert_eq!(back.close, vec![0.5, -0.25, 1.0]);
        assert_eq!(back.dates[0], NaiveDate::from_ymd_opt(2000, 1, 1).unwrap());
    }

    #[test]
    fn planted_targets_match_dense_contraction() {
        let (d, tt) = planted_tt_data(&PlantedSpec::new(vec![3, 2, 3], 2, 50), 4).unwrap();
        assert_eq!(tt.ranks(), &[1, 2, 2, 1]);
        let w = tt.to_dense().unwrap();
        for i in 0..d.len() {
            let r = d.x.row(i);
            assert!(r.iter().all(|v| (-1.0..=1.0).contains(v)));
            let mut expected = 0.0;
            for a in 0..3 {
                for b in 0..2 {
                    for c in 0..3 {
                        expected += w.get(&[a, b, c]).unwrap() * r[0].powi(a as i32) * r[1].powi(b as i32) * r[2].powi(c as i32);
                    }
                }
            }
            assert!((d.y[i] - expected).abs() < 1e-12);
        }
        let (again, _) = planted_tt_data(&PlantedSpec::new(vec![3, 2, 3], 2, 50), 4).unwrap();
        assert_eq!(again, d);
    }
}
