//! Tensor-train representation of the weight tensor.
//!
//! Core `n` (0-based) has shape `R_n × S_n × R_{n+1}` with `R_0 = R_N = 1`.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix};

/// Largest tensor [`TtTensor::to_dense`] will materialize.
pub const DENSE_LIMIT: usize = 10_000_000;

const MAGIC: &str = "ttmr 1";

/// `R_n = min(cap, ∏_{i<n} S_i, ∏_{i≥n} S_i)` for `n = 0..=N`.
pub fn clamp_ranks(dims: &[usize], cap: usize) -> Vec<usize> {
    let n = dims.len();
    let mut ranks = vec![1; n + 1];
    for (k, rank) in ranks.iter_mut().enumerate().take(n).skip(1) {
        let left = dims[..k].iter().fold(1usize, |a, &s| a.saturating_mul(s));
        let right = dims[k..].iter().fold(1usize, |a, &s| a.saturating_mul(s));
        *rank = cap.max(1).min(left).min(right);
    }
    ranks
}

/// Left and right interface matrices around core `k`.
///
/// `left` is `(S_0⋯S_{k-1}) × R_k`, `right` is `(S_{k+1}⋯S_{N-1}) × R_{k+1}`;
/// an empty side is the 1×1 matrix `[1]`.
#[derive(Debug, Clone)]
pub struct InterfacePair {
    pub left: Matrix,
    pub right: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtTensor {
    cores: Vec<DenseTensor>,
}

impl TtTensor {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Shape("a TT needs at least one core".into()));
        }
        for (n, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return Err(Error::Shape(format!("core {n} has order {}, expected 3", c.order())));
            }
        }
        if cores[0].shape()[0] != 1 || cores[cores.len() - 1].shape()[2] != 1 {
            return Err(Error::Shape("boundary ranks must be 1".into()));
        }
        for n in 1..cores.len() {
            let (a, b) = (cores[n - 1].shape()[2], cores[n].shape()[0]);
            if a != b {
                return Err(Error::Shape(format!("rank mismatch between cores {} and {n}: {a} vs {b}", n - 1)));
            }
        }
        Ok(Self { cores })
    }

    /// Cores filled by `f(n, r_left, s, r_right)` on the clamped ranks.
    pub fn from_fn(dims: &[usize], cap: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Shape(format!("invalid feature dimensions {dims:?}")));
        }
        let ranks = clamp_ranks(dims, cap);
        let cores = dims
            .iter()
            .enumerate()
            .map(|(n, &s)| DenseTensor::from_fn(&[ranks[n], s, ranks[n + 1]], |i| f(n, i[0], i[1], i[2])))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Entries of core `n` drawn from `Uniform[-δ, δ]`, `δ = 1/√(R_n S_n R_{n+1})`.
    pub fn random_init(dims: &[usize], cap: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ranks = clamp_ranks(dims, cap);
        let deltas: Vec<f64> = dims
            .iter()
            .enumerate()
            .map(|(n, &s)| 1.0 / ((ranks[n] * s * ranks[n + 1]) as f64).sqrt())
            .collect();
        Self::from_fn(dims, cap, |n, _, _, _| rng.random_range(-deltas[n]..=deltas[n]))
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    /// `(R_0, …, R_N)`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.shape()[0]).collect();
        r.push(1);
        r
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn core(&self, n: usize) -> &DenseTensor {
        &self.cores[n]
    }

    /// Replace cores `n` and `n + 1` together, so the shared rank may change.
    pub fn replace_pair(&mut self, n: usize, a: DenseTensor, b: DenseTensor) -> Result<()> {
        let ok = a.order() == 3
            && b.order() == 3
            && a.shape()[0] == self.cores[n].shape()[0]
            && a.shape()[1] == self.cores[n].shape()[1]
            && a.shape()[2] == b.shape()[0]
            && b.shape()[1] == self.cores[n + 1].shape()[1]
            && b.shape()[2] == self.cores[n + 1].shape()[2];
        if !ok {
            return Err(Error::Shape(format!(
                "replacement cores {:?}, {:?} do not fit positions {n}, {}",
                a.shape(),
                b.shape(),
                n + 1
            )));
        }
        self.cores[n] = a;
        self.cores[n + 1] = b;
        Ok(())
    }

    /// Replace core `n` with one of identical shape.
    pub fn set_core(&mut self, n: usize, core: DenseTensor) -> Result<()> {
        if core.shape() != self.cores[n].shape() {
            return Err(Error::Shape(format!(
                "core {n} expects shape {:?}, got {:?}",
                self.cores[n].shape(),
                core.shape()
            )));
        }
        self.cores[n] = core;
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.cores.iter().map(DenseTensor::len).sum()
    }

    pub fn evaluate_entry(&self, indices: &[usize]) -> Result<f64> {
        if indices.len() != self.order() {
            return Err(Error::Shape(format!("{} indices for an order-{} TT", indices.len(), self.order())));
        }
        let mut v = vec![1.0];
        for (n, (core, &s)) in self.cores.iter().zip(indices).enumerate() {
            let [ra, sn, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
            if s >= sn {
                return Err(Error::OutOfBounds { index: s, dim: n, size: sn });
            }
            let d = core.data();
            v = (0..rb).map(|b| (0..ra).map(|a| v[a] * d[(a * sn + s) * rb + b]).sum()).collect();
        }
        Ok(v[0])
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        let dims = self.dims();
        let total = dims.iter().try_fold(1usize, |a, &s| a.checked_mul(s)).unwrap_or(usize::MAX);
        if total > DENSE_LIMIT {
            return Err(Error::TooLarge(total));
        }
        DenseTensor::from_vec(&dims, self.left_interface(self.order()).into_data())
    }

    /// Contraction of cores `0..k`: a `(S_0⋯S_{k-1}) × R_k` matrix.
    pub fn left_interface(&self, k: usize) -> Matrix {
        let mut acc = Matrix::identity(1);
        for core in &self.cores[..k] {
            let [ra, s, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
            let d = core.data();
            let rows = acc.rows();
            let mut next = Matrix::zeros(rows * s, rb);
            for row in 0..rows {
                for si in 0..s {
                    let out = next.row_mut(row * s + si);
                    for a in 0..ra {
                        let w = acc[(row, a)];
                        if w == 0.0 {
                            continue;
                        }
                        let g = &d[(a * s + si) * rb..(a * s + si + 1) * rb];
                        for (o, &gv) in out.iter_mut().zip(g) {
                            *o += w * gv;
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Contraction of cores `k+1..N`: a `(S_{k+1}⋯S_{N-1}) × R_{k+1}` matrix.
    pub fn right_interface(&self, k: usize) -> Matrix {
        let mut acc = Matrix::identity(1);
        for core in self.cores[k + 1..].iter().rev() {
            let [ra, s, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
            let d = core.data();
            let rows = acc.rows();
            let mut next = Matrix::zeros(s * rows, ra);
            for si in 0..s {
                for row in 0..rows {
                    let out = next.row_mut(si * rows + row);
                    for (a, o) in out.iter_mut().enumerate() {
                        let g = &d[(a * s + si) * rb..(a * s + si + 1) * rb];
                        *o = g.iter().zip(acc.row(row)).map(|(x, y)| x * y).sum();
                    }
                }
            }
            acc = next;
        }
        acc
    }

    pub fn interfaces(&self, k: usize) -> InterfacePair {
        InterfacePair { left: self.left_interface(k), right: self.right_interface(k) }
    }

    /// `(leftᵀ·left, rightᵀ·right)` for position `k`, computed core by core
    /// without forming the interfaces.
    pub fn interface_grams(&self, k: usize) -> (Matrix, Matrix) {
        let mut gl = Matrix::identity(1);
        for core in &self.cores[..k] {
            gl = gram_step(core, &gl, true);
        }
        let mut gr = Matrix::identity(1);
        for core in self.cores[k + 1..].iter().rev() {
            gr = gram_step(core, &gr, false);
        }
        (gl, gr)
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "{}", self.order())?;
        writeln!(w, "dims {}", join(&self.dims()))?;
        writeln!(w, "ranks {}", join(&self.ranks()))?;
        for core in &self.cores {
            writeln!(w, "{}", join(core.data()))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
        let mut next = |what: &str| -> Result<(usize, String)> {
            lines.next().transpose()?.ok_or_else(|| Error::Parse { line: 0, msg: format!("missing {what}") })
        };
        let (line, magic) = next("header")?;
        if magic.trim() != MAGIC {
            return Err(Error::Parse { line, msg: format!("expected '{MAGIC}', got '{magic}'") });
        }
        let (line, n) = next("order")?;
        let n: usize = n.trim().parse().map_err(|e| Error::Parse { line, msg: format!("order: {e}") })?;
        let (line, dims) = next("dims")?;
        let dims: Vec<usize> = parse_tagged(line, &dims, "dims")?;
        let (line, ranks) = next("ranks")?;
        let ranks: Vec<usize> = parse_tagged(line, &ranks, "ranks")?;
        if dims.len() != n || ranks.len() != n + 1 {
            return Err(Error::Parse { line, msg: "dims/ranks length disagree with order".into() });
        }
        let mut cores = Vec::with_capacity(n);
        for k in 0..n {
            let (line, text) = next("core data")?;
            let data = text
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            let core = DenseTensor::from_vec(&[ranks[k], dims[k], ranks[k + 1]], data)
                .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            cores.push(core);
        }
        Self::new(cores)
    }
}

/// One step of the interface Gram recursion through `core`.
fn gram_step(core: &DenseTensor, g: &Matrix, from_left: bool) -> Matrix {
    let [ra, s, rb] = [core.shape()[0], core.shape()[1], core.shape()[2]];
    let d = core.data();
    let at = |a: usize, si: usize, b: usize| d[(a * s + si) * rb + b];
    if from_left {
        // out[b, b'] = Σ_s Σ_{a,a'} G[a,s,b] g[a,a'] G[a',s,b']
        let mut out = Matrix::zeros(rb, rb);
        for si in 0..s {
            let mut tmp = Matrix::zeros(ra, rb);
            for a in 0..ra {
                for a2 in 0..ra {
                    let w = g[(a, a2)];
                    for b2 in 0..rb {
                        tmp[(a, b2)] += w * at(a2, si, b2);
                    }
                }
            }
            for b in 0..rb {
                for b2 in 0..rb {
                    out[(b, b2)] += (0..ra).map(|a| at(a, si, b) * tmp[(a, b2)]).sum::<f64>();
                }
            }
        }
        out
    } else {
        let mut out = Matrix::zeros(ra, ra);
        for si in 0..s {
            let mut tmp = Matrix::zeros(ra, rb);
            for a in 0..ra {
                for b2 in 0..rb {
                    tmp[(a, b2)] = (0..rb).map(|b| at(a, si, b) * g[(b, b2)]).sum();
                }
            }
            for a in 0..ra {
                for a2 in 0..ra {
                    out[(a, a2)] += (0..rb).map(|b| tmp[(a, b)] * at(a2, si, b)).sum::<f64>();
                }
            }
        }
        out
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_tagged(line: usize, text: &str, tag: &str) -> Result<Vec<usize>> {
    let mut parts = text.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(Error::Parse { line, msg: format!("expected '{tag}' line") });
    }
    parts
        .map(|p| p.parse::<usize>().map_err(|e| Error::Parse { line, msg: format!("{tag}: {e}") }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{kronecker, outer};
    use proptest::prelude::*;

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn clamped_ranks_reproduce_coefficient_counts() {
        let r = clamp_ranks(&[2; 10], 4);
        assert_eq!(r, vec![1, 2, 4, 4, 4, 4, 4, 4, 4, 2, 1]);
        let count = |dims: &[usize], cap| TtTensor::random_init(dims, cap, 0).unwrap().param_count();
        assert_eq!(count(&[2; 10], 4), 232);
        assert_eq!(count(&[3; 10], 2), 108);
        assert_eq!(clamp_ranks(&[3; 4], 4), vec![1, 3, 4, 3, 1]);
        assert_eq!(count(&[3; 4], 4), 90);
        assert_eq!(count(&[2; 4], 2), 24);
        assert_eq!(count(&[2; 4], 4), 40);
        assert_eq!(count(&[3; 4], 9), 180);
        assert_eq!(count(&[4; 4], 16), 544);
        assert_eq!(count(&[5; 4], 25), 1300);
        assert_eq!(count(&[2, 3, 4], 1), 9);
    }

    #[test]
    fn ones_train_evaluates_to_one() {
        let tt = TtTensor::from_fn(&[2, 3, 2], 1, |_, _, _, _| 1.0).unwrap();
        assert_eq!(tt.evaluate_entry(&[1, 2, 0]).unwrap(), 1.0);
    }

    #[test]
    fn two_cores_are_a_matrix_product() {
        let tt = TtTensor::random_init(&[3, 4], 3, 5).unwrap();
        let g1 = Matrix::from_vec(3, 3, tt.core(0).data().to_vec()).unwrap();
        let g2 = Matrix::from_vec(3, 4, tt.core(1).data().to_vec()).unwrap();
        let prod = g1.matmul(&g2).unwrap();
        let dense = tt.to_dense().unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert!((tt.evaluate_entry(&[i, j]).unwrap() - prod[(i, j)]).abs() < 1e-14);
                assert!((dense.get(&[i, j]).unwrap() - prod[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rank_one_train_is_an_outer_product() {
        let tt = TtTensor::random_init(&[2, 3, 4], 1, 8).unwrap();
        let fibers: Vec<&[f64]> = tt.cores().iter().map(|c| c.data()).collect();
        let expected = outer(&fibers).unwrap();
        assert!(max_diff(tt.to_dense().unwrap().data(), expected.data()) < 1e-15);
    }

    #[test]
    fn dense_matches_entries_on_random_shapes() {
        for (seed, dims) in [(1, vec![2, 3, 2]), (2, vec![3, 2, 4, 2]), (3, vec![2, 2, 2, 2, 2])] {
            let tt = TtTensor::random_init(&dims, 3, seed).unwrap();
            let dense = tt.to_dense().unwrap();
            for off in 0..dense.len() {
                let idx = crate::tensor::unflatten(&dims, off);
                assert!((dense.data()[off] - tt.evaluate_entry(&idx).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dense_guard_and_bounds() {
        let tt = TtTensor::random_init(&[10; 8], 2, 0).unwrap();
        assert!(matches!(tt.to_dense(), Err(Error::TooLarge(_))));
        assert!(matches!(tt.evaluate_entry(&[0, 0, 0, 0, 0, 0, 0, 10]), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn boundary_interfaces_are_unit() {
        let tt = TtTensor::random_init(&[2, 3, 2, 3], 3, 4).unwrap();
        assert_eq!(tt.interfaces(0).left.data(), &[1.0]);
        assert_eq!(tt.interfaces(3).right.data(), &[1.0]);
    }

    #[test]
    fn unfolding_factors_through_interfaces() {
        let tt = TtTensor::random_init(&[2, 3, 2, 3], 3, 6).unwrap();
        let dense = tt.to_dense().unwrap();
        for k in 0..4 {
            let InterfacePair { left, right } = tt.interfaces(k);
            let g2 = tt.core(k).unfold(1).unwrap();
            let rebuilt = g2.matmul(&kronecker(&left, &right).transpose()).unwrap();
            assert!(max_diff(rebuilt.data(), dense.unfold(k).unwrap().data()) < 1e-10);

            let (gl, gr) = tt.interface_grams(k);
            assert!(max_diff(gl.data(), left.t_matmul(&left).unwrap().data()) < 1e-12);
            assert!(max_diff(gr.data(), right.t_matmul(&right).unwrap().data()) < 1e-12);
        }
    }

    #[test]
    fn init_bounds_and_determinism() {
        let a = TtTensor::random_init(&[3, 3, 3, 3], 4, 42).unwrap();
        let b = TtTensor::random_init(&[3, 3, 3, 3], 4, 42).unwrap();
        let c = TtTensor::random_init(&[3, 3, 3, 3], 4, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let ranks = a.ranks();
        for (n, core) in a.cores().iter().enumerate() {
            let delta = 1.0 / ((ranks[n] * 3 * ranks[n + 1]) as f64).sqrt();
            assert!(core.data().iter().all(|v| v.abs() <= delta));
        }
    }

    #[test]
    fn init_mean_is_centered() {
        // One core of 10^5 entries with δ = 1/√(10^5).
        let tt = TtTensor::random_init(&[100_000], 1, 9).unwrap();
        let data = tt.core(0).data();
        let delta = 1.0 / (100_000f64).sqrt();
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let sd = delta / 3f64.sqrt() / (data.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd);
    }

    #[test]
    fn save_load_round_trip() {
        let tt = TtTensor::random_init(&[2, 3, 4], 3, 11).unwrap();
        let mut buf = Vec::new();
        tt.save(&mut buf).unwrap();
        let back = TtTensor::load(buf.as_slice()).unwrap();
        assert_eq!(tt, back);
        let bad = String::from_utf8(buf).unwrap().replace("dims 2 3 4", "dims 2 3 5");
        assert!(matches!(TtTensor::load(bad.as_bytes()), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn entries_match_dense(dims in prop::collection::vec(1usize..4, 1..5), cap in 1usize..4, seed in any::<u64>()) {
            let tt = TtTensor::random_init(&dims, cap, seed).unwrap();
            let dense = tt.to_dense().unwrap();
            for off in 0..dense.len() {
                let idx = crate::tensor::unflatten(&dims, off);
                prop_assert!((dense.data()[off] - tt.evaluate_entry(&idx).unwrap()).abs() < 1e-13);
            }
            let ranks = tt.ranks();
            prop_assert_eq!(ranks[0], 1);
            prop_assert_eq!(ranks[dims.len()], 1);
        }
    }
}
