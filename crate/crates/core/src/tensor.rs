//! Dense multiway arrays and the matricizations built on them.
//!
//! Storage is row-major in the multi-index sense: the leftmost index varies
//! slowest and the rightmost fastest. Every unfolding, vectorization and
//! Kronecker identity in the crate derives from this single convention, so
//! `vec(A)` of a matrix is its row-major data and
//! `vec(A·B·C) = (A ⊗ Cᵀ)·vec(B)`.
//!
//! All indices are 0-based.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Single-column matrix.
    pub fn column_vector(v: &[f64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} against {}x{} matrix",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · x`.
    pub fn t_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::Shape(format!(
                "vector of length {} against ({}x{})ᵀ",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::Shape("matrix subtraction shape mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Leading `rows x cols` block.
    pub fn top_left(&self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(i, j)])
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::Shape("vstack column mismatch".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix { rows: self.rows + other.rows, cols: self.cols, data })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flat offset of `indices` within `shape`, leftmost index slowest.
pub fn multi_index(shape: &[usize], indices: &[usize]) -> Result<usize> {
    if shape.len() != indices.len() {
        return Err(Error::Shape(format!(
            "{} indices for an order-{} tensor",
            indices.len(),
            shape.len()
        )));
    }
    let mut offset = 0;
    for (dim, (&i, &size)) in indices.iter().zip(shape).enumerate() {
        if i >= size {
            return Err(Error::OutOfBounds { index: i, dim, size });
        }
        offset = offset * size + i;
    }
    Ok(offset)
}

/// Inverse of [`multi_index`].
pub fn unflatten(shape: &[usize], mut offset: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (slot, &size) in idx.iter_mut().zip(shape).rev() {
        *slot = offset % size;
        offset /= size;
    }
    idx
}

/// N-way real array.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        Ok(Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] })
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        check_shape(shape)?;
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::Shape(format!(
                "{} values for shape {shape:?} ({n} entries)",
                data.len()
            )));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_shape(shape)?;
        let n: usize = shape.iter().product();
        let data = (0..n).map(|off| f(&unflatten(shape, off))).collect();
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, indices: &[usize]) -> Result<f64> {
        Ok(self.data[multi_index(&self.shape, indices)?])
    }

    pub fn set(&mut self, indices: &[usize], value: f64) -> Result<()> {
        let off = multi_index(&self.shape, indices)?;
        self.data[off] = value;
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    fn check_mode(&self, n: usize) -> Result<()> {
        if n >= self.order() {
            return Err(Error::Shape(format!("mode {n} for an order-{} tensor", self.order())));
        }
        Ok(())
    }

    /// Mode-`n` unfolding, `I_n x prod_{k != n} I_k`.
    pub fn unfold(&self, n: usize) -> Result<Matrix> {
        self.check_mode(n)?;
        let before: usize = self.shape[..n].iter().product();
        let size = self.shape[n];
        let after: usize = self.shape[n + 1..].iter().product();
        let mut out = Matrix::zeros(size, before * after);
        for b in 0..before {
            for i in 0..size {
                let src = &self.data[(b * size + i) * after..(b * size + i + 1) * after];
                out.row_mut(i)[b * after..(b + 1) * after].copy_from_slice(src);
            }
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix, n: usize, shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        if n >= shape.len() {
            return Err(Error::Shape(format!("mode {n} for an order-{} shape", shape.len())));
        }
        let before: usize = shape[..n].iter().product();
        let size = shape[n];
        let after: usize = shape[n + 1..].iter().product();
        if m.rows() != size || m.cols() != before * after {
            return Err(Error::Shape(format!(
                "cannot fold {}x{} along mode {n} into {shape:?}",
                m.rows(),
                m.cols()
            )));
        }
        let mut data = vec![0.0; before * size * after];
        for b in 0..before {
            for i in 0..size {
                data[(b * size + i) * after..(b * size + i + 1) * after]
                    .copy_from_slice(&m.row(i)[b * after..(b + 1) * after]);
            }
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    /// Canonical matricization with rows `(i_1..i_n)` and columns
    /// `(i_{n+1}..i_N)`; `n` counts the modes placed in the rows.
    pub fn canonical_matricization(&self, n: usize) -> Result<Matrix> {
        if n == 0 || n > self.order() {
            return Err(Error::Shape(format!(
                "canonical matricization {n} for an order-{} tensor",
                self.order()
            )));
        }
        let rows: usize = self.shape[..n].iter().product();
        let cols: usize = self.shape[n..].iter().product();
        // Row-major storage already is every canonical matricization.
        Matrix::from_vec(rows, cols, self.data.clone())
    }

    /// Contraction of mode `n` with `x`; the result has order N-1.
    ///
    /// An order-1 input yields a shape-`[1]` tensor holding the scalar.
    pub fn n_mode_vec(&self, n: usize, x: &[f64]) -> Result<DenseTensor> {
        self.check_mode(n)?;
        if x.len() != self.shape[n] {
            return Err(Error::Shape(format!(
                "mode-{n} product with vector of length {} (dimension {})",
                x.len(),
                self.shape[n]
            )));
        }
        let v = self.unfold(n)?.t_matvec(x)?;
        let mut shape: Vec<usize> = self.shape.clone();
        shape.remove(n);
        if shape.is_empty() {
            shape.push(1);
        }
        DenseTensor::from_vec(&shape, v)
    }

    /// Mode-`n` product with a `J x I_n` matrix.
    pub fn n_mode_mat(&self, n: usize, x: &Matrix) -> Result<DenseTensor> {
        self.check_mode(n)?;
        if x.cols() != self.shape[n] {
            return Err(Error::Shape(format!(
                "mode-{n} product with {}x{} matrix (dimension {})",
                x.rows(),
                x.cols(),
                self.shape[n]
            )));
        }
        let prod = x.matmul(&self.unfold(n)?)?;
        let mut shape = self.shape.clone();
        shape[n] = x.rows();
        DenseTensor::fold(&prod, n, &shape)
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "inner product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(dot(&self.data, &other.data))
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Shape(format!("invalid tensor shape {shape:?}")));
    }
    Ok(())
}

pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = b.shape();
    Matrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-wise Kronecker product.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!(
            "Khatri-Rao product needs equal column counts ({} vs {})",
            a.cols(),
            b.cols()
        )));
    }
    let br = b.rows();
    Ok(Matrix::from_fn(a.rows() * br, a.cols(), |i, j| a[(i / br, j)] * b[(i % br, j)]))
}

/// Outer product of vectors as an order-`vectors.len()` tensor.
pub fn outer(vectors: &[&[f64]]) -> Result<DenseTensor> {
    let shape: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
    DenseTensor::from_fn(&shape, |idx| idx.iter().zip(vectors).map(|(&i, v)| v[i]).product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
        DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn multi_index_examples() {
        // 1-based (2,1) in a 2x3 matrix is offset 4, i.e. 3 zero-based.
        assert_eq!(multi_index(&[2, 3], &[1, 0]).unwrap(), 3);
        assert_eq!(multi_index(&[4, 5, 6], &[0, 0, 0]).unwrap(), 0);
        // 1-based (1,2,2) in 2x2x2 is offset 4.
        assert_eq!(multi_index(&[2, 2, 2], &[0, 1, 1]).unwrap(), 3);
        assert!(matches!(multi_index(&[2, 2], &[2, 0]), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn multi_index_matches_enumeration() {
        let shape = [2, 2, 2];
        let mut expected = 0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(multi_index(&shape, &[i, j, k]).unwrap(), expected);
                    assert_eq!(unflatten(&shape, expected), vec![i, j, k]);
                    expected += 1;
                }
            }
        }
    }

    #[test]
    fn unfold_mode_one_of_counting_tensor() {
        let t = DenseTensor::from_vec(&[2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        let m = t.unfold(0).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.row(1), &[5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn unfold_matches_elementwise_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tensor(&[3, 4, 2], &mut rng);
        for n in 0..3 {
            let m = t.unfold(n).unwrap();
            let mut rest: Vec<usize> = t.shape().to_vec();
            rest.remove(n);
            for off in 0..t.len() {
                let idx = unflatten(t.shape(), off);
                let mut others = idx.clone();
                let i = others.remove(n);
                let col = multi_index(&rest, &others).unwrap();
                assert_eq!(m[(i, col)], t.data()[off]);
            }
            assert_eq!(DenseTensor::fold(&m, n, t.shape()).unwrap(), t);
        }
    }

    #[test]
    fn unfold_last_mode_is_transposed_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_tensor(&[2, 3, 4], &mut rng);
        let a = t.unfold(2).unwrap().transpose();
        let b = t.canonical_matricization(2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_matricization_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor(&[2, 3, 4], &mut rng);
        let full = t.canonical_matricization(3).unwrap();
        assert_eq!(full.shape(), (24, 1));
        assert_eq!(full.data(), t.data());
        assert_eq!(t.canonical_matricization(1).unwrap(), t.unfold(0).unwrap());
        let m = t.canonical_matricization(2).unwrap();
        assert_eq!(m.shape(), (6, 4));
        for i1 in 0..2 {
            for i2 in 0..3 {
                for i3 in 0..4 {
                    assert_eq!(m[(i1 * 3 + i2, i3)], t.get(&[i1, i2, i3]).unwrap());
                }
            }
        }
        assert!(t.canonical_matricization(0).is_err());
    }

    #[test]
    fn n_mode_vec_cases() {
        let a = [1.0, 2.0];
        let b = [3.0, -1.0, 0.5];
        let t = outer(&[&a, &b]).unwrap();
        let r = t.n_mode_vec(0, &a).unwrap();
        let s = dot(&a, &a);
        for (v, bj) in r.data().iter().zip(&b) {
            assert!((v - s * bj).abs() < 1e-14);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_tensor(&[2, 3, 2], &mut rng);
        let e1 = [0.0, 1.0, 0.0];
        let slice = t.n_mode_vec(1, &e1).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(slice.get(&[i, k]).unwrap(), t.get(&[i, 1, k]).unwrap());
            }
        }

        let x = [0.3, -0.7, 1.1];
        let r = t.n_mode_vec(1, &x).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let mut sum = 0.0;
                for j in 0..3 {
                    sum += t.get(&[i, j, k]).unwrap() * x[j];
                }
                assert!((r.get(&[i, k]).unwrap() - sum).abs() < 1e-14);
            }
        }
        assert!(t.n_mode_vec(1, &[1.0]).is_err());
    }

    #[test]
    fn n_mode_mat_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tensor(&[2, 3, 4], &mut rng);
        assert_eq!(t.n_mode_mat(2, &Matrix::identity(4)).unwrap(), t);

        let row = random_matrix(1, 3, &mut rng);
        let by_mat = t.n_mode_mat(1, &row).unwrap();
        let by_vec = t.n_mode_vec(1, row.row(0)).unwrap();
        for (a, b) in by_mat.data().iter().zip(by_vec.data()) {
            assert!((a - b).abs() < 1e-14);
        }

        let x = random_matrix(5, 3, &mut rng);
        let r = t.n_mode_mat(1, &x).unwrap();
        assert_eq!(r.shape(), &[2, 5, 4]);
        for i in 0..2 {
            for j in 0..5 {
                for k in 0..4 {
                    let sum: f64 = (0..3).map(|l| t.get(&[i, l, k]).unwrap() * x[(j, l)]).sum();
                    assert!((r.get(&[i, j, k]).unwrap() - sum).abs() < 1e-13);
                }
            }
        }
        assert!(t.n_mode_mat(0, &x).is_err());
    }

    #[test]
    fn kronecker_vectorization_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let a = random_matrix(2, 3, &mut rng);
            let b = random_matrix(3, 2, &mut rng);
            let c = random_matrix(2, 2, &mut rng);
            let lhs = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let rhs = kronecker(&a, &c.transpose()).matvec(b.data()).unwrap();
            for (x, y) in lhs.data().iter().zip(&rhs) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn khatri_rao_of_identities() {
        let kr = khatri_rao(&Matrix::identity(2), &Matrix::identity(2)).unwrap();
        assert_eq!(kr.shape(), (4, 2));
        assert_eq!(kr.column(0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(kr.column(1), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(khatri_rao(&Matrix::identity(2), &Matrix::identity(3)).is_err());
    }

    #[test]
    fn inner_and_outer() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_tensor(&[3, 2, 2], &mut rng);
        assert!((t.inner(&t).unwrap() - t.frobenius_norm().powi(2)).abs() < 1e-12);

        let v: Vec<Vec<f64>> =
            (0..6).map(|i| (0..2 + i % 3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let p = outer(&[&v[0], &v[1], &v[2]]).unwrap();
        let q = outer(&[&v[3], &v[4], &v[5]]).unwrap();
        let expected = dot(&v[0], &v[3]) * dot(&v[1], &v[4]) * dot(&v[2], &v[5]);
        assert!((p.inner(&q).unwrap() - expected).abs() < 1e-12);
    }
}
