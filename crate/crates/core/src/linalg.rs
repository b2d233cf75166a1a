//! Factorizations and regularized least-squares solvers.
//!
//! The two ridge paths solve `(PᵀP + λ·M·LᵀL) θ = Pᵀy`:
//! [`solve_direct`] forms the normal equations and runs a Cholesky solve,
//! [`gsvd_solve`] reuses a generalized SVD of the pair `(P, L)` so that each
//! additional `λ` costs one diagonal scaling plus a triangular solve.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{dot, Matrix};

/// Thin QR factors: `A = Q·R` with `Q` of size `m x k`, `R` of size `k x n`,
/// `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Qr {
    pub q: Matrix,
    pub r: Matrix,
}

/// Column-pivoted thin QR: `A[:, perm] = Q·R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: Matrix,
    pub r: Matrix,
    pub perm: Vec<usize>,
    /// Numerical rank from the diagonal of `R`.
    pub rank: usize,
}

impl PivotedQr {
    /// `R·Pᵀ`, i.e. the factor with columns back in their original order.
    pub fn r_unpermuted(&self) -> Matrix {
        let mut out = Matrix::zeros(self.r.rows(), self.r.cols());
        for (j, &p) in self.perm.iter().enumerate() {
            for i in 0..self.r.rows() {
                out[(i, p)] = self.r[(i, j)];
            }
        }
        out
    }
}

/// Householder reflectors of `a` stored in place; returns (vectors, betas).
fn householder(a: &mut Matrix, pivot: bool) -> (Vec<Vec<f64>>, Vec<f64>, Vec<usize>) {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut vs = Vec::with_capacity(k);
    let mut betas = Vec::with_capacity(k);
    let mut col_norms: Vec<f64> =
        (0..n).map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum()).collect();

    for j in 0..k {
        if pivot {
            let (best, _) = col_norms[j..]
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            let best = best + j;
            if best != j {
                for i in 0..m {
                    let tmp = a[(i, j)];
                    a[(i, j)] = a[(i, best)];
                    a[(i, best)] = tmp;
                }
                col_norms.swap(j, best);
                perm.swap(j, best);
            }
        }

        let x: Vec<f64> = (j..m).map(|i| a[(i, j)]).collect();
        let alpha = dot(&x, &x).sqrt();
        let mut v = x;
        let beta = if alpha == 0.0 {
            0.0
        } else {
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += sign * alpha;
            let vv = dot(&v, &v);
            if vv == 0.0 {
                0.0
            } else {
                2.0 / vv
            }
        };
        if beta != 0.0 {
            for c in j..n {
                let s: f64 = (j..m).map(|i| v[i - j] * a[(i, c)]).sum::<f64>() * beta;
                for i in j..m {
                    a[(i, c)] -= s * v[i - j];
                }
            }
        }
        for i in j + 1..m {
            a[(i, j)] = 0.0;
        }
        if pivot {
            for c in j + 1..n {
                col_norms[c] = (j + 1..m).map(|i| a[(i, c)] * a[(i, c)]).sum();
            }
        }
        vs.push(v);
        betas.push(beta);
    }
    (vs, betas, perm)
}

fn form_q(m: usize, k: usize, vs: &[Vec<f64>], betas: &[f64]) -> Matrix {
    let mut q = Matrix::from_fn(m, k, |i, j| if i == j { 1.0 } else { 0.0 });
    for j in (0..vs.len()).rev() {
        let (v, beta) = (&vs[j], betas[j]);
        if beta == 0.0 {
            continue;
        }
        for c in 0..k {
            let s: f64 = (j..m).map(|i| v[i - j] * q[(i, c)]).sum::<f64>() * beta;
            for i in j..m {
                q[(i, c)] -= s * v[i - j];
            }
        }
    }
    q
}

/// Householder thin QR.
pub fn qr(a: &Matrix) -> Qr {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut work = a.clone();
    let (vs, betas, _) = householder(&mut work, false);
    Qr { q: form_q(m, k, &vs, &betas), r: work.top_left(k, n) }
}

/// Householder QR with column pivoting and a numerical-rank estimate using
/// the tolerance `max(m, n)·ε·|R₀₀|`.
pub fn qr_pivoted(a: &Matrix) -> PivotedQr {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut work = a.clone();
    let (vs, betas, perm) = householder(&mut work, true);
    let r = work.top_left(k, n);
    let lead = if k > 0 { r[(0, 0)].abs() } else { 0.0 };
    let tol = m.max(n) as f64 * f64::EPSILON * lead;
    let rank = (0..k).take_while(|&i| r[(i, i)].abs() > tol).count();
    PivotedQr { q: form_q(m, k, &vs, &betas), r, perm, rank }
}

fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.data())
}

fn from_na(a: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Singular values of `a`, descending.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Square factor `F` with `FᵀF = g` for a symmetric positive semidefinite `g`.
pub fn gram_factor(g: &Matrix) -> Result<Matrix> {
    let (n, c) = g.shape();
    if n != c {
        return Err(Error::Shape(format!("Gram matrix must be square, got {n}x{c}")));
    }
    let sym = to_na(g);
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    // F = diag(sqrt(λ)) Uᵀ
    Ok(Matrix::from_fn(n, n, |i, j| {
        eig.eigenvalues[i].max(0.0).sqrt() * eig.eigenvectors[(j, i)]
    }))
}

/// Cholesky solve of a symmetric positive-definite system.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Shape(format!("Cholesky solve of {}x{} with rhs {}", n, a.cols(), b.len())));
    }
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tol = n as f64 * f64::EPSILON * max_diag;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            if i == j {
                if !(s > tol) {
                    return Err(Error::Singular(format!(
                        "normal equations not positive definite at pivot {i}"
                    )));
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = (b[i] - (0..i).map(|k| l[(i, k)] * z[k]).sum::<f64>()) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (z[i] - (i + 1..n).map(|k| l[(k, i)] * x[k]).sum::<f64>()) / l[(i, i)];
    }
    Ok(x)
}

fn check_finite(p: &Matrix, l: &Matrix, y: &[f64], lambda: f64) -> Result<()> {
    if !p.is_finite() {
        return Err(Error::NonFinite("design matrix"));
    }
    if !l.is_finite() {
        return Err(Error::NonFinite("regularizer"));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("target"));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn normal_equations(p: &Matrix, l: &Matrix, y: &[f64], lambda: f64, m: usize) -> Result<(Matrix, Vec<f64>)> {
    if p.cols() != l.cols() || p.rows() != y.len() {
        return Err(Error::Shape(format!(
            "P {}x{}, L {}x{}, y {}",
            p.rows(),
            p.cols(),
            l.rows(),
            l.cols(),
            y.len()
        )));
    }
    let mut a = p.t_matmul(p)?;
    if lambda > 0.0 {
        let mut ll = l.t_matmul(l)?;
        ll.scale(lambda * m as f64);
        for (x, v) in a.data_mut().iter_mut().zip(ll.data()) {
            *x += v;
        }
    }
    Ok((a, p.t_matvec(y)?))
}

/// Ridge solution `θ = (PᵀP + λ·M·LᵀL)⁻¹ Pᵀy` through the normal equations.
pub fn solve_direct(p: &Matrix, l: &Matrix, y: &[f64], lambda: f64, m: usize) -> Result<Vec<f64>> {
    check_finite(p, l, y, lambda)?;
    let (a, b) = normal_equations(p, l, y, lambda, m)?;
    cholesky_solve(&a, &b)
}

/// [`solve_direct`] with the rank-failure fallback: on a singular system,
/// retries once with `1e-10·trace/n` added to the diagonal.
pub fn solve_direct_jittered(p: &Matrix, l: &Matrix, y: &[f64], lambda: f64, m: usize) -> Result<Vec<f64>> {
    check_finite(p, l, y, lambda)?;
    let (a, b) = normal_equations(p, l, y, lambda, m)?;
    cholesky_solve_jittered(a, &b)
}

/// Cholesky solve that retries once with `1e-10·trace/n` diagonal jitter
/// when `a` is numerically singular.
pub fn cholesky_solve_jittered(mut a: Matrix, b: &[f64]) -> Result<Vec<f64>> {
    match cholesky_solve(&a, b) {
        Err(Error::Singular(msg)) => {
            let n = a.rows();
            let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let jitter = 1e-10 * trace / n as f64;
            warn!("{msg}; retrying with diagonal jitter {jitter:.3e}");
            let jitter = if jitter > 0.0 { jitter } else { 1e-10 };
            for i in 0..n {
                a[(i, i)] += jitter;
            }
            cholesky_solve(&a, b)
        }
        other => other,
    }
}

/// Generalized SVD of a pair `(P, L)` sharing the right factor:
/// `P = U_P·diag(σ_P)·Vᵀ`, `L = U_L·diag(σ_L)·Vᵀ`.
///
/// Built from a QR of the stacked matrix `[P; L] = [Q₁; Q₂]·R` followed by the
/// SVD `Q₁ = U_P·C·Wᵀ`; then `Vᵀ = Wᵀ·R` and `Q₂·W = U_L·S`.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    pub u_p: Matrix,
    pub u_l: Matrix,
    pub sigma_p: Vec<f64>,
    pub sigma_l: Vec<f64>,
    w: Matrix,
    r: Matrix,
}

impl GsvdFactors {
    pub fn dim(&self) -> usize {
        self.sigma_p.len()
    }

    /// Explicit `V` (`= Rᵀ·W`).
    pub fn v(&self) -> Matrix {
        self.r.t_matmul(&self.w).expect("square factors")
    }

    /// `V⁻ᵀ·z = R⁻¹·W·z`, O(n²).
    pub fn apply_v_inv_t(&self, z: &[f64]) -> Vec<f64> {
        let wz = self.w.matvec(z).expect("dimension checked by caller");
        let n = wz.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.r[(i, k)] * x[k]).sum();
            x[i] = (wz[i] - s) / self.r[(i, i)];
        }
        x
    }

    /// `U_Pᵀ·y`, the λ-independent part of every solve.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.u_p.t_matvec(y)
    }

    /// Solve for one λ given a projected right-hand side from [`GsvdFactors::project`].
    pub fn solve_projected(&self, uty: &[f64], lambda: f64, m: usize) -> Vec<f64> {
        let lm = lambda * m as f64;
        let z: Vec<f64> = self
            .sigma_p
            .iter()
            .zip(&self.sigma_l)
            .zip(uty)
            .map(|((&sp, &sl), &u)| {
                let den = sp * sp + lm * sl * sl;
                if den > 0.0 {
                    sp * u / den
                } else {
                    0.0
                }
            })
            .collect();
        self.apply_v_inv_t(&z)
    }
}

pub fn gsvd(p: &Matrix, l: &Matrix) -> Result<GsvdFactors> {
    let (m, n) = p.shape();
    if l.cols() != n {
        return Err(Error::Shape(format!("P has {n} columns but L has {}", l.cols())));
    }
    if m < n {
        return Err(Error::Underdetermined { rows: m, cols: n });
    }
    if !p.is_finite() || !l.is_finite() {
        return Err(Error::NonFinite("GSVD input"));
    }
    let stacked = p.vstack(l)?;
    let Qr { q, r } = qr(&stacked);
    let max_diag = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let tol = (m + l.rows()).max(n) as f64 * f64::EPSILON * max_diag;
    let rank = (0..n).filter(|&i| r[(i, i)].abs() > tol).count();
    if rank < n || max_diag == 0.0 {
        return Err(Error::SingularPair { rank, cols: n });
    }

    let q1 = DMatrix::from_fn(m, n, |i, j| q[(i, j)]);
    let svd = q1.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let u_p = from_na(u);
    let sigma_p: Vec<f64> = svd.singular_values.iter().map(|&c| c.min(1.0)).collect();
    let w = from_na(&v_t.transpose());

    let q2 = Matrix::from_fn(l.rows(), n, |i, j| q[(m + i, j)]);
    let mut u_l = q2.matmul(&w)?;
    let mut sigma_l = Vec::with_capacity(n);
    for j in 0..n {
        let s = (0..u_l.rows()).map(|i| u_l[(i, j)].powi(2)).sum::<f64>().sqrt();
        sigma_l.push(s);
        for i in 0..u_l.rows() {
            u_l[(i, j)] = if s > 0.0 { u_l[(i, j)] / s } else { 0.0 };
        }
    }
    Ok(GsvdFactors { u_p, u_l, sigma_p, sigma_l, w, r })
}

/// `θ = V⁻ᵀ·ẑ` with `ẑᵢ = σPᵢ·(U_Pᵀy)ᵢ / (σPᵢ² + λ·M·σLᵢ²)`.
pub fn gsvd_solve(factors: &GsvdFactors, y: &[f64], lambda: f64, m: usize) -> Result<Vec<f64>> {
    if factors.u_p.rows() != y.len() {
        return Err(Error::Shape(format!(
            "target of length {} for a {}-row factorization",
            y.len(),
            factors.u_p.rows()
        )));
    }
    Ok(factors.solve_projected(&factors.project(y)?, lambda, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::norm2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm2(&d) / norm2(b)
    }

    /// Gauss-Jordan inverse, independent of the Cholesky path.
    fn inverse(a: &Matrix) -> Matrix {
        let n = a.rows();
        let mut aug = Matrix::from_fn(n, 2 * n, |i, j| if j < n { a[(i, j)] } else if j - n == i { 1.0 } else { 0.0 });
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| aug[(x, c)].abs().total_cmp(&aug[(y, c)].abs())).unwrap();
            for j in 0..2 * n {
                let t = aug[(c, j)];
                aug[(c, j)] = aug[(p, j)];
                aug[(p, j)] = t;
            }
            let d = aug[(c, c)];
            for j in 0..2 * n {
                aug[(c, j)] /= d;
            }
            for i in 0..n {
                if i != c {
                    let f = aug[(i, c)];
                    for j in 0..2 * n {
                        aug[(i, j)] -= f * aug[(c, j)];
                    }
                }
            }
        }
        Matrix::from_fn(n, n, |i, j| aug[(i, n + j)])
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for &(m, n) in &[(6, 4), (4, 6), (5, 5), (1, 3)] {
            let a = random_matrix(m, n, &mut rng);
            let Qr { q, r } = qr(&a);
            assert!(max_abs_diff(&q.matmul(&r).unwrap(), &a) < 1e-12);
            let qtq = q.t_matmul(&q).unwrap();
            assert!(max_abs_diff(&qtq, &Matrix::identity(q.cols())) < 1e-12);
            for i in 0..r.rows() {
                for j in 0..i.min(r.cols()) {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn qr_of_orthogonal_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q0 = qr(&random_matrix(4, 4, &mut rng)).q;
        let Qr { q, r } = qr(&q0);
        for i in 0..4 {
            assert!((r[(i, i)].abs() - 1.0).abs() < 1e-12);
            let sign = r[(i, i)].signum();
            for k in 0..4 {
                assert!((q[(k, i)] * sign - q0[(k, i)]).abs() < 1e-12);
            }
            for j in i + 1..4 {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qr_of_rank_one_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = random_matrix(5, 1, &mut rng);
        let v = random_matrix(1, 4, &mut rng);
        let a = u.matmul(&v).unwrap();
        let Qr { r, .. } = qr(&a);
        for i in 1..r.rows() {
            for j in 0..r.cols() {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
        assert_eq!(qr_pivoted(&a).rank, 1);
    }

    #[test]
    fn pivoted_qr_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_matrix(7, 3, &mut rng);
        let f = qr_pivoted(&a);
        assert_eq!(f.rank, 3);
        let back = f.q.matmul(&f.r_unpermuted()).unwrap();
        assert!(max_abs_diff(&back, &a) < 1e-12);
    }

    #[test]
    fn gram_factor_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let b = random_matrix(6, 4, &mut rng);
        let g = b.t_matmul(&b).unwrap();
        let f = gram_factor(&g).unwrap();
        assert!(max_abs_diff(&f.t_matmul(&f).unwrap(), &g) < 1e-12);
    }

    #[test]
    fn direct_solve_unregularized_square_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let p = random_matrix(5, 5, &mut rng);
        let l = random_matrix(3, 5, &mut rng);
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta = solve_direct(&p, &l, &y, 0.0, 5).unwrap();
        let expected = inverse(&p).matvec(&y).unwrap();
        assert!(rel_err(&theta, &expected) < 1e-9);
    }

    #[test]
    fn direct_solve_shrinks_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let p = random_matrix(20, 4, &mut rng);
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta = solve_direct(&p, &Matrix::identity(4), &y, 1e12, 20).unwrap();
        assert!(norm2(&theta) < 1e-10);
    }

    #[test]
    fn direct_solve_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = random_matrix(50, 8, &mut rng);
        let l = random_matrix(8, 8, &mut rng);
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lambda = 0.3;
        let theta = solve_direct(&p, &l, &y, lambda, 50).unwrap();
        let mut a = p.t_matmul(&p).unwrap();
        let ll = l.t_matmul(&l).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                a[(i, j)] += lambda * 50.0 * ll[(i, j)];
            }
        }
        let expected = inverse(&a).matvec(&p.t_matvec(&y).unwrap()).unwrap();
        assert!(rel_err(&theta, &expected) < 1e-10);
    }

    #[test]
    fn direct_solve_errors() {
        let p = Matrix::zeros(4, 2);
        let l = Matrix::identity(2);
        assert!(matches!(solve_direct(&p, &l, &[0.0; 4], 0.0, 4), Err(Error::Singular(_))));
        let mut bad = Matrix::identity(2);
        bad[(0, 0)] = f64::NAN;
        assert!(matches!(solve_direct(&bad, &l, &[0.0; 2], 1.0, 2), Err(Error::NonFinite(_))));
        assert!(solve_direct_jittered(&p, &Matrix::zeros(2, 2), &[1.0; 4], 1.0, 4).is_ok());
    }

    #[test]
    fn gsvd_with_identity_regularizer_gives_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let p = random_matrix(12, 5, &mut rng);
        let f = gsvd(&p, &Matrix::identity(5)).unwrap();
        let mut gen: Vec<f64> = f.sigma_p.iter().zip(&f.sigma_l).map(|(a, b)| a / b).collect();
        gen.sort_by(|a, b| b.total_cmp(a));
        for (g, s) in gen.iter().zip(singular_values(&p)) {
            assert!((g - s).abs() < 1e-10 * s.max(1.0));
        }
    }

    #[test]
    fn gsvd_reconstructs_both_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let p = random_matrix(30, 6, &mut rng);
            let l = random_matrix(9, 6, &mut rng);
            let f = gsvd(&p, &l).unwrap();
            let vt = f.v().transpose();
            let scale = |u: &Matrix, s: &[f64]| Matrix::from_fn(u.rows(), u.cols(), |i, j| u[(i, j)] * s[j]);
            let p_back = scale(&f.u_p, &f.sigma_p).matmul(&vt).unwrap();
            let l_back = scale(&f.u_l, &f.sigma_l).matmul(&vt).unwrap();
            assert!(p_back.sub(&p).unwrap().frobenius_norm() / p.frobenius_norm() < 1e-8);
            assert!(l_back.sub(&l).unwrap().frobenius_norm() / l.frobenius_norm() < 1e-8);
            let utu = f.u_p.t_matmul(&f.u_p).unwrap();
            assert!(max_abs_diff(&utu, &Matrix::identity(6)) < 1e-10);
        }
    }

    #[test]
    fn gsvd_solve_matches_direct_over_lambda_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let p = random_matrix(40, 6, &mut rng);
        let l = random_matrix(6, 6, &mut rng);
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = gsvd(&p, &l).unwrap();
        for e in -10..=10 {
            let lambda = 2f64.powi(e);
            let a = gsvd_solve(&f, &y, lambda, 40).unwrap();
            let b = solve_direct(&p, &l, &y, lambda, 40).unwrap();
            assert!(rel_err(&a, &b) < 1e-8, "lambda 2^{e}");
        }
        let a = gsvd_solve(&f, &y, 0.0, 40).unwrap();
        let b = solve_direct(&p, &l, &y, 0.0, 40).unwrap();
        assert!(rel_err(&a, &b) < 1e-8);
    }

    #[test]
    fn gsvd_zero_sigma_l_is_unshrunk() {
        // L only penalizes the first coordinate; the second stays at its LS value.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_matrix(10, 2, &mut rng);
        let l = Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let y: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = gsvd(&p, &l).unwrap();
        assert!(f.sigma_l.iter().any(|&s| s < 1e-12));
        let heavy = gsvd_solve(&f, &y, 1e14, 10).unwrap();
        assert!(heavy[0].abs() < 1e-8);
        // With θ₀ pinned to zero, θ₁ is the LS fit on column 1 alone.
        let c1 = p.column(1);
        let ls = dot(&c1, &y) / dot(&c1, &c1);
        assert!((heavy[1] - ls).abs() < 1e-8);
    }

    #[test]
    fn gsvd_errors() {
        let p = Matrix::zeros(3, 5);
        assert!(matches!(gsvd(&p, &Matrix::identity(5)), Err(Error::Underdetermined { .. })));
        let p = Matrix::zeros(6, 2);
        let l = Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        assert!(matches!(gsvd(&p, &l), Err(Error::SingularPair { .. })));
    }
}
