//! Dense helpers on top of nalgebra: weighted metrics, sorted SVDs, null and
//! column spaces, pseudo-inverses and general eigenvalues.

use nalgebra::{Cholesky, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// A Hermitian positive-definite inner product on coefficient vectors,
/// `<x, y> = y^H G x`.
#[derive(Debug, Clone)]
pub(crate) enum Metric {
    Diagonal(Vec<f64>),
    /// `gram = L L^H` with `chol_l` lower triangular.
    Dense {
        gram: CMatrix,
        chol_l: CMatrix,
    },
}

impl Metric {
    pub fn dense(gram: CMatrix) -> Result<Self> {
        let herm = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
        let chol = Cholesky::new(herm.clone())
            .ok_or_else(|| Error::Numeric("Gram matrix is not positive definite".into()))?;
        Ok(Metric::Dense {
            gram: herm,
            chol_l: chol.l(),
        })
    }

    pub fn gram(&self) -> CMatrix {
        match self {
            Metric::Diagonal(w) => CMatrix::from_diagonal(&CVector::from_iterator(
                w.len(),
                w.iter().map(|&x| C64::new(x, 0.0)),
            )),
            Metric::Dense { gram, .. } => gram.clone(),
        }
    }

    pub fn apply_mat(&self, x: &CMatrix) -> CMatrix {
        match self {
            Metric::Diagonal(w) => {
                let mut out = x.clone();
                for (i, &wi) in w.iter().enumerate() {
                    out.row_mut(i).scale_mut(wi);
                }
                out
            }
            Metric::Dense { gram, .. } => gram * x,
        }
    }

    pub fn inner(&self, x: &CVector, y: &CVector) -> C64 {
        match self {
            Metric::Diagonal(w) => x
                .iter()
                .zip(y.iter())
                .zip(w)
                .map(|((a, b), &w)| a * b.conj() * w)
                .sum(),
            Metric::Dense { gram, .. } => y.dotc(&(gram * x)),
        }
    }

    pub fn norm(&self, x: &CVector) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    pub fn whiten_mat(&self, x: &CMatrix) -> CMatrix {
        match self {
            Metric::Diagonal(w) => {
                let mut out = x.clone();
                for (i, &wi) in w.iter().enumerate() {
                    out.row_mut(i).scale_mut(wi.sqrt());
                }
                out
            }
            Metric::Dense { chol_l, .. } => chol_l.adjoint() * x,
        }
    }

    /// Inverse of [`Metric::whiten_mat`].
    pub fn unwhiten_mat(&self, y: &CMatrix) -> CMatrix {
        match self {
            Metric::Diagonal(w) => {
                let mut out = y.clone();
                for (i, &wi) in w.iter().enumerate() {
                    out.row_mut(i).scale_mut(1.0 / wi.sqrt());
                }
                out
            }
            Metric::Dense { chol_l, .. } => {
                let lh = chol_l.adjoint();
                lh.solve_upper_triangular(y)
                    .expect("Cholesky factor is nonsingular")
            }
        }
    }

    /// `G^{-1} x`.
    pub fn solve_mat(&self, x: &CMatrix) -> CMatrix {
        match self {
            Metric::Diagonal(w) => {
                let mut out = x.clone();
                for (i, &wi) in w.iter().enumerate() {
                    out.row_mut(i).scale_mut(1.0 / wi);
                }
                out
            }
            Metric::Dense { chol_l, .. } => {
                let y = chol_l
                    .solve_lower_triangular(x)
                    .expect("Cholesky factor is nonsingular");
                chol_l
                    .adjoint()
                    .solve_upper_triangular(&y)
                    .expect("Cholesky factor is nonsingular")
            }
        }
    }

    /// 2-norm condition number of the Gram matrix.
    pub fn condition_number(&self) -> f64 {
        match self {
            Metric::Diagonal(w) => {
                let max = w.iter().cloned().fold(0.0, f64::max);
                let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
                max / min
            }
            Metric::Dense { gram, .. } => {
                let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
                let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
                if min <= 0.0 {
                    f64::INFINITY
                } else {
                    max / min
                }
            }
        }
    }
}

/// Thin SVD with singular values in descending order.
pub(crate) struct SortedSvd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub(crate) fn svd(a: &CMatrix) -> SortedSvd {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return SortedSvd {
            u: CMatrix::zeros(r, 0),
            s: Vec::new(),
            v: CMatrix::zeros(c, 0),
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V").adjoint();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    SortedSvd {
        u: CMatrix::from_fn(r, k, |i, j| u[(i, order[j])]),
        s: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: CMatrix::from_fn(c, k, |i, j| v[(i, order[j])]),
    }
}

pub(crate) fn spectral_norm(a: &CMatrix) -> f64 {
    svd(a).s.first().copied().unwrap_or(0.0)
}

/// Orthonormal basis (Euclidean) of the numerical column space.
pub(crate) fn column_space(a: &CMatrix, rel_tol: f64) -> CMatrix {
    let d = svd(a);
    let cutoff = rel_tol * d.s.first().copied().unwrap_or(0.0);
    let rank = d.s.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    d.u.columns(0, rank).into_owned()
}

/// Orthonormal basis (Euclidean) of `{x : |A x| <= rel_tol * sigma_max}`.
#[cfg(test)]
pub(crate) fn null_space(a: &CMatrix, rel_tol: f64) -> CMatrix {
    let (r, c) = a.shape();
    if c == 0 {
        return CMatrix::zeros(0, 0);
    }
    // Pad with zero rows so the thin SVD returns a full right basis.
    let padded = if r < c {
        let mut p = CMatrix::zeros(c, c);
        p.rows_mut(0, r).copy_from(a);
        p
    } else {
        a.clone()
    };
    let d = svd(&padded);
    let cutoff = rel_tol * d.s.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..c).filter(|&i| d.s[i] <= cutoff).collect();
    CMatrix::from_fn(c, keep.len(), |i, j| d.v[(i, keep[j])])
}

#[cfg(test)]
pub(crate) fn rank(a: &CMatrix, rel_tol: f64) -> usize {
    let d = svd(a);
    let cutoff = rel_tol * d.s.first().copied().unwrap_or(0.0);
    d.s.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Moore–Penrose pseudo-inverse with relative singular-value cutoff.
pub(crate) fn pinv(a: &CMatrix, rel_tol: f64) -> CMatrix {
    let d = svd(a);
    let cutoff = rel_tol * d.s.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in d.s.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += d.v.column(i) * d.u.column(i).adjoint() * C64::new(1.0 / s, 0.0);
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub(crate) fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let herm = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    (
        order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]),
    )
}

/// Eigenvalues of a general square complex matrix via the complex Schur form.
pub(crate) fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

pub(crate) fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(r: usize, c: usize, seed: u64) -> CMatrix {
        let mut g = crate::rng::Lcg64::new(seed);
        CMatrix::from_fn(r, c, |_, _| g.complex())
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let a = random_matrix(5, 3, 1);
        let d = svd(&a);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let sigma = CMatrix::from_diagonal(&CVector::from_iterator(
            3,
            d.s.iter().map(|&s| C64::new(s, 0.0)),
        ));
        assert!(max_abs(&(&d.u * sigma * d.v.adjoint() - &a)) < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = random_matrix(2, 5, 2);
        let n = null_space(&a, 1e-12);
        assert_eq!(n.ncols(), 3);
        assert!(max_abs(&(&a * &n)) < 1e-12);
        assert!(max_abs(&(n.adjoint() * &n - CMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn pinv_solves_full_rank_least_squares() {
        let a = random_matrix(6, 3, 3);
        let p = pinv(&a, 1e-12);
        assert!(max_abs(&(&p * &a - CMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn dense_metric_whitening_round_trip() {
        let b = random_matrix(4, 4, 4);
        let gram = b.adjoint() * &b + CMatrix::identity(4, 4);
        let m = Metric::dense(gram.clone()).unwrap();
        let x = CVector::from_vec(crate::rng::Lcg64::new(9).complex_vec(4));
        let x_mat = CMatrix::from_column_slice(4, 1, x.as_slice());
        assert!((m.whiten_mat(&x_mat).norm() - m.norm(&x)).abs() < 1e-12);
        let back = m.unwhiten_mat(&m.whiten_mat(&x_mat));
        assert!(max_abs(&(back - &x_mat)) < 1e-12);
        assert!(max_abs(&(&gram * m.solve_mat(&x_mat) - &x_mat)) < 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular_and_rotated() {
        let d = [C64::new(0.5, 0.1), C64::new(-0.2, 0.3), C64::new(0.0, -0.7)];
        let mut t = random_matrix(3, 3, 5);
        for i in 0..3 {
            t[(i, i)] = d[i];
            for j in 0..i {
                t[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        let q = column_space(&random_matrix(3, 3, 6), 1e-12);
        let a = &q * t * q.adjoint();
        let mut got = eigenvalues(&a).unwrap();
        for want in d {
            let (idx, dist) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - want).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            assert!(dist < 1e-12);
            got.remove(idx);
        }
    }
}
