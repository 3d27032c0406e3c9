//! Small dense complex linear algebra. Matrices are stored as nalgebra
//! `DMatrix`; decompositions run through faer.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, SrError};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn to_faer(m: &CMatrix) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `A = U diag(s) V^*` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    let f = to_faer(m);
    let d = f
        .thin_svd()
        .map_err(|e| SrError::SolverFailure(format!("SVD did not converge: {e:?}")))?;
    Ok(Svd {
        u: from_faer(d.U()),
        s: d.S().column_vector().iter().map(|z| z.re).collect(),
        v: from_faer(d.V()),
    })
}

/// Full singular spectrum, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv = to_faer(m)
        .singular_values()
        .unwrap_or_else(|_| vec![f64::NAN; m.nrows().min(m.ncols())]);
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Eigenvalues of a square complex matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(SrError::SolverFailure("eigenvalues of a non-square matrix".into()));
    }
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    to_faer(m)
        .eigenvalues()
        .map_err(|e| SrError::SolverFailure(format!("eigenvalue iteration failed: {e:?}")))
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev = to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .unwrap_or_else(|_| vec![f64::NAN; m.nrows()]);
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Least-squares solution of an overdetermined (or square) system.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: CVector,
    /// Euclidean norm of `A x - b`.
    pub residual: f64,
    /// Two-norm condition number of `A`.
    pub cond: f64,
}

/// Solve `min ||A x - b||` through the SVD of `A`. Requires full column
/// rank; exact zero singular values are reported as a degenerate system.
pub fn lstsq(a: &CMatrix, b: &CVector) -> Result<LstsqSolution> {
    let (rows, cols) = a.shape();
    if rows < cols || b.len() != rows {
        return Err(SrError::SolverFailure(format!(
            "least squares on a {rows}x{cols} system with rhs of length {}",
            b.len()
        )));
    }
    let d = svd(a)?;
    let smax = d.s.first().copied().unwrap_or(0.0);
    let smin = d.s.last().copied().unwrap_or(0.0);
    if !(smin > 0.0) {
        return Err(SrError::DegenerateSampleSet { cond: f64::INFINITY });
    }
    let mut coeffs = d.u.adjoint() * b;
    for (c, &sigma) in coeffs.iter_mut().zip(&d.s) {
        *c /= sigma;
    }
    let x = &d.v * coeffs;
    let residual = (a * &x - b).norm();
    Ok(LstsqSolution {
        x,
        residual,
        cond: smax / smin,
    })
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv(a: &CMatrix, rcond: f64) -> Result<CMatrix> {
    let d = svd(a)?;
    let cutoff = rcond * d.s.first().copied().unwrap_or(0.0);
    let mut v = d.v;
    for (j, &sigma) in d.s.iter().enumerate() {
        let scale = if sigma > cutoff { 1.0 / sigma } else { 0.0 };
        v.column_mut(j).scale_mut(scale);
    }
    Ok(v * d.u.adjoint())
}

pub fn determinant(m: &CMatrix) -> Complex64 {
    m.clone().determinant()
}

/// Frobenius norm of `a - b` relative to that of `a`.
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let denom = a.norm();
    if denom == 0.0 {
        return (a - b).norm();
    }
    (a - b).norm() / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn singular_values_trivial() {
        let id = CMatrix::identity(3, 3);
        for s in singular_values(&id) {
            assert!((s - 1.0).abs() < 1e-15);
        }
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(3.0, 0.0), c(0.0, 4.0)]));
        let sv = singular_values(&d);
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_reconstructs_wide_matrix_with_repeated_values() {
        // rows of a unitary DFT matrix, one of them damped
        let n = 6;
        let mut a = CMatrix::from_fn(4, n, |i, j| {
            Complex64::cis(std::f64::consts::TAU * (i * j) as f64 / n as f64) / (n as f64).sqrt()
        });
        a.row_mut(3).scale_mut(0.42);
        let d = svd(&a).unwrap();
        let rec = &d.u * CMatrix::from_diagonal(&CVector::from_iterator(4, d.s.iter().map(|&s| c(s, 0.0)))) * d.v.adjoint();
        assert!((rec - &a).norm() < 1e-13);
        let p = pinv(&a, 1e-14).unwrap();
        assert!((&a * p - CMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(5.0, 0.0), c(0.0, 0.0), c(-2.0, 0.5)]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - c(-2.0, 0.5)).norm() < 1e-12);
        assert!((ev[1] - c(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn hermitian_spectrum() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = CMatrix::from_fn(5, 2, |i, j| c((i + 1) as f64, (j * i) as f64 * 0.3));
        let x = CVector::from_vec(vec![c(1.0, -2.0), c(0.5, 0.25)]);
        let b = &a * &x;
        let sol = lstsq(&a, &b).unwrap();
        assert!((sol.x - x).norm() < 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let p = pinv(&a, 1e-15).unwrap();
        assert!((&a * p - CMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
