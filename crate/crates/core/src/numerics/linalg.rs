//! Small dense-matrix helpers shared by the modules.

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder, Zip};
use ndarray_linalg::{Eigh, Inverse, UPLO};

use crate::{CMatrix, Result, C64};

pub fn adjoint(a: &ArrayView2<C64>) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Maximum absolute column sum.
pub fn one_norm(a: &ArrayView2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    Ok(a.inv()?)
}

/// `diag(d)·a`
pub fn scale_rows(d: &[C64], a: &CMatrix) -> CMatrix {
    let mut out = a.clone();
    for (mut row, &s) in out.rows_mut().into_iter().zip(d) {
        row.mapv_inplace(|z| z * s);
    }
    out
}

/// `a·diag(d)`
pub fn scale_cols(a: &CMatrix, d: &[C64]) -> CMatrix {
    let mut out = a.clone();
    for (mut col, &s) in out.columns_mut().into_iter().zip(d) {
        col.mapv_inplace(|z| z * s);
    }
    out
}

/// Hermitian part `(a + a†)/2`, used to strip round-off asymmetry.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    let mut out = a.clone();
    Zip::from(&mut out)
        .and(&a.t())
        .for_each(|o, &t| *o = 0.5 * (*o + t.conj()));
    out
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is copied to column-major order first: LAPACK reads a row-major
/// buffer as the transpose, which for a complex Hermitian matrix is its conjugate.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Array1<f64>, CMatrix)> {
    let mut f = Array2::zeros(a.raw_dim().f());
    f.assign(&hermitian_part(a));
    let (vals, vecs) = f.eigh(UPLO::Upper)?;
    Ok((vals, vecs))
}

/// Relative deviation from Hermiticity, `‖A - A†‖_F / ‖A‖_F`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let norm = frobenius(&a.view());
    if norm == 0.0 {
        return 0.0;
    }
    let diff = a - &adjoint(&a.view());
    frobenius(&diff.view()) / norm
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    Array2::from_diag(&Array1::from_iter(values.iter().map(|&v| C64::new(v, 0.0))))
}
