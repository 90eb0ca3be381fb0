//! Inner products, metric operators and unitarizing maps.
//!
//! An inner product is realized on a representation as a Gram matrix `G` with
//! `(u, v) = u†Gv`. A map `T` with `T†T = G` carries it to the flat product.

use ndarray::{Array1, Axis};

use crate::numerics::linalg::{self, adjoint, frobenius, hermitian_eigen, hermitian_part};
use crate::numerics::{GridSpec, Representation, Spectrum};
use crate::operators::{assemble_basis, MatrixRep, OperatorExpr, ScalarExpr};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Smallest admissible ratio of the extreme Gram eigenvalues.
pub const DEFINITENESS_RATIO: f64 = 1e-12;
/// Largest eigenbasis condition accepted when building a metric from a spectrum.
pub const METRIC_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone)]
pub enum InnerProduct {
    /// Trapezoidal L₂ on a grid (`h·I`), identity on basis coefficients.
    Flat,
    /// `∫ w(x)|u|² dx`, realized as `h·diag(w(xⱼ))` on a grid.
    Weighted(ScalarExpr),
    /// Explicit Hermitian positive-definite matrix η.
    Metric(CMatrix),
    /// Declares the eigenvectors of the spectrum orthonormal.
    EigenbasisDelta(Spectrum),
}

/// A realized Gram matrix; diagonal products stay diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum Gram {
    Diagonal(Vec<f64>),
    Dense(CMatrix),
}

impl Gram {
    pub fn dim(&self) -> usize {
        match self {
            Gram::Diagonal(d) => d.len(),
            Gram::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Gram::Diagonal(d) => linalg::real_diag(d),
            Gram::Dense(m) => m.clone(),
        }
    }

    fn complex_diag(d: &[f64]) -> Vec<C64> {
        d.iter().map(|&v| C64::new(v, 0.0)).collect()
    }

    /// `G·a`
    pub fn left_mul(&self, a: &CMatrix) -> CMatrix {
        match self {
            Gram::Diagonal(d) => linalg::scale_rows(&Self::complex_diag(d), a),
            Gram::Dense(g) => g.dot(a),
        }
    }

    /// `a·G`
    pub fn right_mul(&self, a: &CMatrix) -> CMatrix {
        match self {
            Gram::Diagonal(d) => linalg::scale_cols(a, &Self::complex_diag(d)),
            Gram::Dense(g) => a.dot(g),
        }
    }

    /// `G⁻¹·b`
    pub fn solve_left(&self, b: &CMatrix) -> Result<CMatrix> {
        match self {
            Gram::Diagonal(d) => {
                let inv: Vec<C64> = d.iter().map(|&v| C64::new(1.0 / v, 0.0)).collect();
                Ok(linalg::scale_rows(&inv, b))
            }
            Gram::Dense(g) => Ok(linalg::inverse(g)?.dot(b)),
        }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        match self {
            Gram::Diagonal(d) => Array1::from_iter(v.iter().zip(d).map(|(z, &g)| z * g)),
            Gram::Dense(g) => g.dot(v),
        }
    }

    /// `u†Gv`
    pub fn inner(&self, u: &CVector, v: &CVector) -> C64 {
        u.iter().zip(self.apply(v).iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn frobenius(&self) -> f64 {
        match self {
            Gram::Diagonal(d) => d.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Gram::Dense(g) => frobenius(&g.view()),
        }
    }

    /// Extreme eigenvalues `(min, max)`.
    pub fn eigen_range(&self) -> Result<(f64, f64)> {
        let values: Vec<f64> = match self {
            Gram::Diagonal(d) => d.clone(),
            Gram::Dense(g) => hermitian_eigen(g)?.0.to_vec(),
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((min, max))
    }

    fn check_positive(self) -> Result<Self> {
        let (min, max) = self.eigen_range()?;
        if !(min.is_finite() && max.is_finite()) || max <= 0.0 || min <= DEFINITENESS_RATIO * max {
            return Err(Error::Metric(format!(
                "Gram matrix is not positive definite (eigenvalues in [{min:.3e}, {max:.3e}])"
            )));
        }
        Ok(self)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Realize an inner product on a representation, checking positive definiteness.
pub fn gram_matrix(ip: &InnerProduct, rep: &Representation) -> Result<Gram> {
    let n = rep.dim();
    let gram = match (ip, rep) {
        (InnerProduct::Flat, Representation::Grid(g)) => Gram::Diagonal(vec![g.spacing(); n]),
        (InnerProduct::Flat, Representation::Basis(_)) => Gram::Diagonal(vec![1.0; n]),
        (InnerProduct::Weighted(w), Representation::Grid(g)) => {
            let h = g.spacing();
            let values = g
                .nodes()
                .into_iter()
                .enumerate()
                .map(|(j, x)| {
                    let v = w.eval(x);
                    if v.re.is_finite() && v.im.abs() <= 1e-14 * v.re.abs().max(1.0) {
                        Ok(h * v.re)
                    } else {
                        Err(Error::Metric(format!(
                            "weight `{w}` is not finite and real at node {j} (x = {x})"
                        )))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Gram::Diagonal(values)
        }
        (InnerProduct::Weighted(w), Representation::Basis(b)) => {
            let op = OperatorExpr::multiplication(w.clone());
            Gram::Dense(hermitian_part(&assemble_basis(&op, b, None)?.matrix))
        }
        (InnerProduct::Metric(eta), _) => {
            check_dim(n, eta.nrows())?;
            Gram::Dense(eta.clone())
        }
        (InnerProduct::EigenbasisDelta(s), _) => {
            check_dim(n, s.dim())?;
            if !s.is_complete() {
                return Err(Error::Metric(format!(
                    "eigenbasis has {} of {} vectors",
                    s.len(),
                    s.dim()
                )));
            }
            Gram::Dense(delta_metric(s))
        }
    };
    gram.check_positive()
}

/// `ΦΦ† = (Ψ⁻¹)†Ψ⁻¹`, Hermitized.
fn delta_metric(s: &Spectrum) -> CMatrix {
    hermitian_part(&s.left.dot(&adjoint(&s.left.view())))
}

/// Metric under which the eigenvectors of `s` are orthonormal.
///
/// The overall scale follows the normalization of the stored right vectors.
pub fn metric_from_spectrum(s: &Spectrum) -> Result<InnerProduct> {
    if !(s.basis_condition <= METRIC_CONDITION_LIMIT) {
        return Err(Error::Conditioning {
            condition: s.basis_condition,
            limit: METRIC_CONDITION_LIMIT,
        });
    }
    if !s.is_complete() {
        return Err(Error::Metric(format!(
            "eigenbasis has {} of {} vectors",
            s.len(),
            s.dim()
        )));
    }
    let eta = delta_metric(s);
    Gram::Dense(eta.clone()).check_positive()?;
    Ok(InnerProduct::Metric(eta))
}

/// Rescale the eigenvectors to unit norm under `ip`; left vectors follow so that
/// biorthogonality is kept.
pub fn normalize_spectrum(s: &Spectrum, ip: &InnerProduct, rep: &Representation) -> Result<Spectrum> {
    let gram = gram_matrix(ip, rep)?;
    let mut out = s.clone();
    for k in 0..s.len() {
        let psi = s.right.column(k).to_owned();
        let norm = gram.inner(&psi, &psi).re.sqrt();
        out.right.column_mut(k).mapv_inplace(|z| z / norm);
        out.left.column_mut(k).mapv_inplace(|z| z * norm);
    }
    Ok(out)
}

/// Invertible map `T` with its inverse and 2-norm condition number.
#[derive(Debug, Clone)]
pub struct TransformMap {
    pub matrix: CMatrix,
    pub inverse: CMatrix,
    pub condition: f64,
    /// Diagonal entries when `T` is diagonal.
    pub diagonal: Option<Vec<C64>>,
}

impl TransformMap {
    pub fn identity(n: usize) -> Self {
        TransformMap {
            matrix: linalg::identity(n),
            inverse: linalg::identity(n),
            condition: 1.0,
            diagonal: Some(vec![C64::new(1.0, 0.0); n]),
        }
    }

    pub fn from_diagonal(values: Vec<C64>) -> Self {
        let inv: Vec<C64> = values.iter().map(|v| 1.0 / v).collect();
        let mags = values.iter().map(|v| v.norm());
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
        TransformMap {
            matrix: CMatrix::from_diag(&Array1::from(values.clone())),
            inverse: CMatrix::from_diag(&Array1::from(inv)),
            condition: hi / lo,
            diagonal: Some(values),
        }
    }

    /// Wrap a dense matrix, inverting it.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let inverse = linalg::inverse(&matrix)?;
        let condition = linalg::one_norm(&matrix.view()) * linalg::one_norm(&inverse.view());
        Ok(TransformMap {
            matrix,
            inverse,
            condition,
            diagonal: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Metric `T†T` carried back from the flat product.
    pub fn metric(&self) -> CMatrix {
        hermitian_part(&adjoint(&self.matrix.view()).dot(&self.matrix))
    }

    /// `max |T·T⁻¹ - I|`
    pub fn inverse_defect(&self) -> f64 {
        let prod = self.matrix.dot(&self.inverse) - linalg::identity(self.dim());
        linalg::max_abs(&prod.view())
    }
}

/// Positive square root `T = G^{1/2}` of the Gram matrix of `ip`.
pub fn unitarizing_map(ip: &InnerProduct, rep: &Representation) -> Result<TransformMap> {
    match gram_matrix(ip, rep)? {
        Gram::Diagonal(d) => Ok(TransformMap::from_diagonal(
            d.into_iter().map(|v| C64::new(v.sqrt(), 0.0)).collect(),
        )),
        Gram::Dense(g) => {
            let (values, vectors) = hermitian_eigen(&g)?;
            let root: Vec<C64> = values.iter().map(|&v| C64::new(v.sqrt(), 0.0)).collect();
            let inv_root: Vec<C64> = root.iter().map(|v| 1.0 / v).collect();
            let vt = adjoint(&vectors.view());
            let matrix = linalg::scale_cols(&vectors, &root).dot(&vt);
            let inverse = linalg::scale_cols(&vectors, &inv_root).dot(&vt);
            let (lo, hi) = (values[0], values[values.len() - 1]);
            Ok(TransformMap {
                matrix: hermitian_part(&matrix),
                inverse: hermitian_part(&inverse),
                condition: (hi / lo).sqrt(),
                diagonal: None,
            })
        }
    }
}

/// Diagonal map `T = diag(f(xⱼ))` on a grid.
pub fn diagonal_map(f: &ScalarExpr, grid: &GridSpec) -> Result<TransformMap> {
    let values = grid
        .nodes()
        .into_iter()
        .enumerate()
        .map(|(j, x)| {
            let v = f.eval(x);
            if v.norm() == 0.0 || !v.norm().is_finite() {
                Err(Error::SingularMap { node: j, x })
            } else {
                Ok(v)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransformMap::from_diagonal(values))
}

/// `‖GH - H†G‖_F / (‖G‖_F·‖H‖_F)`
pub fn pseudo_hermiticity_residual(h: &MatrixRep, ip: &InnerProduct) -> Result<f64> {
    let gram = gram_matrix(ip, &h.representation)?;
    check_dim(h.dim(), gram.dim())?;
    Ok(hermiticity_residual_with(&h.matrix, &gram))
}

pub(crate) fn hermiticity_residual_with(a: &CMatrix, gram: &Gram) -> f64 {
    let norm = gram.frobenius() * frobenius(&a.view());
    if norm == 0.0 {
        return 0.0;
    }
    let diff = gram.left_mul(a) - gram.right_mul(&adjoint(&a.view()));
    frobenius(&diff.view()) / norm
}

/// `max |Ĝ - I|` over the first `k` eigenvectors, with
/// `Ĝₙₘ = ψₙ†Gψₘ / (‖ψₙ‖_G‖ψₘ‖_G)`.
pub fn orthonormality_defect(s: &Spectrum, ip: &InnerProduct, rep: &Representation, k: usize) -> Result<f64> {
    if k > s.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenvectors, spectrum has {}",
            s.len()
        )));
    }
    let gram = gram_matrix(ip, rep)?;
    check_dim(s.dim(), gram.dim())?;
    let psi = s.right.select(Axis(1), &(0..k).collect::<Vec<_>>());
    let g = adjoint(&psi.view()).dot(&gram.left_mul(&psi));
    let norms: Vec<f64> = (0..k).map(|n| g[[n, n]].re.sqrt()).collect();
    let mut worst = 0.0f64;
    for n in 0..k {
        for m in 0..k {
            let target = if n == m { 1.0 } else { 0.0 };
            worst = worst.max((g[[n, m]] / (norms[n] * norms[m]) - target).norm());
        }
    }
    Ok(worst)
}
