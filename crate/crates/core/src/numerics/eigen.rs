use ndarray::{s, Array2, Axis};
use ndarray_linalg::{error::LinalgError, Eig};

use super::linalg;
use crate::{CMatrix, Error, Result, C64};

/// Above this eigenbasis condition the result carries the ill-conditioned flag.
pub const ILL_CONDITIONED_LIMIT: f64 = 1e12;
/// Up to this condition the left vectors are taken from the inverse of Ψ.
pub const INVERSE_LEFT_LIMIT: f64 = 1e8;

/// Eigen-decomposition of a dense complex matrix with a biorthogonal left basis.
///
/// Eigenpairs are sorted by ascending real part, ties by ascending imaginary part.
/// Each right vector has unit 2-norm and its largest-magnitude entry is real and
/// positive. The left vectors satisfy `Φ†Ψ = I`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Columns ψₙ.
    pub right: CMatrix,
    /// Columns φₙ with φₙ†ψₘ = δₙₘ.
    pub left: CMatrix,
    /// `‖Aψₙ - Eₙψₙ‖₂ / ‖A‖_F`
    pub residuals: Vec<f64>,
    /// 1-norm condition number of Ψ.
    pub basis_condition: f64,
    /// Set when `basis_condition > 1e12`; the decomposition is still returned.
    pub ill_conditioned: bool,
}

/// Numerical realness test `|Im E| ≤ max(1e-6, 1e-6·|Re E|)`.
pub fn is_real_eigenvalue(e: C64) -> bool {
    e.im.abs() <= (1e-6f64).max(1e-6 * e.re.abs())
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Dimension of the vectors.
    pub fn dim(&self) -> usize {
        self.right.nrows()
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.dim()
    }

    pub fn real_flags(&self) -> Vec<bool> {
        self.eigenvalues.iter().map(|&e| is_real_eigenvalue(e)).collect()
    }

    pub fn all_real(&self) -> bool {
        self.eigenvalues.iter().all(|&e| is_real_eigenvalue(e))
    }

    /// Restrict to the given eigenpairs, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Spectrum {
        let pick = |m: &CMatrix| m.select(Axis(1), indices);
        Spectrum {
            eigenvalues: indices.iter().map(|&i| self.eigenvalues[i]).collect(),
            right: pick(&self.right),
            left: pick(&self.left),
            residuals: indices.iter().map(|&i| self.residuals[i]).collect(),
            basis_condition: self.basis_condition,
            ill_conditioned: self.ill_conditioned,
        }
    }

    /// The first `k` pairs.
    pub fn leading(&self, k: usize) -> Spectrum {
        let k = k.min(self.len());
        self.subset(&(0..k).collect::<Vec<_>>())
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn map_eig_error(err: LinalgError, size: usize) -> Error {
    match err {
        LinalgError::Lapack(lax::error::Error::LapackComputationalFailure { return_code }) => {
            Error::NonConvergence {
                size,
                converged: size.saturating_sub(return_code.max(0) as usize),
            }
        }
        other => Error::Linalg(other.to_string()),
    }
}

fn real_parts_tie(a: C64, b: C64) -> bool {
    (a.re - b.re).abs() <= 1e-12 * a.re.abs().max(b.re.abs()).max(1.0)
}

/// Sort permutation. Real parts are sorted first; runs of real parts equal to
/// round-off are then ordered by imaginary part, which keeps the order a total
/// order even though the tie tolerance is not transitive.
fn sort_permutation(values: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        values[i]
            .re
            .total_cmp(&values[j].re)
            .then(values[i].im.total_cmp(&values[j].im))
            .then(i.cmp(&j))
    });
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && real_parts_tie(values[idx[end - 1]], values[idx[end]]) {
            end += 1;
        }
        idx[start..end].sort_by(|&i, &j| values[i].im.total_cmp(&values[j].im).then(i.cmp(&j)));
        start = end;
    }
    idx
}

/// Scale each column to unit 2-norm and rotate its largest entry onto the positive
/// real axis. The first entry wins among equal magnitudes.
fn normalize_columns(vectors: &mut CMatrix) {
    for mut col in vectors.columns_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut pivot = C64::new(0.0, 0.0);
        let mut best = -1.0;
        for z in col.iter() {
            let m = z.norm();
            if m > best * (1.0 + 1e-12) {
                best = m;
                pivot = *z;
            }
        }
        let phase = pivot.conj() / pivot.norm();
        col.mapv_inplace(|z| z * phase / norm);
    }
}

fn is_hermitian(a: &CMatrix) -> bool {
    let n = a.nrows();
    for i in 0..n {
        if a[[i, i]].im != 0.0 {
            return false;
        }
        for j in i + 1..n {
            if a[[i, j]] != a[[j, i]].conj() {
                return false;
            }
        }
    }
    true
}

/// Dense eigendecomposition with biorthonormal left eigenvectors.
///
/// Exactly Hermitian input goes through the Hermitian solver, so Φ = Ψ and the
/// eigenvalues are real. General input uses LAPACK's Hessenberg QR (`zgeev`). The
/// left vectors come from `(Ψ⁻¹)†` while cond(Ψ) ≤ 1e8 and otherwise from a separate
/// decomposition of A†, matched eigenvalue by eigenvalue.
pub fn eig_dense(a: &CMatrix) -> Result<Spectrum> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }

    let hermitian = is_hermitian(a);
    let (values, vectors) = if hermitian {
        let (vals, vecs) = linalg::hermitian_eigen(a)?;
        (vals.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>(), vecs)
    } else {
        let (vals, vecs) = a.eig().map_err(|e| map_eig_error(e, n))?;
        (vals.to_vec(), vecs)
    };

    let order = sort_permutation(&values);
    let eigenvalues: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    let mut right = vectors.select(Axis(1), &order);
    normalize_columns(&mut right);

    let (left, basis_condition) = if hermitian {
        (right.clone(), 1.0)
    } else {
        match linalg::inverse(&right) {
            Ok(inv) => {
                let cond = linalg::one_norm(&right.view()) * linalg::one_norm(&inv.view());
                if cond <= INVERSE_LEFT_LIMIT {
                    (linalg::adjoint(&inv.view()), cond)
                } else {
                    (adjoint_left_vectors(a, &eigenvalues, &right)?, cond)
                }
            }
            Err(_) => (adjoint_left_vectors(a, &eigenvalues, &right)?, f64::INFINITY),
        }
    };

    let norm_a = linalg::frobenius(&a.view());
    let applied = a.dot(&right);
    let residuals = (0..n)
        .map(|k| {
            if norm_a == 0.0 {
                return 0.0;
            }
            let r = applied
                .column(k)
                .iter()
                .zip(right.column(k))
                .map(|(&av, &v)| (av - eigenvalues[k] * v).norm_sqr())
                .sum::<f64>()
                .sqrt();
            r / norm_a
        })
        .collect();

    Ok(Spectrum {
        eigenvalues,
        right,
        left,
        residuals,
        basis_condition,
        ill_conditioned: basis_condition > ILL_CONDITIONED_LIMIT,
    })
}

/// Left vectors from an independent decomposition of A†. Eigenvalue μ of A† pairs
/// with conj(μ) of A; each φₙ is scaled so that φₙ†ψₙ = 1.
fn adjoint_left_vectors(a: &CMatrix, eigenvalues: &[C64], right: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let adj = linalg::adjoint(&a.view());
    let (mu, chi) = adj.eig().map_err(|e| map_eig_error(e, n))?;
    let mut used = vec![false; n];
    let mut left = Array2::<C64>::zeros((n, n));
    for (k, &e) in eigenvalues.iter().enumerate() {
        let target = e.conj();
        let best = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&i, &j| (mu[i] - target).norm().total_cmp(&(mu[j] - target).norm()))
            .expect("as many adjoint eigenvalues as eigenvalues");
        used[best] = true;
        let phi = chi.column(best);
        let overlap: C64 = phi.iter().zip(right.column(k)).map(|(p, r)| p.conj() * r).sum();
        let scale = if overlap.norm() == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(1.0, 0.0) / overlap.conj()
        };
        left.slice_mut(s![.., k]).assign(&phi.mapv(|z| z * scale));
    }
    Ok(left)
}
