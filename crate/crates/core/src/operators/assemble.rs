use ndarray::{s, Array2};

use super::expr::{OperatorExpr, ScalarExpr};
use crate::hilbert::{gram_matrix, InnerProduct};
use crate::numerics::{
    gauss_hermite_rule, graded_origin_rule, hermite_functions, BasisSpec, GridSpec, LineRule,
    Representation,
};
use crate::{CMatrix, Error, Result, C64};

/// A dense matrix together with the representation it acts in.
#[derive(Debug, Clone)]
pub struct MatrixRep {
    pub matrix: CMatrix,
    pub representation: Representation,
    /// Short description of how the matrix was built.
    pub provenance: String,
}

impl MatrixRep {
    pub fn new(matrix: CMatrix, representation: Representation, provenance: impl Into<String>) -> Self {
        MatrixRep {
            matrix,
            representation,
            provenance: provenance.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_matrix(&self, matrix: CMatrix, provenance: impl Into<String>) -> MatrixRep {
        MatrixRep::new(matrix, self.representation, provenance)
    }
}

fn coefficient_values(f: &ScalarExpr, nodes: &[f64]) -> Result<Vec<C64>> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let v = f.eval(x);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::Assembly {
                    coefficient: f.to_string(),
                    node: j,
                    x,
                })
            }
        })
        .collect()
}

/// Three-point stencil weights `(sub, diag, super)` for `p^order`.
fn stencil(order: u8, h: f64) -> [C64; 3] {
    let z = C64::new(0.0, 0.0);
    match order {
        0 => [z, C64::new(1.0, 0.0), z],
        1 => [C64::new(0.0, 0.5 / h), z, C64::new(0.0, -0.5 / h)],
        _ => {
            let off = C64::new(-1.0 / (h * h), 0.0);
            [off, C64::new(2.0 / (h * h), 0.0), off]
        }
    }
}

/// Nodal matrix of `Σ fₖ(x)·p^k` on the grid.
///
/// `p = -i d/dx` is the central difference and `p²` the three-point Laplacian, both
/// truncated at the ends (Dirichlet). The coefficient multiplies row `j` at `xⱼ`.
pub fn assemble_grid(expr: &OperatorExpr, grid: &GridSpec) -> Result<MatrixRep> {
    let n = grid.len();
    let nodes = grid.nodes();
    let mut m = CMatrix::zeros((n, n));
    for term in expr.terms() {
        let f = coefficient_values(&term.coefficient, &nodes)?;
        let [sub, diag, sup] = stencil(term.order, grid.spacing());
        for j in 0..n {
            m[[j, j]] += f[j] * diag;
            if j > 0 {
                m[[j, j - 1]] += f[j] * sub;
            }
            if j + 1 < n {
                m[[j, j + 1]] += f[j] * sup;
            }
        }
    }
    Ok(MatrixRep::new(m, (*grid).into(), format!("stencil {expr}")))
}

/// Exact action of `p^order` on ψ₀…ψ_{M-1}, as an `(M+2)×M` matrix in ψ₀…ψ_{M+1}.
fn ladder_momentum(size: usize, omega: f64, order: u8) -> CMatrix {
    let ext = size + 2;
    // p ψₙ = i√(ω/2)(√(n+1) ψₙ₊₁ - √n ψₙ₋₁)
    let mut p = CMatrix::zeros((ext, ext));
    let c = (omega / 2.0).sqrt();
    for n in 0..ext {
        if n + 1 < ext {
            p[[n + 1, n]] = C64::new(0.0, c * ((n + 1) as f64).sqrt());
        }
        if n > 0 {
            p[[n - 1, n]] = C64::new(0.0, -c * (n as f64).sqrt());
        }
    }
    let mut out = Array2::from_shape_fn((ext, size), |(i, j)| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    for _ in 0..order {
        out = p.dot(&out);
    }
    out
}

/// `x` in the oscillator basis: `x ψₙ = (√(n+1) ψₙ₊₁ + √n ψₙ₋₁)/√(2ω)`.
fn ladder_position(size: usize, omega: f64) -> CMatrix {
    let c = 1.0 / (2.0 * omega).sqrt();
    Array2::from_shape_fn((size, size), |(i, j)| {
        if i == j + 1 {
            C64::new(c * (i as f64).sqrt(), 0.0)
        } else if j == i + 1 {
            C64::new(c * (j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Quadrature rule used for the basis matrix elements of `expr`.
///
/// Smooth coefficients use Gauss–Hermite with `points` nodes. Coefficients with a
/// kink, a branch point or an integrable singularity at the origin use the graded
/// composite rule, which Gauss–Hermite cannot resolve.
fn basis_rule(expr: &OperatorExpr, basis: &BasisSpec, points: usize) -> Result<LineRule> {
    let mut needs_graded = false;
    for term in expr.terms() {
        let f = &term.coefficient;
        if !f.depends_on_x() {
            continue;
        }
        let beta = f.origin_exponent();
        if beta <= -1.0 + 1e-6 {
            return Err(Error::UnsupportedInBasis(f.to_string()));
        }
        if !f.is_smooth() || beta < -1e-6 {
            needs_graded = true;
        }
    }
    if needs_graded {
        Ok(graded_origin_rule(basis.size() + 2, basis.omega()))
    } else {
        Ok(gauss_hermite_rule(points, basis.omega())?.line_rule())
    }
}

/// Galerkin matrix `⟨ψₘ| Σ fₖ(x) p^k |ψₙ⟩` in the truncated oscillator basis.
///
/// Momentum powers act exactly through the ladder relations; the coefficients are
/// integrated by quadrature (`quadrature_points` defaults to `2M`). Constant
/// coefficients need no quadrature.
pub fn assemble_basis(
    expr: &OperatorExpr,
    basis: &BasisSpec,
    quadrature_points: Option<usize>,
) -> Result<MatrixRep> {
    let size = basis.size();
    let ext = size + 2;
    let omega = basis.omega();
    let points = quadrature_points.unwrap_or(2 * size).max(1);

    let needs_rule = expr.terms().iter().any(|t| t.coefficient.depends_on_x());
    let table = if needs_rule {
        let rule = basis_rule(expr, basis, points)?;
        // Products run in complex arithmetic: the real gemm of some OpenBLAS builds
        // returns wrong results on AVX-512 hardware.
        let mut psi = CMatrix::zeros((rule.len(), ext));
        for (i, &x) in rule.nodes.iter().enumerate() {
            for (dst, v) in psi.row_mut(i).iter_mut().zip(hermite_functions(ext, omega, x)) {
                *dst = C64::new(v, 0.0);
            }
        }
        Some((rule, psi))
    } else {
        None
    };

    let mut m = CMatrix::zeros((size, size));
    for term in expr.terms() {
        let f = &term.coefficient;
        // ⟨ψₘ|f|ψⱼ⟩ for m < M, j < M+2
        let coupling: CMatrix = match (f.as_const(), &table) {
            (Some(c), _) => Array2::from_shape_fn((size, ext), |(i, j)| {
                if i == j {
                    c
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
            (None, Some((rule, psi))) => {
                let values = coefficient_values(f, &rule.nodes)?;
                let mut scaled = psi.clone();
                for (mut row, (v, w)) in scaled.rows_mut().into_iter().zip(values.iter().zip(&rule.weights)) {
                    let s = v * w;
                    row.mapv_inplace(|z| z * s);
                }
                let mut out = psi.slice(s![.., ..size]).t().dot(&scaled);
                // the multiplication block is symmetric in the real basis
                let mut block = out.slice_mut(s![.., ..size]);
                for i in 0..size {
                    for j in 0..i {
                        let avg = 0.5 * (block[[i, j]] + block[[j, i]]);
                        block[[i, j]] = avg;
                        block[[j, i]] = avg;
                    }
                }
                out
            }
            (None, None) => unreachable!("quadrature table exists for x-dependent coefficients"),
        };
        if term.order == 0 {
            m += &coupling.slice(s![.., ..size]);
        } else {
            m += &coupling.dot(&ladder_momentum(size, omega, term.order));
        }
    }
    Ok(MatrixRep::new(m, (*basis).into(), format!("basis {expr}")))
}

/// Assemble in either representation.
pub fn assemble(
    expr: &OperatorExpr,
    representation: &Representation,
    quadrature_points: Option<usize>,
) -> Result<MatrixRep> {
    match representation {
        Representation::Grid(g) => assemble_grid(expr, g),
        Representation::Basis(b) => assemble_basis(expr, b, quadrature_points),
    }
}

/// Native `p^order` of a representation: the stencil on a grid, the truncated
/// exact ladder product in the basis.
pub fn momentum_power(representation: &Representation, order: u8) -> MatrixRep {
    let matrix = match representation {
        Representation::Grid(g) => {
            let op = OperatorExpr::new(vec![(ScalarExpr::one(), order)]).expect("order ≤ 2");
            assemble_grid(&op, g).expect("constant coefficients are finite").matrix
        }
        Representation::Basis(b) => ladder_momentum(b.size(), b.omega(), order)
            .slice(s![..b.size(), ..])
            .to_owned(),
    };
    MatrixRep::new(matrix, *representation, format!("p^{order}"))
}

/// Position and momentum matrices of a representation.
pub fn position_momentum_matrices(representation: &Representation) -> (MatrixRep, MatrixRep) {
    let x = match representation {
        Representation::Grid(g) => {
            CMatrix::from_diag(&ndarray::Array1::from_iter(g.nodes().into_iter().map(|x| C64::new(x, 0.0))))
        }
        Representation::Basis(b) => ladder_position(b.size(), b.omega()),
    };
    (
        MatrixRep::new(x, *representation, "x"),
        momentum_power(representation, 1),
    )
}

/// Adjoint `G⁻¹A†G` of `a` with respect to the inner product `⟨u,v⟩ = u†Gv`.
pub fn adjoint_wrt(a: &MatrixRep, inner: &InnerProduct) -> Result<MatrixRep> {
    let gram = gram_matrix(inner, &a.representation)?;
    if gram.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: gram.dim(),
        });
    }
    let dagger = crate::numerics::linalg::adjoint(&a.matrix.view());
    let matrix = gram.solve_left(&gram.right_mul(&dagger))?;
    Ok(a.with_matrix(matrix, format!("adjoint of {}", a.provenance)))
}
