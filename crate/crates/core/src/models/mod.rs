//! Built-in Hamiltonians and the expression parser.

mod parse;

pub use parse::{parse_expression, parse_scalar};

use crate::numerics::{eig_dense, linalg, BasisSpec, GridSpec, Representation, Spectrum};
use crate::operators::{assemble, assemble_grid, MatrixRep, OperatorExpr, ScalarExpr};
use crate::{Error, Result, C64};

/// Closed-form facts a model is expected to satisfy.
#[derive(Debug, Clone, Default)]
pub struct KnownFacts {
    /// `Eₙ = ω(2n+1)` when set.
    pub oscillator_omega: Option<f64>,
    /// Eigenfunctions are `factor(x)·ψₙ` of the oscillator with `oscillator_omega`.
    pub eigenfunction_factor: Option<ScalarExpr>,
    /// Whether the spectrum is expected to be entirely real.
    pub real_spectrum: Option<bool>,
}

impl KnownFacts {
    pub fn energy(&self, n: usize) -> Option<f64> {
        self.oscillator_omega.map(|w| w * (2 * n + 1) as f64)
    }
}

/// `H = T⁻¹ĤT` with `Ĥ` Hermitian and `T = diag(transform(x))`.
#[derive(Debug, Clone)]
pub struct SimilarityPartner {
    pub hermitian: OperatorExpr,
    pub transform: ScalarExpr,
    /// Weight `|T|²` of the inner product in which `H` is Hermitian.
    pub weight: ScalarExpr,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
    pub expr: OperatorExpr,
    pub recommended: Representation,
    pub quadrature_points: Option<usize>,
    pub known_facts: KnownFacts,
    pub partner: Option<SimilarityPartner>,
}

impl ModelSpec {
    /// Model from user text; the representation defaults to a grid when any
    /// coefficient is singular at the origin and to the oscillator basis otherwise.
    pub fn from_expression(text: &str) -> Result<Self> {
        let expr = parse_expression(text)?;
        let recommended = if expr.singular_at_origin() {
            Representation::Grid(crate::numerics::make_grid(10.0, 400)?)
        } else {
            Representation::Basis(BasisSpec::new(200, 1.0)?)
        };
        Ok(ModelSpec {
            name: "expression".into(),
            parameters: Vec::new(),
            expr,
            recommended,
            quadrature_points: None,
            known_facts: KnownFacts::default(),
            partner: None,
        })
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    /// Reject representations the coefficients cannot live in.
    pub fn check_representation(&self, rep: &Representation) -> Result<()> {
        if matches!(rep, Representation::Basis(_)) && self.expr.singular_at_origin() {
            let bad = self
                .expr
                .terms()
                .iter()
                .find(|t| t.coefficient.origin_exponent() < -1e-6)
                .map(|t| t.coefficient.to_string())
                .unwrap_or_default();
            return Err(Error::UnsupportedInBasis(bad));
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

fn oscillator_expr(omega: f64) -> OperatorExpr {
    let w2 = ScalarExpr::real(omega * omega);
    let potential = if omega == 1.0 {
        ScalarExpr::Pow(Box::new(ScalarExpr::X), 2)
    } else {
        ScalarExpr::Mul(Box::new(w2), Box::new(ScalarExpr::Pow(Box::new(ScalarExpr::X), 2)))
    };
    OperatorExpr::new(vec![(ScalarExpr::one(), 2), (potential, 0)]).expect("orders ≤ 2")
}

/// `H = p² + (2i/x)p − 2/x² + ω²x²`, similar to the oscillator through `T = 1/x`.
pub fn paper_example(omega: f64) -> Result<ModelSpec> {
    positive("omega", omega)?;
    let text = if omega == 1.0 {
        "p^2 + (2i/x)*p - 2/x^2 + x^2".to_string()
    } else {
        format!("p^2 + (2i/x)*p - 2/x^2 + {}*x^2", omega * omega)
    };
    let expr = parse_expression(&text)?;
    Ok(ModelSpec {
        name: "paper-example".into(),
        parameters: vec![("omega".into(), omega)],
        expr,
        recommended: Representation::Grid(crate::numerics::make_grid(10.0 / omega.sqrt(), 400)?),
        quadrature_points: None,
        known_facts: KnownFacts {
            oscillator_omega: Some(omega),
            eigenfunction_factor: Some(ScalarExpr::X),
            real_spectrum: Some(true),
        },
        partner: Some(SimilarityPartner {
            hermitian: oscillator_expr(omega),
            transform: parse_scalar("1/x")?,
            weight: parse_scalar("1/x^2")?,
        }),
    })
}

/// `Ĥ = p² + ω²x²`.
pub fn harmonic_oscillator(omega: f64) -> Result<ModelSpec> {
    positive("omega", omega)?;
    Ok(ModelSpec {
        name: "harmonic".into(),
        parameters: vec![("omega".into(), omega)],
        expr: oscillator_expr(omega),
        recommended: Representation::Grid(crate::numerics::make_grid(10.0 / omega.sqrt(), 400)?),
        quadrature_points: None,
        known_facts: KnownFacts {
            oscillator_omega: Some(omega),
            eigenfunction_factor: Some(ScalarExpr::one()),
            real_spectrum: Some(true),
        },
        partner: Some(SimilarityPartner {
            hermitian: oscillator_expr(omega),
            transform: ScalarExpr::one(),
            weight: ScalarExpr::one(),
        }),
    })
}

/// `H = p² + x²(ix)^ν` on the real line, `ν > −2`.
pub fn bender_family(nu: f64) -> Result<ModelSpec> {
    if !(nu.is_finite() && nu > -2.0) {
        return Err(Error::InvalidArgument(format!("nu must exceed -2, got {nu}")));
    }
    let expr = OperatorExpr::new(vec![
        (ScalarExpr::one(), 2),
        (
            ScalarExpr::Mul(
                Box::new(ScalarExpr::Ipow(Box::new(ScalarExpr::X), nu)),
                Box::new(ScalarExpr::Pow(Box::new(ScalarExpr::X), 2)),
            ),
            0,
        ),
    ])?;
    Ok(ModelSpec {
        name: "bender".into(),
        parameters: vec![("nu".into(), nu)],
        expr,
        recommended: Representation::Basis(BasisSpec::new(200, 1.0)?),
        quadrature_points: Some(400),
        known_facts: KnownFacts {
            oscillator_omega: (nu == 0.0).then_some(1.0),
            eigenfunction_factor: (nu == 0.0).then_some(ScalarExpr::one()),
            real_spectrum: Some(nu >= 0.0),
        },
        partner: None,
    })
}

/// Look up a built-in model by name.
pub fn builtin(name: &str, omega: f64, nu: f64) -> Result<ModelSpec> {
    match name {
        "paper-example" | "example" => paper_example(omega),
        "harmonic" | "oscillator" => harmonic_oscillator(omega),
        "bender" => bender_family(nu),
        other => Err(Error::InvalidArgument(format!(
            "unknown model `{other}` (expected paper-example, harmonic or bender)"
        ))),
    }
}

/// How a model with a similarity partner is turned into a grid matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assembly {
    /// Direct finite-difference discretization of the operator.
    Stencil,
    /// Exact matrix product `T⁻¹·Ĥ·T` with the stencil of the Hermitian partner.
    Algebraic,
}

/// Assemble the model Hamiltonian.
pub fn assemble_model(model: &ModelSpec, rep: &Representation, assembly: Assembly) -> Result<MatrixRep> {
    model.check_representation(rep)?;
    match (assembly, rep) {
        (Assembly::Stencil, _) => assemble(&model.expr, rep, model.quadrature_points),
        (Assembly::Algebraic, Representation::Grid(g)) => {
            let partner = model.partner.as_ref().ok_or_else(|| {
                Error::InvalidArgument(format!("model `{}` has no similarity partner", model.name))
            })?;
            let hhat = assemble_grid(&partner.hermitian, g)?;
            let t = crate::hilbert::diagonal_map(&partner.transform, g)?;
            let d = t.diagonal.as_deref().expect("diagonal map");
            let inv: Vec<C64> = d.iter().map(|v| 1.0 / v).collect();
            let m = linalg::scale_cols(&linalg::scale_rows(&inv, &hhat.matrix), d);
            Ok(MatrixRep::new(m, *rep, format!("algebraic T^-1 ({}) T, T = {}", partner.hermitian, partner.transform)))
        }
        (Assembly::Algebraic, Representation::Basis(_)) => Err(Error::InvalidArgument(
            "algebraic assembly needs a grid representation".into(),
        )),
    }
}

/// Share of `|ψ|²` below which a mode is treated as physical near a singular point.
const SPURIOUS_MASS: f64 = 0.5;

/// Indices of grid eigenvectors that are artifacts of a coefficient singularity
/// at the origin.
///
/// A central-difference operator with coefficients blowing up like `1/x²` next to
/// the excluded point `x = 0` carries eigenvectors confined to the nodes around it,
/// with eigenvalues scaling like `1/h²`. They are detected by more than half of
/// their mass sitting on the nodes within `2h` of the origin.
pub fn spurious_grid_modes(s: &Spectrum, grid: &GridSpec, expr: &OperatorExpr) -> Vec<usize> {
    if !expr.singular_at_origin() {
        return Vec::new();
    }
    let near: Vec<usize> = grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() < 2.0 * grid.spacing())
        .map(|(j, _)| j)
        .collect();
    (0..s.len())
        .filter(|&k| {
            let col = s.right.column(k);
            let total: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            let local: f64 = near.iter().map(|&j| col[j].norm_sqr()).sum();
            local > SPURIOUS_MASS * total
        })
        .collect()
}

/// Result of comparing a basis spectrum against the same problem at twice the size.
#[derive(Debug, Clone)]
pub struct ConvergenceGate {
    pub spectrum: Spectrum,
    /// Indices into `spectrum` whose eigenvalues moved less than the tolerance.
    pub retained: Vec<usize>,
    /// Distance to the nearest eigenvalue of the doubled problem, per eigenvalue.
    pub shifts: Vec<f64>,
    pub tolerance: f64,
}

impl ConvergenceGate {
    pub fn retained_spectrum(&self) -> Spectrum {
        self.spectrum.subset(&self.retained)
    }
}

/// Default tolerance for the doubling test.
pub const GATE_TOLERANCE: f64 = 1e-4;

/// Diagonalize in basis `M` and `2M` (quadrature doubled as well) and keep the
/// eigenvalues that move less than `tolerance`. Truncation of a non-normal
/// operator produces eigenvalues that wander with `M`; these are dropped.
pub fn basis_convergence_gate(
    expr: &OperatorExpr,
    basis: &BasisSpec,
    quadrature_points: Option<usize>,
    tolerance: f64,
) -> Result<ConvergenceGate> {
    let q = quadrature_points.unwrap_or(2 * basis.size());
    let coarse = eig_dense(&assemble(expr, &(*basis).into(), Some(q))?.matrix)?;
    let fine = eig_dense(&assemble(expr, &basis.doubled().into(), Some(2 * q))?.matrix)?;
    let shifts: Vec<f64> = coarse
        .eigenvalues
        .iter()
        .map(|e| {
            fine.eigenvalues
                .iter()
                .map(|f| (e - f).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let retained = (0..coarse.len()).filter(|&k| shifts[k] < tolerance).collect();
    Ok(ConvergenceGate {
        spectrum: coarse,
        retained,
        shifts,
        tolerance,
    })
}

/// Spectrum of a model with artifacts removed.
#[derive(Debug, Clone)]
pub struct ModelSpectrum {
    /// Full decomposition of the assembled matrix.
    pub full: Spectrum,
    /// Indices into `full` kept as physical, in sorted order.
    pub physical: Vec<usize>,
    /// Largest doubling shift among physical eigenvalues (basis only).
    pub max_shift: Option<f64>,
}

impl ModelSpectrum {
    pub fn physical_spectrum(&self) -> Spectrum {
        self.full.subset(&self.physical)
    }
}

/// Diagonalize a model and separate physical eigenpairs: spurious grid modes are
/// screened out, and in the basis representation only eigenvalues passing the
/// doubling gate are kept.
pub fn model_spectrum(
    model: &ModelSpec,
    rep: &Representation,
    assembly: Assembly,
    gate: bool,
) -> Result<ModelSpectrum> {
    match rep {
        Representation::Grid(g) => {
            let h = assemble_model(model, rep, assembly)?;
            let full = eig_dense(&h.matrix)?;
            let spurious = if assembly == Assembly::Stencil {
                spurious_grid_modes(&full, g, &model.expr)
            } else {
                Vec::new()
            };
            let physical = (0..full.len()).filter(|k| !spurious.contains(k)).collect();
            Ok(ModelSpectrum {
                full,
                physical,
                max_shift: None,
            })
        }
        Representation::Basis(b) => {
            model.check_representation(rep)?;
            if gate {
                let g = basis_convergence_gate(&model.expr, b, model.quadrature_points, GATE_TOLERANCE)?;
                let max_shift = g.retained.iter().map(|&k| g.shifts[k]).fold(0.0, f64::max);
                Ok(ModelSpectrum {
                    full: g.spectrum,
                    physical: g.retained,
                    max_shift: Some(max_shift),
                })
            } else {
                let h = assemble(&model.expr, rep, model.quadrature_points)?;
                let full = eig_dense(&h.matrix)?;
                let physical = (0..full.len()).collect();
                Ok(ModelSpectrum {
                    full,
                    physical,
                    max_shift: None,
                })
            }
        }
    }
}

/// Oscillator eigenfunctions `factor(x)·ψₙ(x)` sampled on the grid, unit 2-norm.
pub fn reference_eigenvector(grid: &GridSpec, omega: f64, factor: &ScalarExpr, n: usize) -> crate::CVector {
    let mut v: crate::CVector = grid
        .nodes()
        .iter()
        .map(|&x| factor.eval(x) * crate::numerics::hermite_function(n, omega, x))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / norm);
    v
}

/// `max_j |ψⱼ − c·refⱼ|` with `c` the least-squares complex scale, both unit 2-norm.
pub fn aligned_residual(psi: &ndarray::ArrayView1<C64>, reference: &crate::CVector) -> f64 {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let overlap: C64 = reference.iter().zip(psi.iter()).map(|(r, p)| r.conj() * p).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    psi.iter()
        .zip(reference.iter())
        .map(|(p, r)| (p / norm - phase * r).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::make_grid;

    #[test]
    fn example_round_trips_through_printer() {
        for omega in [1.0, 2.0, 0.5] {
            let m = paper_example(omega).unwrap();
            let back = parse_expression(&m.expr.to_string()).unwrap();
            assert_eq!(back, m.expr);
        }
        let m = paper_example(1.0).unwrap();
        let direct = parse_expression("p^2 + (2i/x)*p − 2/x^2 + x^2").unwrap();
        assert_eq!(direct, m.expr);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(paper_example(0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(harmonic_oscillator(-1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(bender_family(-2.0), Err(Error::InvalidArgument(_))));
        assert!(bender_family(-1.9).is_ok());
        assert!(builtin("nope", 1.0, 0.0).is_err());
    }

    #[test]
    fn bender_zero_is_the_oscillator() {
        let b = BasisSpec::new(30, 1.0).unwrap();
        let rep: Representation = b.into();
        let hb = assemble_model(&bender_family(0.0).unwrap(), &rep, Assembly::Stencil).unwrap();
        let ho = assemble_model(&harmonic_oscillator(1.0).unwrap(), &rep, Assembly::Stencil).unwrap();
        let diff = &hb.matrix - &ho.matrix;
        assert!(diff.iter().all(|z| z.norm() < 1e-12));
        let g = make_grid(5.0, 40).unwrap();
        let gb = assemble_model(&bender_family(0.0).unwrap(), &g.into(), Assembly::Stencil).unwrap();
        let go = assemble_model(&harmonic_oscillator(1.0).unwrap(), &g.into(), Assembly::Stencil).unwrap();
        assert!((&gb.matrix - &go.matrix).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn bender_potential_is_pt_symmetric() {
        for nu in [-1.5, -0.5, 0.0, 0.5, 1.0] {
            let m = bender_family(nu).unwrap();
            let v = m.expr.coefficient(0).unwrap();
            let g = make_grid(4.0, 25).unwrap();
            let x = g.nodes();
            for j in 0..x.len() {
                let mirrored = v.eval(x[x.len() - 1 - j]);
                assert!((mirrored - v.eval(x[j]).conj()).norm() <= 1e-12 * v.eval(x[j]).norm().max(1.0));
            }
        }
        let one = bender_family(1.0).unwrap();
        let v = one.expr.coefficient(0).unwrap().eval(1.3);
        assert!((v - C64::new(0.0, 1.3f64.powi(3))).norm() < 1e-12);
    }

    #[test]
    fn oscillator_in_basis_is_diagonal() {
        let rep: Representation = BasisSpec::new(4, 1.0).unwrap().into();
        let h = assemble_model(&harmonic_oscillator(1.0).unwrap(), &rep, Assembly::Stencil).unwrap();
        for i in 0..4 {
            assert!((h.matrix[[i, i]] - C64::new((2 * i + 1) as f64, 0.0)).norm() < 1e-12);
        }
        let s = eig_dense(&h.matrix).unwrap();
        let re: Vec<f64> = s.eigenvalues.iter().map(|e| e.re).collect();
        for (a, b) in re.iter().zip([1.0, 3.0, 5.0, 7.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_models_refuse_the_basis() {
        let m = paper_example(1.0).unwrap();
        let rep: Representation = BasisSpec::new(10, 1.0).unwrap().into();
        assert!(matches!(assemble_model(&m, &rep, Assembly::Stencil), Err(Error::UnsupportedInBasis(_))));
        let user = ModelSpec::from_expression("p^2 + 1/x^2").unwrap();
        assert!(matches!(user.recommended, Representation::Grid(_)));
        let smooth = ModelSpec::from_expression("p^2 + x^4").unwrap();
        assert!(matches!(smooth.recommended, Representation::Basis(_)));
    }

    #[test]
    fn algebraic_route_is_similar_to_oscillator() {
        let g = make_grid(6.0, 60).unwrap();
        let rep: Representation = g.into();
        let m = paper_example(1.0).unwrap();
        let h = assemble_model(&m, &rep, Assembly::Algebraic).unwrap();
        let ho = assemble_model(&harmonic_oscillator(1.0).unwrap(), &rep, Assembly::Stencil).unwrap();
        let a = eig_dense(&h.matrix).unwrap();
        let b = eig_dense(&ho.matrix).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).norm() < 1e-8 * y.norm().max(1.0));
        }
    }

    #[test]
    fn spurious_modes_found_only_for_singular_stencils() {
        let g = make_grid(6.0, 60).unwrap();
        let rep: Representation = g.into();
        let m = paper_example(1.0).unwrap();
        let ms = model_spectrum(&m, &rep, Assembly::Stencil, false).unwrap();
        let spurious: Vec<usize> = (0..ms.full.len()).filter(|k| !ms.physical.contains(k)).collect();
        assert_eq!(spurious.len(), 2);
        for &k in &spurious {
            assert!(ms.full.eigenvalues[k].re < -100.0);
        }
        let lowest = ms.full.eigenvalues[ms.physical[0]];
        assert!((lowest.re - 1.0).abs() < 0.05, "{lowest}");
        let ho = model_spectrum(&harmonic_oscillator(1.0).unwrap(), &rep, Assembly::Stencil, false).unwrap();
        assert_eq!(ho.physical.len(), ho.full.len());
    }

    #[test]
    fn alignment_residual_ignores_phase() {
        let g = make_grid(5.0, 50).unwrap();
        let r = reference_eigenvector(&g, 1.0, &ScalarExpr::X, 1);
        let rotated = r.mapv(|z| z * C64::from_polar(3.0, 0.7));
        assert!(aligned_residual(&rotated.view(), &r) < 1e-14);
    }
}
