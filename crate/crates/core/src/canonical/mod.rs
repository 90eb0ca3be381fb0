//! Similarity transforms, canonical operator pairs and Hermiticity reports.
//!
//! Given a map `T` with metric `η = T†T`, the canonical pair is `x^c = T⁻¹xT`,
//! `p^c = T⁻¹pT`. It inherits `[x^c, p^c] = T⁻¹[x, p]T` and is Hermitian in the
//! product `u†ηv` whenever `x` and `p` are Hermitian in the flat one.

mod verify;

pub use verify::{resolve_map, verify_model, VerificationReport, VerifyOptions};

use std::fmt;

use ndarray::Axis;

use crate::hilbert::{gram_matrix, hermiticity_residual_with, Gram, InnerProduct, TransformMap};
use crate::numerics::linalg::{self, adjoint, frobenius, hermitian_eigen};
use crate::numerics::{Representation, Spectrum};
use crate::operators::{assemble, momentum_power, position_momentum_matrices, MatrixRep, OperatorExpr};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Verdict tolerance for grid discretizations.
pub const GRID_TOLERANCE: f64 = 1e-3;
/// Verdict tolerance for exact matrix identities.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-8;
/// Largest condition of the eigenvector block accepted by [`eigenmap_t`].
pub const EIGENMAP_CONDITION_LIMIT: f64 = 1e8;

fn conj_map(t: &TransformMap, a: &CMatrix) -> CMatrix {
    match &t.diagonal {
        Some(d) => {
            let inv: Vec<C64> = d.iter().map(|v| 1.0 / v).collect();
            linalg::scale_cols(&linalg::scale_rows(&inv, a), d)
        }
        None => t.inverse.dot(a).dot(&t.matrix),
    }
}

/// `T⁻¹·A·T`
pub fn similarity_transform(a: &MatrixRep, t: &TransformMap) -> Result<MatrixRep> {
    if a.dim() != t.dim() {
        return Err(Error::InvalidArgument(format!(
            "matrix of size {} cannot be transformed by a map of size {}",
            a.dim(),
            t.dim()
        )));
    }
    Ok(a.with_matrix(
        conj_map(t, &a.matrix),
        format!("T^-1 ({}) T, cond(T) = {:.3e}", a.provenance, t.condition),
    ))
}

/// Hermiticity of one operator under the flat and the transformed product.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiticityRow {
    pub operator: String,
    pub residual_l2: f64,
    pub residual_h: f64,
    pub hermitian_l2: bool,
    pub hermitian_h: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiticityReport {
    pub rows: Vec<HermiticityRow>,
    pub tolerance: f64,
    pub footer: String,
}

const FOOTER: &str = "matrix Hermiticity only: a finite matrix cannot distinguish Hermitian from self-adjoint operators";

impl HermiticityReport {
    pub fn row(&self, operator: &str) -> Option<&HermiticityRow> {
        self.rows.iter().find(|r| r.operator == operator)
    }
}

fn report_row(label: &str, a: &CMatrix, l2: &Gram, h: &Gram, tolerance: f64) -> HermiticityRow {
    let residual_l2 = hermiticity_residual_with(a, l2);
    let residual_h = hermiticity_residual_with(a, h);
    HermiticityRow {
        operator: label.to_string(),
        residual_l2,
        residual_h,
        hermitian_l2: residual_l2 <= tolerance,
        hermitian_h: residual_h <= tolerance,
    }
}

/// The position/momentum pair carried through a map `T`.
#[derive(Debug, Clone)]
pub struct CanonicalPair {
    pub xc: MatrixRep,
    pub pc: MatrixRep,
    /// `T⁻¹ p² T` with the representation's own `p²`.
    pub p2c: MatrixRep,
    pub source: TransformMap,
    pub report: HermiticityReport,
}

fn pair_grams(t: &TransformMap, rep: &Representation) -> Result<(Gram, Gram)> {
    let l2 = gram_matrix(&InnerProduct::Flat, rep)?;
    let h = match &t.diagonal {
        Some(d) => {
            let base = match &l2 {
                Gram::Diagonal(b) => b.clone(),
                Gram::Dense(_) => unreachable!("flat Gram is diagonal"),
            };
            Gram::Diagonal(d.iter().zip(base).map(|(v, b)| b * v.norm_sqr()).collect())
        }
        None => Gram::Dense(t.metric()),
    };
    Ok((l2, h))
}

/// Inner product in which the canonical pair of `t` is Hermitian.
pub fn transformed_product(t: &TransformMap, rep: &Representation) -> Result<InnerProduct> {
    Ok(InnerProduct::Metric(pair_grams(t, rep)?.1.to_dense()))
}

/// Build `x^c`, `p^c` for the map `t` in representation `rep`, with a Hermiticity
/// report for `x`, `p`, `x^c`, `p^c` under the flat and the `T†T` product.
pub fn canonical_pair(t: &TransformMap, rep: &Representation) -> Result<CanonicalPair> {
    let (x, p) = position_momentum_matrices(rep);
    let p2 = momentum_power(rep, 2);
    let xc = similarity_transform(&x, t)?;
    let pc = similarity_transform(&p, t)?;
    let p2c = similarity_transform(&p2, t)?;
    let tolerance = match rep {
        Representation::Grid(_) => GRID_TOLERANCE,
        Representation::Basis(_) => ALGEBRAIC_TOLERANCE,
    };
    let (l2, h) = pair_grams(t, rep)?;
    let rows = vec![
        report_row("x", &x.matrix, &l2, &h, tolerance),
        report_row("p", &p.matrix, &l2, &h, tolerance),
        report_row("xc", &xc.matrix, &l2, &h, tolerance),
        report_row("pc", &pc.matrix, &l2, &h, tolerance),
    ];
    Ok(CanonicalPair {
        xc,
        pc,
        p2c,
        source: t.clone(),
        report: HermiticityReport {
            rows,
            tolerance,
            footer: FOOTER.into(),
        },
    })
}

impl CanonicalPair {
    pub fn representation(&self) -> Representation {
        self.xc.representation
    }

    /// `[x^c, p^c] − iI`
    pub fn commutator_defect(&self) -> CMatrix {
        let (x, p) = (&self.xc.matrix, &self.pc.matrix);
        x.dot(p) - p.dot(x) - linalg::identity(x.nrows()).mapv(|z| z * C64::new(0.0, 1.0))
    }

    /// Evaluate `Σ fₖ(x^c)(p^c)^k` by substitution, `fₖ(x^c) = T⁻¹fₖ(x)T` and
    /// `(p^c)² = T⁻¹p²T` with the representation's own `p²`.
    pub fn substitute(&self, template: &OperatorExpr) -> Result<MatrixRep> {
        let rep = self.representation();
        let n = self.xc.dim();
        let mut total = CMatrix::zeros((n, n));
        for term in template.terms() {
            let f = assemble(&OperatorExpr::multiplication(term.coefficient.clone()), &rep, None)?.matrix;
            let fc = conj_map(&self.source, &f);
            let pk = match term.order {
                0 => {
                    total += &fc;
                    continue;
                }
                1 => &self.pc.matrix,
                _ => &self.p2c.matrix,
            };
            total += &fc.dot(pk);
        }
        Ok(MatrixRep::new(total, rep, format!("{template} at (xc, pc)")))
    }
}

/// Test vectors for the commutator check: Gaussians on a grid, basis vectors in
/// the oscillator basis.
fn smooth_vectors(rep: &Representation, k: usize) -> Vec<CVector> {
    match rep {
        Representation::Grid(g) => {
            let (lo, hi) = (1.0f64, (g.half_width() / 4.0).max(1.0));
            (0..k)
                .map(|i| {
                    let t = if k > 1 { i as f64 / (k - 1) as f64 } else { 0.0 };
                    let width = lo * (hi / lo).powf(t);
                    g.nodes()
                        .iter()
                        .map(|&x| C64::new((-0.5 * (x / width).powi(2)).exp(), 0.0))
                        .collect()
                })
                .collect()
        }
        Representation::Basis(b) => (0..k)
            .map(|i| {
                let mut v = CVector::zeros(b.size());
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect(),
    }
}

/// Largest relative defect `‖T([x^c, p^c] − i)u‖ / ‖Tu‖` over the test vectors
/// `u = T⁻¹g`, `g` smooth. The norm is that of the transformed product.
pub fn commutator_residual(pair: &CanonicalPair, k: usize) -> Result<f64> {
    let rep = pair.representation();
    if k == 0 || 2 * k > rep.dim() {
        return Err(Error::InvalidArgument(format!(
            "commutator test needs 1 ≤ k ≤ {} vectors, got {k}",
            rep.dim() / 2
        )));
    }
    let defect = pair.commutator_defect();
    let t = &pair.source;
    let mut worst = 0.0f64;
    for g in smooth_vectors(&rep, k) {
        let u = t.inverse.dot(&g);
        let tu = t.matrix.dot(&u);
        let r = t.matrix.dot(&defect.dot(&u));
        let norm = |v: &CVector| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(norm(&r) / norm(&tu));
    }
    Ok(worst)
}

/// The six operators of the Hermiticity table.
#[derive(Debug, Clone, Copy)]
pub struct TableOperators<'a> {
    pub h: &'a MatrixRep,
    pub xc: &'a MatrixRep,
    pub pc: &'a MatrixRep,
    pub hhat: &'a MatrixRep,
    pub x: &'a MatrixRep,
    pub p: &'a MatrixRep,
}

/// Residuals `‖GA − A†G‖_F/(‖G‖_F‖A‖_F)` of the six operators under both products.
pub fn hermiticity_table(
    ops: TableOperators<'_>,
    ip_l2: &InnerProduct,
    ip_h: &InnerProduct,
    tolerance: f64,
) -> Result<HermiticityReport> {
    let rep = ops.h.representation;
    let l2 = gram_matrix(ip_l2, &rep)?;
    let h = gram_matrix(ip_h, &rep)?;
    let entries = [
        ("H", ops.h),
        ("x", ops.x),
        ("p", ops.p),
        ("Hhat", ops.hhat),
        ("xc", ops.xc),
        ("pc", ops.pc),
    ];
    let mut rows = Vec::with_capacity(entries.len());
    for (label, a) in entries {
        if a.dim() != rep.dim() {
            return Err(Error::DimensionMismatch {
                expected: rep.dim(),
                found: a.dim(),
            });
        }
        rows.push(report_row(label, &a.matrix, &l2, &h, tolerance));
    }
    Ok(HermiticityReport {
        rows,
        tolerance,
        footer: FOOTER.into(),
    })
}

/// Expected verdict for one cell of the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Hermitian,
    NonHermitian,
    /// Not fixed by the construction.
    Either,
}

impl Expect {
    pub fn accepts(self, hermitian: bool) -> bool {
        match self {
            Expect::Hermitian => hermitian,
            Expect::NonHermitian => !hermitian,
            Expect::Either => true,
        }
    }
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expect::Hermitian => "Hermitian",
            Expect::NonHermitian => "non-Hermitian",
            Expect::Either => "either",
        })
    }
}

/// The verdict pattern forced by a similarity `H = T⁻¹ĤT` with `Ĥ` Hermitian.
///
/// When `T` is unitary up to scale the two products coincide and every operator
/// is Hermitian in both. Entries that depend on the particular `T` are `Either`.
pub fn expected_pattern(t_unitary: bool) -> Vec<(&'static str, Expect, Expect)> {
    use Expect::*;
    if t_unitary {
        return ["H", "x", "p", "Hhat", "xc", "pc"]
            .into_iter()
            .map(|op| (op, Hermitian, Hermitian))
            .collect();
    }
    vec![
        ("H", NonHermitian, Hermitian),
        ("x", Hermitian, Either),
        ("p", Hermitian, Either),
        ("Hhat", Hermitian, NonHermitian),
        ("xc", Either, Hermitian),
        ("pc", Either, Hermitian),
    ]
}

/// Rows whose verdicts disagree with the pattern.
pub fn pattern_mismatches(report: &HermiticityReport, pattern: &[(&str, Expect, Expect)]) -> Vec<String> {
    pattern
        .iter()
        .filter_map(|&(op, l2, h)| match report.row(op) {
            None => Some(format!("{op}: missing")),
            Some(r) if !(l2.accepts(r.hermitian_l2) && h.accepts(r.hermitian_h)) => Some(format!(
                "{op}: expected {l2}/{h}, found {}/{}",
                verdict(r.hermitian_l2),
                verdict(r.hermitian_h)
            )),
            Some(_) => None,
        })
        .collect()
}

pub fn verdict(hermitian: bool) -> &'static str {
    if hermitian {
        "Hermitian"
    } else {
        "non-Hermitian"
    }
}

/// True when `T†T` is a multiple of the identity to relative `1e-12`.
pub fn is_unitary_up_to_scale(t: &TransformMap) -> bool {
    match &t.diagonal {
        Some(d) => {
            let mags: Vec<f64> = d.iter().map(|v| v.norm_sqr()).collect();
            let (lo, hi) = mags.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &m| (lo.min(m), hi.max(m)));
            hi - lo <= 1e-12 * hi
        }
        None => {
            let eta = t.metric();
            let n = eta.nrows();
            let scale = eta.diag().iter().map(|z| z.re).sum::<f64>() / n as f64;
            let diff = &eta - &linalg::identity(n).mapv(|z| z * scale);
            frobenius(&diff.view()) <= 1e-12 * frobenius(&eta.view())
        }
    }
}

/// `‖H − template(x^c, p^c)‖_F / ‖H‖_F`
pub fn canonical_form_residual(h: &MatrixRep, pair: &CanonicalPair, template: &OperatorExpr) -> Result<f64> {
    let t = pair.substitute(template)?;
    if t.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: t.dim(),
        });
    }
    let norm = frobenius(&h.matrix.view());
    Ok(frobenius(&(&h.matrix - &t.matrix).view()) / norm.max(f64::MIN_POSITIVE))
}

/// Map sending the first `k` eigenvectors of `from` onto those of `to`,
/// `T = Ψ_to Ψ_from⁺ + (I − Ψ_from Ψ_from⁺)`.
pub fn eigenmap_t(from: &Spectrum, to: &Spectrum, k: usize) -> Result<TransformMap> {
    if k == 0 || k > from.len() || k > to.len() {
        return Err(Error::InvalidArgument(format!(
            "eigenmap needs 1 ≤ k ≤ {} pairs, got {k}",
            from.len().min(to.len())
        )));
    }
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch {
            expected: from.dim(),
            found: to.dim(),
        });
    }
    let cols: Vec<usize> = (0..k).collect();
    let a = from.right.select(Axis(1), &cols);
    let b = to.right.select(Axis(1), &cols);
    let gram = adjoint(&a.view()).dot(&a);
    let (values, _) = hermitian_eigen(&gram)?;
    let condition = (values[k - 1] / values[0]).sqrt();
    if !(condition <= EIGENMAP_CONDITION_LIMIT) {
        return Err(Error::Conditioning {
            condition,
            limit: EIGENMAP_CONDITION_LIMIT,
        });
    }
    let pinv = linalg::inverse(&gram)?.dot(&adjoint(&a.view()));
    let n = from.dim();
    let t = b.dot(&pinv) + linalg::identity(n) - a.dot(&pinv);
    TransformMap::from_matrix(t)
}
