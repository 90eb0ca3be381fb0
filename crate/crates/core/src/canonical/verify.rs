//! End-to-end check of a model against a declared similarity map.

use crate::hilbert::{diagonal_map, orthonormality_defect, pseudo_hermiticity_residual, InnerProduct, TransformMap};
use crate::models::{assemble_model, model_spectrum, Assembly, ModelSpec};
use crate::numerics::Representation;
use crate::operators::{assemble, position_momentum_matrices, ScalarExpr};
use crate::{Error, Result, C64};

use super::{
    canonical_form_residual, canonical_pair, commutator_residual, expected_pattern, hermiticity_table,
    is_unitary_up_to_scale, pattern_mismatches, similarity_transform, transformed_product, HermiticityReport,
    TableOperators, ALGEBRAIC_TOLERANCE, GRID_TOLERANCE,
};

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub assembly: Assembly,
    /// Map `T`; the model's own partner map when `None`.
    pub transform: Option<ScalarExpr>,
    /// Number of smooth test vectors for the commutator.
    pub commutator_vectors: usize,
    /// Number of eigenvectors in the orthonormality check.
    pub eigenvectors: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            assembly: Assembly::Stencil,
            transform: None,
            commutator_vectors: 8,
            eigenvectors: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub transform: String,
    pub transform_unitary: bool,
    pub table: HermiticityReport,
    /// Rows of `table` that disagree with the expected verdict pattern.
    pub mismatches: Vec<String>,
    pub commutator_residual: f64,
    /// `None` when the map is not the model's own partner map, so no template is known.
    pub canonical_form_residual: Option<f64>,
    pub pseudo_hermiticity_residual: f64,
    pub orthonormality_defect: f64,
    pub eigenvectors_checked: usize,
}

impl VerificationReport {
    pub fn pattern_matches(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Diagonal map from an expression: constants work in any representation,
/// position-dependent maps need a grid.
pub fn resolve_map(f: &ScalarExpr, rep: &Representation) -> Result<TransformMap> {
    match (f.as_const(), rep) {
        (Some(v), _) if v.norm() == 0.0 || !v.norm().is_finite() => {
            Err(Error::InvalidArgument(format!("map `{f}` is not invertible")))
        }
        (Some(v), _) => Ok(TransformMap::from_diagonal(vec![v; rep.dim()])),
        (None, Representation::Grid(g)) => diagonal_map(f, g),
        (None, Representation::Basis(_)) => Err(Error::InvalidArgument(format!(
            "position-dependent map `{f}` needs a grid representation"
        ))),
    }
}

/// Build `H`, the canonical pair of `T` and the Hermitian partner `Ĥ`, then
/// measure every identity the similarity implies.
pub fn verify_model(model: &ModelSpec, rep: &Representation, options: &VerifyOptions) -> Result<VerificationReport> {
    let partner = model.partner.as_ref();
    let f = match (&options.transform, partner) {
        (Some(f), _) => f.clone(),
        (None, Some(p)) => p.transform.clone(),
        (None, None) => {
            return Err(Error::InvalidArgument(format!(
                "model `{}` declares no map; pass one explicitly",
                model.name
            )))
        }
    };
    let own_map = partner.filter(|p| p.transform.to_string() == f.to_string());
    let t = resolve_map(&f, rep)?;
    let h = assemble_model(model, rep, options.assembly)?;

    let hhat = match own_map {
        Some(p) => assemble(&p.hermitian, rep, model.quadrature_points)?,
        None => {
            let back = TransformMap::from_diagonal(t.diagonal.as_ref().expect("diagonal map").iter().map(|v| C64::new(1.0, 0.0) / v).collect());
            similarity_transform(&h, &back)?
        }
    };
    let pair = canonical_pair(&t, rep)?;
    let (x, p) = position_momentum_matrices(rep);
    let ip_h = transformed_product(&t, rep)?;
    let tolerance = match (rep, options.assembly) {
        (Representation::Grid(_), Assembly::Stencil) => GRID_TOLERANCE,
        _ => ALGEBRAIC_TOLERANCE,
    };
    let table = hermiticity_table(
        TableOperators {
            h: &h,
            xc: &pair.xc,
            pc: &pair.pc,
            hhat: &hhat,
            x: &x,
            p: &p,
        },
        &InnerProduct::Flat,
        &ip_h,
        tolerance,
    )?;
    let transform_unitary = is_unitary_up_to_scale(&t);
    let mismatches = pattern_mismatches(&table, &expected_pattern(transform_unitary));

    let k = options.commutator_vectors.min(rep.dim() / 2).max(1);
    let commutator = commutator_residual(&pair, k)?;
    let canonical = own_map
        .map(|p| canonical_form_residual(&h, &pair, &p.hermitian))
        .transpose()?;
    let pseudo = pseudo_hermiticity_residual(&h, &ip_h)?;

    let spectrum = model_spectrum(model, rep, options.assembly, false)?.physical_spectrum();
    let count = options.eigenvectors.min(spectrum.len());
    let ortho = orthonormality_defect(&spectrum, &ip_h, rep, count)?;

    Ok(VerificationReport {
        transform: f.to_string(),
        transform_unitary,
        table,
        mismatches,
        commutator_residual: commutator,
        canonical_form_residual: canonical,
        pseudo_hermiticity_residual: pseudo,
        orthonormality_defect: ortho,
        eigenvectors_checked: count,
    })
}
