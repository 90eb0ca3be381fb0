//! Time evolution by spectral expansion, with norms tracked in two inner products.

use crate::hilbert::{gram_matrix, Gram, InnerProduct};
use crate::numerics::{Representation, Spectrum};
use crate::{CVector, Error, Result, C64};

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    /// Euclidean norm of each state.
    pub l2_norms: Vec<f64>,
    /// `√(ψ†ηψ)` under the supplied inner product.
    pub h_norms: Vec<f64>,
    /// `cₙ = φₙ†ψ₀`
    pub expansion_coefficients: Vec<C64>,
    /// Relative part of ψ₀ outside the span of the eigenvectors, `‖ψ₀ − Σcₙψₙ‖/‖ψ₀‖`.
    pub discarded_fraction: f64,
    /// Set when some eigenvalue is not real; `h_norms` are then not conserved.
    pub complex_spectrum: bool,
}

fn euclid(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl EvolutionResult {
    /// `max |h(t) − h(0)| / h(0)`
    pub fn h_norm_drift(&self) -> f64 {
        relative_drift(&self.h_norms)
    }

    pub fn l2_norm_drift(&self) -> f64 {
        relative_drift(&self.l2_norms)
    }

    /// `max/min − 1` of the Euclidean norms.
    pub fn l2_relative_range(&self) -> f64 {
        relative_range(&self.l2_norms)
    }

    pub fn h_relative_range(&self) -> f64 {
        relative_range(&self.h_norms)
    }
}

fn relative_drift(v: &[f64]) -> f64 {
    let first = v[0];
    v.iter().map(|x| (x - first).abs()).fold(0.0, f64::max) / first
}

fn relative_range(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi / lo - 1.0
}

/// `ψ(t) = Σₙ (φₙ†ψ₀) e^{−iEₙt} ψₙ`, with the component of ψ₀ outside the span of
/// the eigenvectors dropped and reported.
pub fn spectral_propagate(
    s: &Spectrum,
    psi0: &CVector,
    times: &[f64],
    ip: &InnerProduct,
    rep: &Representation,
) -> Result<EvolutionResult> {
    check_inputs(s, psi0, times)?;
    let gram = gram_matrix(ip, rep)?;
    if gram.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: gram.dim(),
        });
    }
    Ok(propagate(s, psi0, times, |psi, _| gram.inner(psi, psi).re.max(0.0).sqrt()))
}

/// Like [`spectral_propagate`], with `h_norms` taken in the metric that makes the
/// given eigenvectors orthonormal, restricted to their span: `‖ψ‖ = (Σ|cₙ|²)^{1/2}`.
///
/// This needs no metric on the whole space, so it applies to a subset of well
/// converged modes when the full eigenbasis is too ill-conditioned to invert.
pub fn spectral_propagate_in_span(s: &Spectrum, psi0: &CVector, times: &[f64]) -> Result<EvolutionResult> {
    check_inputs(s, psi0, times)?;
    Ok(propagate(s, psi0, times, |_, c| {
        c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }))
}

fn check_inputs(s: &Spectrum, psi0: &CVector, times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no time points".into()));
    }
    if psi0.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: psi0.len(),
        });
    }
    if euclid(psi0) == 0.0 {
        return Err(Error::InvalidArgument("initial state is zero".into()));
    }
    Ok(())
}

fn propagate(
    s: &Spectrum,
    psi0: &CVector,
    times: &[f64],
    h_norm: impl Fn(&CVector, &[C64]) -> f64,
) -> EvolutionResult {
    let norm0 = euclid(psi0);
    let coefficients: Vec<C64> = s
        .left
        .columns()
        .into_iter()
        .map(|phi| phi.iter().zip(psi0.iter()).map(|(a, b)| a.conj() * b).sum())
        .collect();
    let reconstruct = |c: &[C64]| s.right.dot(&CVector::from(c.to_vec()));
    let discarded_fraction = euclid(&(psi0 - &reconstruct(&coefficients))) / norm0;

    let mut states = Vec::with_capacity(times.len());
    let mut l2_norms = Vec::with_capacity(times.len());
    let mut h_norms = Vec::with_capacity(times.len());
    for &t in times {
        let phased: Vec<C64> = coefficients
            .iter()
            .zip(&s.eigenvalues)
            .map(|(c, e)| c * (C64::new(0.0, -t) * e).exp())
            .collect();
        let psi = reconstruct(&phased);
        l2_norms.push(euclid(&psi));
        h_norms.push(h_norm(&psi, &phased));
        states.push(psi);
    }
    EvolutionResult {
        times: times.to_vec(),
        states,
        l2_norms,
        h_norms,
        expansion_coefficients: coefficients,
        discarded_fraction,
        complex_spectrum: !s.all_real(),
    }
}

/// Evenly spaced times `0, tmax/steps, …, tmax`.
pub fn time_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max >= 0.0) || steps == 0 {
        return Err(Error::InvalidArgument(format!(
            "time grid needs tmax ≥ 0 and steps ≥ 1, got {t_max} and {steps}"
        )));
    }
    Ok((0..=steps).map(|k| t_max * k as f64 / steps as f64).collect())
}

/// Overlap below which two modes count as orthogonal in the flat product.
const OVERLAP_FLOOR: f64 = 1e-6;

/// Equal-weight mix of the lowest candidate mode and the next candidate with a
/// non-negligible flat overlap, normalized to unit Euclidean norm.
///
/// Modes of opposite parity are orthogonal in the flat product, so their mix has
/// a constant flat norm; pairing with an overlapping mode makes the non-unitarity
/// in the flat product visible. When every mode is orthogonal to the lowest one
/// (a Hermitian operator) the second candidate is used. Returns the state and the
/// two chosen indices.
pub fn two_mode_state(s: &Spectrum, candidates: &[usize], flat: &Gram) -> Result<(CVector, [usize; 2])> {
    let first = *candidates
        .first()
        .ok_or_else(|| Error::InvalidArgument("no modes to build an initial state from".into()))?;
    let a = s.right.column(first).to_owned();
    let na = flat.inner(&a, &a).re.sqrt();
    let second = candidates[1..]
        .iter()
        .copied()
        .find(|&k| {
            let b = s.right.column(k).to_owned();
            let nb = flat.inner(&b, &b).re.sqrt();
            flat.inner(&a, &b).norm() > OVERLAP_FLOOR * na * nb
        })
        .or_else(|| candidates.get(1).copied())
        .ok_or_else(|| Error::InvalidArgument("a two-mode state needs at least two modes".into()))?;
    let psi = &a + &s.right.column(second);
    let norm = euclid(&psi);
    Ok((psi.mapv(|z| z / norm), [first, second]))
}
