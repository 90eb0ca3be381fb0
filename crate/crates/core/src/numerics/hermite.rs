use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use ndarray_linalg::{EigValsh, UPLO};

use crate::{CMatrix, Error, Result, C64};

const RESCALE: f64 = 1e150;

/// Hermite functions ψ₀ … ψ_{count-1} at `x` as `(values, log_scale)`, with the
/// true value `ψₙ(x) = values[n]·exp(log_scale)`.
///
/// The three-term recurrence runs on unscaled numbers and is renormalized whenever it
/// grows past 1e150, so far-tail nodes neither overflow in the polynomial nor underflow
/// in the Gaussian.
pub(crate) fn hermite_raw(count: usize, omega: f64, x: f64) -> (Vec<f64>, f64) {
    let mut values = Vec::with_capacity(count);
    let mut log_scale = -0.5 * omega * x * x + 0.25 * (omega / std::f64::consts::PI).ln();
    if count == 0 {
        return (values, log_scale);
    }
    values.push(1.0);
    if count == 1 {
        return (values, log_scale);
    }
    let a = (2.0 * omega).sqrt() * x;
    values.push(a);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 * omega / (nf + 1.0)).sqrt() * x * values[n]
            - (nf / (nf + 1.0)).sqrt() * values[n - 1];
        values.push(next);
        if next.abs() > RESCALE {
            for v in values.iter_mut() {
                *v /= RESCALE;
            }
            log_scale += RESCALE.ln();
        }
    }
    (values, log_scale)
}

/// All Hermite functions ψ₀ … ψ_{count-1} of frequency `omega` at `x`.
pub fn hermite_functions(count: usize, omega: f64, x: f64) -> Vec<f64> {
    let (mut values, log_scale) = hermite_raw(count, omega, x);
    for v in values.iter_mut() {
        *v = if *v == 0.0 { 0.0 } else { *v * log_scale.exp() };
    }
    values
}

/// L₂-normalized eigenfunction ψₙ of `p² + ω²x²` (eigenvalue `ω(2n+1)`).
pub fn hermite_function(n: usize, omega: f64, x: f64) -> f64 {
    let (values, log_scale) = hermite_raw(n + 1, omega, x);
    let v = values[n];
    if v == 0.0 {
        0.0
    } else {
        v.signum() * (v.abs().ln() + log_scale).exp()
    }
}

/// Gauss–Hermite rule for `∫ e^{-ωx²} f(x) dx`.
///
/// `scaled_weights[i] = weights[i]·e^{ω xᵢ²}` are the weights for integrating
/// `f(x)` itself when `f` already carries the Gaussian decay; they stay finite for
/// large rules where the plain weights underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteRule {
    pub omega: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scaled_weights: Vec<f64>,
}

/// Nodes and weights for a plain line integral `∫ f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

impl GaussHermiteRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `∫ e^{-ωx²} f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// The same nodes with the Gaussian folded into the weights.
    pub fn line_rule(&self) -> LineRule {
        LineRule {
            nodes: self.nodes.clone(),
            weights: self.scaled_weights.clone(),
        }
    }
}

/// Gauss–Hermite rule with `points` nodes for the weight `e^{-ωx²}`.
///
/// Nodes come from the Golub–Welsch eigenproblem and are polished by Newton steps on
/// ψ_Q; weights use the Christoffel form `1/(Q·ψ_{Q-1}(xᵢ)²)`, which is exact for the
/// normalized Hermite functions.
pub fn gauss_hermite_rule(points: usize, omega: f64) -> Result<GaussHermiteRule> {
    if points == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one point".into()));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "quadrature frequency must be positive, got {omega}"
        )));
    }
    let q = points;
    let mut nodes = if q == 1 {
        vec![0.0]
    } else {
        let mut jacobi = CMatrix::zeros((q, q));
        for k in 1..q {
            let b = C64::new((k as f64 / (2.0 * omega)).sqrt(), 0.0);
            jacobi[[k - 1, k]] = b;
            jacobi[[k, k - 1]] = b;
        }
        jacobi.eigvalsh(UPLO::Upper)?.to_vec()
    };
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (v, _) = hermite_raw(q + 1, omega, *x);
            let f = v[q];
            let df = (2.0 * q as f64 * omega).sqrt() * v[q - 1] - omega * *x * v[q];
            if df == 0.0 {
                break;
            }
            let step = f / df;
            *x -= step;
            if step.abs() < 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    // Exact symmetry of the rule.
    for i in 0..q / 2 {
        let m = 0.5 * (nodes[q - 1 - i] - nodes[i]);
        nodes[i] = -m;
        nodes[q - 1 - i] = m;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    let mut weights = Vec::with_capacity(q);
    let mut scaled_weights = Vec::with_capacity(q);
    for &x in &nodes {
        let (v, log_scale) = hermite_raw(q, omega, x);
        let last = v[q - 1];
        // 1/(Q ψ²) with ψ = last·e^{log_scale}
        let log_scaled = -(q as f64).ln() - 2.0 * (last.abs().ln() + log_scale);
        scaled_weights.push(log_scaled.exp());
        weights.push((log_scaled - omega * x * x).exp());
    }
    Ok(GaussHermiteRule {
        omega,
        nodes,
        weights,
        scaled_weights,
    })
}

/// Composite Gauss–Legendre rule for integrands built from the first `size`
/// Hermite functions of frequency `omega` times a coefficient that may be
/// non-smooth at `x = 0` (|x|^α, principal-branch powers).
///
/// Panels are graded geometrically toward the origin, which resolves algebraic
/// endpoint behaviour, then run uniformly out past the classical turning point
/// `√(2M+1)/√ω` with a panel width tied to the shortest oscillation of ψ_{M-1}.
pub fn graded_origin_rule(size: usize, omega: f64) -> LineRule {
    const PER_PANEL: usize = 16;
    const LEVELS: i32 = 24;
    const RATIO: f64 = 0.2;
    const CORE: f64 = 0.5;

    let gl = GaussLegendre::new(NonZeroUsize::new(PER_PANEL).expect("nonzero"));
    let turning = (2.0 * size as f64 + 1.0).sqrt();
    let t_max = turning + 8.0;
    let width = (1.5 / turning).min(0.5);

    let mut edges = vec![0.0];
    edges.extend((1..=LEVELS).rev().map(|k| CORE * RATIO.powi(k)));
    edges.push(CORE);
    let uniform = ((t_max - CORE) / width).ceil() as usize;
    let step = (t_max - CORE) / uniform as f64;
    edges.extend((1..=uniform).map(|k| CORE + k as f64 * step));

    let scale = 1.0 / omega.sqrt();
    let mut half_nodes = Vec::new();
    let mut half_weights = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0] * scale, pair[1] * scale);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for &(t, w) in gl.as_node_weight_pairs() {
            half_nodes.push(mid + half * t);
            half_weights.push(half * w);
        }
    }
    let mut nodes: Vec<f64> = half_nodes.iter().rev().map(|x| -x).collect();
    let mut weights: Vec<f64> = half_weights.iter().rev().copied().collect();
    nodes.extend(half_nodes);
    weights.extend(half_weights);
    LineRule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Physicists' Hermite polynomial by its explicit sum, accumulated in
    /// extended form (sum of exact-ish terms with compensated summation).
    fn hermite_poly_explicit(n: usize, x: f64) -> f64 {
        // H_n(x) = n! Σ_{m=0}^{⌊n/2⌋} (-1)^m (2x)^{n-2m} / (m! (n-2m)!)
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
        for m in 0..=n / 2 {
            let term = (if m % 2 == 0 { 1.0 } else { -1.0 }) * fact(n) * (2.0 * x).powi((n - 2 * m) as i32)
                / (fact(m) * fact(n - 2 * m));
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        sum
    }

    #[test]
    fn ground_state_at_origin() {
        assert!((hermite_function(0, 1.0, 0.0) - PI.powf(-0.25)).abs() < 1e-15);
        assert!((hermite_function(0, 1.0, 0.0) - 0.751126).abs() < 1e-6);
        assert_eq!(hermite_function(1, 1.0, 0.0), 0.0);
    }

    #[test]
    fn matches_explicit_polynomial() {
        let (n, x) = (5usize, 1.3f64);
        let norm = 1.0 / ((2.0f64).powi(n as i32) * 120.0 * PI.sqrt()).sqrt();
        let expected = norm * hermite_poly_explicit(n, x) * (-x * x / 2.0).exp();
        let got = hermite_function(n, 1.0, x);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn frequency_scaling() {
        // ψₙ^ω(x) = ω^{1/4} ψₙ^1(√ω x)
        for n in [0, 3, 8] {
            let x = 0.7;
            let w = 2.5f64;
            let lhs = hermite_function(n, w, x);
            let rhs = w.powf(0.25) * hermite_function(n, 1.0, w.sqrt() * x);
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn far_tail_does_not_overflow() {
        let v = hermite_functions(800, 1.0, 39.0);
        assert!(v.iter().all(|x| x.is_finite()));
        let f = hermite_function(799, 1.0, 39.0);
        assert!(f.is_finite() && f != 0.0);
    }

    #[test]
    fn one_point_rule() {
        let r = gauss_hermite_rule(1, 1.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_point_rule_matches_hermite_roots() {
        // H₂(x) = 4x² - 2 has roots ±1/√2; weights √π/2.
        let r = gauss_hermite_rule(2, 1.0).unwrap();
        let root = 1.0 / 2f64.sqrt();
        assert!((r.nodes[0] + root).abs() < 1e-15);
        assert!((r.nodes[1] - root).abs() < 1e-15);
        for w in &r.weights {
            assert!((w - PI.sqrt() / 2.0).abs() < 1e-15);
        }
        let second_moment = r.integrate(|x| x * x);
        assert!((second_moment - PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_points_rejected() {
        assert!(matches!(gauss_hermite_rule(0, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn exact_to_degree_2q_minus_1() {
        // ∫ x^{2k} e^{-ωx²} dx = Γ(k + 1/2) / ω^{k+1/2}
        let omega = 1.7;
        for q in [3usize, 7, 20] {
            let r = gauss_hermite_rule(q, omega).unwrap();
            for k in 0..q {
                let exact = gamma_half(k) / omega.powf(k as f64 + 0.5);
                let got = r.integrate(|x| x.powi(2 * k as i32));
                assert!((got - exact).abs() <= 1e-12 * exact, "q={q} k={k}");
                let odd = r.integrate(|x| x.powi(2 * k as i32 + 1));
                assert!(odd.abs() < 1e-12 * exact.max(1.0));
            }
        }
    }

    fn gamma_half(k: usize) -> f64 {
        // Γ(k + 1/2) = (2k-1)!! √π / 2^k
        let mut g = PI.sqrt();
        for j in 0..k {
            g *= j as f64 + 0.5;
        }
        g
    }

    #[test]
    fn large_rule_has_finite_scaled_weights() {
        let r = gauss_hermite_rule(400, 1.0).unwrap();
        assert!(r.scaled_weights.iter().all(|w| w.is_finite() && *w > 0.0));
        // orthonormality of ψ₀…ψ₁₉₉ under the scaled rule
        let line = r.line_rule();
        let table: Vec<Vec<f64>> = line.nodes.iter().map(|&x| hermite_functions(200, 1.0, x)).collect();
        for (m, n) in [(0, 0), (199, 199), (3, 5), (150, 151), (100, 198)] {
            let s: f64 = table.iter().zip(&line.weights).map(|(v, w)| w * v[m] * v[n]).sum();
            let expected = if m == n { 1.0 } else { 0.0 };
            assert!((s - expected).abs() < 1e-12, "({m},{n}) -> {s}");
        }
    }

    #[test]
    fn graded_rule_integrates_kinked_moments() {
        // ∫ |x|^{1.5} e^{-x²} dx = Γ(1.25)
        let r = graded_origin_rule(50, 1.0);
        let got = r.integrate(|x| x.abs().powf(1.5) * (-x * x).exp());
        let gamma_1_25 = 0.906_402_477_055_477;
        assert!((got - gamma_1_25).abs() < 1e-13, "{got}");
        // orthonormality of the basis survives
        let table: Vec<Vec<f64>> = r.nodes.iter().map(|&x| hermite_functions(50, 1.0, x)).collect();
        for (m, n) in [(0, 0), (49, 49), (10, 12)] {
            let s: f64 = table.iter().zip(&r.weights).map(|(v, w)| w * v[m] * v[n]).sum();
            let expected = if m == n { 1.0 } else { 0.0 };
            assert!((s - expected).abs() < 1e-12);
        }
    }
}
