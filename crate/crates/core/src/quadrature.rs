//! Gaussian quadrature rules matched to the laws of the expansion
//! coordinates, and lexicographic tensor-product iteration over them.
//!
//! Rules are normalised to probability measures: the weights of a
//! [`QuadratureRule`] sum to one and already contain the density of the
//! coordinate, so `Σ wᵢ g(xᵢ) ≈ E[g(ξ)]`.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Largest supported node count for a single rule.
pub const MAX_ORDER: usize = 128;

/// Largest number of nodes a tensor grid may visit.
pub const MAX_TENSOR_NODES: usize = 10_000_000;

const MAX_NEWTON_STEPS: usize = 100;

/// Weight function a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Weight is the standard normal density.
    GaussHermiteProbabilists,
    /// Weight is the uniform density on `(-√3, √3)`.
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    kind: RuleKind,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ wᵢ f(xᵢ)`, summed in node order.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.iter().fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

/// Builds a rule of `order` nodes by Newton iteration on the three-term
/// recurrence of the orthogonal polynomials of `kind`.
pub fn make_rule<T: Real>(kind: RuleKind, order: usize) -> Result<QuadratureRule<T>> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::invalid(
            "order",
            format!("must lie in 1..={MAX_ORDER}, got {order}"),
        ));
    }
    let (nodes, weights) = match kind {
        RuleKind::GaussHermiteProbabilists => {
            let (z, w) = hermite_physicists(order)?;
            let scale = std::f64::consts::PI.sqrt();
            let nodes: Vec<f64> = z.iter().map(|z| z * std::f64::consts::SQRT_2).collect();
            let weights: Vec<f64> = w.iter().map(|w| w / scale).collect();
            (nodes, weights)
        }
        RuleKind::GaussLegendre => {
            let (x, w) = legendre_standard(order)?;
            let s3 = 3f64.sqrt();
            (
                x.iter().map(|x| x * s3).collect(),
                w.iter().map(|w| 0.5 * w).collect(),
            )
        }
    };
    let total: f64 = weights.iter().sum();
    Ok(QuadratureRule {
        kind,
        nodes: nodes.into_iter().map(lit).collect(),
        weights: weights.into_iter().map(|w| lit(w / total)).collect(),
    })
}

/// Gauss-Hermite nodes and weights for the weight `exp(-z²)`, ascending.
fn hermite_physicists(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut roots = vec![0.0f64; m];
    let mut weights = vec![0.0f64; m];
    let mut z = 0.0f64;
    for i in 0..m {
        // Initial guesses for the largest roots, then extrapolation from
        // previously converged ones.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        let mut converged = false;
        let mut pp = 0.0;
        for _ in 0..MAX_NEWTON_STEPS {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                what: format!("Gauss-Hermite node {i} of order {n}"),
                iterations: MAX_NEWTON_STEPS,
            });
        }
        roots[i] = z;
        weights[i] = 2.0 / (pp * pp);
    }
    Ok(mirror(n, &roots, &weights))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub(crate) fn legendre_standard(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut roots = vec![0.0f64; m];
    let mut weights = vec![0.0f64; m];
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut converged = false;
        let mut pp = 0.0;
        for _ in 0..MAX_NEWTON_STEPS {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                what: format!("Gauss-Legendre node {i} of order {n}"),
                iterations: MAX_NEWTON_STEPS,
            });
        }
        roots[i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    Ok(mirror(n, &roots, &weights))
}

/// Expands the non-negative half of a symmetric rule (largest root first)
/// into an ascending full rule with exactly mirrored nodes.
fn mirror(n: usize, roots: &[f64], weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, (&r, &wt)) in roots.iter().zip(weights).enumerate() {
        x[i] = -r;
        x[n - 1 - i] = r;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn check_tensor_size(order: usize, dims: usize) -> Result<usize> {
    let exp = u32::try_from(dims).unwrap_or(u32::MAX);
    match order.checked_pow(exp) {
        Some(count) if count <= MAX_TENSOR_NODES => Ok(count),
        _ => Err(Error::TensorTooLarge {
            order,
            dims,
            limit: MAX_TENSOR_NODES,
        }),
    }
}

/// Calls `visit(nodes, weight)` for every point of the `dims`-fold tensor
/// grid of `rule`, in lexicographic index order (first coordinate slowest).
/// A zero-dimensional grid has a single point with weight one.
pub fn tensor_for_each<T, F>(rule: &QuadratureRule<T>, dims: usize, mut visit: F) -> Result<()>
where
    T: Real,
    F: FnMut(&[T], T),
{
    check_tensor_size(rule.order(), dims)?;
    let order = rule.order();
    let mut index = vec![0usize; dims];
    let mut point: Vec<T> = vec![rule.nodes[0]; dims];
    loop {
        let mut weight = T::one();
        for (d, &i) in index.iter().enumerate() {
            point[d] = rule.nodes[i];
            weight = weight * rule.weights[i];
        }
        visit(&point, weight);

        let mut d = dims;
        loop {
            if d == 0 {
                return Ok(());
            }
            d -= 1;
            index[d] += 1;
            if index[d] < order {
                break;
            }
            index[d] = 0;
        }
    }
}

/// `Σ w(ξ) visitor(ξ)` over the `dims`-fold tensor grid, accumulated in
/// lexicographic order so repeated calls are bitwise identical.
pub fn tensor_iterate<T, F>(rule: &QuadratureRule<T>, dims: usize, mut visitor: F) -> Result<T>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let mut acc = T::zero();
    tensor_for_each(rule, dims, |x, w| acc = acc + w * visitor(x))?;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian_moment(k: u32) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|m| m as f64).product()
        }
    }

    fn uniform_moment(k: u32) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            3f64.powf(k as f64 / 2.0) / (k as f64 + 1.0)
        }
    }

    #[test]
    fn hermite_order_one_is_the_mean() {
        let r = make_rule::<f64>(RuleKind::GaussHermiteProbabilists, 1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_abs_diff_eq!(r.weights()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn order_two_rules_sit_at_plus_minus_one() {
        for kind in [RuleKind::GaussHermiteProbabilists, RuleKind::GaussLegendre] {
            let r = make_rule::<f64>(kind, 2).unwrap();
            assert_abs_diff_eq!(r.nodes()[0], -1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(r.nodes()[1], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(r.weights()[0], 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(r.weights()[1], 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn weights_form_a_unit_variance_probability_measure() {
        for kind in [RuleKind::GaussHermiteProbabilists, RuleKind::GaussLegendre] {
            for order in [1usize, 2, 3, 5, 10, 25, 40, 60, 100, 128] {
                let r = make_rule::<f64>(kind, order).unwrap();
                assert!(r.weights().iter().all(|&w| w > 0.0));
                assert_abs_diff_eq!(r.integrate(|_| 1.0), 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(r.integrate(|x| x), 0.0, epsilon = 1e-12);
                if order >= 2 {
                    assert_abs_diff_eq!(r.integrate(|x| x * x), 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn polynomial_exactness_up_to_degree_2n_minus_1() {
        for order in [2usize, 3, 4, 6, 8, 10] {
            let gh = make_rule::<f64>(RuleKind::GaussHermiteProbabilists, order).unwrap();
            let gl = make_rule::<f64>(RuleKind::GaussLegendre, order).unwrap();
            for k in 0..(2 * order as u32) {
                // odd moments vanish; compare them on the scale of E|x|^(k+1)
                let exact = gaussian_moment(k);
                let scale = gaussian_moment(k + k % 2).max(1.0);
                let got = gh.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() <= 1e-9 * scale, "GH n={order} k={k}");
                let exact = uniform_moment(k);
                let got = gl.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() <= 1e-9 * exact.abs().max(1.0), "GL n={order} k={k}");
            }
        }
    }

    #[test]
    fn exponential_moment_converges_monotonically() {
        for (kind, exact) in [
            (RuleKind::GaussHermiteProbabilists, 0.5f64.exp()),
            (RuleKind::GaussLegendre, 3f64.sqrt().sinh() / 3f64.sqrt()),
        ] {
            let errs: Vec<f64> = (1..=8)
                .map(|n| {
                    let r = make_rule::<f64>(kind, n).unwrap();
                    (r.integrate(f64::exp) - exact).abs()
                })
                .collect();
            for w in errs.windows(2) {
                assert!(w[1] <= w[0] || w[1] < 1e-14, "{kind:?}: {errs:?}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range_orders() {
        assert!(make_rule::<f64>(RuleKind::GaussLegendre, 0).is_err());
        assert!(make_rule::<f64>(RuleKind::GaussLegendre, MAX_ORDER + 1).is_err());
    }

    #[test]
    fn single_precision_rules() {
        let r = make_rule::<f32>(RuleKind::GaussHermiteProbabilists, 20).unwrap();
        assert!((r.integrate(|x| x * x) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn tensor_of_unit_visitor_is_one() {
        for (order, dims) in [(1usize, 1usize), (5, 2), (7, 3), (3, 6)] {
            let r = make_rule::<f64>(RuleKind::GaussHermiteProbabilists, order).unwrap();
            let s = tensor_iterate(&r, dims, |_| 1.0).unwrap();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        let r = make_rule::<f64>(RuleKind::GaussLegendre, 4).unwrap();
        assert_abs_diff_eq!(tensor_iterate(&r, 0, |_| 1.0).unwrap(), 1.0, epsilon = 0.0);
    }

    #[test]
    fn tensor_cross_moment_vanishes() {
        let r = make_rule::<f64>(RuleKind::GaussHermiteProbabilists, 5).unwrap();
        let s = tensor_iterate(&r, 2, |x| x[0] * x[1]).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tensor_gaussian_mgf() {
        let r = make_rule::<f64>(RuleKind::GaussHermiteProbabilists, 20).unwrap();
        let s = tensor_iterate(&r, 2, |x| (0.3 * x[0] + 0.2 * x[1]).exp()).unwrap();
        assert_abs_diff_eq!(s, ((0.09 + 0.04) / 2.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn tensor_visits_in_lexicographic_order() {
        let r = make_rule::<f64>(RuleKind::GaussLegendre, 3).unwrap();
        let mut seen = Vec::new();
        tensor_for_each(&r, 2, |x, _| seen.push((x[0], x[1]))).unwrap();
        assert_eq!(seen.len(), 9);
        let n = r.nodes();
        assert_eq!(seen[0], (n[0], n[0]));
        assert_eq!(seen[1], (n[0], n[1]));
        assert_eq!(seen[3], (n[1], n[0]));
        assert_eq!(seen[8], (n[2], n[2]));
    }

    #[test]
    fn tensor_size_guard() {
        let r = make_rule::<f64>(RuleKind::GaussLegendre, 40).unwrap();
        match tensor_iterate(&r, 5, |_| 1.0) {
            Err(Error::TensorTooLarge { order: 40, dims: 5, .. }) => {}
            other => panic!("expected size guard, got {other:?}"),
        }
    }

    #[test]
    fn tensor_sum_is_bitwise_reproducible() {
        let r = make_rule::<f64>(RuleKind::GaussHermiteProbabilists, 9).unwrap();
        let f = |x: &[f64]| (x[0] - 0.3 * x[1] + 0.1 * x[2]).sin().exp();
        let a = tensor_iterate(&r, 3, f).unwrap();
        let b = tensor_iterate(&r, 3, f).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
