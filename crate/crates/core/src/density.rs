//! The first probability density `f_1^N(p, t)` of the truncated solution.
//!
//! Every path integrates `f_{P0}(arg(p, K)) · jac(p, K)` against the law of
//! `K_N(t, ·)`. The factor `f_{P0}(arg)` vanishes unless `arg ∈ [p01, p02]`,
//! which pins `K` to the slab `[logit p - logit p02, logit p - logit p01]`.
//! The one-dimensional integrals below are taken over that slab only, so no
//! rule ever straddles the jump of the truncated initial density.

use std::fmt;

use rayon::prelude::*;

use crate::distributions::{InitialLaw, XiLaw};
use crate::error::{Error, Result};
use crate::integrate::{trapezoid, PanelRule};
use crate::kle::{CovarianceModel, EigenPair, KleProcess};
use crate::quadrature::{make_rule, tensor_for_each, QuadratureRule, MAX_TENSOR_NODES};
use crate::scalar::{lit, logit, Real};

/// Nodes per panel of the slab integrals.
pub const SLAB_PANEL_ORDER: usize = 20;
/// Panel width, in units of `K`, of the slab integrals.
pub const SLAB_PANEL_WIDTH: f64 = 0.5;
/// Gaussian coordinates are integrated over `[-cutoff, cutoff]`.
pub const GAUSSIAN_CUTOFF: f64 = 12.0;

/// Per-dimension tensor order used when none is configured.
pub fn default_quad_order(n: usize) -> usize {
    match n {
        0..=2 => 40,
        3 => 25,
        4 => 15,
        _ => 10,
    }
}

/// `(arg, jac)` of the change of variables `p0 ↦ p` at growth integral `K`.
///
/// `arg = p e^{-K} / (1 - p + p e^{-K})` and `jac = e^{-K} / (1 - p + p e^{-K})^2`,
/// evaluated through `e^{-K}` or `e^{K}` so that neither overflows.
pub fn rvt_kernel<T: Real>(p: T, k: T) -> (T, T) {
    let q = T::one() - p;
    if k >= T::zero() {
        let e = (-k).exp();
        let d = q + p * e;
        (p * e / d, e / (d * d))
    } else {
        let f = k.exp();
        let d = q * f + p;
        (p / d, f / (d * d))
    }
}

/// `K_N(t, ξ)` with `N = xi.len()`.
pub fn k_n<T: Real>(process: &KleProcess<T>, t: T, xi: &[T]) -> Result<T> {
    process.k_n(t, xi)
}

fn sigmoid<T: Real>(u: T) -> T {
    if u >= T::zero() {
        (T::one() + (-u).exp()).recip()
    } else {
        let e = u.exp();
        e / (T::one() + e)
    }
}

/// How a density value is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DensityPath {
    /// Tensor rule over all coordinates but one; the remaining coordinate is
    /// integrated over the slab.
    Tensor,
    /// One-dimensional integral over the Gaussian law of `K_N`.
    Collapsed,
    /// Exact density of the Wiener-driven solution.
    Exact,
}

impl DensityPath {
    pub fn label(self) -> &'static str {
        match self {
            DensityPath::Tensor => "tensor",
            DensityPath::Collapsed => "collapsed",
            DensityPath::Exact => "exact",
        }
    }
}

impl fmt::Display for DensityPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A truncated problem: growth-rate process, initial law and order `N`.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    process: KleProcess<T>,
    initial: InitialLaw<T>,
    truncation: usize,
    quad_order: usize,
    quad_override: Option<usize>,
    pairs: Vec<EigenPair<T>>,
    outer: QuadratureRule<T>,
    panel: PanelRule<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(process: KleProcess<T>, initial: InitialLaw<T>, truncation: usize) -> Result<Self> {
        Self::build(process, initial, truncation, None)
    }

    fn build(
        process: KleProcess<T>,
        initial: InitialLaw<T>,
        truncation: usize,
        quad_override: Option<usize>,
    ) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::invalid("N", "truncation order must be at least 1"));
        }
        let quad_order = quad_override.unwrap_or_else(|| default_quad_order(truncation));
        let pairs = process.eigenpairs(truncation)?;
        let outer = make_rule(process.xi_law().rule_kind(), quad_order)?;
        Ok(Self {
            process,
            initial,
            truncation,
            quad_order,
            quad_override,
            pairs,
            outer,
            panel: PanelRule::new(SLAB_PANEL_ORDER)?,
        })
    }

    /// Same problem with a fixed per-dimension tensor order.
    pub fn with_quad_order(self, order: usize) -> Result<Self> {
        Self::build(self.process, self.initial, self.truncation, Some(order))
    }

    /// Same problem at another truncation order; a configured tensor order is kept.
    pub fn with_truncation(&self, truncation: usize) -> Result<Self> {
        Self::build(
            self.process.clone(),
            self.initial.clone(),
            truncation,
            self.quad_override,
        )
    }

    pub fn process(&self) -> &KleProcess<T> {
        &self.process
    }

    pub fn initial(&self) -> &InitialLaw<T> {
        &self.initial
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn eigenpairs(&self) -> &[EigenPair<T>] {
        &self.pairs
    }

    /// Path used when none is requested: collapsed for Gaussian coordinates.
    pub fn default_path(&self) -> DensityPath {
        match self.process.xi_law() {
            XiLaw::StandardGaussian => DensityPath::Collapsed,
            XiLaw::UniformSym => DensityPath::Tensor,
        }
    }

    /// Whether the exact Wiener reference density applies.
    pub fn has_exact_reference(&self) -> bool {
        self.process.model() == CovarianceModel::Wiener
            && self.process.xi_law() == XiLaw::StandardGaussian
            && self.process.mean_primitive(self.process.domain().end()) == T::zero()
    }

    /// `(H_1(t), …, H_N(t))`.
    pub fn primitives(&self, t: T) -> Result<Vec<T>> {
        self.process.primitives(&self.pairs, t)
    }

    /// Mean and standard deviation of `K_N(t, ·)`.
    pub fn k_moments(&self, t: T) -> Result<(T, T)> {
        let h = self.primitives(t)?;
        let var = h.iter().fold(T::zero(), |acc, &h| acc + h * h);
        Ok((self.process.mean_primitive(t), var.sqrt()))
    }

    /// Precomputes everything that depends on `t` alone.
    pub fn slice(&self, t: T, path: DensityPath) -> Result<TimeSlice<'_, T>> {
        self.process.domain().check(t)?;
        let law = self.process.xi_law();
        match path {
            DensityPath::Collapsed if law != XiLaw::StandardGaussian => {
                return Err(Error::Precondition(format!(
                    "the collapsed path needs Gaussian coordinates, found {law}"
                )));
            }
            DensityPath::Exact if !self.has_exact_reference() => {
                return Err(Error::NoExactReference(format!(
                    "{} process with {law} coordinates",
                    self.process.model().label()
                )));
            }
            _ => {}
        }
        let shape = if t == self.process.domain().start() {
            SliceShape::Initial
        } else {
            match path {
                DensityPath::Collapsed => {
                    let (mean, sigma) = self.k_moments(t)?;
                    SliceShape::Gaussian { mean, sigma }
                }
                DensityPath::Exact => {
                    let s = t - self.process.domain().start();
                    SliceShape::Gaussian {
                        mean: T::zero(),
                        sigma: (s * s * s / lit(3.0)).sqrt(),
                    }
                }
                DensityPath::Tensor => self.tensor_shape(t)?,
            }
        };
        Ok(TimeSlice {
            problem: self,
            t,
            path,
            shape,
            slab: Slab::new(&self.initial),
        })
    }

    /// Fails when the full `N`-dimensional tensor grid would exceed the size
    /// guard, even though only `N - 1` dimensions are iterated.
    pub fn check_tensor_size(&self) -> Result<()> {
        let within = u32::try_from(self.truncation)
            .ok()
            .and_then(|n| self.quad_order.checked_pow(n))
            .is_some_and(|nodes| nodes <= MAX_TENSOR_NODES);
        if within {
            Ok(())
        } else {
            Err(Error::TensorTooLarge {
                order: self.quad_order,
                dims: self.truncation,
                limit: MAX_TENSOR_NODES,
            })
        }
    }

    fn tensor_shape(&self, t: T) -> Result<SliceShape<T>> {
        self.check_tensor_size()?;
        let h = self.primitives(t)?;
        let inner_index = h
            .iter()
            .enumerate()
            .fold(0, |best, (j, v)| if v.abs() > h[best].abs() { j } else { best });
        let rest: Vec<T> = h
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != inner_index)
            .map(|(_, &v)| v)
            .collect();
        let mean = self.process.mean_primitive(t);
        let mut atoms = Vec::with_capacity(self.quad_order.pow(rest.len() as u32));
        tensor_for_each(&self.outer, rest.len(), |x, w| {
            let offset = rest
                .iter()
                .zip(x)
                .fold(mean, |acc, (&h, &x)| acc + h * x);
            atoms.push((offset, w));
        })?;
        Ok(SliceShape::Tensor {
            coef: h[inner_index],
            atoms,
        })
    }

    /// `f_1^N(p, t)` on the given path.
    pub fn density(&self, p: T, t: T, path: DensityPath) -> Result<T> {
        self.slice(t, path)?.density(p)
    }
}

#[derive(Debug, Clone)]
enum SliceShape<T> {
    Initial,
    Gaussian { mean: T, sigma: T },
    /// Discrete law of the offset `m(t) + Σ H_k ξ_k` over the outer
    /// coordinates, and the coefficient of the inner one.
    Tensor { coef: T, atoms: Vec<(T, T)> },
}

/// Logit-space bounds of the initial support.
#[derive(Debug, Clone, Copy)]
struct Slab<T> {
    lo: T,
    hi: T,
}

impl<T: Real> Slab<T> {
    fn new(initial: &InitialLaw<T>) -> Self {
        let (a, b) = initial.support();
        Self {
            lo: logit(a),
            hi: logit(b),
        }
    }

    /// Range of `K` with `arg(p, K)` inside the support, for `y = logit p`.
    fn k_range(&self, y: T) -> (T, T) {
        (y - self.hi, y - self.lo)
    }
}

/// All data needed to evaluate `f_1^N(·, t)` at one time instant.
#[derive(Debug, Clone)]
pub struct TimeSlice<'a, T> {
    problem: &'a Problem<T>,
    t: T,
    path: DensityPath,
    shape: SliceShape<T>,
    slab: Slab<T>,
}

impl<T: Real> TimeSlice<'_, T> {
    pub fn time(&self) -> T {
        self.t
    }

    pub fn path(&self) -> DensityPath {
        self.path
    }

    pub fn density(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::Domain {
                what: "p",
                value: p.to_f64().unwrap_or(f64::NAN),
                domain: "(0, 1)".into(),
            });
        }
        let initial = &self.problem.initial;
        Ok(match &self.shape {
            SliceShape::Initial => initial.pdf(p),
            &SliceShape::Gaussian { mean, sigma } => self.gaussian(p, mean, sigma),
            SliceShape::Tensor { coef, atoms } => match self.problem.process.xi_law() {
                XiLaw::StandardGaussian => atoms
                    .iter()
                    .map(|&(offset, w)| w * self.gaussian(p, offset, *coef))
                    .sum(),
                XiLaw::UniformSym => {
                    let half = lit::<T>(3.0).sqrt() * coef.abs();
                    atoms
                        .iter()
                        .map(|&(offset, w)| w * self.uniform(p, offset, half))
                        .sum()
                }
            },
        })
    }

    /// `f_{P0}(arg) · jac` at a given `K`, with `arg` clamped into the support
    /// when `K` is known to lie in the slab.
    fn integrand(&self, p: T, k: T) -> T {
        let initial = &self.problem.initial;
        let (a, b) = initial.support();
        let (arg, jac) = rvt_kernel(p, k);
        initial.pdf(arg.max(a).min(b)) * jac
    }

    /// `E[f_{P0}(arg) jac]` for `K = offset + scale · z`, `z` standard normal.
    fn gaussian(&self, p: T, offset: T, scale: T) -> T {
        let s = scale.abs();
        let (k_lo, k_hi) = self.slab.k_range(logit(p));
        if s == T::zero() {
            return if offset >= k_lo && offset <= k_hi {
                self.integrand(p, offset)
            } else {
                T::zero()
            };
        }
        let cut = lit::<T>(GAUSSIAN_CUTOFF);
        let z_lo = ((k_lo - offset) / s).max(-cut);
        let z_hi = ((k_hi - offset) / s).min(cut);
        let width = lit::<T>(SLAB_PANEL_WIDTH) / s.max(T::one());
        self.problem.panel.integrate(z_lo, z_hi, width, |z| {
            self.integrand(p, offset + s * z) * XiLaw::StandardGaussian.pdf(z)
        })
    }

    /// Average of `f_{P0}(arg) jac` over `K` uniform on `[offset - half, offset + half]`.
    ///
    /// Since `d arg / dK = -p (1 - p) jac`, the average is a difference of
    /// initial CDF values.
    fn uniform(&self, p: T, offset: T, half: T) -> T {
        if half <= lit(1e-6) {
            let (k_lo, k_hi) = self.slab.k_range(logit(p));
            return if offset >= k_lo && offset <= k_hi {
                self.integrand(p, offset)
            } else {
                T::zero()
            };
        }
        let initial = &self.problem.initial;
        let y = logit(p) - offset;
        let upper = initial.cdf(sigmoid(y + half));
        let lower = initial.cdf(sigmoid(y - half));
        (upper - lower) / (lit::<T>(2.0) * half * p * (T::one() - p))
    }
}

/// `f_1^N(p, t)` on the tensor path.
pub fn f1n_eval<T: Real>(problem: &Problem<T>, p: T, t: T) -> Result<T> {
    problem.density(p, t, DensityPath::Tensor)
}

/// `f_1^N(p, t)` as a one-dimensional integral over the Gaussian law of `K_N`.
pub fn f1n_collapsed<T: Real>(problem: &Problem<T>, p: T, t: T) -> Result<T> {
    problem.density(p, t, DensityPath::Collapsed)
}

/// Exact density at time `t` of the solution driven by a Wiener process on
/// `[0, end]`, whose growth integral is `N(0, t^3 / 3)`.
pub fn f1_exact_wiener<T: Real>(initial: &InitialLaw<T>, p: T, t: T, end: T) -> Result<T> {
    let problem = Problem::new(KleProcess::wiener(end)?, initial.clone(), 1)?;
    problem.density(p, t, DensityPath::Exact)
}

/// Identifies what produced a [`DensityGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMeta {
    pub truncation: usize,
    pub quad_order: usize,
    pub path: DensityPath,
    pub process: String,
    pub xi_law: XiLaw,
    pub initial: String,
}

/// Densities on a `t × p` grid; `values[i][j]` is at `(t_grid[i], p_grid[j])`.
#[derive(Debug, Clone)]
pub struct DensityGrid<T> {
    pub p_grid: Vec<T>,
    pub t_grid: Vec<T>,
    pub values: Vec<Vec<T>>,
    pub meta: GridMeta,
}

impl<T: Real> DensityGrid<T> {
    /// Trapezoid integral over `p` of each row.
    pub fn row_masses(&self) -> Vec<T> {
        self.values
            .iter()
            .map(|row| trapezoid(&self.p_grid, row))
            .collect()
    }
}

fn check_sorted<T: Real>(name: &'static str, grid: &[T]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}

/// Evaluates the density at every `(t, p)` pair; rows are computed in parallel.
pub fn density_grid<T: Real>(
    problem: &Problem<T>,
    p_grid: &[T],
    t_grid: &[T],
    path: DensityPath,
) -> Result<DensityGrid<T>> {
    check_sorted("p_grid", p_grid)?;
    check_sorted("t_grid", t_grid)?;
    let values = t_grid
        .par_iter()
        .map(|&t| {
            let slice = problem.slice(t, path)?;
            p_grid.iter().map(|&p| slice.density(p)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityGrid {
        p_grid: p_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        values,
        meta: GridMeta {
            truncation: problem.truncation,
            quad_order: problem.quad_order,
            path,
            process: problem.process.model().label().to_string(),
            xi_law: problem.process.xi_law(),
            initial: problem.initial.label(),
        },
    })
}
