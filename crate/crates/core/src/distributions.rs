//! Laws of the initial condition and of the expansion coordinates.

use std::fmt;

use crate::error::{Error, Result};
use crate::integrate::{adaptive_simpson, PanelRule};
use crate::quadrature::RuleKind;
use crate::scalar::{from_usize, lit, Real};

/// Cells in the tabulated CDF of an [`InitialLaw`].
const CDF_CELLS: usize = 4096;
const CDF_PANEL_ORDER: usize = 16;
const MAX_INVERSION_STEPS: usize = 200;

/// Law of each Karhunen-Loève coordinate `ξ_j`; both have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XiLaw {
    StandardGaussian,
    /// Uniform on `(-√3, √3)`.
    UniformSym,
}

impl XiLaw {
    pub fn pdf<T: Real>(self, x: T) -> T {
        match self {
            XiLaw::StandardGaussian => (-x * x / lit(2.0)).exp() / (T::TAU()).sqrt(),
            XiLaw::UniformSym => {
                let h = lit::<T>(3.0).sqrt();
                if x > -h && x < h {
                    (lit::<T>(2.0) * h).recip()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Bounded support, if any.
    pub fn support<T: Real>(self) -> Option<(T, T)> {
        match self {
            XiLaw::StandardGaussian => None,
            XiLaw::UniformSym => {
                let h = lit::<T>(3.0).sqrt();
                Some((-h, h))
            }
        }
    }

    /// Quadrature rule whose weight function is this density.
    pub fn rule_kind(self) -> RuleKind {
        match self {
            XiLaw::StandardGaussian => RuleKind::GaussHermiteProbabilists,
            XiLaw::UniformSym => RuleKind::GaussLegendre,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            XiLaw::StandardGaussian => "gaussian",
            XiLaw::UniformSym => "uniform",
        }
    }
}

impl fmt::Display for XiLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialKind<T> {
    TruncatedBeta { alpha: T, beta: T },
    /// Density proportional to `rate · exp(-rate p)`.
    TruncatedExponential { rate: T },
}

/// A density truncated to `[lower, upper] ⊂ (0, 1)` and renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLaw<T> {
    kind: InitialKind<T>,
    lower: T,
    upper: T,
    norm_const: T,
    /// CDF and density at `CDF_CELLS + 1` equally spaced knots of the support.
    cdf_knots: Vec<T>,
    pdf_knots: Vec<T>,
    panel: PanelRule<T>,
}

impl<T: Real> InitialLaw<T> {
    pub fn truncated_beta(alpha: T, beta: T, lower: T, upper: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(beta > T::zero() && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
        }
        Self::build(InitialKind::TruncatedBeta { alpha, beta }, lower, upper)
    }

    pub fn truncated_exponential(rate: T, lower: T, upper: T) -> Result<Self> {
        if !(rate > T::zero() && rate.is_finite()) {
            return Err(Error::invalid("rate", format!("must be positive, got {rate}")));
        }
        Self::build(InitialKind::TruncatedExponential { rate }, lower, upper)
    }

    fn build(kind: InitialKind<T>, lower: T, upper: T) -> Result<Self> {
        if !(lower > T::zero() && lower < upper && upper < T::one()) {
            return Err(Error::invalid(
                "support",
                format!("need 0 < lower < upper < 1, got [{lower}, {upper}]"),
            ));
        }
        let norm_const = match kind {
            InitialKind::TruncatedBeta { .. } => {
                let scale = kernel(kind, (lower + upper) / lit(2.0));
                let tol = scale * (upper - lower) * lit::<T>(1e-14).max(T::epsilon());
                adaptive_simpson(|p| kernel(kind, p), lower, upper, tol)
            }
            // exp(-rate lower) - exp(-rate upper), without cancellation
            InitialKind::TruncatedExponential { rate } => {
                -(-rate * lower).exp() * (-rate * (upper - lower)).exp_m1()
            }
        };
        let mut law = Self {
            kind,
            lower,
            upper,
            norm_const,
            cdf_knots: Vec::new(),
            pdf_knots: Vec::new(),
            panel: PanelRule::new(CDF_PANEL_ORDER)?,
        };
        let h = law.cell_width();
        let mut knots = Vec::with_capacity(CDF_CELLS + 1);
        let mut acc = T::zero();
        knots.push(acc);
        for i in 0..CDF_CELLS {
            let a = lower + h * from_usize(i);
            acc = acc + law.panel.integrate(a, a + h, h, |p| law.pdf(p));
            knots.push(acc);
        }
        law.pdf_knots = (0..=CDF_CELLS)
            .map(|i| law.pdf(lower + h * from_usize(i)))
            .collect();
        law.cdf_knots = knots;
        Ok(law)
    }

    fn cell_width(&self) -> T {
        (self.upper - self.lower) / from_usize(CDF_CELLS)
    }

    pub fn kind(&self) -> InitialKind<T> {
        self.kind
    }

    pub fn support(&self) -> (T, T) {
        (self.lower, self.upper)
    }

    pub fn norm_const(&self) -> T {
        self.norm_const
    }

    /// Density; zero outside the truncation interval.
    pub fn pdf(&self, p: T) -> T {
        if p < self.lower || p > self.upper || p.is_nan() {
            return T::zero();
        }
        kernel(self.kind, p) / self.norm_const
    }

    /// CDF by cubic Hermite interpolation of the knot table; the slopes are
    /// the exact density, so the error is `O(h^4)` with `h = (upper - lower) / 4096`.
    pub fn cdf(&self, p: T) -> T {
        if p <= self.lower {
            return T::zero();
        }
        if p >= self.upper {
            return T::one();
        }
        let h = self.cell_width();
        let cell = ((p - self.lower) / h)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(CDF_CELLS - 1);
        let s = (p - self.lower) / h - from_usize(cell);
        let (one, two, three) = (T::one(), lit::<T>(2.0), lit::<T>(3.0));
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + one;
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        h00 * self.cdf_knots[cell]
            + h10 * h * self.pdf_knots[cell]
            + h01 * self.cdf_knots[cell + 1]
            + h11 * h * self.pdf_knots[cell + 1]
    }

    /// Inverse-CDF sample for a uniform deviate `u`: the knot table locates
    /// the cell, then safeguarded Newton steps (bisection fallback) invert
    /// [`cdf`](Self::cdf) to `1e-12` in `p`.
    pub fn sample(&self, u: T) -> T {
        if !(u > T::zero()) {
            return self.lower;
        }
        if !(u < T::one()) {
            return self.upper;
        }
        let cell = self
            .cdf_knots
            .partition_point(|&c| c <= u)
            .saturating_sub(1)
            .min(CDF_CELLS - 1);
        let h = self.cell_width();
        let mut lo = self.lower + h * from_usize(cell);
        let mut hi = if cell + 1 == CDF_CELLS { self.upper } else { lo + h };
        let tol = lit::<T>(1e-12).max(T::epsilon() * lit(8.0));
        let mut x = (lo + hi) / lit(2.0);
        for _ in 0..MAX_INVERSION_STEPS {
            let g = self.cdf(x) - u;
            if g > T::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.pdf(x);
            let newton = x - g / d;
            let next = if d > T::zero() && newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) / lit(2.0)
            };
            if (next - x).abs() <= tol || hi - lo <= tol {
                x = next;
                break;
            }
            x = next;
        }
        x.max(self.lower).min(self.upper)
    }

    /// `E[P_0^k]` by quadrature over the support.
    pub fn raw_moment(&self, k: i32) -> T {
        let h = self.cell_width();
        self.panel
            .integrate(self.lower, self.upper, h, |p| p.powi(k) * self.pdf(p))
    }

    pub fn label(&self) -> String {
        match self.kind {
            InitialKind::TruncatedBeta { alpha, beta } => format!(
                "beta({alpha},{beta})[{},{}]",
                self.lower, self.upper
            ),
            InitialKind::TruncatedExponential { rate } => {
                format!("exponential({rate})[{},{}]", self.lower, self.upper)
            }
        }
    }
}

fn kernel<T: Real>(kind: InitialKind<T>, p: T) -> T {
    match kind {
        InitialKind::TruncatedBeta { alpha, beta } => {
            p.powf(alpha - T::one()) * (T::one() - p).powf(beta - T::one())
        }
        InitialKind::TruncatedExponential { rate } => rate * (-rate * p).exp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn beta() -> InitialLaw<f64> {
        InitialLaw::truncated_beta(7.0, 10.0, 0.1, 0.9).unwrap()
    }

    fn expo() -> InitialLaw<f64> {
        InitialLaw::truncated_exponential(10.0, 0.1, 0.9).unwrap()
    }

    #[test]
    fn zero_outside_support() {
        assert_eq!(beta().pdf(0.05), 0.0);
        assert_eq!(beta().pdf(0.95), 0.0);
        assert_eq!(expo().pdf(0.0999), 0.0);
        assert!(beta().pdf(0.1) > 0.0);
    }

    #[test]
    fn exponential_density_at_left_end() {
        let want = 10.0 * (-1.0f64).exp() / ((-1.0f64).exp() - (-9.0f64).exp());
        assert_abs_diff_eq!(expo().pdf(0.1), want, epsilon = 1e-12);
        assert_abs_diff_eq!(expo().pdf(0.1), 10.003356, epsilon = 1e-6);
    }

    #[test]
    fn densities_integrate_to_one() {
        let laws = [
            beta(),
            expo(),
            InitialLaw::truncated_exponential(0.1, 0.1, 0.9).unwrap(),
            InitialLaw::truncated_beta(2.0, 2.0, 0.2, 0.7).unwrap(),
        ];
        for law in laws {
            let (a, b) = law.support();
            let total = adaptive_simpson(|p| law.pdf(p), a, b, 1e-12);
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(law.cdf(b), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_constant_matches_midpoint_oracle() {
        let panels = 1_000_000;
        let h = 0.8 / panels as f64;
        let mid: f64 = (0..panels)
            .map(|i| {
                let p = 0.1 + (i as f64 + 0.5) * h;
                p.powi(6) * (1.0 - p).powi(9)
            })
            .sum::<f64>()
            * h;
        let got = beta().norm_const();
        assert!((got - mid).abs() / mid < 1e-7, "{got} vs {mid}");
    }

    #[test]
    fn exponential_median_closed_form() {
        let (e1, e9) = ((-1.0f64).exp(), (-9.0f64).exp());
        // (e^{-1} - e^{-10 p}) / (e^{-1} - e^{-9}) = 1/2
        let median = -(e1 - 0.5 * (e1 - e9)).ln() / 10.0;
        assert_abs_diff_eq!(expo().sample(0.5), median, epsilon = 1e-10);
        assert_abs_diff_eq!(median, 0.169281, epsilon = 1e-6);
    }

    #[test]
    fn sampler_endpoints() {
        for law in [beta(), expo()] {
            let (a, b) = law.support();
            assert_eq!(law.sample(0.0), a);
            assert_eq!(law.sample(1.0), b);
            assert_abs_diff_eq!(law.sample(1e-15), a, epsilon = 1e-9);
            assert_abs_diff_eq!(law.sample(1.0 - 1e-15), b, epsilon = 1e-9);
        }
    }

    #[test]
    fn sampler_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for law in [beta(), expo()] {
            for _ in 0..100 {
                let u: f64 = rng.random();
                let p = law.sample(u);
                assert_abs_diff_eq!(law.cdf(p), u, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn exponential_cdf_matches_closed_form() {
        let law = expo();
        for p in [0.1f64, 0.15, 0.3, 0.5, 0.77, 0.9] {
            let want = ((-1.0f64).exp() - (-10.0 * p).exp()) / ((-1.0f64).exp() - (-9.0f64).exp());
            assert_abs_diff_eq!(law.cdf(p), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn empirical_mean_of_samples() {
        let law = beta();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let p = law.sample(rng.random());
            s += p;
            s2 += p * p;
        }
        let mean = s / n as f64;
        let sd = (s2 / n as f64 - mean * mean).sqrt();
        let exact = adaptive_simpson(|p| p * law.pdf(p), 0.1, 0.9, 1e-13);
        assert!((mean - exact).abs() < 3.0 * sd / (n as f64).sqrt());
        assert_abs_diff_eq!(law.raw_moment(1), exact, epsilon = 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(InitialLaw::truncated_beta(0.0, 1.0, 0.1, 0.9).is_err());
        assert!(InitialLaw::truncated_beta(1.0, -1.0, 0.1, 0.9).is_err());
        assert!(InitialLaw::truncated_exponential(0.0, 0.1, 0.9).is_err());
        assert!(InitialLaw::truncated_exponential(1.0, 0.0, 0.9).is_err());
        assert!(InitialLaw::truncated_exponential(1.0, 0.5, 0.4).is_err());
        assert!(InitialLaw::truncated_exponential(1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn xi_densities() {
        assert_abs_diff_eq!(XiLaw::StandardGaussian.pdf(0.0f64), 0.39894, epsilon = 1e-5);
        assert_abs_diff_eq!(XiLaw::UniformSym.pdf(0.0f64), 0.28868, epsilon = 1e-5);
        assert_eq!(XiLaw::UniformSym.pdf(2.0f64), 0.0);
    }

    #[test]
    fn xi_laws_have_zero_mean_unit_variance() {
        for law in [XiLaw::StandardGaussian, XiLaw::UniformSym] {
            let (a, b) = law.support::<f64>().unwrap_or((-12.0, 12.0));
            let m0 = adaptive_simpson(|x| law.pdf(x), a, b, 1e-13);
            let m1 = adaptive_simpson(|x| x * law.pdf(x), a, b, 1e-13);
            let m2 = adaptive_simpson(|x| x * x * law.pdf(x), a, b, 1e-13);
            assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(m1, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(m2, 1.0, epsilon = 1e-10);
        }
    }
}
