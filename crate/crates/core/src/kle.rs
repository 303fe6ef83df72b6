//! Karhunen-Loève ingredients of the supported growth-rate processes.
//!
//! Every eigenfunction has the shape `wave(ω t) / norm_const` with `wave`
//! either `sin` or `cos`, so both the eigenfunction and its primitive are
//! available in closed form. The quantity driving the density is
//!
//! ```text
//! H_j(t) = √ν_j ∫_{t0}^{t} φ_j(s) ds
//! ```
//!
//! and `K_N(t, ξ) = m(t) + Σ_{j ≤ N} H_j(t) ξ_j`.

use std::fmt;

use crate::distributions::XiLaw;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

const MAX_BISECTION_STEPS: usize = 200;

/// Closed time interval `[start, end]` the process lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomain<T> {
    start: T,
    end: T,
}

impl<T: Real> TimeDomain<T> {
    pub fn new(start: T, end: T) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::invalid(
                "domain",
                format!("need finite start < end, got [{start}, {end}]"),
            ));
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn length(&self) -> T {
        self.end - self.start
    }

    pub fn contains(&self, t: T) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn check(&self, t: T) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "t",
                value: to_f64(t),
                domain: format!("[{}, {}]", self.start, self.end),
            })
        }
    }
}

/// Branch of the exponential-covariance spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// Even (cosine) eigenfunctions, roots of `c - w tan(w a) = 0`.
    Odd,
    /// Odd (sine) eigenfunctions, roots of `w + c tan(w a) = 0`.
    Even,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    Sine,
    Cosine,
}

/// One eigenvalue/eigenfunction pair of a covariance operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair<T> {
    pub index: usize,
    pub value: T,
    /// Angular frequency `ω` of the eigenfunction (`w_j` or `w*_j` for the
    /// exponential kernel).
    pub frequency: T,
    /// Denominator turning `wave(ω t)` into a unit-norm function.
    pub norm_const: T,
    pub waveform: Waveform,
    pub parity: Option<Parity>,
}

impl<T: Real> EigenPair<T> {
    pub fn phi(&self, t: T) -> T {
        let arg = self.frequency * t;
        let wave = match self.waveform {
            Waveform::Sine => arg.sin(),
            Waveform::Cosine => arg.cos(),
        };
        wave / self.norm_const
    }

    /// `∫_{from}^{to} φ(s) ds`.
    pub fn integral(&self, from: T, to: T) -> T {
        let w = self.frequency;
        let diff = match self.waveform {
            Waveform::Sine => (w * from).cos() - (w * to).cos(),
            Waveform::Cosine => (w * to).sin() - (w * from).sin(),
        };
        diff / (w * self.norm_const)
    }
}

fn check_index(j: usize) -> Result<()> {
    if j == 0 {
        Err(Error::invalid("j", "eigenpair indices start at 1"))
    } else {
        Ok(())
    }
}

/// Eigenpair `j` of the Wiener covariance `min(s, t)` on `[0, end]`.
pub fn wiener_eigenpair<T: Real>(j: usize, end: T) -> Result<EigenPair<T>> {
    check_index(j)?;
    if !(end > T::zero() && end.is_finite()) {
        return Err(Error::invalid("T", format!("must be positive, got {end}")));
    }
    let odd = from_usize::<T>(2 * j - 1);
    let frequency = odd * T::PI() / (lit::<T>(2.0) * end);
    let scale = lit::<T>(2.0) * end / (odd * T::PI());
    Ok(EigenPair {
        index: j,
        value: scale * scale,
        frequency,
        norm_const: (end / lit(2.0)).sqrt(),
        waveform: Waveform::Sine,
        parity: None,
    })
}

/// Eigenpair `j` of the Brownian-bridge covariance `min(s, t) - s t` on `[0, 1]`.
pub fn bridge_eigenpair<T: Real>(j: usize) -> Result<EigenPair<T>> {
    check_index(j)?;
    let jpi = from_usize::<T>(j) * T::PI();
    Ok(EigenPair {
        index: j,
        value: (jpi * jpi).recip(),
        frequency: jpi,
        norm_const: T::FRAC_1_SQRT_2(),
        waveform: Waveform::Sine,
        parity: None,
    })
}

fn check_expcov<T: Real>(c: T, a: T) -> Result<()> {
    if !(c > T::zero() && c.is_finite()) {
        return Err(Error::invalid("c", format!("must be positive, got {c}")));
    }
    if !(a > T::zero() && a.is_finite()) {
        return Err(Error::invalid("a", format!("must be positive, got {a}")));
    }
    Ok(())
}

fn residual<T: Real>(parity: Parity, w: T, c: T, a: T) -> T {
    match parity {
        Parity::Odd => c - w * (w * a).tan(),
        Parity::Even => w + c * (w * a).tan(),
    }
}

fn residual_slope<T: Real>(parity: Parity, w: T, c: T, a: T) -> T {
    let tan = (w * a).tan();
    let sec2 = T::one() + tan * tan;
    match parity {
        Parity::Odd => -tan - w * a * sec2,
        Parity::Even => T::one() + c * a * sec2,
    }
}

/// Largest residual accepted for a root of the transcendental equations:
/// `1e-10`, or the rounding noise of the residual near a pole of `tan`.
pub fn root_tolerance<T: Real>(parity: Parity, w: T, c: T, a: T) -> T {
    let slope = residual_slope(parity, w, c, a).abs();
    let floor = T::epsilon() * lit(16.0) * (slope * (T::one() + w) + w + c);
    lit::<T>(1e-10).max(floor)
}

/// The `k`-th root (1-based) of the given parity, found by bisection inside
/// the interval between consecutive poles of `tan(w a)` followed by one
/// Newton polish.
pub fn expcov_root<T: Real>(parity: Parity, k: usize, c: T, a: T) -> Result<T> {
    check_index(k)?;
    check_expcov(c, a)?;
    let kf = from_usize::<T>(k);
    let pi = T::PI();
    let half = lit::<T>(0.5);
    let (mut lo, mut hi) = match parity {
        Parity::Odd => ((kf - T::one()) * pi / a, (kf - half) * pi / a),
        Parity::Even => ((kf - half) * pi / a, kf * pi / a),
    };
    let (lo0, hi0) = (lo, hi);
    // Odd: positive at lo, -inf at the pole hi. Even: -inf at the pole lo,
    // positive at hi.
    let positive_on_left = parity == Parity::Odd;
    let width_tol = lit::<T>(1e-12).max(T::epsilon() * lit(4.0) * hi);
    let mut steps = 0;
    while hi - lo > width_tol {
        if steps == MAX_BISECTION_STEPS {
            return Err(Error::Convergence {
                what: format!("bisection for {parity} root {k}"),
                iterations: MAX_BISECTION_STEPS,
            });
        }
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        let g = residual(parity, mid, c, a);
        if (g > T::zero()) == positive_on_left {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let mut w = (lo + hi) * half;
    let g = residual(parity, w, c, a);
    let polished = w - g / residual_slope(parity, w, c, a);
    if polished > lo0
        && polished < hi0
        && residual(parity, polished, c, a).abs() <= g.abs()
    {
        w = polished;
    }
    if residual(parity, w, c, a).abs() > root_tolerance(parity, w, c, a) {
        return Err(Error::Convergence {
            what: format!("{parity} root {k} (residual {})", residual(parity, w, c, a)),
            iterations: steps,
        });
    }
    Ok(w)
}

/// First `count` roots of each parity, interleaved as
/// `(odd 1, even 1, odd 2, even 2, ...)`.
pub fn expcov_roots<T: Real>(c: T, a: T, count: usize) -> Result<Vec<(Parity, T)>> {
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(2 * count);
    for k in 1..=count {
        out.push((Parity::Odd, expcov_root(Parity::Odd, k, c, a)?));
        out.push((Parity::Even, expcov_root(Parity::Even, k, c, a)?));
    }
    Ok(out)
}

/// Eigenpair `j` of `exp(-c |s - t|)` on `[-a, a]` in the interleaved index
/// convention: odd `j` is the `(j+1)/2`-th cosine mode, even `j` the
/// `j/2`-th sine mode.
pub fn expcov_eigenpair<T: Real>(j: usize, c: T, a: T) -> Result<EigenPair<T>> {
    check_index(j)?;
    let (parity, k) = if j % 2 == 1 {
        (Parity::Odd, j.div_ceil(2))
    } else {
        (Parity::Even, j / 2)
    };
    let w = expcov_root(parity, k, c, a)?;
    let value = lit::<T>(2.0) * c / (w * w + c * c);
    let correction = (lit::<T>(2.0) * w * a).sin() / (lit::<T>(2.0) * w);
    let (norm_sq, waveform) = match parity {
        Parity::Odd => (a + correction, Waveform::Cosine),
        Parity::Even => (a - correction, Waveform::Sine),
    };
    Ok(EigenPair {
        index: j,
        value,
        frequency: w,
        norm_const: norm_sq.sqrt(),
        waveform,
        parity: Some(parity),
    })
}

/// Covariance model of the growth-rate process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceModel<T> {
    Wiener,
    BrownianBridge,
    /// `exp(-c |s - t|)` on `[-a, a]`; `c` is the inverse correlation length.
    Exponential { c: T, a: T },
}

impl<T: Real> CovarianceModel<T> {
    pub fn label(&self) -> &'static str {
        match self {
            CovarianceModel::Wiener => "wiener",
            CovarianceModel::BrownianBridge => "brownian_bridge",
            CovarianceModel::Exponential { .. } => "exponential",
        }
    }
}

/// A growth-rate process described by its Karhunen-Loève expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct KleProcess<T> {
    model: CovarianceModel<T>,
    domain: TimeDomain<T>,
    xi_law: XiLaw,
    /// Constant mean `μ_A`; all shipped models are centred.
    mean_level: T,
}

impl<T: Real> KleProcess<T> {
    /// Standard Wiener process on `[0, end]` with Gaussian coordinates.
    pub fn wiener(end: T) -> Result<Self> {
        wiener_eigenpair(1, end)?;
        Ok(Self {
            model: CovarianceModel::Wiener,
            domain: TimeDomain::new(T::zero(), end)?,
            xi_law: XiLaw::StandardGaussian,
            mean_level: T::zero(),
        })
    }

    /// Brownian bridge on `[0, 1]` with Gaussian coordinates.
    pub fn brownian_bridge() -> Self {
        Self {
            model: CovarianceModel::BrownianBridge,
            domain: TimeDomain {
                start: T::zero(),
                end: T::one(),
            },
            xi_law: XiLaw::StandardGaussian,
            mean_level: T::zero(),
        }
    }

    /// Exponential covariance on `[-a, a]` with uniform coordinates.
    pub fn exponential(c: T, a: T) -> Result<Self> {
        check_expcov(c, a)?;
        Ok(Self {
            model: CovarianceModel::Exponential { c, a },
            domain: TimeDomain::new(-a, a)?,
            xi_law: XiLaw::UniformSym,
            mean_level: T::zero(),
        })
    }

    pub fn with_xi_law(mut self, law: XiLaw) -> Self {
        self.xi_law = law;
        self
    }

    pub fn with_mean_level(mut self, mean_level: T) -> Self {
        self.mean_level = mean_level;
        self
    }

    pub fn model(&self) -> CovarianceModel<T> {
        self.model
    }

    pub fn domain(&self) -> TimeDomain<T> {
        self.domain
    }

    pub fn xi_law(&self) -> XiLaw {
        self.xi_law
    }

    pub fn eigenpair(&self, j: usize) -> Result<EigenPair<T>> {
        match self.model {
            CovarianceModel::Wiener => wiener_eigenpair(j, self.domain.end),
            CovarianceModel::BrownianBridge => bridge_eigenpair(j),
            CovarianceModel::Exponential { c, a } => expcov_eigenpair(j, c, a),
        }
    }

    /// The first `n` eigenpairs in expansion order.
    pub fn eigenpairs(&self, n: usize) -> Result<Vec<EigenPair<T>>> {
        let pairs = (1..=n).map(|j| self.eigenpair(j)).collect::<Result<Vec<_>>>()?;
        if let Some(w) = pairs.windows(2).find(|w| w[1].value > w[0].value) {
            log::warn!(
                "{} eigenvalues are not descending in expansion order: nu_{} = {} < nu_{} = {}",
                self.model.label(),
                w[0].index,
                w[0].value,
                w[1].index,
                w[1].value
            );
        }
        Ok(pairs)
    }

    /// `∫ c(t, t) dt` over the domain, the sum of all eigenvalues.
    pub fn total_variance(&self) -> T {
        match self.model {
            CovarianceModel::Wiener => {
                let t = self.domain.end;
                t * t / lit(2.0)
            }
            CovarianceModel::BrownianBridge => lit(1.0 / 6.0),
            CovarianceModel::Exponential { a, .. } => lit::<T>(2.0) * a,
        }
    }

    /// `m(t) = ∫_{t0}^{t} μ_A(s) ds`.
    pub fn mean_primitive(&self, t: T) -> T {
        self.mean_level * (t - self.domain.start)
    }

    /// `H_j(t)` for a precomputed eigenpair; no domain check.
    pub fn primitive_of(&self, pair: &EigenPair<T>, t: T) -> T {
        pair.value.sqrt() * pair.integral(self.domain.start, t)
    }

    /// `(H_1(t), …, H_n(t))` for precomputed eigenpairs.
    pub fn primitives(&self, pairs: &[EigenPair<T>], t: T) -> Result<Vec<T>> {
        self.domain.check(t)?;
        Ok(pairs.iter().map(|p| self.primitive_of(p, t)).collect())
    }

    /// `K_N(t, ξ)` with `N = xi.len()`.
    pub fn k_n(&self, t: T, xi: &[T]) -> Result<T> {
        let pairs = self.eigenpairs(xi.len())?;
        let h = self.primitives(&pairs, t)?;
        Ok(h.iter()
            .zip(xi)
            .fold(self.mean_primitive(t), |acc, (&h, &x)| acc + h * x))
    }
}

/// `H_j(t) = √ν_j ∫_{t0}^{t} φ_j(s) ds` in closed form.
pub fn primitive_h<T: Real>(process: &KleProcess<T>, j: usize, t: T) -> Result<T> {
    process.domain.check(t)?;
    let pair = process.eigenpair(j)?;
    Ok(process.primitive_of(&pair, t))
}

/// Mean and standard deviation of `K_N(t, ·)`: `(m(t), √Σ H_j(t)²)`.
/// Exact for any uncorrelated unit-variance coordinates.
pub fn kn_sigma<T: Real>(process: &KleProcess<T>, t: T, n: usize) -> Result<(T, T)> {
    if n == 0 {
        return Err(Error::invalid("N", "truncation order must be at least 1"));
    }
    let pairs = process.eigenpairs(n)?;
    let h = process.primitives(&pairs, t)?;
    let var = h.iter().fold(T::zero(), |acc, &h| acc + h * h);
    Ok((process.mean_primitive(t), var.sqrt()))
}
