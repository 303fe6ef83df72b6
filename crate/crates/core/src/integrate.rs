//! One-dimensional integration helpers.

use crate::error::{Error, Result};
use crate::quadrature::legendre_standard;
use crate::scalar::{from_usize, lit, Real};

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<T, F>(f: F, a: T, b: T, tol: T) -> T
where
    T: Real,
    F: Fn(T) -> T,
{
    let two = lit::<T>(2.0);
    let m = (a + b) / two;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / lit(6.0) * (fa + lit::<T>(4.0) * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T, F>(f: &F, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T
where
    T: Real,
    F: Fn(T) -> T,
{
    let two = lit::<T>(2.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / lit(6.0) * (fa + lit::<T>(4.0) * flm + fm);
    let right = (b - m) / lit(6.0) * (fm + lit::<T>(4.0) * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= lit::<T>(15.0) * tol {
        return left + right + delta / lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
}

/// Composite Simpson rule on equally spaced samples `ys` with spacing `h`.
///
/// An odd number of intervals is closed with Simpson's 3/8 rule on the
/// last three.
pub fn simpson_uniform<T: Real>(ys: &[T], h: T) -> T {
    let n = ys.len();
    match n {
        0 | 1 => T::zero(),
        2 => h * (ys[0] + ys[1]) / lit(2.0),
        3 => h / lit(3.0) * (ys[0] + lit::<T>(4.0) * ys[1] + ys[2]),
        _ => {
            let intervals = n - 1;
            let (simpson_end, tail) = if intervals % 2 == 0 {
                (n - 1, T::zero())
            } else {
                let k = n - 4;
                let t = lit::<T>(3.0) * h / lit(8.0)
                    * (ys[k] + lit::<T>(3.0) * ys[k + 1] + lit::<T>(3.0) * ys[k + 2] + ys[k + 3]);
                (k, t)
            };
            let mut acc = ys[0] + ys[simpson_end];
            for (i, &y) in ys.iter().enumerate().take(simpson_end).skip(1) {
                acc = acc + if i % 2 == 1 { lit::<T>(4.0) * y } else { lit::<T>(2.0) * y };
            }
            h / lit(3.0) * acc + tail
        }
    }
}

/// Composite trapezoid rule over (not necessarily uniform) abscissae.
pub fn trapezoid<T: Real>(xs: &[T], ys: &[T]) -> T {
    xs.windows(2)
        .zip(ys.windows(2))
        .fold(T::zero(), |acc, (x, y)| acc + (x[1] - x[0]) * (y[0] + y[1]) / lit(2.0))
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / from_usize(n - 1);
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + h * from_usize(i) })
                .collect()
        }
    }
}

/// Composite Gauss-Legendre rule: `[a, b]` is cut into equal panels no
/// wider than `max_width`, each integrated with the same fixed-order rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> PanelRule<T> {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("order", "panel rule needs at least one node"));
        }
        let (x, w) = legendre_standard(order)?;
        Ok(Self {
            nodes: x.into_iter().map(lit).collect(),
            weights: w.into_iter().map(lit).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, max_width: T, mut f: F) -> T {
        if !(b > a) {
            return T::zero();
        }
        let panels = ((b - a) / max_width).ceil().to_usize().unwrap_or(1).max(1);
        let width = (b - a) / from_usize(panels);
        let half = width / lit(2.0);
        let mut acc = T::zero();
        for k in 0..panels {
            let mid = a + width * from_usize(k) + half;
            let mut panel = T::zero();
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                panel = panel + w * f(mid + half * x);
            }
            acc = acc + half * panel;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn adaptive_simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-11);
        let v = adaptive_simpson(|x: f64| (-x * x).exp(), -5.0, 5.0, 1e-13);
        assert_abs_diff_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let xs = linspace(0.0f64, 2.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x - x).collect();
        assert_abs_diff_eq!(simpson_uniform(&ys, 0.2), 2.0, epsilon = 1e-13);
        // odd interval count takes the 3/8 branch
        let xs = linspace(0.0f64, 2.0, 10);
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x - x).collect();
        assert_abs_diff_eq!(simpson_uniform(&ys, 2.0 / 9.0), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn trapezoid_of_line() {
        let xs = [0.0, 0.5, 2.0];
        let ys = [1.0, 2.0, 5.0];
        assert_abs_diff_eq!(trapezoid(&xs, &ys), 6.0, epsilon = 1e-15);
    }

    #[test]
    fn linspace_hits_both_ends() {
        let g = linspace(0.001f64, 0.999, 2001);
        assert_eq!(g.len(), 2001);
        assert_eq!(g[0], 0.001);
        assert_eq!(g[2000], 0.999);
    }

    #[test]
    fn panel_rule_matches_closed_forms() {
        let r = PanelRule::<f64>::new(12).unwrap();
        let v = r.integrate(-3.0, 4.0, 0.5, |x| (-0.5 * x * x).exp());
        let exact = adaptive_simpson(|x: f64| (-0.5 * x * x).exp(), -3.0, 4.0, 1e-14);
        assert_abs_diff_eq!(v, exact, epsilon = 1e-13);
        assert_eq!(r.integrate(1.0, 1.0, 0.5, |_| 1.0), 0.0);
    }
}
