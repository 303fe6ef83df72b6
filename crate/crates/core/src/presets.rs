//! The three reference setups.

use crate::density::Problem;
use crate::distributions::InitialLaw;
use crate::error::Result;
use crate::kle::KleProcess;
use crate::scalar::{lit, Real};

/// Correlation parameter `c` of the exponential-covariance setup, which the
/// source of that setup leaves unstated.
pub const EXAMPLE3_C: f64 = 1.0;

/// Rate of the truncated exponential initial law of the Brownian-bridge setup.
/// "Exp(10)" is read as mean 10.
pub const EXAMPLE2_RATE: f64 = 0.1;

/// Wiener process on `[0, 1.5]`, `P_0 ~ Beta(7, 10)` truncated to `[0.1, 0.9]`.
pub fn example1<T: Real>(n: usize) -> Result<Problem<T>> {
    let law = InitialLaw::truncated_beta(lit(7.0), lit(10.0), lit(0.1), lit(0.9))?;
    Problem::new(KleProcess::wiener(lit(1.5))?, law, n)
}

/// Brownian bridge on `[0, 1]`, `P_0` truncated exponential on `[0.1, 0.9]`.
pub fn example2<T: Real>(n: usize) -> Result<Problem<T>> {
    let law = InitialLaw::truncated_exponential(lit(EXAMPLE2_RATE), lit(0.1), lit(0.9))?;
    Problem::new(KleProcess::brownian_bridge(), law, n)
}

/// Exponential covariance `exp(-|s - t|)` on `[-0.5, 0.5]` with uniform
/// coordinates, `P_0 ~ Beta(7, 10)` truncated to `[0.1, 0.9]`.
pub fn example3<T: Real>(n: usize) -> Result<Problem<T>> {
    let law = InitialLaw::truncated_beta(lit(7.0), lit(10.0), lit(0.1), lit(0.9))?;
    Problem::new(KleProcess::exponential(lit(EXAMPLE3_C), lit(0.5))?, law, n)
}

/// Looks a setup up by name (`example1`, `example2`, `example3`).
pub fn by_name<T: Real>(name: &str, n: usize) -> Option<Result<Problem<T>>> {
    match name {
        "example1" => Some(example1(n)),
        "example2" => Some(example2(n)),
        "example3" => Some(example3(n)),
        _ => None,
    }
}
