//! First probability density of the random non-autonomous logistic equation
//! `P' = A(t) (1 - P) P` whose growth rate `A` is given by a truncated
//! Karhunen-Loève expansion.
//!
//! The crate is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the `*64` aliases below fix it to `f64`.

pub mod density;
pub mod distributions;
pub mod error;
pub mod integrate;
pub mod kle;
pub mod mc;
pub mod presets;
pub mod quadrature;
pub mod scalar;
pub mod stats;

pub use density::{
    density_grid, f1_exact_wiener, f1n_collapsed, f1n_eval, k_n, rvt_kernel, DensityGrid,
    DensityPath, GridMeta, Problem, TimeSlice,
};
pub use distributions::{InitialKind, InitialLaw, XiLaw};
pub use error::{Error, Result};
pub use kle::{
    expcov_root, expcov_roots, kn_sigma, primitive_h, CovarianceModel, EigenPair, KleProcess,
    Parity, TimeDomain,
};
pub use quadrature::{make_rule, tensor_iterate, QuadratureRule, RuleKind};
pub use mc::{mc_density_check, mc_density_check_against, sample_pn, McConfig, McReport};
pub use scalar::Real;
pub use stats::{
    e_moment_consecutive, e_moment_exact, e_pdf_consecutive, e_pdf_exact, moment_k, moments_n,
    ErrorKind, ErrorReport, MomentKind, MomentProfile, StatsConfig,
};

pub type Problem64 = Problem<f64>;
pub type Problem32 = Problem<f32>;
pub type KleProcess64 = KleProcess<f64>;
pub type KleProcess32 = KleProcess<f32>;
pub type InitialLaw64 = InitialLaw<f64>;
pub type InitialLaw32 = InitialLaw<f32>;
pub type QuadratureRule64 = QuadratureRule<f64>;
pub type QuadratureRule32 = QuadratureRule<f32>;
pub type DensityGrid64 = DensityGrid<f64>;
