//! Spectral analysis of one-dimensional cone operators `x^{-m} Σ a_k(x)(xD_x)^k` on `(0, 1]`.
//!
//! The symbolic and geometric layers (operators, Mellin/Laurent algebra,
//! boundary spectra, the θ map and domain geometry) are generic over the
//! floating point type; the numerical engine and the asymptotic fitting work
//! in `f64`.

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod asymptotics;
pub mod domain;
pub mod indicial;
pub mod laurent;
pub mod ode;
pub mod operator;
pub mod poly;
pub mod scalar;
pub mod theta;

pub use laurent::{LaurentError, LaurentExpansion};
pub use operator::{
    ConeOperator, FrozenOperator, LogPowerFunction, LogPowerTerm, OperatorError, RightBoundary,
    Sector, SymbolicAction,
};
pub use poly::Polynomial;
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;
pub type ConeOperator64 = ConeOperator<f64>;
pub type ConeOperator32 = ConeOperator<f32>;
pub type LogPowerFunction64 = LogPowerFunction<f64>;
pub type LaurentExpansion64 = LaurentExpansion<f64>;
pub type Polynomial64 = Polynomial<f64>;
