//! Exact asymptotic mixed moments of random Vandermonde matrices with
//! deterministic diagonal matrices, plus Toeplitz and Hankel moments, moment
//! convolution and deconvolution, and Monte Carlo checks.

pub mod algebra;
pub mod convolution;
pub mod density;
pub mod ensembles;
pub mod error;
pub mod partition;
pub mod rational;
pub mod simulate;
pub mod value;
pub mod volume;

pub use error::{Error, Result};
pub use rational::Rational;
pub use value::Value;
