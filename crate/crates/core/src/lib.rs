//! growthgauge decides whether a complexity function f(x) looks polynomially
//! bounded by probing the boundedness of its derivatives: it differentiates
//! symbolically to arbitrary order, estimates sup|f^(n)| on [x_min, inf),
//! computes Taylor polynomials with Lagrange remainder bounds and
//! radius-of-convergence estimates, and classifies both expressions and
//! empirical runtime datasets.
//!
//! ```
//! use growthgauge::{
//!     calculus::nth_derivative,
//!     classify::classify_univariate,
//!     config::{AnalysisConfig, CalcConfig},
//!     expr::{format, parse},
//! };
//!
//! # fn main() -> growthgauge::Result<()> {
//! let f = parse("x*ln(x)")?;
//! let d2 = nth_derivative(&f, "x", 2, &CalcConfig::default())?;
//! assert_eq!(format(&d2), "1/x");
//!
//! let cls = classify_univariate(&f, "x", &AnalysisConfig::default())?;
//! assert_eq!(cls.degree_estimate, Some(2));
//! # Ok(())
//! # }
//! ```

pub mod boundedness;
pub mod calculus;
pub mod classify;
pub mod config;
pub mod error;
pub mod expr;
pub mod fit;
pub mod taylor;

pub use config::{AnalysisConfig, CalcConfig, ProbeConfig};
pub use error::{Error, Result};
pub use expr::Expr;
