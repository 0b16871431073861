//! Tunables. Defaults match the documented CLI defaults; `validate` enforces
//! the ranges the CLI promises.

use crate::error::{Error, Result};

pub const MIN_PRECISION_BITS: usize = 64;
pub const MAX_PRECISION_BITS: usize = 1024;

/// Geometric probe grid x_k = start * factor^k for k = 0..steps, plus the
/// thresholds that turn a probe trace into a limit verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub start: f64,
    pub factor: f64,
    pub steps: usize,
    /// Relative spread below which the probe tail counts as stabilized.
    pub stabilize_tol: f64,
    /// Magnitude past which a probe value counts as divergent on its own.
    pub diverge_threshold: f64,
    pub precision_bits: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            start: 4.0,
            factor: 2.0,
            steps: 60,
            stabilize_tol: 1e-6,
            diverge_threshold: 1e300,
            precision_bits: 128,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.factor > 1.0) {
            return Err(Error::InvalidConfig {
                message: format!("probe factor must be > 1, got {}", self.factor),
            });
        }
        if self.steps < 10 {
            return Err(Error::InvalidConfig {
                message: format!("probe steps must be >= 10, got {}", self.steps),
            });
        }
        if !(self.start > 0.0) {
            return Err(Error::InvalidConfig {
                message: format!("probe start must be > 0, got {}", self.start),
            });
        }
        if !(self.stabilize_tol > 0.0) {
            return Err(Error::InvalidConfig {
                message: format!("stabilize tolerance must be > 0, got {}", self.stabilize_tol),
            });
        }
        validate_precision(self.precision_bits)
    }
}

/// Limits on the symbolic side: derivative order cap, node-count cap, and the
/// working precision used when expressions are evaluated numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct CalcConfig {
    pub n_max: usize,
    pub node_cap: usize,
    pub precision_bits: usize,
}

impl Default for CalcConfig {
    fn default() -> Self {
        CalcConfig {
            n_max: 10,
            node_cap: 100_000,
            precision_bits: 128,
        }
    }
}

impl CalcConfig {
    pub fn with_order(n_max: usize) -> Self {
        CalcConfig {
            n_max,
            ..CalcConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::InvalidConfig {
                message: "n_max must be >= 1".into(),
            });
        }
        validate_precision(self.precision_bits)
    }
}

/// Everything a full classification run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Highest derivative order the boundedness search will examine.
    pub n_max: usize,
    /// Left edge of the probe domain [x_min, inf). Strictly above 1 by
    /// default so logarithm factors stay clear of their zero.
    pub x_min: f64,
    pub probe: ProbeConfig,
    /// Constants substituted for the "other" variables in multivariate runs.
    pub fix_values: Vec<f64>,
    /// Compute all orders instead of stopping at the first bounded one.
    pub full: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            n_max: 8,
            x_min: 1.0009765625, // 1 + 2^-10
            probe: ProbeConfig::default(),
            fix_values: vec![2.0, 10.0],
            full: false,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::InvalidConfig {
                message: "n_max must be >= 1".into(),
            });
        }
        if !self.x_min.is_finite() || self.x_min <= 0.0 {
            return Err(Error::InvalidConfig {
                message: format!("x_min must be positive and finite, got {}", self.x_min),
            });
        }
        if self.fix_values.is_empty() {
            return Err(Error::InvalidConfig {
                message: "fix_values must not be empty".into(),
            });
        }
        self.probe.validate()
    }

    pub fn calc(&self) -> CalcConfig {
        CalcConfig {
            n_max: self.n_max.max(CalcConfig::default().n_max),
            precision_bits: self.probe.precision_bits,
            ..CalcConfig::default()
        }
    }
}

pub fn validate_precision(bits: usize) -> Result<()> {
    if !(MIN_PRECISION_BITS..=MAX_PRECISION_BITS).contains(&bits) {
        return Err(Error::InvalidConfig {
            message: format!(
                "precision must be between {MIN_PRECISION_BITS} and {MAX_PRECISION_BITS} bits, got {bits}"
            ),
        });
    }
    Ok(())
}

/// Precisions outside the supported window are clamped instead of rejected so
/// library callers that compute a precision never have to re-range it.
pub fn clamp_precision(bits: usize) -> usize {
    bits.clamp(MIN_PRECISION_BITS, MAX_PRECISION_BITS)
}
