//! Empirical pathway: measured (size, runtime) samples are fitted in log
//! space against a closed set of growth model families, and the best-fit
//! model is handed to the symbolic classifier.
//!
//! Fitting happens in log space, ln s ~ ln c + ln family(x), so relative
//! error counts equally across decades of runtime. Every family has one free
//! scale c; `x_pow_a` also fits its exponent by golden-section search. The
//! family set is deliberately closed: with a handful of samples, arbitrary
//! expression fitting is not identifiable.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Deserialize;

use crate::classify::{classify_univariate, Classification};
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::expr::{canonicalize, parse, Expr};

/// One runtime measurement: problem size and wall-clock seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeSample {
    pub size: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Csv,
    Json,
}

/// Fewest samples a fit will accept.
pub const MIN_SAMPLES: usize = 5;

/// Smallest max/min size ratio a fit will accept.
pub const MIN_SIZE_RANGE: f64 = 4.0;

/// Seconds spreading less than this are treated as constant-time data.
const DEGENERATE_EPS: f64 = 1e-12;

/// Residuals this close count as an exact tie and rank in declaration order.
const TIE_EPS: f64 = 1e-12;

/// Model families, in declaration order; ties in residual rank this way.
/// `log` means the natural logarithm here; for the fixed-base families the
/// base only rescales c, so nothing is lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Constant,
    LogX,
    X,
    XLogX,
    XPowA,
    XPowLogX,
    TwoPowSqrtX,
    TwoPowX,
    ExpX,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 9] = [
        ModelFamily::Constant,
        ModelFamily::LogX,
        ModelFamily::X,
        ModelFamily::XLogX,
        ModelFamily::XPowA,
        ModelFamily::XPowLogX,
        ModelFamily::TwoPowSqrtX,
        ModelFamily::TwoPowX,
        ModelFamily::ExpX,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Constant => "constant",
            ModelFamily::LogX => "log_x",
            ModelFamily::X => "x",
            ModelFamily::XLogX => "x_log_x",
            ModelFamily::XPowA => "x_pow_a",
            ModelFamily::XPowLogX => "x_pow_log_x",
            ModelFamily::TwoPowSqrtX => "two_pow_sqrt_x",
            ModelFamily::TwoPowX => "two_pow_x",
            ModelFamily::ExpX => "exp_x",
        }
    }

    /// ln(family(x)); `a` is read only by `XPowA`. Non-finite values (the
    /// log families at x = 1) mark the family as inapplicable to the sample.
    fn log_value(self, x: f64, a: f64) -> f64 {
        match self {
            ModelFamily::Constant => 0.0,
            ModelFamily::LogX => x.ln().ln(),
            ModelFamily::X => x.ln(),
            ModelFamily::XLogX => x.ln() + x.ln().ln(),
            ModelFamily::XPowA => a * x.ln(),
            ModelFamily::XPowLogX => x.ln().powi(2) / LN_2,
            ModelFamily::TwoPowSqrtX => x.sqrt() * LN_2,
            ModelFamily::TwoPowX => x * LN_2,
            ModelFamily::ExpX => x,
        }
    }

    /// The expression c * family(x), canonical in `x`.
    fn instantiate(self, c: f64, a: f64) -> Expr {
        let x = Expr::var("x");
        let cc = Expr::Const(BigRational::from_float(c).unwrap_or_else(BigRational::zero));
        let fixed = |src: &str| parse(src).expect("fixed model source");
        let e = match self {
            ModelFamily::Constant => cc,
            ModelFamily::LogX => Expr::mul(vec![cc, Expr::ln(x)]),
            ModelFamily::X => Expr::mul(vec![cc, x]),
            ModelFamily::XLogX => Expr::mul(vec![cc, x.clone(), Expr::ln(x)]),
            ModelFamily::XPowA => {
                let ac = BigRational::from_float(a).expect("fitted exponent is finite");
                Expr::mul(vec![cc, Expr::pow(x, Expr::Const(ac))])
            }
            ModelFamily::XPowLogX => Expr::mul(vec![cc, fixed("x^(log2(x))")]),
            ModelFamily::TwoPowSqrtX => Expr::mul(vec![cc, fixed("2^(sqrt(x))")]),
            ModelFamily::TwoPowX => Expr::mul(vec![cc, fixed("2^x")]),
            ModelFamily::ExpX => Expr::mul(vec![cc, Expr::exp(x)]),
        };
        canonicalize(&e)
    }
}

/// One fitted model, ranked by log-space RMSE.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub family: ModelFamily,
    /// Fitted scale c in seconds = c * family(size). For a family wildly
    /// mismatched to the data this can underflow to zero; the residual
    /// ranks such an entry last regardless.
    pub scale: f64,
    /// Fitted exponent, present only for `x_pow_a`.
    pub shape: Option<f64>,
    /// Root-mean-square error of the fit in log space.
    pub residual: f64,
    /// c * family(x) as an expression over the variable `x`.
    pub expr: Expr,
}

#[derive(Deserialize)]
struct RawSample {
    size: i64,
    seconds: f64,
}

/// Parses and validates samples. Duplicate sizes collapse to their mean, and
/// the result is sorted by size, so sizes come out strictly increasing.
/// CSV input must carry the exact header `size,seconds`; JSON input is an
/// array of objects with those fields (error "lines" for JSON point at the
/// offending array element, counting from 1).
pub fn load_samples(text: &str, format: SampleFormat) -> Result<Vec<RuntimeSample>> {
    let raw = match format {
        SampleFormat::Csv => load_csv(text)?,
        SampleFormat::Json => load_json(text)?,
    };

    let mut by_size: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (line, size, seconds) in raw {
        if size < 1 {
            return Err(Error::NonPositiveValue {
                line,
                field: "size".into(),
                value: size as f64,
            });
        }
        if !seconds.is_finite() || seconds <= 0.0 {
            return Err(Error::NonPositiveValue {
                line,
                field: "seconds".into(),
                value: seconds,
            });
        }
        by_size.entry(size as u64).or_default().push(seconds);
    }

    Ok(by_size
        .into_iter()
        .map(|(size, secs)| RuntimeSample {
            size,
            seconds: secs.iter().sum::<f64>() / secs.len() as f64,
        })
        .collect())
}

fn load_csv(text: &str) -> Result<Vec<(usize, i64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| csv_error(&e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["size", "seconds"] {
        return Err(Error::ParseError {
            line: 1,
            message: format!(
                "expected header `size,seconds`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(Error::ParseError {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let size: i64 = record[0].parse().map_err(|_| Error::ParseError {
            line,
            message: format!("invalid size `{}`", &record[0]),
        })?;
        let seconds: f64 = record[1].parse().map_err(|_| Error::ParseError {
            line,
            message: format!("invalid seconds `{}`", &record[1]),
        })?;
        out.push((line, size, seconds));
    }
    Ok(out)
}

fn csv_error(e: &csv::Error) -> Error {
    Error::ParseError {
        line: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

fn load_json(text: &str) -> Result<Vec<(usize, i64, f64)>> {
    let raw: Vec<RawSample> = serde_json::from_str(text).map_err(|e| Error::ParseError {
        line: e.line(),
        message: e.to_string(),
    })?;
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(i, s)| (i + 1, s.size, s.seconds))
        .collect())
}

/// Fits every applicable family and ranks by log-space RMSE, ascending.
/// Ties within 1e-12 rank in declaration order. Data whose seconds are all
/// equal within 1e-12 gets the constant fit alone. Families a sample makes
/// non-evaluable (the log families at size 1) are left out of the ranking.
pub fn fit_models(samples: &[RuntimeSample]) -> Result<Vec<ModelFit>> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            found: samples.len(),
            required: MIN_SAMPLES,
        });
    }
    let min_size = samples.iter().map(|s| s.size).min().unwrap() as f64;
    let max_size = samples.iter().map(|s| s.size).max().unwrap() as f64;
    let ratio = max_size / min_size;
    if ratio < MIN_SIZE_RANGE {
        return Err(Error::InsufficientRange {
            ratio,
            required: MIN_SIZE_RANGE,
        });
    }

    let lo = samples.iter().map(|s| s.seconds).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.seconds).fold(0.0, f64::max);
    if hi - lo <= DEGENERATE_EPS {
        let fit = fit_family(ModelFamily::Constant, samples)
            .expect("constant family applies to any sample set");
        return Ok(vec![fit]);
    }

    let mut fits: Vec<ModelFit> = ModelFamily::ALL
        .par_iter()
        .filter_map(|&family| fit_family(family, samples))
        .collect();
    fits.sort_by(|a, b| a.residual.partial_cmp(&b.residual).expect("finite residuals"));

    // Near-ties are reordered by declaration so the ranking is deterministic
    // under fit-order and rounding jitter.
    let mut i = 0;
    while i < fits.len() {
        let mut j = i + 1;
        while j < fits.len() && fits[j].residual - fits[j - 1].residual <= TIE_EPS {
            j += 1;
        }
        fits[i..j].sort_by_key(|f| f.family as usize);
        i = j;
    }
    Ok(fits)
}

fn fit_family(family: ModelFamily, samples: &[RuntimeSample]) -> Option<ModelFit> {
    let xs: Vec<f64> = samples.iter().map(|s| s.size as f64).collect();
    let lns: Vec<f64> = samples.iter().map(|s| s.seconds.ln()).collect();

    let shape = match family {
        ModelFamily::XPowA => {
            let lnx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            // Squared residual in a is an upward parabola, so the search is
            // safe; the bracket doubles as the allowed exponent range.
            let mse = |a: f64| {
                let d: Vec<f64> = lns.iter().zip(&lnx).map(|(s, x)| s - a * x).collect();
                let m = mean(&d);
                d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d.len() as f64
            };
            Some(golden_min(0.5, 8.0, 1e-10, mse))
        }
        _ => None,
    };
    let a = shape.unwrap_or(f64::NAN);

    let famlog: Vec<f64> = xs.iter().map(|&x| family.log_value(x, a)).collect();
    if famlog.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let d: Vec<f64> = lns.iter().zip(&famlog).map(|(s, f)| s - f).collect();
    let logc = mean(&d);
    let residual = (d.iter().map(|v| (v - logc) * (v - logc)).sum::<f64>() / d.len() as f64).sqrt();
    let scale = logc.exp();
    Some(ModelFit {
        family,
        scale,
        shape,
        residual,
        expr: family.instantiate(scale, a),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn golden_min(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - INVPHI * (hi - lo);
    let mut b = lo + INVPHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INVPHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INVPHI * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Fits the samples and classifies the best-fit model's expression. The
/// verdict speaks about the fitted model family standing in for the
/// measurements, and the notes say so, along with the fit quality and any
/// near-tie runner-up.
pub fn classify_empirical(samples: &[RuntimeSample], cfg: &AnalysisConfig) -> Result<Classification> {
    let fits = fit_models(samples)?;
    let best = fits.first().expect("ranking is never empty");
    let mut cls = classify_univariate(&best.expr, "x", cfg)?;

    cls.notes.push(format!(
        "best-fit model {} with log-space RMSE {:.3e}",
        best.family.name(),
        best.residual
    ));
    if fits.len() == 1 {
        cls.notes.push(
            "all runtimes are equal within 1e-12, so only the constant model was fitted; \
             low confidence"
                .into(),
        );
    } else if let Some(second) = fits.get(1) {
        let diff = second.residual - best.residual;
        if diff <= 0.1 * second.residual.max(best.residual) || diff <= TIE_EPS {
            cls.notes.push(format!(
                "runner-up model {} fits nearly as well (RMSE {:.3e} vs {:.3e}); \
                 the family choice is low confidence",
                second.family.name(),
                second.residual,
                best.residual
            ));
        }
    }
    cls.notes.push(
        "the verdict applies to the fitted model, not to the measurements directly".into(),
    );
    Ok(cls)
}
