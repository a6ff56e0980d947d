//! Convex, Lipschitz payoff functions `g: [0, inf) -> [0, inf)`.
//!
//! Calls and puts are evaluated from their closed forms; everything else is a
//! piecewise-linear function given by breakpoints, extrapolated beyond the
//! first/last breakpoint with the adjacent segment's slope.

use std::fmt;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    Call,
    Put,
    Generic,
}

#[derive(Debug, Clone)]
pub struct PayoffSpec<F> {
    kind: PayoffKind,
    strike: Option<F>,
    /// Breakpoints `(x, g(x))` with strictly ascending `x`; empty for call/put.
    breakpoints: Vec<(F, F)>,
    lipschitz: F,
}

/// First violated payoff invariant, reported by [`PayoffSpec::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffViolation {
    NegativeStrike,
    Empty,
    NonAscendingX { index: usize },
    NegativeDomain { x: f64 },
    NonConvex { index: usize, left: f64, right: f64 },
    SlopeExceedsLipschitz { slope: f64, lipschitz: f64 },
    NegativeValue { x: f64, value: f64 },
}

impl fmt::Display for PayoffViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffViolation::NegativeStrike => write!(f, "strike must be nonnegative"),
            PayoffViolation::Empty => write!(f, "generic payoff needs at least one breakpoint"),
            PayoffViolation::NonAscendingX { index } => {
                write!(f, "breakpoint x values must be strictly ascending (index {index})")
            }
            PayoffViolation::NegativeDomain { x } => {
                write!(f, "breakpoint x = {x} lies outside the domain x >= 0")
            }
            PayoffViolation::NonConvex { index, left, right } => write!(
                f,
                "slopes decrease from {left} to {right} at breakpoint index {index} (non-convex)"
            ),
            PayoffViolation::SlopeExceedsLipschitz { slope, lipschitz } => {
                write!(f, "slope {slope} exceeds the Lipschitz bound {lipschitz}")
            }
            PayoffViolation::NegativeValue { x, value } => {
                write!(f, "payoff value {value} at x = {x} is negative")
            }
        }
    }
}

impl<F: Scalar> PayoffSpec<F> {
    /// European call `g(x) = max(0, x - K)`, Lipschitz constant 1.
    pub fn call(strike: F) -> Result<Self> {
        if !(strike >= F::zero()) {
            return Err(Error::InvalidParameter(format!(
                "call strike must be nonnegative, got {strike}"
            )));
        }
        Ok(PayoffSpec {
            kind: PayoffKind::Call,
            strike: Some(strike),
            breakpoints: Vec::new(),
            lipschitz: F::one(),
        })
    }

    /// European put `g(x) = max(0, K - x)`, Lipschitz constant 1.
    pub fn put(strike: F) -> Result<Self> {
        if !(strike >= F::zero()) {
            return Err(Error::InvalidParameter(format!(
                "put strike must be nonnegative, got {strike}"
            )));
        }
        Ok(PayoffSpec {
            kind: PayoffKind::Put,
            strike: Some(strike),
            breakpoints: Vec::new(),
            lipschitz: F::one(),
        })
    }

    /// Piecewise-linear payoff through the given `(x, g(x))` breakpoints.
    /// The Lipschitz constant is the largest slope magnitude. Construction
    /// validates all invariants.
    pub fn generic(breakpoints: Vec<(F, F)>) -> Result<Self> {
        let mut lipschitz = F::zero();
        for w in breakpoints.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            lipschitz = lipschitz.max(slope.abs());
        }
        let spec = PayoffSpec {
            kind: PayoffKind::Generic,
            strike: None,
            breakpoints,
            lipschitz,
        };
        spec.validate()
            .map_err(|v| Error::InvalidParameter(format!("invalid payoff: {v}")))?;
        Ok(spec)
    }

    /// `g(x) = x`.
    pub fn identity() -> Self {
        PayoffSpec {
            kind: PayoffKind::Generic,
            strike: None,
            breakpoints: vec![(F::zero(), F::zero()), (F::one(), F::one())],
            lipschitz: F::one(),
        }
    }

    /// `g(x) = value` for all x.
    pub fn constant(value: F) -> Result<Self> {
        if value < F::zero() {
            return Err(Error::InvalidParameter(format!(
                "constant payoff must be nonnegative, got {value}"
            )));
        }
        Ok(PayoffSpec {
            kind: PayoffKind::Generic,
            strike: None,
            breakpoints: vec![(F::zero(), value), (F::one(), value)],
            lipschitz: F::zero(),
        })
    }

    /// Load a generic payoff from two-column CSV `x,g` with a header row.
    /// `x` must be strictly ascending.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut breakpoints = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 {
                // header row required
                if line.is_empty() {
                    return Err(Error::Parse("line 1: missing header row".into()));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let x = parse_field::<F>(parts.next(), lineno + 1, "x")?;
            let g = parse_field::<F>(parts.next(), lineno + 1, "g")?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!(
                    "line {}: expected exactly two columns (x, g)",
                    lineno + 1
                )));
            }
            if let Some(&(prev, _)) = breakpoints.last() {
                if x <= prev {
                    return Err(Error::Parse(format!(
                        "line {}: x = {x} is not strictly greater than previous {prev}",
                        lineno + 1
                    )));
                }
            }
            breakpoints.push((x, g));
        }
        Self::generic(breakpoints)
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    pub fn strike(&self) -> Option<F> {
        self.strike
    }

    pub fn lipschitz(&self) -> F {
        self.lipschitz
    }

    pub fn breakpoints(&self) -> &[(F, F)] {
        &self.breakpoints
    }

    /// Evaluate the payoff. `x` must be nonnegative.
    pub fn eval(&self, x: F) -> Result<F> {
        if !(x >= F::zero()) {
            return Err(Error::Domain(format!("payoff argument x = {x} must be >= 0")));
        }
        Ok(match self.kind {
            PayoffKind::Call => (x - self.strike.unwrap()).max(F::zero()),
            PayoffKind::Put => (self.strike.unwrap() - x).max(F::zero()),
            PayoffKind::Generic => self.eval_pwl(x),
        })
    }

    fn eval_pwl(&self, x: F) -> F {
        let bp = &self.breakpoints;
        if bp.len() == 1 {
            return bp[0].1;
        }
        // segment index: the pair (i, i+1) bracketing x, clamped so queries
        // beyond either end reuse the adjacent segment's slope
        let mut lo = 0usize;
        let mut hi = bp.len() - 1;
        if x <= bp[0].0 {
            hi = 1;
        } else if x >= bp[hi].0 {
            lo = hi - 1;
        } else {
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if bp[mid].0 <= x {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let (x0, y0) = bp[lo];
        let (x1, y1) = bp[hi];
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    }

    /// Interior kink locations (where the slope changes), used by grid
    /// construction downstream. For calls and puts this is the strike.
    pub fn kinks(&self) -> Vec<F> {
        match self.kind {
            PayoffKind::Call | PayoffKind::Put => vec![self.strike.unwrap()],
            PayoffKind::Generic => self.breakpoints.iter().map(|&(x, _)| x).collect(),
        }
    }

    /// Check all standing invariants, reporting the first violation:
    /// convexity (nondecreasing slopes), slopes within the Lipschitz bound,
    /// and nonnegativity on `x >= 0`.
    pub fn validate(&self) -> std::result::Result<(), PayoffViolation> {
        let tol = real::<F>(1e-12);
        if let Some(k) = self.strike {
            if k < F::zero() {
                return Err(PayoffViolation::NegativeStrike);
            }
        }
        if self.kind != PayoffKind::Generic {
            return Ok(());
        }
        let bp = &self.breakpoints;
        if bp.is_empty() {
            return Err(PayoffViolation::Empty);
        }
        for (i, w) in bp.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(PayoffViolation::NonAscendingX { index: i + 1 });
            }
        }
        if bp[0].0 < -tol {
            return Err(PayoffViolation::NegativeDomain {
                x: bp[0].0.to_f64().unwrap_or(f64::NAN),
            });
        }
        let slopes: Vec<F> = bp
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        for (i, w) in slopes.windows(2).enumerate() {
            if w[1] < w[0] - tol {
                return Err(PayoffViolation::NonConvex {
                    index: i + 1,
                    left: w[0].to_f64().unwrap_or(f64::NAN),
                    right: w[1].to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        for &s in &slopes {
            if s.abs() > self.lipschitz + tol {
                return Err(PayoffViolation::SlopeExceedsLipschitz {
                    slope: s.to_f64().unwrap_or(f64::NAN),
                    lipschitz: self.lipschitz.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        for &(x, y) in bp {
            if y < -tol {
                return Err(PayoffViolation::NegativeValue {
                    x: x.to_f64().unwrap_or(f64::NAN),
                    value: y.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        // left extrapolation must stay nonnegative down to x = 0
        let at_zero = self.eval_pwl(F::zero());
        if at_zero < -tol {
            return Err(PayoffViolation::NegativeValue {
                x: 0.0,
                value: at_zero.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    /// Decompose into `g(x) = intercept + base_slope * x + sum w_i (x - k_i)+`
    /// on `x >= 0`. Exact for every payoff this type can represent; used for
    /// closed-form pricing of piecewise-linear payoffs.
    pub fn call_decomposition(&self) -> (F, F, Vec<(F, F)>) {
        match self.kind {
            PayoffKind::Call => (F::zero(), F::zero(), vec![(self.strike.unwrap(), F::one())]),
            PayoffKind::Put => {
                // (K - x)+ = K - x + (x - K)+
                let k = self.strike.unwrap();
                (k, -F::one(), vec![(k, F::one())])
            }
            PayoffKind::Generic => {
                let bp = &self.breakpoints;
                if bp.len() == 1 {
                    return (bp[0].1, F::zero(), Vec::new());
                }
                let slopes: Vec<F> = bp
                    .windows(2)
                    .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                    .collect();
                let s0 = slopes[0];
                let intercept = bp[0].1 - s0 * bp[0].0;
                let mut terms = Vec::new();
                for (i, w) in slopes.windows(2).enumerate() {
                    let jump = w[1] - w[0];
                    if jump != F::zero() {
                        terms.push((bp[i + 1].0, jump));
                    }
                }
                (intercept, s0, terms)
            }
        }
    }
}

fn parse_field<F: Scalar>(field: Option<&str>, lineno: usize, name: &str) -> Result<F> {
    let raw = field
        .ok_or_else(|| Error::Parse(format!("line {lineno}: missing column '{name}'")))?
        .trim();
    let parsed: f64 = raw
        .parse()
        .map_err(|_| Error::Parse(format!("line {lineno}: cannot parse '{raw}' as a number")))?;
    Ok(real(parsed))
}
