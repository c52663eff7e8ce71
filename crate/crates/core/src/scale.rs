//! Strictly monotone scale functions and their placement on a strip.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression_in, Expr, Params};

/// Relative tolerance for every "equal within tol" contract.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Grid size used by the sampled monotonicity check.
pub const DEFAULT_SAMPLES: usize = 1025;
/// Open endpoints are pulled inward by this fraction of the span.
pub const OPEN_INSET: f64 = 1e-9;

const MAX_BISECTIONS: usize = 100;
const BISECTION_RTOL: f64 = 1e-12;

/// A real interval with per-end openness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
}

impl Domain {
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidInput(format!(
                "domain bounds must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Domain {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    /// Finite endpoints actually used for computation.
    pub fn effective(&self) -> (f64, f64) {
        let inset = OPEN_INSET * (self.hi - self.lo);
        let lo = if self.lo_open { self.lo + inset } else { self.lo };
        let hi = if self.hi_open { self.hi - inset } else { self.hi };
        (lo, hi)
    }

    /// `n >= 2` evenly spaced points over the effective interval.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.effective();
        let last = (n.max(2) - 1) as f64;
        (0..n.max(2))
            .map(|i| {
                if i as f64 == last {
                    hi
                } else {
                    lo + (hi - lo) * (i as f64 / last)
                }
            })
            .collect()
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Outcome of a sampled monotonicity check.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub ok: bool,
    pub direction: Option<Direction>,
    /// First consecutive grid pair whose values break the ordering.
    pub first_violation: Option<(f64, f64)>,
    pub samples: usize,
}

impl fmt::Display for MonotoneReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.ok, self.first_violation) {
            (true, _) => write!(f, "strictly {:?} over {} samples", self.direction, self.samples),
            (false, Some((a, b))) => write!(
                f,
                "ordering breaks between x = {a} and x = {b} ({} samples)",
                self.samples
            ),
            (false, None) => write!(f, "not strictly monotone ({} samples)", self.samples),
        }
    }
}

/// A strictly monotone function of one variable on an explicit domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawScaleFunction", try_from = "RawScaleFunction")]
pub struct ScaleFunction {
    var: String,
    expr: Expr,
    domain: Domain,
    params: Params,
    direction: Direction,
}

impl ScaleFunction {
    /// Builds and verifies the function (1025-point monotonicity check).
    pub fn new(expr: Expr, var: &str, domain: Domain, params: &Params) -> Result<Self> {
        let candidate = Self::unverified(expr, var, domain, params)?;
        let report = candidate.check_monotone(DEFAULT_SAMPLES)?;
        if !report.ok {
            return Err(Error::NotMonotone(report));
        }
        Ok(ScaleFunction {
            direction: report.direction.unwrap_or(candidate.direction),
            ..candidate
        })
    }

    /// Parses `text` with free variable `var` and verifies the result.
    pub fn parse(text: &str, var: &str, domain: Domain, params: &Params) -> Result<Self> {
        Self::new(parse_expression_in(text, var)?, var, domain, params)
    }

    /// Builds without the monotonicity check. Parameter binding and the
    /// presence of the variable are still enforced; the direction is taken
    /// from the domain endpoints when they evaluate.
    pub fn unverified(expr: Expr, var: &str, domain: Domain, params: &Params) -> Result<Self> {
        if !expr.uses_var() {
            return Err(Error::MissingVariable(var.to_string()));
        }
        let mut bound = Params::new();
        for name in expr.params() {
            let value = params
                .get(&name)
                .ok_or_else(|| Error::UnboundParameter(name.clone()))?;
            bound.insert(name, *value);
        }
        let mut f = ScaleFunction {
            var: var.to_string(),
            expr: expr.with_var(var),
            domain,
            params: bound,
            direction: Direction::Increasing,
        };
        let (lo, hi) = domain.effective();
        if let (Ok(a), Ok(b)) = (f.raw_eval(lo), f.raw_eval(hi)) {
            if b < a {
                f.direction = Direction::Decreasing;
            }
        }
        Ok(f)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Same expression on a different domain, re-verified.
    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Self::new(self.expr.clone(), &self.var, domain, &self.params)
    }

    fn raw_eval(&self, x: f64) -> Result<f64> {
        self.expr
            .eval(x, &self.params)
            .map_err(|reason| Error::Eval { at: x, reason })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::Domain {
                value: x,
                domain: self.domain,
            });
        }
        self.raw_eval(x)
    }

    /// Values at the effective domain ends, as (min, max).
    pub fn range(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.domain.effective();
        let a = self.raw_eval(lo)?;
        let b = self.raw_eval(hi)?;
        Ok((a.min(b), a.max(b)))
    }

    /// Finds the unique x with `f(x) = u` by bisection on the domain.
    ///
    /// Bisection runs in asinh coordinates so that domains spanning many
    /// orders of magnitude converge in relative terms within the budget.
    pub fn invert(&self, u: f64) -> Result<f64> {
        let (a, b) = self.domain.effective();
        let fa = self.raw_eval(a)?;
        let fb = self.raw_eval(b)?;
        let (min, max) = (fa.min(fb), fa.max(fb));
        let scale = u.abs().max(1.0);
        if !u.is_finite() || u < min - DEFAULT_TOL * scale || u > max + DEFAULT_TOL * scale {
            return Err(Error::Range {
                value: u,
                lo: min,
                hi: max,
            });
        }
        if u <= min {
            return Ok(if fa <= fb { a } else { b });
        }
        if u >= max {
            return Ok(if fa <= fb { b } else { a });
        }

        let increasing = fa < fb;
        let (mut lo, mut hi) = (a, b);
        for _ in 0..MAX_BISECTIONS {
            let mut mid = ((lo.asinh() + hi.asinh()) * 0.5).sinh();
            if !(mid > lo && mid < hi) {
                mid = lo + (hi - lo) * 0.5;
            }
            if mid <= lo || mid >= hi {
                break;
            }
            let below = (self.raw_eval(mid)? < u) == increasing;
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECTION_RTOL * mid.abs() {
                break;
            }
        }

        let candidates = [lo + (hi - lo) * 0.5, lo, hi];
        let mut best = (candidates[0], f64::INFINITY);
        for x in candidates {
            let residual = (self.raw_eval(x)? - u).abs();
            if residual < best.1 {
                best = (x, residual);
            }
        }
        if best.1 <= DEFAULT_TOL * scale {
            Ok(best.0)
        } else {
            Err(Error::NoConvergence {
                target: u,
                best: best.0,
                residual: best.1,
            })
        }
    }

    /// Samples the function on `samples` grid points and checks that
    /// consecutive values are strictly ordered in one direction.
    ///
    /// This is a sampled check and can miss oscillation between grid points.
    pub fn check_monotone(&self, samples: usize) -> Result<MonotoneReport> {
        if samples < 2 {
            return Err(Error::InvalidInput("check_monotone needs at least 2 samples".into()));
        }
        let grid = self.domain.grid(samples);
        let values = grid
            .iter()
            .map(|&x| self.raw_eval(x))
            .collect::<Result<Vec<_>>>()?;
        let direction = if values[1] > values[0] {
            Some(Direction::Increasing)
        } else if values[1] < values[0] {
            Some(Direction::Decreasing)
        } else {
            None
        };
        let violation = (0..samples - 1).find(|&i| {
            let (p, q) = (values[i], values[i + 1]);
            match direction {
                Some(Direction::Increasing) => q <= p,
                Some(Direction::Decreasing) => q >= p,
                None => true,
            }
        });
        Ok(MonotoneReport {
            ok: violation.is_none(),
            direction: if violation.is_none() { direction } else { None },
            first_violation: violation.map(|i| (grid[i], grid[i + 1])),
            samples,
        })
    }
}

impl fmt::Display for ScaleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.expr, self.domain)
    }
}

#[derive(Serialize, Deserialize)]
struct RawScaleFunction {
    var: String,
    expr: String,
    domain: Domain,
    #[serde(default)]
    params: Params,
    direction: Direction,
}

impl From<ScaleFunction> for RawScaleFunction {
    fn from(f: ScaleFunction) -> Self {
        RawScaleFunction {
            expr: f.expr.to_string(),
            var: f.var,
            domain: f.domain,
            params: f.params,
            direction: f.direction,
        }
    }
}

impl TryFrom<RawScaleFunction> for ScaleFunction {
    type Error = Error;

    fn try_from(raw: RawScaleFunction) -> Result<Self> {
        let expr = parse_expression_in(&raw.expr, &raw.var)?;
        let mut f = ScaleFunction::unverified(expr, &raw.var, raw.domain, &raw.params)?;
        f.direction = raw.direction;
        Ok(f)
    }
}

/// A scale function bound to a physical strip.
///
/// Positions are an affine image of the function value: the value span
/// `[span_lo, span_hi]` maps onto `[0, length_mm]` (mirrored when
/// `reversed`). By default the span is the function's range, so the domain
/// ends land on 0 and `length_mm`; [`Scale::with_origin`] widens it to
/// include an origin value such as the limit at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub function: ScaleFunction,
    pub length_mm: f64,
    #[serde(default)]
    pub reversed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_label: Option<String>,
    pub span: (f64, f64),
}

impl Scale {
    pub fn new(function: ScaleFunction, length_mm: f64) -> Result<Self> {
        if !(length_mm > 0.0 && length_mm.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scale length must be positive, got {length_mm}"
            )));
        }
        let span = function.range()?;
        Ok(Scale {
            function,
            length_mm,
            reversed: false,
            origin_label: None,
            span,
        })
    }

    pub fn reversed(mut self, reversed: bool) -> Self {
        self.reversed = reversed;
        self
    }

    /// Extends the value span to reach `value`, optionally labelling that
    /// end (e.g. "∞" for 1/x, whose origin is the limit at infinity).
    pub fn with_origin(mut self, value: f64, label: Option<&str>) -> Self {
        self.span = (self.span.0.min(value), self.span.1.max(value));
        self.origin_label = label.map(str::to_string);
        self
    }

    /// Millimetres per unit of function value.
    pub fn mm_per_unit(&self) -> f64 {
        self.length_mm / (self.span.1 - self.span.0)
    }

    /// Strip position of an arbitrary function value (may lie off the strip).
    pub fn position_of_value(&self, u: f64) -> f64 {
        let p = (u - self.span.0) * self.mm_per_unit();
        if self.reversed {
            self.length_mm - p
        } else {
            p
        }
    }

    pub fn position_of(&self, x: f64) -> Result<f64> {
        Ok(self.position_of_value(self.function.eval(x)?))
    }

    pub fn value_at(&self, pos_mm: f64) -> Result<f64> {
        let slack = DEFAULT_TOL * self.length_mm;
        if !(pos_mm >= -slack && pos_mm <= self.length_mm + slack) {
            return Err(Error::Range {
                value: pos_mm,
                lo: 0.0,
                hi: self.length_mm,
            });
        }
        let p = if self.reversed {
            self.length_mm - pos_mm
        } else {
            pos_mm
        };
        let u = self.span.0 + p / self.mm_per_unit();
        self.function.invert(u)
    }
}
