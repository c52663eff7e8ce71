use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::{Domain, ScaleFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Op {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Plus => a + b,
            Op::Minus => a - b,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Op::Plus => 1.0,
            Op::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Op::Plus => '+',
            Op::Minus => '-',
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl std::str::FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Op::Plus),
            "-" | "minus" => Ok(Op::Minus),
            _ => Err(Error::InvalidInput(format!("unknown operator `{s}`"))),
        }
    }
}

/// Coefficients of `a u(x) v(y) + b u(x) + c v(y) + d w(z) + e = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

/// How a rule was obtained; the transforms keep their inputs so that
/// validation can re-check bracket positivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    Direct,
    Bilinear {
        coefficients: Coefficients,
        u: ScaleFunction,
        v: ScaleFunction,
        w: ScaleFunction,
    },
    Product {
        u: ScaleFunction,
        v: ScaleFunction,
        w: ScaleFunction,
    },
    Power {
        alpha: f64,
    },
}

/// A compiled relation `F(z) = f(x) ± g(y)`.
///
/// `z_fn` is F (the result scale), `x_fn` is f and `y_fn` is g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub name: String,
    pub z_fn: ScaleFunction,
    pub x_fn: ScaleFunction,
    pub y_fn: ScaleFunction,
    pub op: Op,
    /// F and f are the same function on the same domain, so the stator
    /// needs a single scale.
    pub shares_z_x: bool,
    pub description: String,
    pub result_domain: Domain,
    pub kind: RuleKind,
}

impl RuleSpec {
    /// The exact result `F⁻¹(f(x) op g(y))`, computed without any strip.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        let u = self.op.apply(self.x_fn.eval(x)?, self.y_fn.eval(y)?);
        self.z_fn.invert(u)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }
}
