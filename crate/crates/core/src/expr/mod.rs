//! Expression trees for scale functions of one variable.
//!
//! The grammar is small: numbers, the constant `pi`, one variable, named
//! parameters, unary minus, `+ - * / ^` and a fixed set of intrinsics.
//! Printing produces text that parses back to the same tree.

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use parser::{parse_expression, parse_expression_in, ParseError};

use crate::special::ln_gamma;

/// Parameter bindings shared by an expression.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

// Unary minus binds tighter than * and / but looser than ^.
const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Ln,
    Log10,
    Exp,
    Sqrt,
    Abs,
    Arccos,
    Arcsin,
    Sin,
    Cos,
    Tan,
    LogGamma,
    Pow,
}

impl Func {
    pub const ALL: [Func; 12] = [
        Func::Ln,
        Func::Log10,
        Func::Exp,
        Func::Sqrt,
        Func::Abs,
        Func::Arccos,
        Func::Arcsin,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::LogGamma,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Log10 => "log10",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Arccos => "arccos",
            Func::Arcsin => "arcsin",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::LogGamma => "loggamma",
            Func::Pow => "pow",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn apply(self, args: &[f64]) -> Result<f64, String> {
        let a = args[0];
        let value = match self {
            Func::Ln | Func::Log10 if a <= 0.0 => {
                return Err(format!("{} of non-positive {a}", self.name()))
            }
            Func::Ln => a.ln(),
            Func::Log10 => a.log10(),
            Func::Exp => a.exp(),
            Func::Sqrt if a < 0.0 => return Err(format!("sqrt of negative {a}")),
            Func::Sqrt => a.sqrt(),
            Func::Abs => a.abs(),
            Func::Arccos | Func::Arcsin if !(-1.0..=1.0).contains(&a) => {
                return Err(format!("{} argument {a} outside [-1, 1]", self.name()))
            }
            Func::Arccos => a.acos(),
            Func::Arcsin => a.asin(),
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::LogGamma => ln_gamma(a),
            Func::Pow => a.powf(args[1]),
        };
        Ok(value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Non-negative literal; negative values are spelled `Neg(Num(..))`.
    Num(f64),
    Pi,
    Var(String),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// A numeric literal in canonical form.
    pub fn num(value: f64) -> Expr {
        if value < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-value)))
        } else {
            Expr::Num(value)
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::Param(name.into())
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, vec![arg])
    }

    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Binary(BinOp::Pow, Box::new(self), Box::new(exponent))
    }

    fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eval(&self, x: f64, params: &Params) -> Result<f64, String> {
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(_) => x,
            Expr::Param(name) => *params
                .get(name)
                .ok_or_else(|| format!("unbound parameter `{name}`"))?,
            Expr::Neg(inner) => -inner.eval(x, params)?,
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.eval(x, params)?;
                let r = rhs.eval(x, params)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div if r == 0.0 => return Err("division by zero".into()),
                    BinOp::Div => l / r,
                    BinOp::Pow => l.powf(r),
                }
            }
            Expr::Call(func, args) => {
                let values = args
                    .iter()
                    .map(|a| a.eval(x, params))
                    .collect::<Result<Vec<_>, _>>()?;
                func.apply(&values)?
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(format!("non-finite value {value}"))
        }
    }

    pub fn uses_var(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Num(_) | Expr::Pi | Expr::Param(_) => false,
            Expr::Neg(inner) => inner.uses_var(),
            Expr::Binary(_, l, r) => l.uses_var() || r.uses_var(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_var),
        }
    }

    /// Names of all parameters referenced.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Param(name) => {
                out.insert(name.clone());
            }
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => {}
            Expr::Neg(inner) => inner.collect_params(out),
            Expr::Binary(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_params(out)),
        }
    }

    /// Renames the free variable.
    pub fn with_var(&self, name: &str) -> Expr {
        match self {
            Expr::Var(_) => Expr::Var(name.to_string()),
            Expr::Num(_) | Expr::Pi | Expr::Param(_) => self.clone(),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.with_var(name))),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.with_var(name), r.with_var(name)),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.with_var(name)).collect()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Num(v) if *v < 0.0 => NEG_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "-{}", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(name) | Expr::Param(name) => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                inner.write_operand(f, inner.precedence() < NEG_PRECEDENCE)
            }
            Expr::Binary(op, lhs, rhs) => {
                let prec = op.precedence();
                let (left_parens, right_parens) = match op {
                    // Right associative; the exponent may itself be unary.
                    BinOp::Pow => (lhs.precedence() <= prec, rhs.precedence() < NEG_PRECEDENCE),
                    _ => (lhs.precedence() < prec, rhs.precedence() <= prec),
                };
                lhs.write_operand(f, left_parens)?;
                f.write_str(op.symbol())?;
                rhs.write_operand(f, right_parens)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
    };
}

impl_binop!(Add, add, BinOp::Add);
impl_binop!(Sub, sub, BinOp::Sub);
impl_binop!(Mul, mul, BinOp::Mul);
impl_binop!(Div, div, BinOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}
