//! Two-variable functions on the slide rule.
//!
//! A relation is compiled into three strictly monotone scale functions with
//! `F(z) = f(x) ± g(y)`: marks for x sit at distance f(x) on the stator,
//! marks for y at distance g(y) on the slide, and sliding the slide origin to
//! x puts the hairline over z on the F scale. The crate covers the whole
//! pipeline: the expression and rule language, the compilation routes, a
//! physical simulator with quantized reading, tick layout, SVG rendering and
//! a catalog of ready-made rules.

pub mod catalog;
pub mod compiler;
pub mod dsl;
pub mod error;
pub mod expr;
pub mod rule;
pub mod scale;
pub mod sheet;
pub mod simulator;
pub mod special;
pub mod svg;
pub mod ticks;

pub use compiler::{
    compile_bilinear, compile_direct, compile_power_rule, compile_product_form, validate_rule,
    BilinearForm, Diagnostic, Role,
};
pub use error::{Error, Result};
pub use expr::{parse_expression, parse_expression_in, Expr, Params};
pub use rule::{Coefficients, Op, RuleKind, RuleSpec};
pub use scale::{Direction, Domain, MonotoneReport, Scale, ScaleFunction};
