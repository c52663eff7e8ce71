//! Compiles relations into additive scale triples `F(z) = f(x) ± g(y)`.
//!
//! Four routes are supported: the direct form, the bilinear form
//! `a u v + b u + c v + d w + e = 0` (factored and taken through logs), the
//! product form `u v w + u + v + w = 0`, and power scales `x^α`.
//! Logarithms are natural throughout; the base only rescales coordinates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Bracket, Error, Result};
use crate::expr::Expr;
use crate::rule::{Coefficients, Op, RuleKind, RuleSpec};
use crate::scale::{Domain, ScaleFunction, DEFAULT_SAMPLES};

/// `a u(x) v(y) + b u(x) + c v(y) + d w(z) + e = 0` with its three
/// monotone ingredient functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm {
    pub coefficients: Coefficients,
    pub u: ScaleFunction,
    pub v: ScaleFunction,
    pub w: ScaleFunction,
}

/// Which of the three functions of a rule a finding refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// The result scale F.
    #[serde(rename = "F")]
    Z,
    /// The first operand scale f.
    #[serde(rename = "f")]
    X,
    /// The second operand (slide) scale g.
    #[serde(rename = "g")]
    Y,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Z => "F",
            Role::X => "f",
            Role::Y => "g",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: String,
    pub role: Option<Role>,
    pub message: String,
    /// Offending point, when there is one.
    pub witness: Option<f64>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if let Some(role) = self.role {
            write!(f, " [{role}]")?;
        }
        write!(f, ": {}", self.message)?;
        if let Some(w) = self.witness {
            write!(f, " (witness {w})")?;
        }
        Ok(())
    }
}

fn require_monotone(f: &ScaleFunction) -> Result<()> {
    let report = f.check_monotone(DEFAULT_SAMPLES)?;
    if report.ok {
        Ok(())
    } else {
        Err(Error::NotMonotone(report))
    }
}

/// F and f denote the same function on the same domain, up to the name of
/// the variable.
pub fn same_function(a: &ScaleFunction, b: &ScaleFunction) -> bool {
    a.expr().with_var("_") == b.expr().with_var("_")
        && a.domain() == b.domain()
        && a.params() == b.params()
}

/// Reachable values of `f(x) op g(y)` intersected with the range of F,
/// pulled back through F.
fn result_domain(
    z_fn: &ScaleFunction,
    x_fn: &ScaleFunction,
    y_fn: &ScaleFunction,
    op: Op,
) -> Result<Domain> {
    let (f0, f1) = x_fn.range()?;
    let (g0, g1) = y_fn.range()?;
    let (reach_lo, reach_hi) = match op {
        Op::Plus => (f0 + g0, f1 + g1),
        Op::Minus => (f0 - g1, f1 - g0),
    };
    let (range_lo, range_hi) = z_fn.range()?;
    let lo = reach_lo.max(range_lo);
    let hi = reach_hi.min(range_hi);
    if lo >= hi {
        return Err(Error::EmptyRule {
            reach_lo,
            reach_hi,
            range_lo,
            range_hi,
        });
    }
    let a = z_fn.invert(lo)?;
    let b = z_fn.invert(hi)?;
    Domain::closed(a.min(b), a.max(b))
}

fn assemble(
    z_fn: ScaleFunction,
    x_fn: ScaleFunction,
    y_fn: ScaleFunction,
    op: Op,
    kind: RuleKind,
) -> Result<RuleSpec> {
    let result_domain = result_domain(&z_fn, &x_fn, &y_fn, op)?;
    Ok(RuleSpec {
        name: "direct".into(),
        shares_z_x: same_function(&z_fn, &x_fn),
        z_fn,
        x_fn,
        y_fn,
        op,
        description: String::new(),
        result_domain,
        kind,
    })
}

/// `F(z) = f(x) op g(y)` from three monotone functions.
pub fn compile_direct(
    z_fn: ScaleFunction,
    x_fn: ScaleFunction,
    y_fn: ScaleFunction,
    op: Op,
) -> Result<RuleSpec> {
    for f in [&z_fn, &x_fn, &y_fn] {
        require_monotone(f)?;
    }
    assemble(z_fn, x_fn, y_fn, op, RuleKind::Direct)
}

/// `scale * expr + offset`, without the no-op parts.
fn affine(expr: &Expr, scale: f64, offset: f64) -> Expr {
    let scaled = if scale == 1.0 {
        expr.clone()
    } else if scale == -1.0 {
        -expr.clone()
    } else {
        Expr::num(scale) * expr.clone()
    };
    if offset > 0.0 {
        scaled + Expr::num(offset)
    } else if offset < 0.0 {
        scaled - Expr::num(-offset)
    } else {
        scaled
    }
}

/// Smallest value of `f` plus `offset` over the check grid, with its point.
fn grid_min(f: &ScaleFunction, map: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let mut worst = (f64::NAN, f64::INFINITY);
    for x in f.domain().grid(DEFAULT_SAMPLES) {
        let value = map(f.eval(x)?);
        if !(value >= worst.1) {
            worst = (x, value);
        }
    }
    Ok(worst)
}

fn require_positive(
    f: &ScaleFunction,
    bracket: Bracket,
    map: impl Fn(f64) -> f64,
) -> Result<()> {
    let (at, value) = grid_min(f, map)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::PositivityViolation { bracket, at, value })
    }
}

/// The w bracket `bc/a² - (d w + e)/a` as a function of w.
fn w_bracket(k: &Coefficients) -> impl Fn(f64) -> f64 + '_ {
    move |w| k.b * k.c / (k.a * k.a) - (k.d * w + k.e) / k.a
}

/// Trims the z domain to where the w bracket is positive.
fn feasible_w(form: &BilinearForm) -> Result<ScaleFunction> {
    let k = &form.coefficients;
    let bracket = w_bracket(k);
    let domain = form.w.domain();
    let (lo, hi) = domain.effective();
    let at_lo = bracket(form.w.eval(lo)?);
    let at_hi = bracket(form.w.eval(hi)?);
    match (at_lo > 0.0, at_hi > 0.0) {
        (true, true) => Ok(form.w.clone()),
        (false, false) => Err(Error::PositivityViolation {
            bracket: Bracket::W,
            at: if at_lo >= at_hi { lo } else { hi },
            value: at_lo.max(at_hi),
        }),
        (lo_ok, _) => {
            // bracket == 0  <=>  w == (bc/a - e)/d
            let root = form.w.invert((k.b * k.c / k.a - k.e) / k.d)?;
            let trimmed = if lo_ok {
                Domain::new(domain.lo, root, domain.lo_open, true)?
            } else {
                Domain::new(root, domain.hi, true, domain.hi_open)?
            };
            form.w.with_domain(trimmed)
        }
    }
}

/// Takes the bilinear form through the factorisation
/// `(u + c/a)(v + b/a) = bc/a² - (d w + e)/a` and logarithms.
pub fn compile_bilinear(form: &BilinearForm) -> Result<RuleSpec> {
    let k = form.coefficients;
    if k.a == 0.0 {
        return Err(Error::ZeroA);
    }
    for f in [&form.u, &form.v, &form.w] {
        require_monotone(f)?;
    }
    require_positive(&form.u, Bracket::U, |u| u + k.c / k.a)?;
    require_positive(&form.v, Bracket::V, |v| v + k.b / k.a)?;
    let w = feasible_w(form)?;

    let x_fn = ScaleFunction::new(
        affine(form.u.expr(), 1.0, k.c / k.a).ln(),
        form.u.var(),
        form.u.domain(),
        form.u.params(),
    )?;
    let y_fn = ScaleFunction::new(
        affine(form.v.expr(), 1.0, k.b / k.a).ln(),
        form.v.var(),
        form.v.domain(),
        form.v.params(),
    )?;
    let z_fn = ScaleFunction::new(
        affine(w.expr(), -k.d / k.a, k.b * k.c / (k.a * k.a) - k.e / k.a).ln(),
        w.var(),
        w.domain(),
        w.params(),
    )?;
    let kind = RuleKind::Bilinear {
        coefficients: k,
        u: form.u.clone(),
        v: form.v.clone(),
        w,
    };
    Ok(assemble(z_fn, x_fn, y_fn, Op::Plus, kind)?.with_name("bilinear"))
}

fn cayley_log(f: &ScaleFunction) -> Expr {
    let e = f.expr().clone();
    ((Expr::num(1.0) - e.clone()) / (Expr::num(1.0) + e)).ln()
}

fn cayley_bracket(t: f64) -> f64 {
    (1.0 - t) / (1.0 + t)
}

/// `u v w + u + v + w = 0` via `Π (1-t)/(1+t) = 1` and logarithms.
pub fn compile_product_form(
    u: &ScaleFunction,
    v: &ScaleFunction,
    w: &ScaleFunction,
) -> Result<RuleSpec> {
    for f in [u, v, w] {
        require_monotone(f)?;
    }
    require_positive(u, Bracket::U, cayley_bracket)?;
    require_positive(v, Bracket::V, cayley_bracket)?;
    require_positive(w, Bracket::W, cayley_bracket)?;
    let x_fn = ScaleFunction::new(cayley_log(u), u.var(), u.domain(), u.params())?;
    let y_fn = ScaleFunction::new(cayley_log(v), v.var(), v.domain(), v.params())?;
    let z_fn = ScaleFunction::new(-cayley_log(w), w.var(), w.domain(), w.params())?;
    let kind = RuleKind::Product {
        u: u.clone(),
        v: v.clone(),
        w: w.clone(),
    };
    Ok(assemble(z_fn, x_fn, y_fn, Op::Plus, kind)?.with_name("product"))
}

/// Domain used for a power rule when none is given.
pub fn default_power_domain(alpha: f64) -> Domain {
    if alpha > 0.0 {
        Domain::closed(0.0, 20.0).expect("static domain")
    } else {
        Domain::closed(0.5, 500.0).expect("static domain")
    }
}

/// `z^α = x^α op y^α` on shared `x^α` scales.
pub fn compile_power_rule(alpha: f64, op: Op, domain: Domain) -> Result<RuleSpec> {
    if alpha == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("exponent must be finite, got {alpha}")));
    }
    let origin_ok = if alpha > 0.0 {
        domain.lo >= 0.0
    } else {
        domain.lo > 0.0 || (domain.lo == 0.0 && domain.lo_open)
    };
    if !origin_ok {
        return Err(Error::InvalidInput(format!(
            "power scales need a positive domain, got {domain}"
        )));
    }
    let power = |var: &str| -> Result<ScaleFunction> {
        let expr = Expr::var(var).pow(Expr::num(alpha));
        ScaleFunction::new(expr, var, domain, &Default::default())
    };
    let rule = assemble(
        power("z")?,
        power("x")?,
        power("y")?,
        op,
        RuleKind::Power { alpha },
    )?;
    Ok(rule.with_name("power"))
}

fn diag(kind: &str, role: Option<Role>, message: String, witness: Option<f64>) -> Diagnostic {
    Diagnostic {
        kind: kind.into(),
        role,
        message,
        witness,
    }
}

fn positivity_finding(
    f: &ScaleFunction,
    bracket: Bracket,
    map: impl Fn(f64) -> f64,
    out: &mut Vec<Diagnostic>,
) {
    match grid_min(f, map) {
        Ok((at, value)) if value <= 0.0 => out.push(diag(
            "PositivityViolation",
            None,
            format!("bracket {bracket} is {value}"),
            Some(at),
        )),
        Ok(_) => {}
        Err(e) => out.push(diag(e.kind(), None, e.to_string(), None)),
    }
}

/// Re-checks every structural requirement of a rule. Empty means valid.
pub fn validate_rule(rule: &RuleSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut all_monotone = true;
    for (role, f) in [(Role::Z, &rule.z_fn), (Role::X, &rule.x_fn), (Role::Y, &rule.y_fn)] {
        match f.check_monotone(DEFAULT_SAMPLES) {
            Ok(report) if report.ok => {}
            Ok(report) => {
                all_monotone = false;
                out.push(diag(
                    "NotMonotone",
                    Some(role),
                    report.to_string(),
                    report.first_violation.map(|(a, _)| a),
                ));
            }
            Err(e) => {
                all_monotone = false;
                let witness = match e {
                    Error::Eval { at, .. } => Some(at),
                    _ => None,
                };
                out.push(diag(e.kind(), Some(role), e.to_string(), witness));
            }
        }
    }
    if rule.shares_z_x && !same_function(&rule.z_fn, &rule.x_fn) {
        out.push(diag(
            "SharedMismatch",
            None,
            "rule claims F = f but the functions differ".into(),
            None,
        ));
    }
    if all_monotone {
        if let Err(e) = result_domain(&rule.z_fn, &rule.x_fn, &rule.y_fn, rule.op) {
            out.push(diag(e.kind(), None, e.to_string(), None));
        }
    }
    match &rule.kind {
        RuleKind::Bilinear {
            coefficients: k,
            u,
            v,
            w,
        } => {
            if k.a == 0.0 {
                out.push(diag("ZeroA", None, "coefficient a is zero".into(), None));
            } else {
                positivity_finding(u, Bracket::U, |t| t + k.c / k.a, &mut out);
                positivity_finding(v, Bracket::V, |t| t + k.b / k.a, &mut out);
                positivity_finding(w, Bracket::W, w_bracket(k), &mut out);
            }
        }
        RuleKind::Product { u, v, w } => {
            positivity_finding(u, Bracket::U, cayley_bracket, &mut out);
            positivity_finding(v, Bracket::V, cayley_bracket, &mut out);
            positivity_finding(w, Bracket::W, cayley_bracket, &mut out);
        }
        RuleKind::Power { alpha } if *alpha == 0.0 => {
            out.push(diag("ZeroAlpha", None, "exponent is zero".into(), None));
        }
        RuleKind::Direct | RuleKind::Power { .. } => {}
    }
    out
}
