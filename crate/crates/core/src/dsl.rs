//! A small line-oriented language for defining scales and rules.
//!
//! ```text
//! # comments run to the end of the line
//! param c = 1
//! scale F(z) = ln(z) on [1, 100]
//! scale f(x) = ln(x) on [1, 10]
//! scale g(y) = ln(y) on [1, 10]
//! rule mult: F=F f=f g=g op=+
//! rule lens: power alpha=-1 op=+ on [0.5, 500]
//! scale t(x) = x on (-0.9, 0.9)
//! rule p: product u=t v=t w=t
//! ```
//!
//! A `(` or `)` marks an open domain end. Numbers, bounds and coefficients
//! may be constant expressions over earlier params. Scales are only checked
//! for monotonicity when a rule is compiled, so a bad scale surfaces as a
//! diagnostic for that rule rather than as a syntax error.

use std::collections::BTreeMap;

use crate::compiler::{
    compile_bilinear, compile_direct, compile_power_rule, compile_product_form,
    default_power_domain, BilinearForm, Diagnostic, Role,
};
use crate::error::{Error, Result};
use crate::expr::{parse_expression_in, Params};
use crate::rule::{Coefficients, Op, RuleSpec};
use crate::scale::{Domain, ScaleFunction, DEFAULT_SAMPLES};

#[derive(Debug, Clone, PartialEq)]
pub enum RuleDef {
    Direct {
        z: String,
        x: String,
        y: String,
        op: Op,
    },
    Bilinear {
        coefficients: Coefficients,
        u: String,
        v: String,
        w: String,
    },
    Product {
        u: String,
        v: String,
        w: String,
    },
    Power {
        alpha: f64,
        op: Op,
        domain: Option<Domain>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleStatement {
    pub name: String,
    pub line: usize,
    pub def: RuleDef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub params: Params,
    pub scales: BTreeMap<String, ScaleFunction>,
    pub rules: Vec<RuleStatement>,
}

/// A compile finding tied to its rule and source line.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleDiagnostic {
    pub rule: String,
    pub line: usize,
    pub diagnostic: Diagnostic,
}

impl std::fmt::Display for RuleDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d = &self.diagnostic;
        write!(f, "line {}: rule {}", self.line, self.rule)?;
        if let Some(role) = d.role {
            write!(f, ", scale {role}")?;
        }
        write!(f, ": {}", d.message)?;
        if let Some(w) = d.witness {
            write!(f, " (witness {w})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Compiled {
    pub rules: Vec<RuleSpec>,
    pub diagnostics: Vec<RuleDiagnostic>,
}

/// A slice of one source line with its starting column (1-based).
#[derive(Debug, Clone, Copy)]
struct Span<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Span<'a> {
    fn error(&self, at: usize, message: impl Into<String>) -> Error {
        Error::Dsl {
            line: self.line,
            column: self.col + self.text[..at.min(self.text.len())].chars().count(),
            message: message.into(),
        }
    }

    fn sub(&self, start: usize, end: usize) -> Span<'a> {
        Span {
            text: &self.text[start..end],
            line: self.line,
            col: self.col + self.text[..start].chars().count(),
        }
    }

    fn trim(&self) -> Span<'a> {
        let start = self.text.len() - self.text.trim_start().len();
        let end = self.text.trim_end().len();
        if start >= end {
            return self.sub(self.text.len(), self.text.len());
        }
        self.sub(start, end)
    }

    fn split_once(&self, pat: char) -> Option<(Span<'a>, Span<'a>)> {
        let i = self.text.find(pat)?;
        Some((self.sub(0, i), self.sub(i + pat.len_utf8(), self.text.len())))
    }

    fn number(&self, params: &Params) -> Result<f64> {
        let s = self.trim();
        if s.text.is_empty() {
            return Err(s.error(0, "expected a number"));
        }
        let expr = parse_expression_in(s.text, "").map_err(|e| s.error(e.offset, e.to_string()))?;
        expr.eval(f64::NAN, params).map_err(|e| s.error(0, e))
    }

    fn ident(&self) -> Result<&'a str> {
        let s = self.trim();
        let ok = !s.text.is_empty()
            && s.text.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && s.text.chars().all(|c| c.is_alphanumeric() || c == '_');
        if ok {
            Ok(s.text)
        } else {
            Err(s.error(0, format!("expected a name, found `{}`", s.text)))
        }
    }

    /// `[lo, hi]` with `(`/`)` for open ends.
    fn domain(&self, params: &Params) -> Result<Domain> {
        let s = self.trim();
        let lo_open = match s.text.chars().next() {
            Some('[') => false,
            Some('(') => true,
            _ => return Err(s.error(0, "expected `[` or `(` to start a domain")),
        };
        let hi_open = match s.text.chars().last() {
            Some(']') => false,
            Some(')') => true,
            _ => return Err(s.error(s.text.len(), "expected `]` or `)` to end a domain")),
        };
        let inner = s.sub(1, s.text.len() - 1);
        let (lo, hi) = inner
            .split_once(',')
            .ok_or_else(|| inner.error(0, "expected `lo, hi`"))?;
        let (lo, hi) = (lo.number(params)?, hi.number(params)?);
        Domain::new(lo, hi, lo_open, hi_open).map_err(|e| s.error(0, e.to_string()))
    }

    /// Whitespace-separated `key=value` pairs (spaces around `=` allowed).
    fn pairs(&self) -> Result<Vec<(Span<'a>, Span<'a>)>> {
        let text = self.text;
        let bytes = text.as_bytes();
        let mut out = Vec::new();
        let mut i = 0;
        let skip = |mut i: usize| {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            i
        };
        loop {
            i = skip(i);
            if i >= bytes.len() {
                return Ok(out);
            }
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'=' {
                i += 1;
            }
            let key = self.sub(start, i);
            i = skip(i);
            if i >= bytes.len() || bytes[i] != b'=' {
                return Err(self.error(i, format!("expected `=` after `{}`", key.text)));
            }
            i = skip(i + 1);
            let vstart = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if vstart == i {
                return Err(self.error(i, format!("missing value for `{}`", key.text)));
            }
            out.push((key, self.sub(vstart, i)));
        }
    }
}

struct Pairs<'a> {
    span: Span<'a>,
    items: Vec<(Span<'a>, Span<'a>)>,
}

impl<'a> Pairs<'a> {
    fn new(span: Span<'a>, allowed: &[&str]) -> Result<Self> {
        let items = span.pairs()?;
        for (i, (k, _)) in items.iter().enumerate() {
            if !allowed.contains(&k.text) {
                return Err(k.error(0, format!("unknown key `{}` (expected {})", k.text, allowed.join(", "))));
            }
            if items[..i].iter().any(|(other, _)| other.text == k.text) {
                return Err(k.error(0, format!("duplicate key `{}`", k.text)));
            }
        }
        Ok(Pairs { span, items })
    }

    fn get(&self, key: &str) -> Result<Span<'a>> {
        self.items
            .iter()
            .find(|(k, _)| k.text == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| self.span.error(self.span.text.len(), format!("missing `{key}=`")))
    }

    fn op(&self) -> Result<Op> {
        let v = self.get("op")?;
        v.text.parse().map_err(|_| v.error(0, format!("operator must be + or -, found `{}`", v.text)))
    }

    fn scale(&self, key: &str, scales: &BTreeMap<String, ScaleFunction>) -> Result<String> {
        let v = self.get(key)?;
        if scales.contains_key(v.text) {
            Ok(v.text.to_string())
        } else {
            Err(v.error(0, format!("unknown scale `{}`", v.text)))
        }
    }
}

/// Index of a standalone ` on ` keyword followed by a domain bracket.
fn find_on(text: &str) -> Option<usize> {
    text.rmatch_indices("on").map(|(i, _)| i).find(|&i| {
        let before = text[..i].chars().last();
        let after = text[i + 2..].trim_start().chars().next();
        before.is_some_and(char::is_whitespace) && matches!(after, Some('[') | Some('('))
    })
}

pub fn parse_program(source: &str) -> Result<Program> {
    let mut program = Program {
        params: Params::new(),
        scales: BTreeMap::new(),
        rules: Vec::new(),
    };
    for (n, raw) in source.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("");
        let line = Span {
            text: code,
            line: n + 1,
            col: 1,
        }
        .trim();
        if line.text.is_empty() {
            continue;
        }
        let keyword_end = line.text.find(char::is_whitespace).unwrap_or(line.text.len());
        let rest = line.sub(keyword_end, line.text.len());
        match &line.text[..keyword_end] {
            "param" => parse_param(rest, &mut program)?,
            "scale" => parse_scale(rest, &mut program)?,
            "rule" => parse_rule(rest, &mut program)?,
            other => {
                return Err(line.error(0, format!("unknown statement `{other}` (expected param, scale or rule)")))
            }
        }
    }
    Ok(program)
}

fn parse_param(rest: Span, program: &mut Program) -> Result<()> {
    let (name, value) = rest.split_once('=').ok_or_else(|| rest.error(rest.text.len(), "expected `param name = value`"))?;
    let id = name.ident()?;
    let v = value.number(&program.params)?;
    program.params.insert(id.to_string(), v);
    Ok(())
}

fn parse_scale(rest: Span, program: &mut Program) -> Result<()> {
    let (head, body) = rest
        .split_once('=')
        .ok_or_else(|| rest.error(rest.text.len(), "expected `scale name(var) = expr on [lo, hi]`"))?;
    let (name, var) = head
        .split_once('(')
        .ok_or_else(|| head.error(head.text.len(), "expected `name(var)`"))?;
    let var_text = var.trim();
    let var = var_text
        .text
        .strip_suffix(')')
        .map(|v| var_text.sub(0, v.len()))
        .ok_or_else(|| var_text.error(var_text.text.len(), "expected `)`"))?;
    let (name, var) = (name.ident()?, var.ident()?);
    if program.scales.contains_key(name) {
        return Err(head.error(0, format!("scale `{name}` is already defined")));
    }
    let on = find_on(body.text).ok_or_else(|| body.error(body.text.len(), "expected `on [lo, hi]`"))?;
    let expr_span = body.sub(0, on).trim();
    let domain = body.sub(on + 2, body.text.len()).domain(&program.params)?;
    let expr = parse_expression_in(expr_span.text, var).map_err(|e| expr_span.error(e.offset, e.to_string()))?;
    let function = ScaleFunction::unverified(expr, var, domain, &program.params)
        .map_err(|e| expr_span.error(0, e.to_string()))?;
    program.scales.insert(name.to_string(), function);
    Ok(())
}

fn parse_rule(rest: Span, program: &mut Program) -> Result<()> {
    let (name, body) = rest
        .split_once(':')
        .ok_or_else(|| rest.error(rest.text.len(), "expected `rule name: ...`"))?;
    let name = name.ident()?;
    if program.rules.iter().any(|r| r.name == name) {
        return Err(rest.error(0, format!("rule `{name}` is already defined")));
    }
    let body = body.trim();
    let kind_end = body.text.find(char::is_whitespace).unwrap_or(body.text.len());
    let after = body.sub(kind_end, body.text.len());
    let params = &program.params;
    let scales = &program.scales;
    let def = match &body.text[..kind_end] {
        "bilinear" => {
            let p = Pairs::new(after, &["a", "b", "c", "d", "e", "u", "v", "w"])?;
            RuleDef::Bilinear {
                coefficients: Coefficients {
                    a: p.get("a")?.number(params)?,
                    b: p.get("b")?.number(params)?,
                    c: p.get("c")?.number(params)?,
                    d: p.get("d")?.number(params)?,
                    e: p.get("e")?.number(params)?,
                },
                u: p.scale("u", scales)?,
                v: p.scale("v", scales)?,
                w: p.scale("w", scales)?,
            }
        }
        "product" => {
            let p = Pairs::new(after, &["u", "v", "w"])?;
            RuleDef::Product {
                u: p.scale("u", scales)?,
                v: p.scale("v", scales)?,
                w: p.scale("w", scales)?,
            }
        }
        "power" => {
            let (pairs, domain) = match find_on(after.text) {
                Some(i) => (
                    after.sub(0, i),
                    Some(after.sub(i + 2, after.text.len()).domain(params)?),
                ),
                None => (after, None),
            };
            let p = Pairs::new(pairs, &["alpha", "op"])?;
            RuleDef::Power {
                alpha: p.get("alpha")?.number(params)?,
                op: p.op()?,
                domain,
            }
        }
        _ => {
            let p = Pairs::new(body, &["F", "f", "g", "op"])?;
            RuleDef::Direct {
                z: p.scale("F", scales)?,
                x: p.scale("f", scales)?,
                y: p.scale("g", scales)?,
                op: p.op()?,
            }
        }
    };
    program.rules.push(RuleStatement {
        name: name.to_string(),
        line: rest.line,
        def,
    });
    Ok(())
}

fn finding(err: &Error, role: Option<Role>) -> Diagnostic {
    let witness = match err {
        Error::NotMonotone(report) => report.first_violation.map(|(a, _)| a),
        Error::PositivityViolation { at, .. } => Some(*at),
        _ => None,
    };
    Diagnostic {
        kind: err.kind().to_string(),
        role,
        message: err.to_string(),
        witness,
    }
}

impl Program {
    fn compile_rule(&self, stmt: &RuleStatement) -> std::result::Result<RuleSpec, Vec<Diagnostic>> {
        let get = |name: &str| self.scales[name].clone();
        let monotone = |roles: &[(Option<Role>, &str)]| -> Vec<Diagnostic> {
            roles
                .iter()
                .filter_map(|(role, name)| match get(name).check_monotone(DEFAULT_SAMPLES) {
                    Ok(report) if report.ok => None,
                    Ok(report) => Some(finding(&Error::NotMonotone(report), *role)),
                    Err(e) => Some(finding(&e, *role)),
                })
                .collect()
        };
        let result = match &stmt.def {
            RuleDef::Direct { z, x, y, op } => {
                let bad = monotone(&[(Some(Role::Z), z), (Some(Role::X), x), (Some(Role::Y), y)]);
                if !bad.is_empty() {
                    return Err(bad);
                }
                compile_direct(get(z), get(x), get(y), *op)
            }
            RuleDef::Bilinear { coefficients, u, v, w } => {
                if coefficients.a == 0.0 {
                    return Err(vec![finding(&Error::ZeroA, None)]);
                }
                let bad = monotone(&[(None, u), (None, v), (None, w)]);
                if !bad.is_empty() {
                    return Err(bad);
                }
                compile_bilinear(&BilinearForm {
                    coefficients: *coefficients,
                    u: get(u),
                    v: get(v),
                    w: get(w),
                })
            }
            RuleDef::Product { u, v, w } => {
                let bad = monotone(&[(None, u), (None, v), (None, w)]);
                if !bad.is_empty() {
                    return Err(bad);
                }
                compile_product_form(&get(u), &get(v), &get(w))
            }
            RuleDef::Power { alpha, op, domain } => {
                compile_power_rule(*alpha, *op, domain.unwrap_or_else(|| default_power_domain(*alpha)))
            }
        };
        result
            .map(|r| r.with_name(stmt.name.clone()))
            .map_err(|e| vec![finding(&e, None)])
    }

    /// Compiles every rule; failures become diagnostics instead of errors.
    pub fn compile(&self) -> Compiled {
        let mut out = Compiled::default();
        for stmt in &self.rules {
            match self.compile_rule(stmt) {
                Ok(rule) => out.rules.push(rule),
                Err(found) => out.diagnostics.extend(found.into_iter().map(|diagnostic| RuleDiagnostic {
                    rule: stmt.name.clone(),
                    line: stmt.line,
                    diagnostic,
                })),
            }
        }
        out
    }
}

pub fn compile_program(source: &str) -> Result<Compiled> {
    Ok(parse_program(source)?.compile())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dsl_error(src: &str) -> (usize, usize, String) {
        match parse_program(src).unwrap_err() {
            Error::Dsl { line, column, message } => (line, column, message),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn full_program() {
        let src = "\
# multiplication and friends
param top = 100
scale F(z) = ln(z) on [1, top]
scale f(x) = ln(x) on [1, 10]   # first operand
scale g(y) = ln(y) on [1, 10]
rule mult: F=F f=f g=g op=+
rule lens: power alpha=-1 op=+
rule quad: power alpha = 2 op = + on [0, 20]
";
        let compiled = compile_program(src).unwrap();
        assert!(compiled.diagnostics.is_empty());
        let names: Vec<_> = compiled.rules.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["mult", "lens", "quad"]);
        assert!((compiled.rules[0].evaluate(2.0, 3.0).unwrap() - 6.0).abs() < 1e-9);
        assert!(compiled.rules[1].shares_z_x);
    }

    #[test]
    fn every_route() {
        let src = "\
scale u(x) = x on [1, 10]
scale w(y) = y on [1, 10]
scale p(z) = z on [1, 100]
scale t(x) = x on (-0.9, 0.9)
rule b: bilinear a=1 b=0 c=0 d=-1 e=0 u=u v=w w=p
rule p: product u=t v=t w=t
";
        let compiled = compile_program(src).unwrap();
        assert!(compiled.diagnostics.is_empty(), "{:?}", compiled.diagnostics);
        assert!((compiled.rules[0].evaluate(2.0, 3.0).unwrap() - 6.0).abs() < 1e-9);
        let z = compiled.rules[1].evaluate(0.5, -0.2).unwrap();
        assert!((0.5 * -0.2 * z + 0.5 - 0.2 + z).abs() < 1e-12);
    }

    #[test]
    fn open_domains_and_params() {
        let src = "param c = 2\nscale v(x) = -0.5*ln(1 - x^2/c^2) on [0, c)\n";
        let p = parse_program(src).unwrap();
        let d = p.scales["v"].domain();
        assert_eq!((d.lo, d.hi, d.lo_open, d.hi_open), (0.0, 2.0, false, true));
    }

    #[test]
    fn syntax_errors_have_positions() {
        let (line, col, msg) = dsl_error("\n\nscale f(x) = ln(x)) on [1, 10]");
        assert_eq!(line, 3);
        assert_eq!(col, 19);
        assert!(msg.contains("expected"), "{msg}");

        let (line, col, _) = dsl_error("scale f(x) = ln(x) on [1, 10]\nrule r: F=f f=f g=h op=+");
        assert_eq!((line, col), (2, 19));

        let (_, col, msg) = dsl_error("rule r: power alpha=2 op=*");
        assert_eq!(col, 26);
        assert!(msg.contains("+ or -"));

        let (_, _, msg) = dsl_error("scale f(x) = x on [2, 1]");
        assert!(msg.contains("domain") || msg.contains("2"), "{msg}");
        let (_, col, _) = dsl_error("banana");
        assert_eq!(col, 1);
        let (_, _, msg) = dsl_error("scale f(x) = k*x on [0, 1]");
        assert!(msg.contains("k"));
    }

    #[test]
    fn compile_diagnostics() {
        let src = "\
scale u(x) = x on [1, 10]
scale v(y) = y on [1, 10]
scale w(z) = z on [1, 100]
scale sq(x) = x^2 on [-1, 1]
rule zero: bilinear a=0 b=1 c=1 d=-1 e=0 u=u v=v w=w
rule bent: F=w f=sq g=v op=+
";
        let compiled = compile_program(src).unwrap();
        assert!(compiled.rules.is_empty());
        assert_eq!(compiled.diagnostics.len(), 2);
        assert_eq!(compiled.diagnostics[0].diagnostic.kind, "ZeroA");
        assert_eq!(compiled.diagnostics[0].line, 5);
        let bent = &compiled.diagnostics[1];
        assert_eq!(bent.diagnostic.kind, "NotMonotone");
        assert_eq!(bent.diagnostic.role, Some(Role::X));
        let w = bent.diagnostic.witness.unwrap();
        assert!(w.abs() < 0.01, "{w}");
        assert!(bent.to_string().contains("witness"));
    }
}
