//! Ready-made rules.
//!
//! Each entry builds its [`RuleSpec`] from parameter bindings (defaults
//! filled in) and is validated before it is handed out.

use serde::Serialize;

use crate::compiler::{compile_bilinear, compile_direct, compile_power_rule, default_power_domain, validate_rule, BilinearForm};
use crate::error::{Error, Result};
use crate::expr::Params;
use crate::rule::{Coefficients, Op, RuleSpec};
use crate::scale::{Domain, ScaleFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub description: &'static str,
}

/// Extra requirement on the operands beyond their domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Precondition {
    /// The first operand must not be smaller than the second.
    FirstAtLeastSecond,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub rule: RuleSpec,
    /// Parameter values the rule was built with, defaults included.
    pub params: Params,
    pub param_schema: &'static [ParamSpec],
    pub precondition: Option<Precondition>,
}

impl CatalogEntry {
    pub fn check_operands(&self, x: f64, y: f64) -> Result<()> {
        match self.precondition {
            Some(Precondition::FirstAtLeastSecond) if x < y => Err(Error::Precondition(format!(
                "{} needs the first operand to be at least the second ({x} < {y})",
                self.name
            ))),
            _ => Ok(()),
        }
    }
}

struct Builtin {
    info: CatalogInfo,
    build: fn(&Params) -> Result<RuleSpec>,
    precondition: Option<Precondition>,
}

fn sf(text: &str, var: &str, domain: Domain, params: &Params) -> Result<ScaleFunction> {
    ScaleFunction::parse(text, var, domain, params)
}

fn closed(lo: f64, hi: f64) -> Result<Domain> {
    Domain::closed(lo, hi)
}

fn none() -> Params {
    Params::new()
}

fn replus(_: &Params) -> Result<RuleSpec> {
    compile_power_rule(-1.0, Op::Plus, default_power_domain(-1.0))
}

fn quadplus(_: &Params) -> Result<RuleSpec> {
    compile_power_rule(2.0, Op::Plus, default_power_domain(2.0))
}

fn power(p: &Params) -> Result<RuleSpec> {
    let alpha = p["alpha"];
    compile_power_rule(alpha, Op::Plus, default_power_domain(alpha))
}

fn tangent_circles(_: &Params) -> Result<RuleSpec> {
    compile_power_rule(-0.5, Op::Plus, closed(0.1, 100.0)?)
}

fn quadratic_solver(_: &Params) -> Result<RuleSpec> {
    compile_direct(
        sf("z^2", "z", closed(0.0, 30.0)?, &none())?,
        sf("p^2/4", "p", closed(0.0, 20.0)?, &none())?,
        sf("q", "q", closed(-100.0, 100.0)?, &none())?,
        Op::Minus,
    )
}

fn cubic_solver(_: &Params) -> Result<RuleSpec> {
    compile_direct(
        sf("z^2", "z", closed(0.0, 40.0)?, &none())?,
        sf("p^3/27", "p", closed(-15.0, 15.0)?, &none())?,
        sf("q^2/4", "q", closed(0.0, 60.0)?, &none())?,
        Op::Plus,
    )
}

fn lorentz(p: &Params) -> Result<RuleSpec> {
    let c = p["c"];
    if !(c > 0.0) {
        return Err(Error::Precondition(format!("speed of light must be positive, got {c}")));
    }
    compile_direct(
        sf("ln(z)", "z", closed(0.1, 2500.0)?, &none())?,
        sf("ln(M)", "M", closed(0.1, 100.0)?, &none())?,
        sf("-0.5*ln(1 - v^2/c^2)", "v", closed(0.0, 0.999 * c)?, p)?,
        Op::Plus,
    )
}

fn factorial_product(_: &Params) -> Result<RuleSpec> {
    compile_direct(
        sf("ln(z)", "z", closed(1.0, 1e37)?, &none())?,
        sf("loggamma(n + 1)", "n", closed(1.0, 20.0)?, &none())?,
        sf("loggamma(k + 1)", "k", closed(1.0, 20.0)?, &none())?,
        Op::Plus,
    )
}

fn factorial_quotient(_: &Params) -> Result<RuleSpec> {
    compile_direct(
        sf("ln(z)", "z", closed(1.0, 2.5e18)?, &none())?,
        sf("loggamma(n + 1)", "n", closed(1.0, 20.0)?, &none())?,
        sf("loggamma(k + 1)", "k", closed(1.0, 20.0)?, &none())?,
        Op::Minus,
    )
}

fn horizon(p: &Params) -> Result<RuleSpec> {
    let r = p["R"];
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("earth radius must be positive, got {r}")));
    }
    compile_direct(
        sf("z", "z", closed(0.0, 0.03 * r)?, &none())?,
        sf("R*arccos(R/(R + h))", "h", closed(0.0, r / 1e4)?, p)?,
        sf("R*arccos(R/(R + t))", "t", closed(0.0, r / 1e4)?, p)?,
        Op::Plus,
    )
}

fn power_tower(_: &Params) -> Result<RuleSpec> {
    let ll = Domain::new(0.05f64.exp(), 10f64.exp(), true, false)?;
    compile_direct(
        sf("ln(ln(z))", "z", ll, &none())?,
        sf("ln(ln(x))", "x", ll, &none())?,
        sf("ln(y)", "y", closed(0.1, 10.0)?, &none())?,
        Op::Plus,
    )
}

fn multiplication(_: &Params) -> Result<RuleSpec> {
    compile_direct(
        sf("ln(z)", "z", closed(1.0, 100.0)?, &none())?,
        sf("ln(x)", "x", closed(1.0, 10.0)?, &none())?,
        sf("ln(y)", "y", closed(1.0, 10.0)?, &none())?,
        Op::Plus,
    )
}

/// `z = u·v` with `u = x^a`, `v = y^b`, i.e. `1·u·v + 0·u + 0·v - 1·w = 0`.
fn x_pow_a_y_pow_b(p: &Params) -> Result<RuleSpec> {
    let (a, b) = (p["a"], p["b"]);
    let lo = 10f64.powf(a.min(0.0) + b.min(0.0));
    let hi = 10f64.powf(a.max(0.0) + b.max(0.0));
    let form = BilinearForm {
        coefficients: Coefficients {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: -1.0,
            e: 0.0,
        },
        u: sf("x^a", "x", closed(1.0, 10.0)?, p)?,
        v: sf("y^b", "y", closed(1.0, 10.0)?, p)?,
        w: sf("z", "z", closed(lo, hi)?, &none())?,
    };
    compile_bilinear(&form)
}

fn snell(_: &Params) -> Result<RuleSpec> {
    let degrees = closed(1.0, 90.0)?;
    compile_direct(
        sf("ln(sin(pi*z/180))", "z", degrees, &none())?,
        sf("ln(sin(pi*x/180))", "x", degrees, &none())?,
        sf("ln(y)", "y", closed(0.1, 10.0)?, &none())?,
        Op::Plus,
    )
}

fn t_rule(p: &Params) -> Result<RuleSpec> {
    let domain = closed(0.0, 10.0)?;
    let (s_lo, s_hi) = (p["a"] * 0.0 + p["b"], p["a"] * 10.0 + p["b"]);
    let (r_lo, r_hi) = (p["c"] * 0.0 + p["d"], p["c"] * 10.0 + p["d"]);
    if s_lo.min(s_hi) <= 0.0 || r_lo.min(r_hi) <= 0.0 {
        return Err(Error::Precondition(
            "a·S + b and c·R + d must stay positive on [0, 10]".into(),
        ));
    }
    let corners = [
        s_lo.powf(p["p"]) * r_lo.powf(p["q"]),
        s_lo.powf(p["p"]) * r_hi.powf(p["q"]),
        s_hi.powf(p["p"]) * r_lo.powf(p["q"]),
        s_hi.powf(p["p"]) * r_hi.powf(p["q"]),
    ];
    let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().cloned().fold(0.0, f64::max);
    compile_direct(
        sf("ln(T)", "T", closed(lo, hi)?, &none())?,
        sf("p*ln(a*S + b)", "S", domain, p)?,
        sf("q*ln(c*R + d)", "R", domain, p)?,
        Op::Plus,
    )
}

fn log_base(_: &Params) -> Result<RuleSpec> {
    let domain = closed(1.1, 1000.0)?;
    compile_direct(
        sf("ln(z)", "z", closed(0.01, 100.0)?, &none())?,
        sf("ln(ln(x))", "x", domain, &none())?,
        sf("ln(ln(y))", "y", domain, &none())?,
        Op::Minus,
    )
}

fn cone_volume(_: &Params) -> Result<RuleSpec> {
    compile_direct(
        sf("ln(V)", "V", closed(1e-3, 1100.0)?, &none())?,
        sf("ln(pi*r^2/3)", "r", closed(0.1, 10.0)?, &none())?,
        sf("ln(h)", "h", closed(0.1, 10.0)?, &none())?,
        Op::Plus,
    )
}

macro_rules! builtin {
    ($name:literal, $build:ident, $desc:literal, [$($p:expr),*], $pre:expr) => {
        Builtin {
            info: CatalogInfo {
                name: $name,
                description: $desc,
                params: &[$($p),*],
            },
            build: $build,
            precondition: $pre,
        }
    };
}

const fn param(name: &'static str, default: f64, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default,
        description,
    }
}

static BUILTINS: &[Builtin] = &[
    builtin!("replus", replus,
        "Reciprocal sum 1/z = 1/x + 1/y on 1/x scales (origin at infinity). Thin lens focal lengths, parallel resistors and series capacitors; chaining and scaling by n gives harmonic means.",
        [], None),
    builtin!("quadplus", quadplus,
        "Pythagorean sum z = sqrt(x^2 + y^2) on x^2 scales. Hypotenuses, vector magnitudes, root-sum-square combinations; chains give sqrt(x1^2 + ... + xn^2).",
        [], None),
    builtin!("power", power,
        "Power sum z^alpha = x^alpha + y^alpha on x^alpha scales; chaining over n values and dividing by n^(1/alpha) gives the power mean H_alpha.",
        [param("alpha", 2.0, "nonzero exponent")], None),
    builtin!("quadratic_solver", quadratic_solver,
        "Radical of x^2 + p x + q = 0: z = sqrt(p^2/4 - q); the roots are -p/2 +- z.",
        [], None),
    builtin!("cubic_solver", cubic_solver,
        "Radical of the depressed cubic x^3 + p x + q = 0: z = sqrt(p^3/27 + q^2/4), the square root in Cardano's formula (q entered as |q|).",
        [], None),
    builtin!("lorentz", lorentz,
        "Relativistic mass z = M / sqrt(1 - v^2/c^2) from rest mass M and speed v.",
        [param("c", 1.0, "speed of light in the unit of v")], None),
    builtin!("factorial_product", factorial_product,
        "Product of factorials z = n! k! on log-gamma scales.",
        [], None),
    builtin!("factorial_quotient", factorial_quotient,
        "Quotient of factorials z = n! / k! on log-gamma scales; needs n >= k.",
        [], Some(Precondition::FirstAtLeastSecond)),
    builtin!("horizon", horizon,
        "Sailor's horizon: distance z at which an object of height t becomes visible from eye height h, z = R arccos(R/(R+h)) + R arccos(R/(R+t)); lengths in the unit of R.",
        [param("R", 6371.0, "earth radius (default in km)")], None),
    builtin!("power_tower", power_tower,
        "Powers z = x^y in one movement on log-log scales: ln ln z = ln ln x + ln y.",
        [], None),
    builtin!("tangent_circles", tangent_circles,
        "Three circles touching each other and a common line: 1/sqrt(r1) = 1/sqrt(r2) + 1/sqrt(r3), the power rule with alpha = -1/2.",
        [], None),
    builtin!("multiplication", multiplication,
        "Multiplication z = x y on logarithmic scales.",
        [], None),
    builtin!("x_pow_a_y_pow_b", x_pow_a_y_pow_b,
        "Monomial z = x^a y^b, compiled from the bilinear form u v - w = 0 with u = x^a, v = y^b.",
        [param("a", 2.0, "exponent of x"), param("b", 3.0, "exponent of y")], None),
    builtin!("snell", snell,
        "Refraction sin(z) = sin(x) y, with angles in degrees and y = n1/n2 the ratio of refractive indices.",
        [], None),
    builtin!("t_rule", t_rule,
        "Two-factor power product T = (a S + b)^p (c R + d)^q for S, R in [0, 10].",
        [param("a", 1.0, "slope of the S factor"), param("b", 1.0, "offset of the S factor"),
         param("c", 1.0, "slope of the R factor"), param("d", 1.0, "offset of the R factor"),
         param("p", 2.0, "power of the S factor"), param("q", 3.0, "power of the R factor")], None),
    builtin!("log_base", log_base,
        "Logarithm to any base z = log_y(x) = ln x / ln y on log-log scales.",
        [], None),
    builtin!("cone_volume", cone_volume,
        "Volume of a cone z = pi r^2 h / 3 from radius r and height h.",
        [], None),
];

pub fn list_builtins() -> Vec<CatalogInfo> {
    BUILTINS.iter().map(|b| b.info.clone()).collect()
}

pub fn builtin_names() -> Vec<String> {
    BUILTINS.iter().map(|b| b.info.name.to_string()).collect()
}

pub fn builtin(name: &str, bindings: &Params) -> Result<CatalogEntry> {
    let entry = BUILTINS
        .iter()
        .find(|b| b.info.name == name)
        .ok_or_else(|| Error::UnknownEntry {
            name: name.to_string(),
            valid: builtin_names(),
        })?;
    let schema = entry.info.params;
    if let Some(unknown) = bindings.keys().find(|k| !schema.iter().any(|p| p.name == k.as_str())) {
        let valid: Vec<&str> = schema.iter().map(|p| p.name).collect();
        return Err(Error::InvalidInput(format!(
            "{name} has no parameter `{unknown}` (parameters: {})",
            if valid.is_empty() { "none".to_string() } else { valid.join(", ") }
        )));
    }
    let mut params: Params = schema.iter().map(|p| (p.name.to_string(), p.default)).collect();
    params.extend(bindings.iter().map(|(k, v)| (k.clone(), *v)));
    let rule = (entry.build)(&params)?
        .with_name(name)
        .with_description(entry.info.description);
    if let Some(finding) = validate_rule(&rule).into_iter().next() {
        return Err(Error::Precondition(format!("{name}: {} ({})", finding.message, finding.kind)));
    }
    Ok(CatalogEntry {
        name: name.to_string(),
        description: entry.info.description.to_string(),
        rule,
        params,
        param_schema: schema,
        precondition: entry.precondition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{chain, ReadingModel, RuleState};

    fn read(name: &str, bindings: &[(&str, f64)], x: f64, y: f64) -> f64 {
        let params = bindings.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let entry = builtin(name, &params).unwrap();
        entry.check_operands(x, y).unwrap();
        let state = RuleState::new(&entry.rule, 250.0).unwrap();
        state.slide_set(x).unwrap().read_result(y, &ReadingModel::ideal()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn every_entry_builds_and_validates() {
        let names = builtin_names();
        assert!(names.len() >= 13);
        for name in names {
            let entry = builtin(&name, &Params::new()).unwrap();
            assert!(validate_rule(&entry.rule).is_empty(), "{name}");
            assert_eq!(entry.rule.name, name);
        }
    }

    #[test]
    fn descriptions() {
        let list = list_builtins();
        let replus = list.iter().find(|i| i.name == "replus").unwrap();
        for word in ["lens", "resistors", "harmonic"] {
            assert!(replus.description.contains(word));
        }
        let circles = list.iter().find(|i| i.name == "tangent_circles").unwrap();
        assert!(circles.description.contains("alpha = -1/2"));
    }

    #[test]
    fn worked_examples() {
        assert!(close(read("replus", &[], 3.0, 6.0), 2.0));
        assert!(close(read("quadplus", &[], 3.0, 4.0), 5.0));
        assert!(close(read("quadratic_solver", &[], 5.0, 6.0), 0.5));
        assert!(close(read("cubic_solver", &[], 3.0, 2.0), 2f64.sqrt()));
        assert!(close(read("lorentz", &[], 1.0, 0.6), 1.25));
        assert!(close(read("factorial_product", &[], 5.0, 3.0), 720.0));
        assert!(close(read("factorial_quotient", &[], 5.0, 3.0), 20.0));
        assert!(close(read("power_tower", &[], 2.0, 3.0), 8.0));
        assert!(close(read("tangent_circles", &[], 4.0, 4.0), 1.0));
        assert!(close(read("multiplication", &[], 2.0, 3.0), 6.0));
        assert!(close(read("x_pow_a_y_pow_b", &[], 2.0, 3.0), 108.0));
        assert!(close(read("x_pow_a_y_pow_b", &[("a", 1.0), ("b", 1.0)], 2.0, 3.0), 6.0));
        assert!(close(read("power", &[("alpha", 3.0)], 3.0, 4.0), 91f64.cbrt()));
        assert!(close(read("t_rule", &[], 1.0, 1.0), 32.0));
        assert!(close(read("log_base", &[], 8.0, 2.0), 3.0));
        assert!(close(read("cone_volume", &[], 3.0, 4.0), 12.0 * std::f64::consts::PI));
        let refracted = (30f64.to_radians().sin() * 1.5).asin().to_degrees();
        assert!(close(read("snell", &[], 30.0, 1.5), refracted));
        assert!(close(read("lorentz", &[("c", 300_000.0)], 2.0, 180_000.0), 2.5));
    }

    #[test]
    fn horizon_matches_direct_evaluation() {
        let r: f64 = 6371.0;
        let leg = |h: f64| r * (r / (r + h)).acos();
        let expected = leg(0.004) + leg(0.030);
        assert!((expected - 26.69).abs() < 0.01);
        assert!(close(read("horizon", &[], 0.004, 0.030), expected));
        let r = 6_371_000.0;
        let leg = |h: f64| r * (r / (r + h)).acos();
        assert!(close(read("horizon", &[("R", r)], 4.0, 30.0), leg(4.0) + leg(30.0)));
    }

    #[test]
    fn factorials_match_integers() {
        let fact = |n: u64| (1..=n).product::<u64>() as f64;
        let product = builtin("factorial_product", &Params::new()).unwrap();
        let quotient = builtin("factorial_quotient", &Params::new()).unwrap();
        for n in 1..=20u64 {
            for k in 1..=n {
                let p = product.rule.evaluate(n as f64, k as f64).unwrap();
                assert!((p - fact(n) * fact(k)).abs() <= 1e-9 * p, "{n}! {k}!");
                let q = quotient.rule.evaluate(n as f64, k as f64).unwrap();
                assert!((q - fact(n) / fact(k)).abs() <= 1e-9 * q, "{n}!/{k}!");
            }
        }
        assert!(quotient.check_operands(3.0, 5.0).is_err());
    }

    #[test]
    fn chains_on_shared_scales() {
        let ideal = ReadingModel::ideal();
        let rule = builtin("tangent_circles", &Params::new()).unwrap().rule;
        let r = chain(&rule, &[4.0, 4.0, 4.0], &ideal).unwrap();
        assert!(close(r, 4.0 / 9.0));
    }

    #[test]
    fn unknown_names_and_parameters() {
        match builtin("nomogram", &Params::new()).unwrap_err() {
            Error::UnknownEntry { valid, .. } => assert!(valid.contains(&"replus".to_string())),
            other => panic!("unexpected {other}"),
        }
        let bad: Params = [("R".to_string(), 1.0)].into_iter().collect();
        assert!(builtin("replus", &bad).is_err());
        let zero: Params = [("alpha".to_string(), 0.0)].into_iter().collect();
        assert_eq!(builtin("power", &zero).unwrap_err().kind(), "ZeroAlpha");
    }
}
