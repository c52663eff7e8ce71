//! The exported sheet: every scale of every rule, laid out with ticks.
//!
//! The JSON form of [`ScaleSheet`] is the document consumed by the renderer
//! and by the browser front end.

use serde::{Deserialize, Serialize};

use crate::compiler::Role;
use crate::error::{Error, Result};
use crate::rule::{Op, RuleKind, RuleSpec};
use crate::scale::{Domain, ScaleFunction};
use crate::simulator::{RuleLayout, Strip};
use crate::ticks::{generate_ticks, round_position, Tick, TickPolicy};

pub const SHEET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Stator,
    Slide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetScale {
    pub role: Role,
    pub side: Side,
    pub function: ScaleFunction,
    pub length_mm: f64,
    /// Distance from the strip origin S to the strip's left end.
    pub placement_mm: f64,
    pub reversed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_label: Option<String>,
    /// Function values at the two ends of the strip.
    pub span: (f64, f64),
    pub ticks: Vec<Tick>,
}

impl SheetScale {
    /// Strip position (from the left end) of a function value.
    pub fn position_of_value(&self, u: f64) -> f64 {
        let k = self.length_mm / (self.span.1 - self.span.0);
        let p = (u - self.span.0) * k;
        if self.reversed {
            self.length_mm - p
        } else {
            p
        }
    }

    /// Strip position of the origin S.
    pub fn origin_mm(&self) -> f64 {
        self.position_of_value(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeMark {
    pub role: Role,
    pub value: f64,
    pub pos_mm: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetRule {
    pub name: String,
    pub description: String,
    pub op: Op,
    pub shares_z_x: bool,
    pub result_domain: Domain,
    pub kind: RuleKind,
    pub mm_per_unit: f64,
    pub length_mm: f64,
    pub scales: Vec<SheetScale>,
    #[serde(default)]
    pub gauge_marks: Vec<GaugeMark>,
    /// Variable of f when it shares the F strip.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_var: Option<String>,
}

impl SheetRule {
    pub fn scale(&self, role: Role) -> Option<&SheetScale> {
        self.scales.iter().find(|s| s.role == role)
    }

    /// The rule the sheet entry was exported from.
    pub fn to_rule(&self) -> Result<RuleSpec> {
        let get = |role: Role| {
            self.scale(role)
                .map(|s| s.function.clone())
                .ok_or_else(|| Error::Serialization(format!("rule {} has no {role} scale", self.name)))
        };
        let z_fn = get(Role::Z)?;
        let x_fn = match (&self.x_var, self.shares_z_x) {
            (Some(var), true) => {
                ScaleFunction::new(z_fn.expr().with_var(var), var, z_fn.domain(), z_fn.params())?
            }
            (None, true) => z_fn.clone(),
            (_, false) => get(Role::X)?,
        };
        Ok(RuleSpec {
            name: self.name.clone(),
            z_fn,
            x_fn,
            y_fn: get(Role::Y)?,
            op: self.op,
            shares_z_x: self.shares_z_x,
            description: self.description.clone(),
            result_domain: self.result_domain,
            kind: self.kind.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSheet {
    pub version: u32,
    pub rules: Vec<SheetRule>,
}

impl Default for ScaleSheet {
    fn default() -> Self {
        ScaleSheet {
            version: SHEET_VERSION,
            rules: Vec::new(),
        }
    }
}

impl ScaleSheet {
    pub fn to_json(&self) -> Result<String> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if header.version != SHEET_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported sheet version {} (expected {SHEET_VERSION})",
                header.version
            )));
        }
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn rule(&self, name: &str) -> Option<&SheetRule> {
        self.rules.iter().find(|r| r.name == name)
    }
}

fn is_quadratic(f: &ScaleFunction) -> bool {
    f.expr().to_string() == format!("{}^2", f.var())
}

fn sheet_scale(rule: &RuleSpec, role: Role, side: Side, strip: &Strip, policy: &TickPolicy) -> Result<SheetScale> {
    let layout = generate_ticks(&strip.scale, policy).map_err(|e| match e {
        Error::DegenerateScale(msg) => Error::DegenerateScale(format!("{}/{role}: {msg}", rule.name)),
        other => other,
    })?;
    let scale = &strip.scale;
    Ok(SheetScale {
        role,
        side,
        function: scale.function.clone(),
        length_mm: scale.length_mm,
        placement_mm: strip.placement_mm,
        reversed: scale.reversed,
        origin_label: scale.origin_label.clone(),
        span: scale.span,
        ticks: layout.ticks,
    })
}

/// Lays out every scale of every rule. A shared F/f scale is exported once.
pub fn export_sheet(rules: &[RuleSpec], length_mm: f64, policy: &TickPolicy) -> Result<ScaleSheet> {
    let mut out = Vec::with_capacity(rules.len());
    for rule in rules {
        let layout = RuleLayout::new(rule, length_mm)?;
        let mut scales = vec![sheet_scale(rule, Role::Z, Side::Stator, &layout.z_strip, policy)?];
        if !rule.shares_z_x {
            scales.push(sheet_scale(rule, Role::X, Side::Stator, &layout.x_strip, policy)?);
        }
        scales.push(sheet_scale(rule, Role::Y, Side::Slide, &layout.y_strip, policy)?);

        let strips = [(Role::Z, &layout.z_strip), (Role::X, &layout.x_strip), (Role::Y, &layout.y_strip)];
        let gauge_marks = strips
            .iter()
            .filter(|(role, _)| scales.iter().any(|s| s.role == *role))
            .filter(|(_, strip)| is_quadratic(&strip.scale.function))
            .filter_map(|(role, strip)| {
                let value = std::f64::consts::SQRT_2;
                let pos = strip.scale.position_of(value).ok()?;
                Some(GaugeMark {
                    role: *role,
                    value,
                    pos_mm: round_position(pos),
                    label: "√2".into(),
                })
            })
            .collect();

        out.push(SheetRule {
            name: rule.name.clone(),
            description: rule.description.clone(),
            op: rule.op,
            shares_z_x: rule.shares_z_x,
            result_domain: rule.result_domain,
            kind: rule.kind.clone(),
            mm_per_unit: layout.mm_per_unit,
            length_mm,
            scales,
            gauge_marks,
            x_var: rule.shares_z_x.then(|| rule.x_fn.var().to_string()),
        });
    }
    Ok(ScaleSheet {
        version: SHEET_VERSION,
        rules: out,
    })
}
