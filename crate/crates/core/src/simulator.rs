//! Physical simulation of a rule: set the slide, read the hairline, chain.
//!
//! All three strips share one scale factor `k` (mm per unit of function
//! value) and put their origin S at function value 0, so a mark for x sits
//! `k·f(x)` from S₁ and a mark for y sits `k·g(y)` from S₂. Sliding S₂ to x
//! and reading over y then lands on `k·(f(x) + g(y)) = k·F(z)`.
//!
//! For subtraction the slide is set to the mirror image of x
//! (offset `-k·f(x)`) and the stator reading is the mirror of the slide
//! coordinate, giving `k·(f(x) - g(y))`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compiler::compile_power_rule;
use crate::error::{Error, Result};
use crate::rule::{Op, RuleKind, RuleSpec};
use crate::scale::{Domain, Scale, ScaleFunction};

pub const DEFAULT_LENGTH_MM: f64 = 250.0;

/// How precisely a human sets and reads positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadingModel {
    /// Positions are rounded to the nearest multiple of this; 0 is ideal.
    pub resolution_mm: f64,
    /// Length of the longest strip.
    pub length_mm: f64,
}

impl Default for ReadingModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ReadingModel {
    pub fn ideal() -> Self {
        ReadingModel {
            resolution_mm: 0.0,
            length_mm: DEFAULT_LENGTH_MM,
        }
    }

    pub fn new(resolution_mm: f64, length_mm: f64) -> Result<Self> {
        if !(resolution_mm >= 0.0 && resolution_mm.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "resolution must be non-negative, got {resolution_mm}"
            )));
        }
        if !(length_mm > 0.0 && length_mm.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "length must be positive, got {length_mm}"
            )));
        }
        Ok(ReadingModel {
            resolution_mm,
            length_mm,
        })
    }

    fn quantize(&self, pos_mm: f64) -> f64 {
        if self.resolution_mm > 0.0 {
            (pos_mm / self.resolution_mm).round() * self.resolution_mm
        } else {
            pos_mm
        }
    }
}

/// One strip scale of a laid-out rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub scale: Scale,
    /// Distance from the strip's origin S to its position 0 (usually ≤ 0).
    pub placement_mm: f64,
}

impl Strip {
    fn new(function: &ScaleFunction, mm_per_unit: f64, origin_label: Option<&str>) -> Result<Self> {
        let (lo, hi) = function.range()?;
        let (lo, hi) = (lo.min(0.0), hi.max(0.0));
        let scale = Scale::new(function.clone(), mm_per_unit * (hi - lo))?
            .with_origin(0.0, origin_label);
        Ok(Strip {
            placement_mm: mm_per_unit * scale.span.0,
            scale,
        })
    }

    /// Position of mark x measured from the strip origin S.
    pub fn offset_of(&self, x: f64) -> Result<f64> {
        Ok(self.placement_mm + self.scale.position_of(x)?)
    }

    /// The marked extent, measured from S.
    pub fn marked_extent(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.scale.function.range()?;
        let k = self.scale.mm_per_unit();
        Ok((k * lo, k * hi))
    }
}

/// Physical geometry of a rule: common scale factor and the three strips.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleLayout {
    pub rule: RuleSpec,
    pub length_mm: f64,
    pub mm_per_unit: f64,
    /// F, on the stator.
    pub z_strip: Strip,
    /// f, on the stator (the same scale as F when the rule shares them).
    pub x_strip: Strip,
    /// g, on the slide.
    pub y_strip: Strip,
}

/// Label for the origin when it is the limit at infinity.
pub fn origin_label(rule: &RuleSpec) -> Option<&'static str> {
    match rule.kind {
        RuleKind::Power { alpha } if alpha < 0.0 => Some("∞"),
        _ => None,
    }
}

impl RuleLayout {
    pub fn new(rule: &RuleSpec, length_mm: f64) -> Result<Self> {
        if !(length_mm > 0.0 && length_mm.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "length must be positive, got {length_mm}"
            )));
        }
        let mut widest = 0.0f64;
        for f in [&rule.z_fn, &rule.x_fn, &rule.y_fn] {
            let (lo, hi) = f.range()?;
            widest = widest.max(hi.max(0.0) - lo.min(0.0));
        }
        let k = length_mm / widest;
        let label = origin_label(rule);
        Ok(RuleLayout {
            rule: rule.clone(),
            length_mm,
            mm_per_unit: k,
            z_strip: Strip::new(&rule.z_fn, k, label)?,
            x_strip: Strip::new(&rule.x_fn, k, label)?,
            y_strip: Strip::new(&rule.y_fn, k, label)?,
        })
    }
}

/// The slide rule at one moment: its geometry and the slide offset.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleState {
    pub layout: RuleLayout,
    /// Signed displacement of S₂ from S₁.
    pub offset_mm: f64,
}

impl RuleState {
    pub fn new(rule: &RuleSpec, length_mm: f64) -> Result<Self> {
        Ok(RuleState {
            layout: RuleLayout::new(rule, length_mm)?,
            offset_mm: 0.0,
        })
    }

    pub fn rule(&self) -> &RuleSpec {
        &self.layout.rule
    }

    /// Moves S₂ to the stator mark x (mirrored for subtraction).
    pub fn slide_set(&self, x: f64) -> Result<RuleState> {
        let pos = self.layout.x_strip.offset_of(x)?;
        Ok(RuleState {
            layout: self.layout.clone(),
            offset_mm: self.rule().op.sign() * pos,
        })
    }

    /// Stator position under the hairline placed over slide mark y, after
    /// both the setting and the reading are quantized.
    pub fn hairline_mm(&self, y: f64, model: &ReadingModel) -> Result<f64> {
        let set = model.quantize(self.offset_mm);
        let slide = self.layout.y_strip.offset_of(y)?;
        let read = model.quantize(set + slide);
        Ok(self.rule().op.sign() * read)
    }

    pub fn read_result(&self, y: f64, model: &ReadingModel) -> Result<f64> {
        let needed = self.hairline_mm(y, model)?;
        let (lo, hi) = self.layout.z_strip.marked_extent()?;
        let slack = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
        if needed < lo - slack || needed > hi + slack {
            return Err(Error::OffScale {
                needed_mm: needed,
                available_mm: if needed < lo { lo } else { hi },
                step: None,
            });
        }
        self.layout.rule.z_fn.invert(needed / self.layout.mm_per_unit)
    }
}

fn at_step(err: Error, step: usize) -> Error {
    match err {
        Error::OffScale {
            needed_mm,
            available_mm,
            ..
        } => Error::OffScale {
            needed_mm,
            available_mm,
            step: Some(step),
        },
        other => other,
    }
}

/// Repeated movements: `z ← F⁻¹(F(z) + g(x_next))`, feeding each result
/// back in as the next setting.
pub fn chain(rule: &RuleSpec, xs: &[f64], model: &ReadingModel) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput("chain needs at least two values".into()));
    }
    if rule.op != Op::Plus {
        return Err(Error::ChainUnsupported("subtraction rules cannot be chained".into()));
    }
    if !rule.shares_z_x {
        return Err(Error::ChainUnsupported(
            "the result scale differs from the first operand scale".into(),
        ));
    }
    let state = RuleState::new(rule, model.length_mm)?;
    let mut z = xs[0];
    for (step, &next) in xs.iter().enumerate().skip(1) {
        z = state
            .slide_set(z)
            .and_then(|s| s.read_result(next, model))
            .map_err(|e| at_step(e, step))?;
    }
    Ok(z)
}

/// Power mean `((Σ xᵢ^α)/n)^{1/α}`: chain on `x^α` scales, then divide by
/// `n^{1/α}`.
pub fn power_mean(xs: &[f64], alpha: f64, model: &ReadingModel) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InvalidInput("power mean of no values".into()));
    }
    if let Some(bad) = xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput(format!("power mean needs positive values, got {bad}")));
    }
    if alpha == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    if xs.len() == 1 {
        return Ok(xs[0]);
    }
    let n = xs.len() as f64;
    let root_n = n.powf(1.0 / alpha);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = xs.iter().cloned().fold(0.0, f64::max);
    let domain = Domain::closed(0.5 * min * root_n.min(1.0), 2.0 * max * root_n.max(1.0))?;
    let rule = compile_power_rule(alpha, Op::Plus, domain)?;
    Ok(chain(&rule, xs, model)? / root_n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub x: f64,
    pub y: f64,
    pub z_exact: Option<f64>,
    /// `None` when the reading falls off the scale.
    pub z_read: Option<f64>,
    pub rel_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorProfile {
    pub rows: Vec<ProfileRow>,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
    pub off_scale: usize,
}

/// Quantized readings against exact results over a grid.
pub fn error_profile(
    rule: &RuleSpec,
    xs: &[f64],
    ys: &[f64],
    model: &ReadingModel,
) -> Result<ErrorProfile> {
    if !(model.resolution_mm > 0.0) {
        return Err(Error::InvalidInput("error profile needs a positive resolution".into()));
    }
    let state = RuleState::new(rule, model.length_mm)?;
    let mut rows = Vec::with_capacity(xs.len() * ys.len());
    for &x in xs {
        let set = state.slide_set(x)?;
        for &y in ys {
            let z_exact = match rule.evaluate(x, y) {
                Ok(z) => Some(z),
                Err(Error::Range { .. }) => None,
                Err(e) => return Err(e),
            };
            let z_read = match set.read_result(y, model) {
                Ok(z) => Some(z),
                Err(Error::OffScale { .. }) | Err(Error::Range { .. }) => None,
                Err(e) => return Err(e),
            };
            let rel_err = match (z_exact, z_read) {
                (Some(e), Some(r)) => Some((r - e).abs() / e.abs().max(f64::MIN_POSITIVE)),
                _ => None,
            };
            rows.push(ProfileRow {
                x,
                y,
                z_exact,
                z_read,
                rel_err,
            });
        }
    }
    let errors: Vec<f64> = rows.iter().filter_map(|r| r.rel_err).collect();
    let max_rel_err = errors.iter().cloned().fold(0.0, f64::max);
    let mean_rel_err = if errors.is_empty() {
        0.0
    } else {
        errors.iter().sum::<f64>() / errors.len() as f64
    };
    Ok(ErrorProfile {
        off_scale: rows.len() - errors.len(),
        rows,
        max_rel_err,
        mean_rel_err,
    })
}

impl ErrorProfile {
    /// CSV with header `x,y,z_exact,z_read,rel_err`; off-scale readings
    /// carry `OFF_SCALE` in `z_read` and an empty `rel_err`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z_exact,z_read,rel_err\n");
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for row in &self.rows {
            let z_read = row
                .z_read
                .map(|v| v.to_string())
                .unwrap_or_else(|| "OFF_SCALE".into());
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.x,
                row.y,
                opt(row.z_exact),
                z_read,
                opt(row.rel_err)
            );
        }
        out
    }
}
