//! Tick marks and labels for a laid-out scale.
//!
//! Ticks are placed on round numbers in value space. Major ticks are the
//! marks m·10^k of every decade for positive domains spanning at least a
//! factor of ten, otherwise the multiples of one power of ten. Every gap is
//! then split recursively, as finely as the minimum spacing allows, into
//! halves, fifths or tenths on a grid of 1·10^j and 5·10^j steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::Scale;

/// Position rounding used for tick records.
pub const POSITION_DECIMALS: i32 = 4;
const MAX_DEPTH: usize = 12;
const THINNING: [usize; 4] = [1, 2, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelFormat {
    /// Plain decimals for moderate magnitudes, scientific otherwise.
    #[default]
    Shortest,
    Scientific,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickPolicy {
    pub min_tick_spacing_mm: f64,
    pub min_label_spacing_mm: f64,
    #[serde(default)]
    pub label_format: LabelFormat,
}

impl Default for TickPolicy {
    fn default() -> Self {
        TickPolicy {
            min_tick_spacing_mm: 0.6,
            min_label_spacing_mm: 3.0,
            label_format: LabelFormat::Shortest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub pos_mm: f64,
    pub value: f64,
    /// 0 major, 1 minor, 2 fine.
    pub level: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickLayout {
    pub scale_ref: String,
    pub length_mm: f64,
    pub ticks: Vec<Tick>,
}

impl TickLayout {
    pub fn labeled(&self) -> impl Iterator<Item = &Tick> {
        self.ticks.iter().filter(|t| t.label.is_some())
    }
}

pub fn round_position(pos_mm: f64) -> f64 {
    let scale = 10f64.powi(POSITION_DECIMALS);
    let r = (pos_mm * scale).round() / scale;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// An exact decimal `m·10^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dec {
    m: i128,
    e: i32,
}

impl Dec {
    fn new(mut m: i128, mut e: i32) -> Dec {
        if m == 0 {
            return Dec { m: 0, e: 0 };
        }
        while m % 10 == 0 {
            m /= 10;
            e += 1;
        }
        Dec { m, e }
    }

    fn value(self) -> f64 {
        // Exact operands give a correctly rounded result.
        if self.m.unsigned_abs() < 1 << 53 && (-22..=22).contains(&self.e) {
            let m = self.m as f64;
            let p = 10f64.powi(self.e.abs());
            return if self.e < 0 { m / p } else { m * p };
        }
        format!("{}e{}", self.m, self.e).parse().unwrap_or(f64::NAN)
    }

    /// Both mantissas at the smaller exponent.
    fn align(a: Dec, b: Dec) -> Option<(i128, i128, i32)> {
        let e = if a.m == 0 {
            b.e
        } else if b.m == 0 {
            a.e
        } else {
            a.e.min(b.e)
        };
        let lift = |d: Dec| -> Option<i128> {
            if d.m == 0 {
                return Some(0);
            }
            let shift = u32::try_from(d.e - e).ok()?;
            d.m.checked_mul(10i128.checked_pow(shift)?)
        };
        Some((lift(a)?, lift(b)?, e))
    }

    fn label(self, format: LabelFormat) -> String {
        let negative = self.m < 0;
        let digits = self.m.unsigned_abs().to_string();
        let magnitude = self.e + digits.len() as i32 - 1;
        let body = if format == LabelFormat::Shortest && (-4..=6).contains(&magnitude) {
            if self.e >= 0 {
                format!("{digits}{}", "0".repeat(self.e as usize))
            } else {
                let frac = (-self.e) as usize;
                if digits.len() > frac {
                    let (int, dec) = digits.split_at(digits.len() - frac);
                    format!("{int}.{dec}")
                } else {
                    format!("0.{}{digits}", "0".repeat(frac - digits.len()))
                }
            }
        } else {
            let (lead, rest) = digits.split_at(1);
            if rest.is_empty() {
                format!("{lead}e{magnitude}")
            } else {
                format!("{lead}.{rest}e{magnitude}")
            }
        };
        if negative {
            format!("-{body}")
        } else {
            body
        }
    }
}

/// A level-0 tick candidate; `index` is the multiple of the anchor step
/// (the leading digit in decade mode).
#[derive(Debug, Clone, Copy)]
struct Anchor {
    dec: Dec,
    index: i128,
}

struct Generator<'a> {
    scale: &'a Scale,
    spacing: f64,
    lo: f64,
    hi: f64,
    /// `Some(p)`: linear anchors every 10^p; `None`: decade anchors.
    linear: Option<i32>,
}

impl<'a> Generator<'a> {
    fn new(scale: &'a Scale, spacing: f64) -> Self {
        let (lo, hi) = scale.function.domain().effective();
        let linear = if lo > 0.0 && hi / lo >= 10.0 {
            None
        } else {
            let count = |p: i32| {
                let step = 10f64.powi(p);
                ((hi / step).floor() - (lo / step).ceil() + 1.0).max(0.0)
            };
            let mut p = (hi - lo).log10().floor() as i32;
            if count(p) < 5.0 {
                p -= 1;
            }
            Some(p)
        };
        Generator {
            scale,
            // Feasibility is judged before rounding to POSITION_DECIMALS.
            spacing: spacing + 1e-4,
            lo,
            hi,
            linear,
        }
    }

    fn inside(&self, v: f64) -> bool {
        v.is_finite() && self.scale.function.domain().contains(v)
    }

    fn raw_position(&self, v: f64) -> Option<f64> {
        if !self.inside(v) {
            return None;
        }
        self.scale.position_of(v).ok()
    }

    fn position(&self, v: f64) -> Option<f64> {
        self.raw_position(v)
            .map(|p| round_position(p).clamp(0.0, self.scale.length_mm))
    }

    fn anchor(&self, dec: Dec) -> Anchor {
        let index = match self.linear {
            Some(p) => Dec::align(dec, Dec::new(1, p)).map_or(0, |(m, one, _)| m / one),
            None => dec.m,
        };
        Anchor { dec, index }
    }

    fn is_mark(&self, a: &Anchor) -> bool {
        match self.linear {
            Some(_) => a.index % 10 == 0,
            None => a.index == 1,
        }
    }

    /// Marks bracketing the domain: powers of ten, or multiples of ten
    /// anchor steps.
    fn marks(&self) -> Vec<Dec> {
        match self.linear {
            None => {
                let mut k0 = self.lo.log10().floor() as i32;
                while Dec::new(1, k0).value() > self.lo {
                    k0 -= 1;
                }
                while Dec::new(1, k0 + 1).value() <= self.lo {
                    k0 += 1;
                }
                let mut marks = vec![Dec::new(1, k0)];
                while marks.last().is_some_and(|d| d.value() < self.hi) {
                    marks.push(Dec::new(1, marks.len() as i32 + k0));
                }
                marks
            }
            Some(p) => {
                let step = 10f64.powi(p + 1);
                let j0 = (self.lo / step).floor() as i128;
                let j1 = (self.hi / step).ceil() as i128;
                (j0..=j1).map(|j| Dec::new(j, p + 1)).collect()
            }
        }
    }

    fn spaced(&self, positions: &[f64]) -> bool {
        positions.windows(2).all(|w| (w[1] - w[0]).abs() >= self.spacing)
    }

    /// Candidate point sets (endpoints included) for splitting `[a, b]`,
    /// finest first. Steps are 1·10^j or 5·10^j only, so each candidate
    /// refines the next one; a decade is split at all of 2..9, at 5, or not
    /// at all.
    fn options(&self, a: Dec, b: Dec, top: bool) -> Vec<Vec<Dec>> {
        if top && self.linear.is_none() && a.m == 1 && b.m == 1 && b.e == a.e + 1 {
            return [1, 5]
                .iter()
                .map(|&k| {
                    let inner = (2..=9i128).filter(|m| m % k == 0).map(|m| Dec::new(m, a.e));
                    std::iter::once(a).chain(inner).chain(std::iter::once(b)).collect()
                })
                .collect();
        }
        let Some((ma, mb, e)) = Dec::align(a, b) else {
            return Vec::new();
        };
        let (Some(ma), Some(width)) = (ma.checked_mul(10), (mb - ma).checked_mul(10)) else {
            return Vec::new();
        };
        steps(width)
            .into_iter()
            .map(|s| (0..=width / s).map(|i| Dec::new(ma + i * s, e - 1)).collect())
            .collect()
    }

    /// Splits `[a, b]` as finely as the spacing allows, then recurses into
    /// the pieces. Any split that fits on a strip also fits on a longer
    /// one, and finer candidates contain coarser ones, so the tick set only
    /// grows with length.
    fn split(&self, a: Dec, b: Dec, level: u8, depth: usize, out: &mut Vec<(Dec, u8)>) {
        if depth >= MAX_DEPTH {
            return;
        }
        let child = if depth == 0 { 0 } else { (level + 1).min(2) };
        for points in self.options(a, b, depth == 0) {
            let values: Vec<f64> = points.iter().map(|d| d.value()).collect();
            let positions: Vec<f64> = values.iter().filter_map(|v| self.raw_position(*v)).collect();
            let n = points.len() - 1;
            let interior = values[1..n].iter().filter(|v| self.inside(**v)).count();
            if interior == 0 || !self.spaced(&positions) {
                continue;
            }
            for (d, v) in points[1..n].iter().zip(&values[1..n]) {
                if self.inside(*v) {
                    out.push((*d, child));
                }
            }
            for (d, v) in points.windows(2).zip(values.windows(2)) {
                if v[1] > self.lo && v[0] < self.hi {
                    self.split(d[0], d[1], child, depth + 1, out);
                }
            }
            return;
        }
    }

    /// Keeps the marks that fit, then thins every run of anchors between
    /// two kept marks with the smallest k that respects `spacing` against
    /// both neighbours: first keeping indices that are multiples of k, then
    /// every k-th element counted from the nearest kept mark.
    fn thin_labels(&self, anchors: &[(Anchor, f64)], spacing: f64) -> Vec<Dec> {
        let clear = |a: f64, b: f64| (a - b).abs() >= spacing - 1e-9;
        let mut pins: Vec<usize> = Vec::new();
        for (i, (a, p)) in anchors.iter().enumerate() {
            if self.is_mark(a) && pins.last().is_none_or(|&j| clear(anchors[j].1, *p)) {
                pins.push(i);
            }
        }
        let mut bounds: Vec<Option<usize>> = vec![None];
        bounds.extend(pins.iter().map(|&i| Some(i)));
        bounds.push(None);

        let mut kept = Vec::new();
        for w in bounds.windows(2) {
            let (left, right) = (w[0], w[1]);
            if let Some(l) = left {
                kept.push(anchors[l].0.dec);
            }
            let from = left.map_or(0, |l| l + 1);
            let to = right.unwrap_or(anchors.len());
            let run: Vec<(Anchor, f64)> = anchors[from..to]
                .iter()
                .copied()
                .filter(|(a, _)| !self.is_mark(a))
                .collect();
            if run.is_empty() {
                continue;
            }
            let fits = |sel: &[(Anchor, f64)]| {
                let mut prev = left.map(|l| anchors[l].1);
                let inner = sel.iter().all(|(_, p)| {
                    let ok = prev.is_none_or(|q| clear(q, *p));
                    prev = Some(*p);
                    ok
                });
                inner
                    && match (prev, right) {
                        (Some(q), Some(r)) => clear(q, anchors[r].1),
                        _ => true,
                    }
            };
            let n = run.len();
            let by_value = THINNING.into_iter().map(|k| {
                run.iter()
                    .filter(|(a, _)| a.index % k as i128 == 0)
                    .copied()
                    .collect::<Vec<_>>()
            });
            let by_stride = (2..=n + 1).map(|k| {
                run.iter()
                    .enumerate()
                    .filter(|(i, _)| {
                        if left.is_some() || right.is_none() {
                            (i + 1) % k == 0
                        } else {
                            (n - i) % k == 0
                        }
                    })
                    .map(|(_, x)| *x)
                    .collect::<Vec<_>>()
            });
            let chosen = by_value
                .filter(|sel| !sel.is_empty())
                .chain(by_stride)
                .find(|sel| fits(sel));
            kept.extend(chosen.unwrap_or_default().into_iter().map(|(a, _)| a.dec));
        }
        kept
    }
}

/// Steps of the form 1·10^j or 5·10^j dividing `width` into 2..=10 pieces,
/// finest first.
fn steps(width: i128) -> Vec<i128> {
    let mut out = Vec::new();
    let mut unit: i128 = 1;
    while unit <= width {
        for c in [1, 5] {
            let s = c * unit;
            if s <= width && width % s == 0 && (2..=10).contains(&(width / s)) {
                out.push(s);
            }
        }
        match unit.checked_mul(10) {
            Some(u) => unit = u,
            None => break,
        }
    }
    out.sort_unstable();
    out
}

pub fn generate_ticks(scale: &Scale, policy: &TickPolicy) -> Result<TickLayout> {
    let scale_ref = format!("{}({})", scale.function.expr(), scale.function.var());
    if !(policy.min_tick_spacing_mm > 0.0 && policy.min_label_spacing_mm > 0.0) {
        return Err(Error::InvalidInput("tick and label spacing must be positive".into()));
    }
    let generator = Generator::new(scale, policy.min_tick_spacing_mm);

    // Marks inside the domain are kept while they clear each other; the
    // gaps between kept marks (and the bracketing marks outside) are split.
    let mut ends: Vec<Dec> = Vec::new();
    let mut last: Option<f64> = None;
    for mark in generator.marks() {
        match generator.raw_position(mark.value()) {
            None => ends.push(mark),
            Some(p) => {
                if last.is_none_or(|q| (p - q).abs() >= generator.spacing) {
                    ends.push(mark);
                    last = Some(p);
                }
            }
        }
    }
    let mut candidates: Vec<(Dec, u8)> = ends
        .iter()
        .filter(|d| generator.inside(d.value()))
        .map(|d| (*d, 0))
        .collect();
    for w in ends.windows(2) {
        if w[1].value() > generator.lo && w[0].value() < generator.hi {
            generator.split(w[0], w[1], 0, 0, &mut candidates);
        }
    }

    let mut ticks: Vec<Tick> = candidates
        .iter()
        .filter_map(|(d, level)| {
            let value = d.value();
            generator.position(value).map(|pos_mm| Tick {
                pos_mm,
                value,
                level: *level,
                label: None,
            })
        })
        .collect();
    ticks.sort_by(|a, b| a.pos_mm.total_cmp(&b.pos_mm).then(a.level.cmp(&b.level)));
    ticks.dedup_by(|b, a| a.value == b.value);

    let mut majors: Vec<(Anchor, f64)> = candidates
        .iter()
        .filter(|(_, level)| *level == 0)
        .filter_map(|(d, _)| generator.position(d.value()).map(|p| (generator.anchor(*d), p)))
        .collect();
    majors.sort_by(|a, b| a.0.dec.value().total_cmp(&b.0.dec.value()));
    let labeled = generator.thin_labels(&majors, policy.min_label_spacing_mm);
    for tick in ticks.iter_mut().filter(|t| t.level == 0) {
        if let Some(d) = labeled.iter().find(|d| d.value() == tick.value) {
            tick.label = Some(d.label(policy.label_format));
        }
    }

    if ticks.len() < 2 {
        return Err(Error::DegenerateScale(format!(
            "{scale_ref}: only {} tick(s) fit on {} mm",
            ticks.len(),
            scale.length_mm
        )));
    }
    Ok(TickLayout {
        scale_ref,
        length_mm: scale.length_mm,
        ticks,
    })
}
