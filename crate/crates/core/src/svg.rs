//! SVG rendering of a [`ScaleSheet`].
//!
//! Each rule is drawn as a block: stator strip above, slide strip below,
//! both at rest (S₁ over S₂). Coordinates are millimetres scaled by
//! `mm_to_px` and written with three decimals, so identical sheets give
//! identical bytes. Every scale is a `<g>` carrying `data-rule`,
//! `data-scale` and `data-x0` (the strip's left end in px); every tick line
//! carries `data-value`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::sheet::{ScaleSheet, SheetRule, SheetScale, Side};

const MARGIN_MM: f64 = 10.0;
const ROW_MM: f64 = 12.0;
const TITLE_MM: f64 = 7.0;
const BLOCK_GAP_MM: f64 = 8.0;
const TICK_MM: [f64; 3] = [5.0, 3.5, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Colors {
    pub ink: String,
    pub stator: String,
    pub slide: String,
    pub gauge: String,
    pub background: String,
}

impl Default for Colors {
    fn default() -> Self {
        Colors {
            ink: "#1a1a1a".into(),
            stator: "#fbf8ef".into(),
            slide: "#eef3f8".into(),
            gauge: "#b22222".into(),
            background: "#ffffff".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvgStyle {
    pub mm_to_px: f64,
    pub font: String,
    pub font_size_mm: f64,
    pub colors: Colors,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            mm_to_px: 96.0 / 25.4,
            font: "sans-serif".into(),
            font_size_mm: 2.4,
            colors: Colors::default(),
        }
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Canvas<'a> {
    out: String,
    style: &'a SvgStyle,
}

impl Canvas<'_> {
    fn px(&self, mm: f64) -> String {
        let v = mm * self.style.mm_to_px;
        let s = format!("{v:.3}");
        if s == "-0.000" {
            "0.000".into()
        } else {
            s
        }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, extra: &str) {
        let (x1, y1, x2, y2) = (self.px(x1), self.px(y1), self.px(x2), self.px(y2));
        let _ = writeln!(self.out, r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"{extra}/>"#);
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, body: &str) {
        let (x, y) = (self.px(x), self.px(y));
        let _ = writeln!(
            self.out,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" stroke="none">{}</text>"#,
            escape(body)
        );
    }
}

/// Horizontal extent of a rule's strips relative to the common origin.
fn extent(rule: &SheetRule) -> (f64, f64) {
    rule.scales.iter().fold((0.0f64, 0.0f64), |(lo, hi), s| {
        (lo.min(s.placement_mm), hi.max(s.placement_mm + s.length_mm))
    })
}

fn draw_scale(c: &mut Canvas, rule: &SheetRule, scale: &SheetScale, origin_x: f64, top: f64) {
    let left = origin_x + scale.placement_mm;
    let (fill, base, dir) = match scale.side {
        Side::Stator => (&c.style.colors.stator, top + ROW_MM, -1.0),
        Side::Slide => (&c.style.colors.slide, top, 1.0),
    };
    let _ = writeln!(
        c.out,
        r#"<g class="scale" data-rule="{}" data-scale="{}" data-side="{}" data-x0="{}">"#,
        escape(&rule.name),
        scale.role,
        match scale.side {
            Side::Stator => "stator",
            Side::Slide => "slide",
        },
        c.px(left),
    );
    let (x, y, w, h) = (c.px(left), c.px(top), c.px(scale.length_mm), c.px(ROW_MM));
    let _ = writeln!(
        c.out,
        r#"<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="{}" stroke="none"/>"#,
        escape(fill)
    );
    c.line(left, base, left + scale.length_mm, base, "");
    let label_y = base + dir * (TICK_MM[0] + 1.0) + if dir < 0.0 { 0.0 } else { c.style.font_size_mm * 0.8 };
    for tick in &scale.ticks {
        let x = left + tick.pos_mm;
        let len = TICK_MM[tick.level.min(2) as usize];
        let attrs = format!(r#" data-value="{}" data-level="{}""#, tick.value, tick.level);
        c.line(x, base, x, base + dir * len, &attrs);
        if let Some(label) = &tick.label {
            c.text(x, label_y, "middle", label);
        }
    }
    if let Some(label) = &scale.origin_label {
        let x = left + scale.origin_mm();
        c.line(x, base, x, base + dir * TICK_MM[0], r#" class="origin""#);
        c.text(x, label_y, "middle", label);
    }
    let name = format!("{}({})", scale.role, scale.function.var());
    c.text(left - 1.5, top + ROW_MM / 2.0 + c.style.font_size_mm * 0.35, "end", &name);
    for mark in rule.gauge_marks.iter().filter(|g| g.role == scale.role) {
        let x = left + mark.pos_mm;
        let gauge = escape(&c.style.colors.gauge);
        let attrs = format!(r#" class="gauge" stroke="{gauge}" data-value="{}""#, mark.value);
        c.line(x, base, x, base + dir * ROW_MM * 0.85, &attrs);
        let y = base + dir * ROW_MM * 0.85 + if dir < 0.0 { -0.6 } else { c.style.font_size_mm };
        let _ = writeln!(
            c.out,
            r#"<text x="{}" y="{}" text-anchor="middle" stroke="none" fill="{gauge}">{}</text>"#,
            c.px(x),
            c.px(y),
            escape(&mark.label)
        );
    }
    c.out.push_str("</g>\n");
}

pub fn render_svg(sheet: &ScaleSheet, style: &SvgStyle) -> String {
    let (lo, hi) = sheet
        .rules
        .iter()
        .map(extent)
        .fold(None, |acc: Option<(f64, f64)>, (a, b)| {
            Some(acc.map_or((a, b), |(lo, hi)| (lo.min(a), hi.max(b))))
        })
        .unwrap_or((0.0, 0.0));
    let origin_x = MARGIN_MM + 8.0 - lo;
    let width = origin_x + hi + MARGIN_MM;
    let block_height = |r: &SheetRule| TITLE_MM + ROW_MM * r.scales.len() as f64;
    let height = 2.0 * MARGIN_MM
        + sheet.rules.iter().map(block_height).sum::<f64>()
        + BLOCK_GAP_MM * sheet.rules.len().saturating_sub(1) as f64;

    let mut c = Canvas {
        out: String::new(),
        style,
    };
    let (w, h) = (c.px(width), c.px(height));
    c.out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        c.out,
        r#"<rect class="frame" x="0.000" y="0.000" width="{w}" height="{h}" fill="{}" stroke="{}"/>"#,
        escape(&style.colors.background),
        escape(&style.colors.ink)
    );
    let _ = writeln!(
        c.out,
        r#"<g font-family="{}" font-size="{}" stroke="{}" stroke-width="{}" fill="{}">"#,
        escape(&style.font),
        c.px(style.font_size_mm),
        escape(&style.colors.ink),
        c.px(0.15),
        escape(&style.colors.ink)
    );

    let mut top = MARGIN_MM;
    for rule in &sheet.rules {
        let _ = writeln!(c.out, r#"<g class="rule" data-rule="{}">"#, escape(&rule.name));
        c.text(origin_x + lo, top + TITLE_MM - 2.5, "start", &rule.name);
        let mut row = top + TITLE_MM;
        for side in [Side::Stator, Side::Slide] {
            for scale in rule.scales.iter().filter(|s| s.side == side) {
                draw_scale(&mut c, rule, scale, origin_x, row);
                row += ROW_MM;
            }
        }
        c.out.push_str("</g>\n");
        top += block_height(rule) + BLOCK_GAP_MM;
    }
    c.out.push_str("</g>\n</svg>\n");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile_power_rule, default_power_domain};
    use crate::rule::Op;
    use crate::sheet::export_sheet;
    use crate::ticks::TickPolicy;

    fn sheet() -> ScaleSheet {
        let rules: Vec<_> = [-1.0, 2.0]
            .iter()
            .map(|&a| compile_power_rule(a, Op::Plus, default_power_domain(a)).unwrap())
            .collect();
        export_sheet(&rules, 250.0, &TickPolicy::default()).unwrap()
    }

    #[test]
    fn empty_sheet_has_only_the_frame() {
        let svg = render_svg(&ScaleSheet::default(), &SvgStyle::default());
        assert!(svg.contains(r#"class="frame""#));
        assert!(!svg.contains("<line"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn deterministic_and_structured() {
        let style = SvgStyle::default();
        let a = render_svg(&sheet(), &style);
        assert_eq!(a, render_svg(&sheet(), &style));
        assert_eq!(a.matches(r#"class="scale""#).count(), 4);
        assert!(a.contains(">∞</text>"));
        assert!(a.contains(">√2</text>"));
    }

    #[test]
    fn escapes_text() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
