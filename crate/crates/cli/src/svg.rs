//! Rect-grid heatmaps: p_a along the horizontal axis, p_b upwards.

use std::fmt::Write;

use towbandit::SweepRecord64;

use crate::output::fmt_sig;

const MARGIN: usize = 48;
const PLOT: usize = 600;

pub type Rgb = (u8, u8, u8);

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// White to dark blue over `t ∈ [0, 1]`.
pub fn sequential(t: f64) -> Rgb {
    lerp((247, 251, 255), (8, 48, 107), t)
}

/// Blue below 0, white at 0, red above; `v` is clipped to `[-1, 1]`.
pub fn diverging(v: f64) -> Rgb {
    if v < 0.0 {
        lerp((255, 255, 255), (33, 102, 172), -v)
    } else {
        lerp((255, 255, 255), (178, 24, 43), v)
    }
}

fn level_index(levels: &[f64], p: f64) -> Option<usize> {
    levels.iter().position(|&l| (l - p).abs() < 1e-9)
}

pub fn render(
    records: &[SweepRecord64],
    levels: &[f64],
    title: &str,
    value: impl Fn(&SweepRecord64) -> f64,
    color: impl Fn(f64) -> Rgb,
) -> String {
    let n = levels.len().max(1);
    let cell = (PLOT / n).max(2);
    let side = cell * n;
    let width = MARGIN * 2 + side;
    let height = MARGIN * 2 + side;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
        width / 2,
        MARGIN / 2
    );
    for r in records {
        let (Some(i), Some(j)) = (level_index(levels, r.p_a), level_index(levels, r.p_b)) else {
            continue;
        };
        let v = value(r);
        let (red, green, blue) = color(v);
        let x = MARGIN + i * cell;
        let y = MARGIN + side - (j + 1) * cell;
        let _ = writeln!(
            s,
            r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="#{red:02x}{green:02x}{blue:02x}"><title>p_a={} p_b={} value={}</title></rect>"##,
            fmt_sig(r.p_a),
            fmt_sig(r.p_b),
            fmt_sig(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{side}" height="{side}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">p_a</text>"#,
        MARGIN + side / 2,
        height - MARGIN / 3
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 {} {})">p_b</text>"#,
        MARGIN / 2,
        MARGIN + side / 2,
        MARGIN / 2,
        MARGIN + side / 2
    );
    s.push_str("</svg>\n");
    s
}

/// Sequential map of `max_cdr`, normalised to the observed range.
pub fn max_cdr(records: &[SweepRecord64], levels: &[f64]) -> String {
    let lo = records
        .iter()
        .map(|r| r.max_cdr)
        .fold(f64::INFINITY, f64::min);
    let hi = records
        .iter()
        .map(|r| r.max_cdr)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let title = format!("max CDR ({} to {})", fmt_sig(lo), fmt_sig(hi));
    render(
        records,
        levels,
        &title,
        |r| r.max_cdr,
        |v| sequential((v - lo) / span),
    )
}

/// Diverging map of `lambda_m` centred at 0.
pub fn lambda_m(records: &[SweepRecord64], levels: &[f64]) -> String {
    render(
        records,
        levels,
        "argmax lambda (-1 to 1)",
        |r| r.lambda_m,
        diverging,
    )
}
