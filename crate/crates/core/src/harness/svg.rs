use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bounds::{terms_at, SHAPE_ONLY};
use crate::numfmt::format_sig;
use crate::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn solid(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub log_x: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            title: "Cumulative regret".to_string(),
            log_x: false,
            width: 800,
            height: 500,
        }
    }
}

/// Shape-only expected-regret bound evaluated at each `t` with `q` fixed.
pub fn bound_overlay(k: usize, q: f64, delta_min: f64, gaps: &[f64], ts: &[f64]) -> Series {
    let points = ts
        .iter()
        .filter(|&&t| t >= 1.0)
        .map(|&t| (t, terms_at(k, q, t, delta_min, gaps).total()))
        .collect();
    Series::dashed(format!("bound ({SHAPE_ONLY})"), points)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(series: &[Series], opts: &PlotOptions) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Usage("nothing to plot".into()));
    }
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let (w, h) = (opts.width as f64, opts.height as f64);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let xform = |x: f64| if opts.log_x { x.max(1.0).log10() } else { x };
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xs = all().map(|p| xform(p.0));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let y1 = all().map(|p| p.1).fold(0.0, f64::max);
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let y1 = if y1 > 0.0 { y1 * 1.05 } else { 1.0 };
    let px = |x: f64| left + (xform(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + ph - (y / y1) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(&opts.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );

    for i in 0..=5 {
        let y = y1 * i as f64 / 5.0;
        let yy = py(y);
        let _ = writeln!(
            out,
            r##"<line x1="{left}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            left + pw,
            left - 6.0,
            yy + 4.0,
            format_sig(y, 4)
        );
    }
    let x_ticks: Vec<f64> = if opts.log_x {
        (x0.ceil() as i32..=x1.floor() as i32).map(|e| 10f64.powi(e)).collect()
    } else {
        (0..=5).map(|i| x0 + (x1 - x0) * i as f64 / 5.0).collect()
    };
    for x in x_ticks {
        let xx = px(x);
        let _ = writeln!(
            out,
            r##"<line x1="{xx:.1}" y1="{top}" x2="{xx:.1}" y2="{:.1}" stroke="#ddd"/><text x="{xx:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 18.0,
            format_sig(x, 4)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t{}</text>"#,
        left + pw / 2.0,
        h - 10.0,
        if opts.log_x { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">R(t)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite() && (!opts.log_x || p.0 >= 1.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y.min(y1))))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.8"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 + 16.0 * idx as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            left + 10.0,
            left + 34.0,
            left + 40.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(series: &[Series], opts: &PlotOptions, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_svg(series, opts)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
