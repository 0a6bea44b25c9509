//! CSV tables and SVG plots.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;
use crate::trainer::TraceEntry;

/// `iter,energy,grad_norm`, one row per iteration.
pub fn write_trace<W: Write>(mut out: W, trace: &[TraceEntry]) -> Result<()> {
    writeln!(out, "iter,energy,grad_norm")?;
    for t in trace {
        writeln!(out, "{},{:.17e},{:.17e}", t.iter, t.energy, t.grad_norm)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionRow {
    pub x: f64,
    pub psi_net_raw: f64,
    pub psi_reconstructed: f64,
    pub psi_oracle: f64,
}

pub fn write_wavefunction<W: Write>(mut out: W, rows: &[WavefunctionRow]) -> Result<()> {
    writeln!(out, "x,psi_net_raw,psi_reconstructed,psi_oracle")?;
    for r in rows {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            r.x, r.psi_net_raw, r.psi_reconstructed, r.psi_oracle
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Minimal CSV table with a fixed header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Full-precision float for CSV cells.
pub fn num(v: f64) -> String {
    format!("{v:.17e}")
}

pub struct Curve<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub ys: &'a [f64],
}

/// Line plot of curves sharing the abscissa `xs`, with axes and labels.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, xs: &[f64], curves: &[Curve<'_>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;

    let finite = |v: &f64| v.is_finite();
    let (x0, x1) = bounds(xs.iter().copied().filter(finite));
    let (mut y0, mut y1) = bounds(curves.iter().flat_map(|c| c.ys.iter().copied().filter(finite)));
    y0 = y0.min(0.0);
    let pad = 0.05 * (y1 - y0).max(1e-12);
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0).max(1e-300) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0).max(1e-300) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (ax0, ay0, ax1, ay1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
    let _ = writeln!(
        s,
        r#"<g id="axes" stroke="black" stroke-width="1">
<line x1="{ax0}" y1="{ay0}" x2="{ax1}" y2="{ay0}"/>
<line x1="{ax0}" y1="{ay0}" x2="{ax0}" y2="{ay1}"/>
</g>"#
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            sx(fx),
            ay0 + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            ax0 - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text id="x-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>
<text id="y-label" x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (ax0 + ax1) / 2.0,
        H - 16.0,
        escape(x_label),
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0,
        escape(y_label)
    );
    for (k, c) in curves.iter().enumerate() {
        let points: Vec<String> = xs
            .iter()
            .zip(c.ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if c.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline class="curve" fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#,
            c.color,
            points.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"{dash}/>
<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            ax1 - 150.0,
            ax1 - 120.0,
            c.color,
            ax1 - 114.0,
            ly + 4.0,
            escape(c.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
