//! Deterministic SVG rendering of a report: a histogram of the standardised
//! statistic with the standard normal density, and a normal QQ plot with a
//! 99% Kolmogorov–Smirnov band.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::harness::{ExperimentReport, REPORT_VERSION};
use crate::stats;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 400.0;
const PANEL: f64 = 380.0;
const MARGIN: f64 = 40.0;
const BINS: usize = 30;

/// One point of the QQ plot with its confidence band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
    pub lower: f64,
    pub upper: f64,
}

/// QQ coordinates of a sample against the standard normal, with the band
/// obtained by shifting plotting positions by the KS critical value.
pub fn qq_points(values: &[f64], alpha: f64) -> Vec<QqPoint> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return Vec::new();
    }
    let half = stats::kolmogorov_critical(alpha) / (m as f64).sqrt();
    let clamp = |p: f64| p.clamp(1e-12, 1.0 - 1e-12);
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = (i as f64 + 0.5) / m as f64;
            QqPoint {
                theoretical: stats::normal_quantile(p),
                sample: x,
                lower: stats::normal_quantile(clamp((i + 1) as f64 / m as f64 - half)),
                upper: stats::normal_quantile(clamp(i as f64 / m as f64 + half)),
            }
        })
        .collect()
}

/// Histogram as `(left edge, width, density)`; a constant sample is one bar.
pub fn histogram(values: &[f64]) -> Vec<(f64, f64, f64)> {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![(lo - 0.5, 1.0, 1.0)];
    }
    let width = (hi - lo) / BINS as f64;
    let mut counts = vec![0usize; BINS];
    for x in &v {
        let b = (((x - lo) / width) as usize).min(BINS - 1);
        counts[b] += 1;
    }
    let total = v.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (lo + i as f64 * width, width, c as f64 / (total * width)))
        .collect()
}

struct Frame {
    x0: f64,
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + MARGIN + (v - self.x_lo) / (self.x_hi - self.x_lo) * (PANEL - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - 2.0 * MARGIN)
    }
    fn axes(&self, out: &mut String, title: &str) {
        let (l, r) = (self.x0 + MARGIN, self.x0 + PANEL - MARGIN);
        let (t, b) = (MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{l:.1},{t:.1} L{l:.1},{b:.1} L{r:.1},{b:.1}" stroke="black" fill="none"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{title}</text>"#,
            (l + r) / 2.0,
            t - 12.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{l:.1}" y="{:.1}" font-size="10">{:.2}</text><text x="{r:.1}" y="{:.1}" font-size="10" text-anchor="end">{:.2}</text>"#,
            b + 14.0,
            self.x_lo,
            b + 14.0,
            self.x_hi
        );
    }
}

/// Render the statistic of the largest sample size in the report.
pub fn render_report(report: &ExperimentReport) -> Result<String> {
    if report.report_version != REPORT_VERSION {
        return Err(Error::Schema(format!(
            "report_version {} (supported: {REPORT_VERSION})",
            report.report_version
        )));
    }
    let (label, values) = match report.summaries.last() {
        Some(s) => (format!("n = {}", s.n), s.statistic.clone()),
        None => (String::from("no replications"), Vec::new()),
    };
    Ok(render_values(&label, &values))
}

pub fn render_values(label: &str, values: &[f64]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let bars = histogram(values);
    if bars.is_empty() {
        let frame = Frame {
            x0: 0.0,
            x_lo: -4.0,
            x_hi: 4.0,
            y_lo: 0.0,
            y_hi: 0.5,
        };
        frame.axes(&mut out, "histogram");
        let qq = Frame { x0: PANEL + 2.0 * MARGIN, ..frame };
        qq.axes(&mut out, "normal QQ");
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="18">no data</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    }

    let x_lo = bars[0].0.min(-4.0);
    let x_hi = (bars[bars.len() - 1].0 + bars[bars.len() - 1].1).max(4.0);
    let y_hi = bars.iter().map(|b| b.2).fold(stats::normal_pdf(0.0), f64::max) * 1.05;
    let hist = Frame {
        x0: 0.0,
        x_lo,
        x_hi,
        y_lo: 0.0,
        y_hi,
    };
    hist.axes(&mut out, &format!("histogram, {label}"));
    for &(left, w, dens) in &bars {
        if dens == 0.0 {
            continue;
        }
        let (x1, x2) = (hist.x(left), hist.x(left + w));
        let (y1, y0) = (hist.y(dens), hist.y(0.0));
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{x1:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd"/>"##,
            (x2 - x1).max(0.5),
            y0 - y1
        );
    }
    let mut curve = String::new();
    for i in 0..=200 {
        let x = x_lo + (x_hi - x_lo) * i as f64 / 200.0;
        let _ = write!(
            curve,
            "{}{:.2},{:.2} ",
            if i == 0 { "M" } else { "L" },
            hist.x(x),
            hist.y(stats::normal_pdf(x))
        );
    }
    let _ = writeln!(out, r##"<path class="normal" d="{}" stroke="#de2d26" fill="none"/>"##, curve.trim_end());

    let pts = qq_points(values, 0.01);
    let lim = pts
        .iter()
        .flat_map(|p| [p.theoretical.abs(), p.sample.abs()])
        .fold(3.0, f64::max)
        .min(50.0);
    let qq = Frame {
        x0: PANEL + 2.0 * MARGIN,
        x_lo: -lim,
        x_hi: lim,
        y_lo: -lim,
        y_hi: lim,
    };
    qq.axes(&mut out, "normal QQ, 99% KS band");
    let clip = |v: f64| v.clamp(-lim, lim);
    let band = |f: &dyn Fn(&QqPoint) -> f64| {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            let _ = write!(
                s,
                "{}{:.2},{:.2} ",
                if i == 0 { "M" } else { "L" },
                qq.x(clip(p.theoretical)),
                qq.y(clip(f(p)))
            );
        }
        s
    };
    for (name, path) in [("lower", band(&|p| p.lower)), ("upper", band(&|p| p.upper))] {
        let _ = writeln!(
            out,
            r##"<path class="band-{name}" d="{}" stroke="#999999" stroke-dasharray="4 3" fill="none"/>"##,
            path.trim_end()
        );
    }
    let _ = writeln!(
        out,
        r##"<path d="M{:.2},{:.2} L{:.2},{:.2}" stroke="#de2d26" fill="none"/>"##,
        qq.x(-lim),
        qq.y(-lim),
        qq.x(lim),
        qq.y(lim)
    );
    for p in &pts {
        let _ = writeln!(
            out,
            r##"<circle class="qq" cx="{:.2}" cy="{:.2}" r="1.5" fill="#3182bd"/>"##,
            qq.x(clip(p.theoretical)),
            qq.y(clip(p.sample))
        );
    }
    out.push_str("</svg>\n");
    out
}
