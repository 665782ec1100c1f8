//! Minimal SVG line and band plots.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub color: &'static str,
    pub dashed: bool,
    /// Draw markers instead of a line.
    pub points: bool,
}

impl Series {
    pub fn line(label: &str, x: &[f64], y: &[f64], color: &'static str) -> Self {
        Self {
            label: label.to_string(),
            x: x.to_vec(),
            y: y.to_vec(),
            color,
            dashed: false,
            points: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn points(mut self) -> Self {
        self.points = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Band {
    pub label: String,
    pub x: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub y_range: Option<(f64, f64)>,
    pub x_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            ..Self::default()
        }
    }

    fn extent(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for (&x, &y) in s.x.iter().zip(&s.y) {
                if x.is_finite() && y.is_finite() {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        for b in &self.bands {
            for ((&x, &l), &h) in b.x.iter().zip(&b.lo).zip(&b.hi) {
                if x.is_finite() && l.is_finite() && h.is_finite() {
                    xs.push(x);
                    ys.push(l);
                    ys.push(h);
                }
            }
        }
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        (self.x_range.unwrap_or_else(|| span(&xs)), self.y_range.unwrap_or_else(|| span(&ys)))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.extent();
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (1.0 - (y.clamp(y0, y1) - y0) / (y1 - y0)) * ph;
        let inside = |x: f64| x >= x0 && x <= x1;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            esc(&self.title)
        );

        for t in ticks(x0, x1) {
            let x = px(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e6e6e6"/>"##,
                TOP + ph
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e6e6e6"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            esc(&self.xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.ylabel)
        );

        let mut legend: Vec<(String, &str, bool, f64)> = Vec::new();
        for b in &self.bands {
            for seg in segments(b.x.len(), |i| {
                inside(b.x[i]) && b.lo[i].is_finite() && b.hi[i].is_finite()
            }) {
                if seg.len() < 2 {
                    continue;
                }
                let mut pts = String::new();
                for &i in &seg {
                    let _ = write!(pts, "{:.2},{:.2} ", px(b.x[i]), py(b.hi[i]));
                }
                for &i in seg.iter().rev() {
                    let _ = write!(pts, "{:.2},{:.2} ", px(b.x[i]), py(b.lo[i]));
                }
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                    pts.trim_end(),
                    b.color
                );
            }
            legend.push((b.label.clone(), b.color, false, 0.2));
        }
        for ser in &self.series {
            let ok = |i: usize| inside(ser.x[i]) && ser.y[i].is_finite();
            if ser.points {
                for i in (0..ser.x.len()).filter(|&i| ok(i)) {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="{}"/>"#,
                        px(ser.x[i]),
                        py(ser.y[i]),
                        ser.color
                    );
                }
            } else {
                let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
                for seg in segments(ser.x.len(), ok) {
                    let pts: Vec<String> = seg
                        .iter()
                        .map(|&i| format!("{:.2},{:.2}", px(ser.x[i]), py(ser.y[i])))
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
                        pts.join(" "),
                        ser.color
                    );
                }
            }
            legend.push((ser.label.clone(), ser.color, ser.dashed, 1.0));
        }

        let lx = LEFT + pw + 12.0;
        for (i, (label, color, dashed, opacity)) in legend.iter().enumerate() {
            let y = TOP + 10.0 + 18.0 * i as f64;
            if *opacity < 1.0 {
                let _ = writeln!(
                    s,
                    r#"<rect x="{lx:.2}" y="{:.2}" width="22" height="10" fill="{color}" fill-opacity="{opacity}"/>"#,
                    y - 5.0
                );
            } else {
                let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(
                    s,
                    r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                    lx + 22.0
                );
            }
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 28.0, y + 4.0, esc(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Maximal runs of consecutive indices where `ok` holds.
fn segments(n: usize, ok: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for i in 0..n {
        if ok(i) {
            cur.push(i);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
