//! Minimal deterministic SVG line and scatter plots.

use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

#[derive(Clone, Debug)]
pub struct VLine {
    pub x: f64,
    pub label: String,
    pub color: &'static str,
}

#[derive(Clone, Debug, Default)]
pub struct Figure {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub vlines: Vec<VLine>,
    /// Extra text lines under the title.
    pub notes: Vec<String>,
}

pub const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"];

const W: f64 = 640.0;
const H: f64 = 440.0;
const L: f64 = 72.0;
const R: f64 = 20.0;
const T: f64 = 56.0;
const B: f64 = 52.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Rounds to 1e-3 user units; `-0.000` is printed as `0.000`.
fn c(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.3}")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(v: f64, log: bool, step: f64) -> String {
    if log {
        return format!("1e{}", v.round() as i64);
    }
    let dec = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.dec$}");
    if s.trim_start_matches('-').chars().all(|ch| ch == '0' || ch == '.') {
        "0".into()
    } else {
        s
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(vals: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in vals {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
            if hi <= lo {
                hi = lo + 1.0;
            }
        } else {
            if hi - lo < 1e-12 * lo.abs().max(1.0) {
                lo -= 0.5 * lo.abs().max(1.0);
                hi += 0.5 * hi.abs().max(1.0);
            }
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    fn ticks(&self) -> (Vec<f64>, f64) {
        if self.log {
            let n = (self.hi - self.lo).round() as i64;
            let stride = (n / 8 + 1) as f64;
            let mut v = Vec::new();
            let mut t = self.lo;
            while t <= self.hi + 1e-9 {
                v.push(t);
                t += stride;
            }
            return (v, 1.0);
        }
        let step = nice_step(self.hi - self.lo);
        let mut t = (self.lo / step).ceil() * step;
        let mut v = Vec::new();
        while t <= self.hi + 1e-9 * step {
            v.push(t);
            t += step;
        }
        (v, step)
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn tr(v: f64, log: bool) -> Option<f64> {
    let t = if log {
        if v > 0.0 {
            v.log10()
        } else {
            f64::NAN
        }
    } else {
        v
    };
    t.is_finite().then_some(t)
}

impl Figure {
    pub fn render(&self) -> String {
        let pts = |s: &Series| -> Vec<(f64, f64)> {
            s.points.iter().filter_map(|&(x, y)| Some((tr(x, self.log_x)?, tr(y, self.log_y)?))).collect()
        };
        let all: Vec<(f64, f64)> = self.series.iter().flat_map(pts).collect();
        let vx: Vec<f64> = self.vlines.iter().filter_map(|v| tr(v.x, self.log_x)).collect();
        let ax = Axis::new(all.iter().map(|p| p.0).chain(vx.iter().cloned()), self.log_x);
        let ay = Axis::new(all.iter().map(|p| p.1), self.log_y);
        let px = |x: f64| L + ax.frac(x) * (W - L - R);
        let py = |y: f64| H - B - ay.frac(y) * (H - T - B);

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(o, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            o,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            c(W / 2.0),
            esc(&self.title)
        );
        for (i, n) in self.notes.iter().enumerate() {
            let _ = writeln!(
                o,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                c(W / 2.0),
                c(33.0 + 13.0 * i as f64),
                esc(n)
            );
        }
        let _ = writeln!(
            o,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
            c(L),
            c(T),
            c(W - L - R),
            c(H - T - B)
        );
        let (xt, xs) = ax.ticks();
        for t in xt {
            let x = px(t);
            let _ = writeln!(
                o,
                r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#000"/>"##,
                c(x),
                c(H - B),
                c(H - B + 4.0)
            );
            let _ = writeln!(
                o,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                c(x),
                c(H - B + 16.0),
                tick_label(t, ax.log, xs)
            );
        }
        let (yt, ys) = ay.ticks();
        for t in yt {
            let y = py(t);
            let _ =
                writeln!(o, r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#000"/>"##, c(L - 4.0), c(y), c(L));
            let _ = writeln!(
                o,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                c(L - 6.0),
                c(y + 4.0),
                tick_label(t, ay.log, ys)
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            c((L + W - R) / 2.0),
            c(H - 12.0),
            esc(&self.xlabel)
        );
        let _ = writeln!(
            o,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            c((T + H - B) / 2.0),
            esc(&self.ylabel)
        );
        for v in &self.vlines {
            if let Some(x) = tr(v.x, self.log_x) {
                let _ = writeln!(
                    o,
                    r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{3}" stroke-dasharray="6 4"><title>{4}</title></line>"#,
                    c(px(x)),
                    c(T),
                    c(H - B),
                    v.color,
                    esc(&v.label)
                );
            }
        }
        for s in &self.series {
            let p = pts(s);
            match s.style {
                Style::Line | Style::Dashed => {
                    if p.len() < 2 {
                        continue;
                    }
                    let d: Vec<String> = p.iter().map(|&(x, y)| format!("{},{}", c(px(x)), c(py(y)))).collect();
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="5 3""# } else { "" };
                    let _ = writeln!(
                        o,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{} points="{}"/>"#,
                        s.color,
                        dash,
                        d.join(" ")
                    );
                }
                Style::Markers => {
                    for &(x, y) in &p {
                        let _ =
                            writeln!(o, r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#, c(px(x)), c(py(y)), s.color);
                    }
                }
            }
        }
        let n_legend = self.series.iter().filter(|s| !s.label.is_empty()).count();
        if n_legend > 0 {
            let _ = writeln!(
                o,
                r##"<rect x="{}" y="{}" width="154" height="{}" fill="white" fill-opacity="0.85" stroke="#999"/>"##,
                c(W - R - 154.0),
                c(T + 2.0),
                c(14.0 * n_legend as f64 + 4.0)
            );
        }
        for (i, s) in self.series.iter().filter(|s| !s.label.is_empty()).enumerate() {
            let y = T + 14.0 + 14.0 * i as f64;
            let x = W - R - 148.0;
            match s.style {
                Style::Markers => {
                    let _ =
                        writeln!(o, r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#, c(x + 9.0), c(y - 4.0), s.color);
                }
                _ => {
                    let _ = writeln!(
                        o,
                        r#"<line x1="{}" y1="{2}" x2="{}" y2="{2}" stroke="{3}" stroke-width="1.5"/>"#,
                        c(x),
                        c(x + 18.0),
                        c(y - 4.0),
                        s.color
                    );
                }
            }
            let _ = writeln!(o, r#"<text x="{}" y="{}">{}</text>"#, c(x + 24.0), c(y), esc(&s.label));
        }
        o.push_str("</svg>\n");
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> Figure {
        Figure {
            title: "t".into(),
            xlabel: "eps".into(),
            ylabel: "d".into(),
            log_x: true,
            log_y: true,
            series: vec![Series {
                label: "a".into(),
                points: vec![(0.1, 0.3), (0.05, 0.2), (0.0, 1.0), (0.025, f64::NAN)],
                style: Style::Line,
                color: PALETTE[0],
            }],
            ..Default::default()
        }
    }

    #[test]
    fn rendering_is_stable_and_skips_unplottable_points() {
        let a = fig().render();
        assert_eq!(a, fig().render());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 1);
        assert!(!a.contains("NaN") && !a.contains("inf"));
    }

    #[test]
    fn coordinates_have_three_decimals() {
        assert_eq!(c(1.23456), "1.235");
        assert_eq!(c(-0.0001), "0.000");
    }
}
