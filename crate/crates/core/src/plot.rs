//! Static SVG figures from episode logs. Output depends only on the input
//! rows, so the same log always renders to the same bytes.

use std::fmt::Write;

use crate::eval::LogRow;
use crate::hand::model::{N_ACTUATED, N_FINGERS};

const REF_COLOR: &str = "#d62728";
const ACT_COLOR: &str = "#1f77b4";
const SERIES: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    fn of(points: impl Iterator<Item = (f64, f64)>) -> Option<Self> {
        let mut b: Option<Bounds> = None;
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            b = Some(match b {
                None => Bounds { xmin: x, xmax: x, ymin: y, ymax: y },
                Some(b) => Bounds { xmin: b.xmin.min(x), xmax: b.xmax.max(x), ymin: b.ymin.min(y), ymax: b.ymax.max(y) },
            });
        }
        b
    }

    fn padded(self) -> Self {
        let px = ((self.xmax - self.xmin) * 0.05).max(1e-6);
        let py = ((self.ymax - self.ymin) * 0.05).max(1e-6);
        Bounds { xmin: self.xmin - px, xmax: self.xmax + px, ymin: self.ymin - py, ymax: self.ymax + py }
    }

    fn square(self) -> Self {
        let cx = 0.5 * (self.xmin + self.xmax);
        let cy = 0.5 * (self.ymin + self.ymax);
        let h = 0.5 * (self.xmax - self.xmin).max(self.ymax - self.ymin);
        Bounds { xmin: cx - h, xmax: cx + h, ymin: cy - h, ymax: cy + h }
    }
}

/// Bounds of the reference lower-endpoint trace (m).
pub fn reference_bounds(rows: &[LogRow]) -> Option<Bounds> {
    Bounds::of(rows.iter().map(|r| (r.ref_lower[0], r.ref_lower[1])))
}

/// Bounds of both lower-endpoint traces (m), before padding.
pub fn xy_bounds(rows: &[LogRow]) -> Option<Bounds> {
    Bounds::of(rows.iter().flat_map(|r| [(r.ref_lower[0], r.ref_lower[1]), (r.act_lower[0], r.act_lower[1])]))
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
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

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axes {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    b: Bounds,
    /// Tick labels show data × this factor.
    xscale: f64,
    yscale: f64,
}

impl Axes {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = self.x0 + (x - self.b.xmin) / (self.b.xmax - self.b.xmin) * self.w;
        let py = self.y0 + self.h - (y - self.b.ymin) / (self.b.ymax - self.b.ymin) * self.h;
        (px, py)
    }

    fn frame(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(svg, r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000" stroke-width="1"/>"##, self.x0, self.y0, self.w, self.h);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#, self.x0 + self.w / 2.0, self.y0 - 8.0, esc(title));
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#, self.x0 + self.w / 2.0, self.y0 + self.h + 34.0, esc(xlabel));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            self.x0 - 46.0,
            self.y0 + self.h / 2.0,
            self.x0 - 46.0,
            self.y0 + self.h / 2.0,
            esc(ylabel)
        );
        let sx = nice_step((self.b.xmax - self.b.xmin) * self.xscale);
        let mut v = (self.b.xmin * self.xscale / sx).ceil() * sx;
        while v <= self.b.xmax * self.xscale + 1e-12 {
            let (px, py) = self.map(v / self.xscale, self.b.ymin);
            let _ = writeln!(svg, r##"<line x1="{px:.2}" y1="{py:.2}" x2="{px:.2}" y2="{:.2}" stroke="#000"/>"##, py + 4.0);
            let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#, py + 16.0, fmt_tick(v, sx));
            v += sx;
        }
        let sy = nice_step((self.b.ymax - self.b.ymin) * self.yscale);
        let mut v = (self.b.ymin * self.yscale / sy).ceil() * sy;
        while v <= self.b.ymax * self.yscale + 1e-12 {
            let (px, py) = self.map(self.b.xmin, v / self.yscale);
            let _ = writeln!(svg, r##"<line x1="{:.2}" y1="{py:.2}" x2="{px:.2}" y2="{py:.2}" stroke="#000"/>"##, px - 4.0);
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#, px - 6.0, py + 3.5, fmt_tick(v, sy));
            v += sy;
        }
    }

    /// Polyline broken at non-finite points.
    fn line(&self, svg: &mut String, pts: &[(f64, f64)], color: &str) {
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, svg: &mut String| {
            if run.len() >= 2 {
                let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, run.join(" "));
            } else if run.len() == 1 {
                let xy: Vec<&str> = run[0].split(',').collect();
                let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="1.5" fill="{color}"/>"#, xy[0], xy[1]);
            }
            run.clear();
        };
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() {
                let (px, py) = self.map(x, y);
                run.push(format!("{px:.2},{py:.2}"));
            } else {
                flush(&mut run, svg);
            }
        }
        flush(&mut run, svg);
    }

    fn legend(&self, svg: &mut String, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = self.y0 + 14.0 + 14.0 * i as f64;
            let x = self.x0 + self.w - 110.0;
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, x + 18.0);
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#, x + 22.0, y + 3.5, esc(label));
        }
    }
}

fn header(w: f64, h: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#);
    let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#fff"/>"##);
    s
}

fn warning(svg: &mut String, ax: &Axes) {
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14" fill="#b00">warning: empty episode log</text>"##,
        ax.x0 + ax.w / 2.0,
        ax.y0 + ax.h / 2.0
    );
}

const DEFAULT_BOUNDS: Bounds = Bounds { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 };

/// Lower-endpoint X-Y trace: reference vs actual, equal axes, in cm.
pub fn xy_trace_svg(rows: &[LogRow]) -> String {
    let mut svg = header(520.0, 520.0);
    let b = xy_bounds(rows).map(|b| b.padded().square()).unwrap_or(DEFAULT_BOUNDS);
    let ax = Axes { x0: 70.0, y0: 40.0, w: 420.0, h: 420.0, b, xscale: 100.0, yscale: 100.0 };
    ax.frame(&mut svg, "Lower endpoint trajectory", "x (cm)", "y (cm)");
    if rows.is_empty() {
        warning(&mut svg, &ax);
    } else {
        let r: Vec<(f64, f64)> = rows.iter().map(|r| (r.ref_lower[0], r.ref_lower[1])).collect();
        let a: Vec<(f64, f64)> = rows.iter().map(|r| (r.act_lower[0], r.act_lower[1])).collect();
        ax.line(&mut svg, &r, REF_COLOR);
        ax.line(&mut svg, &a, ACT_COLOR);
        ax.legend(&mut svg, &[("reference", REF_COLOR), ("actual", ACT_COLOR)]);
    }
    svg.push_str("</svg>\n");
    svg
}

fn time_bounds(rows: &[LogRow], values: impl Iterator<Item = f64>) -> Bounds {
    let vals: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if rows.is_empty() || vals.is_empty() {
        return DEFAULT_BOUNDS;
    }
    let tmin = rows.first().map(|r| r.t).unwrap_or(0.0);
    let tmax = rows.last().map(|r| r.t).unwrap_or(1.0).max(tmin + 1e-6);
    let ymin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let b = Bounds { xmin: tmin, xmax: tmax, ymin, ymax }.padded();
    Bounds { xmin: tmin, xmax: tmax, ..b }
}

/// Actuated joint angles over time (deg).
pub fn joint_timelines_svg(rows: &[LogRow]) -> String {
    let mut svg = header(720.0, 380.0);
    let b = time_bounds(rows, rows.iter().flat_map(|r| r.q.iter().copied()));
    let ax = Axes { x0: 70.0, y0: 40.0, w: 600.0, h: 280.0, b, xscale: 1.0, yscale: 180.0 / std::f64::consts::PI };
    ax.frame(&mut svg, "Joint positions", "t (s)", "angle (deg)");
    if rows.is_empty() {
        warning(&mut svg, &ax);
    } else {
        let names: Vec<String> = (0..N_ACTUATED).map(|i| format!("q{i}")).collect();
        for i in 0..N_ACTUATED {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.q[i])).collect();
            ax.line(&mut svg, &pts, SERIES[i]);
        }
        let entries: Vec<(&str, &str)> = names.iter().map(|n| n.as_str()).zip(SERIES).collect();
        ax.legend(&mut svg, &entries);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-finger contact-center coordinates over time (mm, pad frame). Gaps mark
/// frames without contact.
pub fn contact_timelines_svg(rows: &[LogRow]) -> String {
    let panel_h = 170.0;
    let mut svg = header(720.0, 60.0 + N_FINGERS as f64 * (panel_h + 60.0));
    for f in 0..N_FINGERS {
        let b = time_bounds(rows, rows.iter().flat_map(|r| r.centers[f].iter().copied()));
        let ax = Axes { x0: 70.0, y0: 40.0 + f as f64 * (panel_h + 60.0), w: 600.0, h: panel_h, b, xscale: 1.0, yscale: 1000.0 };
        ax.frame(&mut svg, &format!("Finger {} contact center", f + 1), "t (s)", "position (mm)");
        if rows.is_empty() {
            warning(&mut svg, &ax);
            continue;
        }
        for k in 0..3 {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, if r.valid[f] { r.centers[f][k] } else { f64::NAN })).collect();
            ax.line(&mut svg, &pts, SERIES[k]);
        }
        ax.legend(&mut svg, &[("x", SERIES[0]), ("y", SERIES[1]), ("z", SERIES[2])]);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_rows(r: f64) -> Vec<LogRow> {
        (0..100)
            .map(|i| {
                let t = i as f64 * 0.02;
                let a = std::f64::consts::PI * t;
                LogRow {
                    t,
                    reward: 0.0,
                    p_err_lower: 0.0,
                    p_err_upper: 0.0,
                    q_err_deg: 0.0,
                    ref_lower: [r * a.cos(), r * a.sin()],
                    act_lower: [0.9 * r * a.cos(), 0.9 * r * a.sin()],
                    q: [0.5; 6],
                    centers: [[0.001, 0.002, 0.0]; 3],
                    valid: [i % 10 != 0; 3],
                    action: [0.0; 6],
                }
            })
            .collect()
    }

    #[test]
    fn circle_reference_spans_its_radius() {
        let b = reference_bounds(&circle_rows(0.02)).unwrap();
        assert!((b.xmax - 0.02).abs() < 1e-3 && (b.xmin + 0.02).abs() < 1e-3);
        assert!((b.ymax - 0.02).abs() < 1e-3 && (b.ymin + 0.02).abs() < 1e-3);
    }

    #[test]
    fn rendering_is_deterministic() {
        let rows = circle_rows(0.02);
        assert_eq!(xy_trace_svg(&rows), xy_trace_svg(&rows));
        assert_eq!(contact_timelines_svg(&rows), contact_timelines_svg(&rows.clone()));
        assert!(xy_trace_svg(&rows).contains(REF_COLOR));
    }

    #[test]
    fn empty_log_gets_a_warning() {
        for svg in [xy_trace_svg(&[]), joint_timelines_svg(&[]), contact_timelines_svg(&[])] {
            assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
            assert!(svg.contains("warning: empty episode log"));
            assert!(!svg.contains("polyline"));
        }
    }

    #[test]
    fn ticks() {
        assert_eq!(nice_step(4.0), 1.0);
        assert_eq!(nice_step(0.04), 0.01);
        assert_eq!(fmt_tick(-0.0001, 0.01), "0.00");
    }
}
