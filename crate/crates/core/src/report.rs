//! CSV tables and SVG line plots for experiment output.

use std::fmt::Write as _;
use std::path::Path;

use crate::equations::ResidualReport;
use crate::error::Result;
use crate::nevanlinna::GrowthReport;

pub fn residual_csv(rep: &ResidualReport) -> String {
    let mut out = String::from("z_re,z_im,residual_re,residual_im,scale,relative\n");
    for ((z, r), s) in rep.grid.iter().zip(&rep.residuals).zip(&rep.scales) {
        let _ = writeln!(out, "{},{},{},{},{},{}", z.re, z.im, r.re, r.im, s, r.norm() / s);
    }
    out
}

pub fn growth_csv(rep: &GrowthReport) -> String {
    let mut out = String::from("r,T1,T2,ratio\n");
    for row in &rep.rows {
        let _ = writeln!(out, "{},{},{},{}", row.r, row.t1, row.t2, row.ratio);
    }
    out
}

/// Writes `content` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: AxisScale,
    pub y_scale: AxisScale,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    scale: AxisScale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(scale: AxisScale, values: impl Iterator<Item = f64>) -> Axis {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let v = match scale {
                AxisScale::Linear => v,
                AxisScale::Log => v.log10(),
            };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { scale, lo, hi }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = match self.scale {
            AxisScale::Linear => v,
            AxisScale::Log => v.log10(),
        };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|k| {
                let t = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
                let label = match self.scale {
                    AxisScale::Linear => format!("{t:.3}"),
                    AxisScale::Log => format!("1e{t:.1}"),
                };
                (k as f64 / 4.0, label)
            })
            .collect()
    }
}

fn usable(scale: AxisScale, v: f64) -> bool {
    v.is_finite() && (scale == AxisScale::Linear || v > 0.0)
}

impl Plot {
    /// Renders the plot. Points that cannot be drawn on the chosen axes
    /// (non-finite, or non-positive on a log axis) are skipped.
    pub fn to_svg(&self) -> String {
        let pts = |s: &Series| -> Vec<(f64, f64)> {
            s.points
                .iter()
                .copied()
                .filter(|&(x, y)| usable(self.x_scale, x) && usable(self.y_scale, y))
                .collect()
        };
        let all: Vec<(f64, f64)> = self.series.iter().flat_map(pts).collect();
        let xa = Axis::fit(self.x_scale, all.iter().map(|p| p.0));
        let ya = Axis::fit(self.y_scale, all.iter().map(|p| p.1));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + pw * xa.unit(x);
        let sy = |y: f64| TOP + ph * (1.0 - ya.unit(y));

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for (u, label) in xa.ticks() {
            let x = LEFT + pw * u;
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"##,
                TOP,
                TOP + ph,
                TOP + ph + 16.0
            );
        }
        for (u, label) in ya.ticks() {
            let y = TOP + ph * (1.0 - u);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let path: Vec<String> = pts(series)
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if !path.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
                    path.join(" ")
                );
            }
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let lx = LEFT + pw - 150.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 18.0,
                lx + 24.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(scale: AxisScale) -> Plot {
        Plot {
            title: "T(r) & ratio".into(),
            x_label: "r".into(),
            y_label: "T".into(),
            x_scale: scale,
            y_scale: scale,
            series: vec![Series {
                label: "a<b".into(),
                points: vec![(1.0, 2.0), (10.0, 20.0), (100.0, 0.0), (f64::NAN, 1.0)],
            }],
        }
    }

    #[test]
    fn svg_is_well_formed_and_deterministic() {
        let s = plot(AxisScale::Log).to_svg();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("T(r) &amp; ratio") && s.contains("a&lt;b"));
        assert_eq!(s, plot(AxisScale::Log).to_svg());
        // The zero and NaN points are dropped on log axes.
        let line = s.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), 2);
        let lin = plot(AxisScale::Linear).to_svg();
        let line = lin.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), 3);
    }

    #[test]
    fn empty_plot_renders() {
        let mut p = plot(AxisScale::Linear);
        p.series.clear();
        assert!(p.to_svg().contains("</svg>"));
    }
}
