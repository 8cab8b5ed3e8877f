use std::fmt::Write as _;
use std::path::Path;

use super::{theory_value, EstimatorReport, GridReport};
use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, Symbol};

pub const SIMULATION_HEADER: &str = "symbol,k,N,center_re,center_im,R,sample_mean,sample_std,theory,regime,z_score";

fn center_fields(c: ChartPoint) -> (String, String) {
    match c {
        ChartPoint::Finite(z) => (format!("{:?}", z.re), format!("{:?}", z.im)),
        ChartPoint::Infinity => ("inf".into(), "inf".into()),
    }
}

pub fn simulation_csv(reports: &[EstimatorReport]) -> String {
    let mut out = String::from(SIMULATION_HEADER);
    out.push('\n');
    for r in reports {
        let (re, im) = center_fields(r.center);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:?},{:?},{:?},{:?},{},{:?}",
            r.symbol, r.k, r.n, re, im, r.r, r.sample_mean, r.sample_std, r.theory, r.regime, r.z_score
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_simulation_csv(path: &Path, reports: &[EstimatorReport]) -> Result<()> {
    write_file(path, &simulation_csv(reports))
}

/// Matrix of `𝓔`: the first row lists `Re z` of the columns, each following
/// row starts with its `Im z` (increasing).
pub fn grid_csv(report: &GridReport) -> String {
    let n = report.n;
    let mut out = String::from("im\\re");
    for ix in 0..n {
        let re = report.cell_center(ix, 0).finite().expect("finite").re;
        let _ = write!(out, ",{re:?}");
    }
    out.push('\n');
    for iy in 0..n {
        let im = report.cell_center(0, iy).finite().expect("finite").im;
        let _ = write!(out, "{im:?}");
        for ix in 0..n {
            let _ = write!(out, ",{:?}", report.mean[iy * n + ix]);
        }
        out.push('\n');
    }
    out
}

pub fn write_grid_csv(path: &Path, report: &GridReport) -> Result<()> {
    write_file(path, &grid_csv(report))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// `𝓔` against `R` with ±2 standard errors and the leading-order theory
/// curve, one color per center.
pub fn plot_svg(reports: &[EstimatorReport], symbol: &Symbol) -> Result<String> {
    let mut groups: Vec<(ChartPoint, Vec<&EstimatorReport>)> = Vec::new();
    for r in reports {
        match groups.iter_mut().find(|(c, _)| *c == r.center) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.center, vec![r])),
        }
    }
    let k = reports.first().map_or(1, |r| r.k);
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (0.0f64, 0.0f64);
    let mut curves = Vec::new();
    for r in reports {
        rmin = rmin.min(r.r);
        rmax = rmax.max(r.r);
        let se = 2.0 * r.std_error();
        ymin = ymin.min(r.sample_mean - se).min(r.theory);
        ymax = ymax.max(r.sample_mean + se).max(r.theory);
    }
    if !rmin.is_finite() {
        rmin = 0.0;
        rmax = 1.0;
    }
    let (r0, r1) = (0.0f64.min(rmin), rmax.max(rmin + 1e-9));
    for (center, _) in &groups {
        let pts: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let r = r0 + (r1 - r0) * i as f64 / 200.0;
                let r = r.max(1e-9);
                theory_value(symbol, *center, r, k).map(|(v, _)| (r, v))
            })
            .collect::<Result<_>>()?;
        for &(_, v) in &pts {
            ymin = ymin.min(v);
            ymax = ymax.max(v);
        }
        curves.push(pts);
    }
    let pad = 0.05 * (ymax - ymin).max(1e-6);
    let (y0, y1) = (ymin - pad, ymax + pad);
    let sx = |r: f64| MARGIN + (r - r0) / (r1 - r0) * (WIDTH - 1.5 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 1.5 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (xa, ya) = (sx(r0), sy(y0));
    let _ = writeln!(
        svg,
        r#"<path d="M{xa:.2},{:.2} V{ya:.2} H{:.2}" stroke="black" fill="none"/>"#,
        sy(y1),
        sx(r1)
    );
    for t in nice_ticks(r0, r1) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{ya:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            ya + 5.0,
            ya + 18.0
        );
    }
    for t in nice_ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{xa:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            xa - 5.0,
            xa - 8.0,
            y + 4.0,
            format_tick(t)
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{xa:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#bbbbbb"/>"##,
            sy(0.0),
            sx(r1)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">R</text>"#,
        0.5 * (xa + sx(r1)),
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">excess zeros</text>"#,
        0.5 * (ya + sy(y1)),
        0.5 * (ya + sy(y1))
    );
    let title = format!("{} k={} N={}", symbol.name(), k, reports.first().map_or(0, |r| r.n));
    let _ = writeln!(svg, r#"<text x="{:.2}" y="20" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);

    for (gi, ((center, rows), curve)) in groups.iter().zip(&curves).enumerate() {
        let color = COLORS[gi % COLORS.len()];
        let mut d = String::new();
        for (i, &(r, v)) in curve.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(r), sy(v));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" stroke="{color}" stroke-dasharray="6,4" fill="none"/>"#,
            d.trim_end()
        );
        for r in rows {
            let (x, y) = (sx(r.r), sy(r.sample_mean));
            let se = 2.0 * r.std_error();
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/><circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#,
                sy(r.sample_mean - se),
                sy(r.sample_mean + se)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">x = {center}</text>"#,
            WIDTH - 2.0 * MARGIN - 60.0,
            40.0 + 16.0 * gi as f64
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(t: f64) -> String {
    if t == 0.0 || (1e-3..1e4).contains(&t.abs()) {
        let s = format!("{t:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{t:.1e}")
    }
}

pub fn write_plot(path: &Path, reports: &[EstimatorReport], symbol: &Symbol) -> Result<()> {
    write_file(path, &plot_svg(reports, symbol)?)
}
