//! Minimal standalone SVG rendering: heatmaps from rectangle fills and line
//! plots from polylines. Plots are cropped to the region where the data is
//! visible and downsampled to at most `MAX_CELLS` cells per axis.

use std::fmt::Write;

const MAX_CELLS: usize = 160;
const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;
/// Values below this fraction of the peak are treated as empty when cropping.
const CROP: f64 = 1e-4;

fn header(out: &mut String, title: &str) {
    let full = SIZE + 2.0 * MARGIN;
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{full}\" height=\"{full}\" viewBox=\"0 0 {full} {full}\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{full}\" height=\"{full}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        full / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64), xlabel: &str, ylabel: &str) {
    let (l, t, r, b) = (MARGIN, MARGIN, MARGIN + SIZE, MARGIN + SIZE);
    let _ = writeln!(out, "<rect x=\"{l}\" y=\"{t}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>");
    let text = |out: &mut String, px: f64, py: f64, anchor: &str, s: &str| {
        let _ = writeln!(
            out,
            "<text x=\"{px:.1}\" y=\"{py:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{}</text>",
            escape(s)
        );
    };
    text(out, l, b + 16.0, "start", &format!("{:.3}", x.0));
    text(out, r, b + 16.0, "end", &format!("{:.3}", x.1));
    text(out, (l + r) / 2.0, b + 32.0, "middle", xlabel);
    text(out, l - 6.0, b, "end", &format!("{:.3}", y.0));
    text(out, l - 6.0, t + 10.0, "end", &format!("{:.3}", y.1));
    text(out, l - 6.0, (t + b) / 2.0, "end", ylabel);
}

/// Smallest index window containing every entry with `keep(i)`.
fn window(n: usize, keep: impl Fn(usize) -> bool) -> (usize, usize) {
    let lo = (0..n).find(|&i| keep(i)).unwrap_or(0);
    let hi = (0..n).rev().find(|&i| keep(i)).unwrap_or(n - 1);
    (lo, hi.max(lo))
}

fn color(v: f64, scale: f64, signed: bool) -> String {
    let u = if scale > 0.0 {
        (v / scale).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let mix = |a: f64, b: f64, f: f64| (a + (b - a) * f).round() as u8;
    let (r, g, b) = if signed {
        if u >= 0.0 {
            (
                mix(255.0, 178.0, u),
                mix(255.0, 24.0, u),
                mix(255.0, 43.0, u),
            )
        } else {
            (
                mix(255.0, 33.0, -u),
                mix(255.0, 102.0, -u),
                mix(255.0, 172.0, -u),
            )
        }
    } else {
        let u = u.max(0.0);
        (
            mix(255.0, 8.0, u),
            mix(255.0, 48.0, u),
            mix(255.0, 107.0, u),
        )
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heatmap of `values` (row-major, rows along `x`). Signed data uses a
/// diverging palette centred at zero.
pub fn heatmap(
    title: &str,
    labels: (&str, &str),
    x: &[f64],
    y: &[f64],
    values: &[f64],
    signed: bool,
) -> String {
    let (nx, ny) = (x.len(), y.len());
    let peak = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let vis = |v: f64| v.abs() > CROP * peak;
    let (x0, x1) = window(nx, |i| (0..ny).any(|j| vis(values[i * ny + j])));
    let (y0, y1) = window(ny, |j| (0..nx).any(|i| vis(values[i * ny + j])));
    let sx = (x1 - x0 + 1).div_ceil(MAX_CELLS);
    let sy = (y1 - y0 + 1).div_ceil(MAX_CELLS);
    let cols: Vec<usize> = (x0..=x1).step_by(sx).collect();
    let rows: Vec<usize> = (y0..=y1).step_by(sy).collect();
    let (w, h) = (SIZE / cols.len() as f64, SIZE / rows.len() as f64);

    let mut out = String::new();
    header(&mut out, title);
    for (ci, &i) in cols.iter().enumerate() {
        for (ri, &j) in rows.iter().enumerate() {
            let px = MARGIN + ci as f64 * w;
            let py = MARGIN + SIZE - (ri + 1) as f64 * h;
            let _ = writeln!(
                out,
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                w + 0.05,
                h + 0.05,
                color(values[i * ny + j], peak, signed)
            );
        }
    }
    axes(&mut out, (x[x0], x[x1]), (y[y0], y[y1]), labels.0, labels.1);
    out.push_str("</svg>\n");
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: Vec<Option<f64>>,
}

/// Line plot; undefined points break the polyline. With `crop` the x range is
/// limited to where some series exceeds a small fraction of the largest |y|.
pub fn lines(title: &str, labels: (&str, &str), series: &[Series], crop: bool) -> String {
    let peak = series
        .iter()
        .flat_map(|s| s.y.iter().flatten())
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        let (lo, hi) = if crop {
            window(s.x.len(), |i| s.y[i].is_some_and(|v| v.abs() > CROP * peak))
        } else {
            (0, s.x.len() - 1)
        };
        xr = (xr.0.min(s.x[lo]), xr.1.max(s.x[hi]));
    }
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (x, y) in s.x.iter().zip(&s.y) {
            if let Some(y) = y {
                if *x >= xr.0 && *x <= xr.1 {
                    yr = (yr.0.min(*y), yr.1.max(*y));
                }
            }
        }
    }
    if !(xr.1 > xr.0) {
        xr = (xr.0 - 1.0, xr.0 + 1.0);
    }
    if !yr.0.is_finite() {
        yr = (0.0, 1.0);
    }
    if !(yr.1 > yr.0) {
        yr = (yr.0 - 1.0, yr.0 + 1.0);
    }
    let px = |x: f64| MARGIN + (x - xr.0) / (xr.1 - xr.0) * SIZE;
    let py = |y: f64| MARGIN + SIZE - (y - yr.0) / (yr.1 - yr.0) * SIZE;

    let mut out = String::new();
    header(&mut out, title);
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    segment.join(" ")
                );
            }
            segment.clear();
        };
        for (x, y) in s.x.iter().zip(&s.y) {
            match y {
                Some(y) if *x >= xr.0 && *x <= xr.1 => {
                    segment.push(format!("{:.2},{:.2}", px(*x), py(*y)))
                }
                _ => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{colour}\">{}</text>",
            MARGIN + SIZE - 110.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(&s.label)
        );
    }
    axes(&mut out, xr, yr, labels.0, labels.1);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_crops_and_downsamples() {
        let n = 400;
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 200.0).collect();
        let values: Vec<f64> = (0..n * n)
            .map(|k| {
                let (a, b) = (x[k / n], x[k % n]);
                (-(a * a + b * b) / 200.0).exp()
            })
            .collect();
        let svg = heatmap("g", ("o1", "o2"), &x, &x, &values, false);
        let rects = svg.matches("<rect").count();
        assert!(rects <= MAX_CELLS * MAX_CELLS + 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn undefined_points_split_lines() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let s = Series {
            label: "c".into(),
            x: &x,
            y: vec![Some(0.1), Some(0.2), None, Some(0.3), Some(0.1)],
        };
        let svg = lines("t", ("o", "c"), &[s], false);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
