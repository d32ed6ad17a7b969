//! Static SVG histograms of one measurement, one bar series per group.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 2] = ["#4e79a7", "#f28e2b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Counts of `values` in `bins` equal-width bins over `[lo, hi]`.
pub fn bin_counts(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let i = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
        counts[i.min(bins - 1)] += 1;
    }
    counts
}

/// Side-by-side histogram. Empty groups are skipped.
pub fn histogram(title: &str, groups: &[(&str, Vec<f64>)], bins: usize) -> String {
    let all: Vec<f64> = groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if all.is_empty() { (0.0, 1.0) } else if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let counts: Vec<Vec<usize>> = groups.iter().map(|(_, v)| bin_counts(v, lo, hi, bins)).collect();
    let peak = counts.iter().flatten().copied().max().unwrap_or(0).max(1);

    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let slot = plot_w / bins as f64;
    let bar = slot / groups.len().max(1) as f64 * 0.9;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
    let base = HEIGHT - MARGIN;
    writeln!(s, r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, WIDTH - MARGIN).unwrap();
    writeln!(s, r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{base}" stroke="black"/>"#).unwrap();
    for (g, c) in counts.iter().enumerate() {
        for (i, &n) in c.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let h = plot_h * n as f64 / peak as f64;
            let x = MARGIN + i as f64 * slot + slot * 0.05 + g as f64 * bar;
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="{bar:.2}" height="{h:.2}" fill="{}"/>"#,
                base - h,
                COLORS[g % COLORS.len()]
            )
            .unwrap();
        }
    }
    for (x, v) in [(MARGIN, lo), (WIDTH - MARGIN, hi)] {
        writeln!(s, r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{v:.1}</text>"#, base + 16.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{peak}</text>"#, MARGIN - 6.0, MARGIN + 4.0).unwrap();
    for (g, (label, v)) in groups.iter().enumerate() {
        let y = MARGIN + 16.0 * g as f64;
        let x = WIDTH - MARGIN - 120.0;
        writeln!(s, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/>"#, y - 9.0, COLORS[g % COLORS.len()]).unwrap();
        writeln!(s, r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="12">{} (n={})</text>"#, x + 14.0, escape(label), v.len()).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
