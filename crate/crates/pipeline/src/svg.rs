//! Self-contained SVG figures. Every figure carries the plotted numbers as a
//! CSV block inside an `<!-- ssi-data ... -->` comment.

use ndarray::Array2;
use std::fmt::Write;

const PLOT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const DATA_TAG: &str = "<!-- ssi-data";

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Comment-safe CSV: XML comments may not contain `--`.
fn data_block(header: &[String], csv: &str) -> String {
    let mut s = String::from(DATA_TAG);
    s.push('\n');
    for h in header {
        let _ = writeln!(s, "# {}", h.replace("--", "- -"));
    }
    s.push_str(csv);
    s.push_str("-->\n");
    s
}

/// Colour for an 8-bit level; the red channel equals the level.
pub fn colour(level: u8) -> String {
    let l = level as f64 / 255.0;
    let g = (200.0 * (std::f64::consts::PI * l).sin()).round() as u8;
    format!("#{:02x}{:02x}{:02x}", level, g, 255 - level)
}

/// Range of one plotted axis: label and first/last sample values.
#[derive(Clone, Debug)]
pub struct AxisRange {
    pub label: String,
    pub first: f64,
    pub last: f64,
}

impl AxisRange {
    pub fn new(label: &str, first: f64, last: f64) -> Self {
        AxisRange {
            label: label.into(),
            first,
            last,
        }
    }
}

/// Heatmap settings.
#[derive(Clone, Debug)]
pub struct Heatmap<'a> {
    pub title: &'a str,
    /// Matrix rows run down the page.
    pub rows: AxisRange,
    pub cols: AxisRange,
    /// Colour scale floor; the data minimum when `None`.
    pub floor: Option<f64>,
    pub max_pixels: usize,
}

/// Block means over `⌈n/max⌉`-sized blocks, skipping non-finite cells.
pub fn block_average(values: &Array2<f64>, max_pixels: usize) -> (Array2<f64>, usize, usize) {
    let (n, m) = values.dim();
    let (bi, bj) = (n.div_ceil(max_pixels).max(1), m.div_ceil(max_pixels).max(1));
    let out = Array2::from_shape_fn((n.div_ceil(bi), m.div_ceil(bj)), |(p, q)| {
        let (mut s, mut c) = (0.0, 0usize);
        for i in p * bi..((p + 1) * bi).min(n) {
            for j in q * bj..((q + 1) * bj).min(m) {
                let v = values[[i, j]];
                if v.is_finite() {
                    s += v;
                    c += 1;
                }
            }
        }
        if c > 0 {
            s / c as f64
        } else {
            f64::NAN
        }
    });
    (out, bi, bj)
}

fn csv(values: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in values.rows() {
        let line: Vec<String> = row
            .iter()
            .map(|v| if v.is_finite() { format!("{v:e}") } else { String::new() })
            .collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn frame(title: &str, width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <title>{t}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{cx}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{t}</text>\n",
        w = width,
        h = height,
        cx = width / 2.0,
        t = esc(title)
    )
}

/// Heatmap of `values`; non-finite cells are left blank. Cells at level 0
/// are not drawn when a floor is set, which keeps sparse maps small.
pub fn heatmap(values: &Array2<f64>, spec: &Heatmap) -> String {
    let (plotted, bi, bj) = block_average(values, spec.max_pixels);
    let (n, m) = plotted.dim();
    let finite = || plotted.iter().cloned().filter(|v| v.is_finite());
    let lo = spec.floor.unwrap_or_else(|| finite().fold(f64::INFINITY, f64::min));
    let hi = finite().fold(f64::NEG_INFINITY, f64::max).max(lo);
    let px = PLOT / n.max(m) as f64;
    let (width, height) = (2.0 * MARGIN + m as f64 * px + 80.0, 2.0 * MARGIN + n as f64 * px);
    let mut s = frame(spec.title, width, height);
    let header = vec![
        format!("title: {}", spec.title),
        format!("rows={n} cols={m} block={bi}x{bj} min={lo:e} max={hi:e}"),
        format!("rows: {} from {:e} to {:e}", spec.rows.label, spec.rows.first, spec.rows.last),
        format!("cols: {} from {:e} to {:e}", spec.cols.label, spec.cols.first, spec.cols.last),
    ];
    s.push_str(&data_block(&header, &csv(&plotted)));
    s.push_str("<g class=\"pixels\" shape-rendering=\"crispEdges\">\n");
    for ((i, j), v) in plotted.indexed_iter() {
        if !v.is_finite() {
            continue;
        }
        let level = if hi > lo { (255.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8 } else { 0 };
        if level == 0 && spec.floor.is_some() {
            continue;
        }
        let _ = writeln!(
            s,
            "<rect class=\"px\" data-i=\"{i}\" data-j=\"{j}\" data-level=\"{level}\" x=\"{:.3}\" y=\"{:.3}\" width=\"{px:.3}\" height=\"{px:.3}\" fill=\"{}\"/>",
            MARGIN + j as f64 * px,
            MARGIN + i as f64 * px,
            colour(level)
        );
    }
    s.push_str("</g>\n");
    let (x1, y1) = (MARGIN + m as f64 * px, MARGIN + n as f64 * px);
    let _ = writeln!(s, "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"none\" stroke=\"black\"/>", x1 - MARGIN, y1 - MARGIN);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", (MARGIN + x1) / 2.0, y1 + 36.0, esc(&spec.cols.label));
    let _ = writeln!(s, "<text x=\"{MARGIN}\" y=\"{:.1}\">{:.3e}</text>", y1 + 16.0, spec.cols.first);
    let _ = writeln!(s, "<text x=\"{x1:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.3e}</text>", y1 + 16.0, spec.cols.last);
    let _ = writeln!(
        s,
        "<text transform=\"translate({:.1},{:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        MARGIN - 36.0,
        (MARGIN + y1) / 2.0,
        esc(&spec.rows.label)
    );
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.3e}</text>", MARGIN - 4.0, MARGIN + 10.0, spec.rows.first);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y1:.1}\" text-anchor=\"end\">{:.3e}</text>", MARGIN - 4.0, spec.rows.last);
    // Colour bar.
    let bar_x = x1 + 20.0;
    for k in 0..=255u32 {
        let y = y1 - (k as f64 + 1.0) * (y1 - MARGIN) / 256.0;
        let _ = writeln!(
            s,
            "<rect x=\"{bar_x:.1}\" y=\"{y:.3}\" width=\"14\" height=\"{:.3}\" fill=\"{}\"/>",
            (y1 - MARGIN) / 256.0 + 0.05,
            colour(k as u8)
        );
    }
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{hi:.3e}</text>", bar_x, MARGIN - 6.0);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{lo:.3e}</text>", bar_x, y1 + 16.0);
    s.push_str("</svg>\n");
    s
}

/// A horizontal reference line on a point plot.
#[derive(Clone, Debug)]
pub struct Reference {
    pub label: String,
    pub value: f64,
}

/// Points `(label, value)` against their index, with horizontal reference lines.
pub fn point_plot(title: &str, y_label: &str, points: &[(String, f64)], refs: &[Reference]) -> String {
    let values = points.iter().map(|p| p.1).chain(refs.iter().map(|r| r.value));
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let pad = 0.15 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let (width, height) = (PLOT + 2.0 * MARGIN + 160.0, PLOT * 0.6 + 2.0 * MARGIN);
    let (x0, x1, y0, y1) = (MARGIN + 40.0, MARGIN + 40.0 + PLOT, MARGIN, MARGIN + PLOT * 0.6);
    let y_of = |v: f64| y1 - (v - lo) / (hi - lo) * (y1 - y0);
    let x_of = |k: usize| x0 + (k as f64 + 0.5) / points.len().max(1) as f64 * (x1 - x0);
    let mut s = frame(title, width, height);
    let mut table = String::from("kind,label,value\n");
    for r in refs {
        let _ = writeln!(table, "reference,{},{:e}", r.label.replace(',', ";"), r.value);
    }
    for (l, v) in points {
        let _ = writeln!(table, "point,{},{:e}", l.replace(',', ";"), v);
    }
    s.push_str(&data_block(&[format!("title: {title}"), format!("y: {y_label}")], &table));
    let _ = writeln!(s, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y1 - y0);
    for (k, r) in refs.iter().enumerate() {
        let y = y_of(r.value);
        let dash = if k % 2 == 0 { "6,4" } else { "2,3" };
        let _ = writeln!(
            s,
            "<line class=\"reference\" x1=\"{x0}\" x2=\"{x1}\" y1=\"{y:.2}\" y2=\"{y:.2}\" stroke=\"#555\" stroke-dasharray=\"{dash}\"/>"
        );
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{} ({:.3e})</text>", x1 + 6.0, y + 4.0, esc(&r.label), r.value);
    }
    for (k, (l, v)) in points.iter().enumerate() {
        let (x, y) = (x_of(k), y_of(*v));
        let _ = writeln!(s, "<circle class=\"point\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"#c0392b\"/>");
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{}</text>", y1 + 14.0, esc(l));
    }
    let _ = writeln!(
        s,
        "<text transform=\"translate({:.1},{:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        MARGIN - 20.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    );
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{hi:.3e}</text>", x0 - 4.0, y0 + 10.0);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y1:.1}\" text-anchor=\"end\">{lo:.3e}</text>", x0 - 4.0);
    s.push_str("</svg>\n");
    s
}

/// Arrows from each idler position to the matching signal centroid, in mm.
pub fn arrow_plot(title: &str, pairs: &[([f64; 2], [f64; 2])], half_span: f64) -> String {
    let size = PLOT;
    let (width, height) = (size + 2.0 * MARGIN, size + 2.0 * MARGIN);
    let to_px = |p: [f64; 2]| {
        (
            MARGIN + (p[0] + half_span) / (2.0 * half_span) * size,
            MARGIN + (half_span - p[1]) / (2.0 * half_span) * size,
        )
    };
    let mut s = frame(title, width, height);
    let mut table = String::from("idler_x_mm,idler_y_mm,signal_x_mm,signal_y_mm\n");
    for (a, b) in pairs {
        let _ = writeln!(table, "{:e},{:e},{:e},{:e}", a[0], a[1], b[0], b[1]);
    }
    s.push_str(&data_block(&[format!("title: {title}")], &table));
    let _ = writeln!(s, "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{size}\" height=\"{size}\" fill=\"none\" stroke=\"black\"/>");
    let (cx, cy) = to_px([0.0, 0.0]);
    let _ = writeln!(s, "<line x1=\"{MARGIN}\" x2=\"{:.1}\" y1=\"{cy:.1}\" y2=\"{cy:.1}\" stroke=\"#ccc\"/>", MARGIN + size);
    let _ = writeln!(s, "<line x1=\"{cx:.1}\" x2=\"{cx:.1}\" y1=\"{MARGIN}\" y2=\"{:.1}\" stroke=\"#ccc\"/>", MARGIN + size);
    for (a, b) in pairs {
        let (ax, ay) = to_px(*a);
        let (bx, by) = to_px(*b);
        let _ = writeln!(s, "<line x1=\"{ax:.2}\" y1=\"{ay:.2}\" x2=\"{bx:.2}\" y2=\"{by:.2}\" stroke=\"#888\"/>");
        let _ = writeln!(s, "<circle class=\"idler\" cx=\"{ax:.2}\" cy=\"{ay:.2}\" r=\"4\" fill=\"none\" stroke=\"#2c3e50\"/>");
        let _ = writeln!(s, "<circle class=\"signal\" cx=\"{bx:.2}\" cy=\"{by:.2}\" r=\"4\" fill=\"#c0392b\"/>");
    }
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">x (mm), open: idler, filled: signal centroid</text>", width / 2.0, height - 16.0);
    s.push_str("</svg>\n");
    s
}

/// Header lines and CSV text of the embedded data block.
pub fn embedded_block(svg: &str) -> Option<(Vec<String>, String)> {
    let start = svg.find(DATA_TAG)? + DATA_TAG.len();
    let end = start + svg[start..].find("-->")?;
    let mut header = Vec::new();
    let mut body = String::new();
    for line in svg[start..end].lines().skip_while(|l| l.is_empty()) {
        match line.strip_prefix("# ") {
            Some(h) => header.push(h.to_string()),
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    Some((header, body))
}

/// The plotted matrix of a heatmap; blank cells come back as NaN.
pub fn embedded_matrix(svg: &str) -> Option<Array2<f64>> {
    let (_, body) = embedded_block(svg)?;
    let rows: Vec<Vec<f64>> = body
        .lines()
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap_or(f64::NAN)).collect())
        .collect();
    let m = rows.first()?.len();
    if rows.iter().any(|r| r.len() != m) {
        return None;
    }
    Array2::from_shape_vec((rows.len(), m), rows.into_iter().flatten().collect()).ok()
}
