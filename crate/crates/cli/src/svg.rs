//! Minimal deterministic SVG line chart for sweep tables.
//!
//! No plotting dependency: the chart is a fixed-size coordinate mapping plus
//! string assembly, so identical tables always serialize to identical bytes.
//! One polyline per risk-aversion value, welfare difference on the y axis,
//! the swept parameter on the x axis, with a dashed zero line (the sign
//! crossing is the quantity of interest).

use radner_core::welfare::SweepTable;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 640.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 440.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Compact deterministic tick label.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Renders the sweep as an SVG string. Cells whose computation failed are
/// omitted; a gap splits the affected polyline.
pub fn sweep_chart(table: &SweepTable) -> String {
    // Group by risk aversion in first-appearance order.
    let mut a_order: Vec<f64> = Vec::new();
    for cell in &table.cells {
        if !a_order.iter().any(|&a| a == cell.a) {
            a_order.push(cell.a);
        }
    }
    let series: Vec<(f64, Vec<(f64, f64)>)> = a_order
        .iter()
        .map(|&a| {
            let pts = table
                .cells
                .iter()
                .filter(|c| c.a == a)
                .filter_map(|c| {
                    c.result
                        .as_ref()
                        .ok()
                        .map(|r| (c.axis_value, r.difference_direct))
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                })
                .collect();
            (a, pts)
        })
        .collect();

    // Data ranges; the zero line is always kept in view.
    let xs: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).collect();
    let (mut x_lo, mut x_hi) = bounds(&xs, 0.0);
    if x_lo == x_hi {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    let (y_min, y_max) = bounds(&ys, 0.0);
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);

    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (RIGHT - LEFT);
    let sy = |y: f64| BOTTOM - (y - y_lo) / (y_hi - y_lo) * (BOTTOM - TOP);

    let mut out = String::with_capacity(8 * 1024);
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"13\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{LEFT}\" y=\"28\" font-size=\"15\">welfare difference (tracker - pinned) \
         vs {}</text>\n",
        table.axis.name()
    ));

    // Axes, ticks, labels.
    out.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        RIGHT - LEFT,
        BOTTOM - TOP
    ));
    for x in linspace(x_lo, x_hi, 5) {
        let px = sx(x);
        out.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{BOTTOM}\" x2=\"{px:.2}\" y2=\"{:.2}\" \
             stroke=\"black\"/>\n",
            BOTTOM + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            BOTTOM + 22.0,
            tick_label(x)
        ));
    }
    for y in linspace(y_lo, y_hi, 5) {
        let py = sy(y);
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{LEFT}\" y2=\"{py:.2}\" \
             stroke=\"black\"/>\n",
            LEFT - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            LEFT - 9.0,
            py + 4.0,
            tick_label(y)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 45.0,
        table.axis.name()
    ));

    // Zero reference line.
    if y_lo < 0.0 && y_hi > 0.0 {
        let py = sy(0.0);
        out.push_str(&format!(
            "<line x1=\"{LEFT}\" y1=\"{py:.2}\" x2=\"{RIGHT}\" y2=\"{py:.2}\" \
             stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n"
        ));
    }

    // Series: one polyline per risk aversion (failed cells are skipped, so a
    // line simply bridges them), a lone dot when only one point survives.
    for (k, (a, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if pts.len() == 1 {
            let (x, y) = pts[0];
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        } else if pts.len() > 1 {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.8\"/>\n",
                coords.join(" ")
            ));
        }
        // Legend entry.
        let ly = TOP + 10.0 + 20.0 * k as f64;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            RIGHT + 14.0,
            RIGHT + 44.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">a = {}</text>\n",
            RIGHT + 50.0,
            ly + 4.0,
            tick_label(*a)
        ));
    }

    out.push_str("</svg>\n");
    out
}

fn bounds(v: &[f64], anchor: f64) -> (f64, f64) {
    let mut lo = anchor;
    let mut hi = anchor;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo, hi)
}
