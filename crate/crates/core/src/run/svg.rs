//! Grouped bar chart of MCC with confidence-interval whiskers.

use std::fmt::Write as _;

use crate::eval::EvalReport;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 80.0;
const COLORS: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// One group per subset and one bar per partition, in order of first
/// appearance. Bar height is the bootstrap mean; whiskers span the CI.
pub fn mcc_chart(reports: &[EvalReport], title: &str) -> String {
    let subsets = first_seen(reports.iter().map(|r| r.subset.as_str()));
    let partitions = first_seen(reports.iter().map(|r| r.partition.as_str()));
    let lowest = reports.iter().map(|r| r.mcc.ci_low).fold(0.0f64, f64::min);
    let y_min = if lowest < 0.0 { (lowest * 5.0).floor() / 5.0 } else { 0.0 };
    let y_max = 1.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y = |v: f64| TOP + plot_h * (y_max - v.clamp(y_min, y_max)) / (y_max - y_min);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let mut tick = y_min;
    while tick <= y_max + 1e-9 {
        let ty = y(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick:.1}</text>"#,
            LEFT - 6.0,
            ty + 4.0
        );
        tick = ((tick + 0.2) * 10.0).round() / 10.0;
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        y(0.0),
        LEFT + plot_w,
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">MCC</text>"#,
        TOP + plot_h / 2.0
    );

    let group_w = plot_w / subsets.len().max(1) as f64;
    let bar_w = (group_w * 0.8) / partitions.len().max(1) as f64;
    for (gi, subset) in subsets.iter().enumerate() {
        let gx = LEFT + gi as f64 * group_w + group_w * 0.1;
        for (pi, partition) in partitions.iter().enumerate() {
            let Some(r) = reports.iter().find(|r| r.subset == *subset && r.partition == *partition) else {
                continue;
            };
            let x = gx + pi as f64 * bar_w;
            let top = y(r.mcc.mean.max(0.0));
            let base = y(r.mcc.mean.min(0.0));
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{} {}: {:.3} [{:.3}, {:.3}]</title></rect>"#,
                bar_w * 0.9,
                (base - top).max(0.0),
                COLORS[pi % COLORS.len()],
                escape(subset),
                escape(partition),
                r.mcc.mean,
                r.mcc.ci_low,
                r.mcc.ci_high
            );
            let cx = x + bar_w * 0.45;
            let (lo, hi) = (y(r.mcc.ci_low), y(r.mcc.ci_high));
            let _ = writeln!(
                s,
                r#"<path d="M{cx:.1} {lo:.1}V{hi:.1}M{:.1} {lo:.1}H{:.1}M{:.1} {hi:.1}H{:.1}" stroke="black" fill="none"/>"#,
                cx - 4.0,
                cx + 4.0,
                cx - 4.0,
                cx + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            TOP + plot_h + 20.0,
            escape(subset)
        );
    }
    for (pi, partition) in partitions.iter().enumerate() {
        let ly = TOP + 10.0 + pi as f64 * 20.0;
        let lx = WIDTH - RIGHT + 20.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
            ly - 10.0,
            COLORS[pi % COLORS.len()],
            lx + 18.0,
            escape(partition)
        );
    }
    s.push_str("</svg>\n");
    s
}
