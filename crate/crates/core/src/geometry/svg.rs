use std::fmt::Write;

use super::{is_half_cell, BcLabel, CellSet, GridPoint, SubdomainSpec};

const PX_X: f64 = 6.0;
const MARGIN: f64 = 10.0;

fn xy(p: GridPoint, n: u32) -> (f64, f64) {
    // Scaled-triangle coordinates: legs 128 and 93.
    let x = 128.0 * p.i as f64 / n as f64;
    let y = 93.0 * p.j as f64 / n as f64;
    (MARGIN + PX_X * x, MARGIN + PX_X * (93.0 - y))
}

fn cell_path(i: i64, j: i64, n: u32) -> String {
    let corners: Vec<GridPoint> = if is_half_cell(i, j, n) {
        vec![
            GridPoint::new(i, j),
            GridPoint::new(i + 1, j),
            GridPoint::new(i, j + 1),
        ]
    } else {
        vec![
            GridPoint::new(i, j),
            GridPoint::new(i + 1, j),
            GridPoint::new(i + 1, j + 1),
            GridPoint::new(i, j + 1),
        ]
    };
    let mut s = String::new();
    for (t, c) in corners.iter().enumerate() {
        let (x, y) = xy(*c, n);
        let _ = write!(s, "{}{:.3},{:.3} ", if t == 0 { "M" } else { "L" }, x, y);
    }
    s.push('Z');
    s
}

/// Static picture of a subdomain: excluded cells in gray, Dirichlet edges
/// red, Neumann edges blue.
pub fn render_svg(d: &SubdomainSpec) -> String {
    let n = d.n;
    let w = 2.0 * MARGIN + PX_X * 128.0;
    let h = 2.0 * MARGIN + PX_X * 93.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", d.id());
    let excluded: CellSet = d.cells.complement();
    let _ = writeln!(s, r##"<g fill="#bbbbbb" stroke="none">"##);
    for (i, j) in excluded.iter() {
        let _ = writeln!(s, r#"<path d="{}"/>"#, cell_path(i, j, n));
    }
    let _ = writeln!(s, "</g>");
    for (label, color) in [
        (BcLabel::Neumann, "#1f4fd8"),
        (BcLabel::Dirichlet, "#d81f1f"),
    ] {
        let _ = writeln!(
            s,
            r#"<g stroke="{color}" stroke-width="2" class="{label:?}">"#
        );
        for e in d
            .edge_labels
            .iter()
            .filter(|(_, l)| **l == label)
            .map(|(e, _)| e)
        {
            let (a, b) = e.endpoints();
            let (x1, y1) = xy(a, n);
            let (x2, y2) = xy(b, n);
            let _ = writeln!(
                s,
                r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

/// Several subdomains side by side, each with an optional marked point.
pub fn render_panels(panels: &[(&SubdomainSpec, Option<GridPoint>)]) -> String {
    let w = 2.0 * MARGIN + PX_X * 128.0;
    let h = 2.0 * MARGIN + PX_X * 93.0;
    let total = w * panels.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total:.0}" height="{h:.0}" viewBox="0 0 {total:.0} {h:.0}">"#
    );
    for (t, (d, mark)) in panels.iter().enumerate() {
        let inner = render_svg(d);
        let body = inner.split_once('\n').map_or("", |(_, rest)| rest);
        let body = body.strip_suffix("</svg>\n").unwrap_or(body);
        let _ = writeln!(
            s,
            r#"<svg x="{:.0}" y="0" width="{w:.0}" height="{h:.0}">"#,
            w * t as f64
        );
        s.push_str(body);
        if let Some(p) = mark {
            let (x, y) = xy(*p, d.n);
            let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="black"/>"#);
        }
        s.push_str("</svg>\n");
    }
    s.push_str("</svg>\n");
    s
}
