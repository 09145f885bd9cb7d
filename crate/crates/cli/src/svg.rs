use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::ExportSvgArgs;

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 45.0;

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

/// Parsed curve data: either a single composite curve or per-component
/// weighted curves in input order.
enum Curves {
    Composite(Vec<(f64, f64)>),
    Components(Vec<(String, Vec<(f64, f64)>)>),
}

pub fn cmd_export_svg(args: ExportSvgArgs) -> Result<()> {
    let curves = read_curves(&args.input)?;
    let svg = render(&curves, args.width, args.height);
    std::fs::write(&args.output, svg)
        .with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}

fn read_curves(path: &Path) -> Result<Curves> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.len() >= 2 && headers[0] == "x" && headers[1] == "pdf" {
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let x: f64 = parse_cell(record.get(0))?;
            let y: f64 = parse_cell(record.get(1))?;
            points.push((x, y));
        }
        Ok(Curves::Composite(points))
    } else if headers.len() >= 3 && headers[0] == "component" && headers[1] == "x" {
        let mut components: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let name = record.get(0).unwrap_or("").to_string();
            let x: f64 = parse_cell(record.get(1))?;
            let y: f64 = parse_cell(record.get(2))?;
            match components.iter_mut().find(|(n, _)| *n == name) {
                Some((_, pts)) => pts.push((x, y)),
                None => components.push((name, vec![(x, y)])),
            }
        }
        Ok(Curves::Components(components))
    } else {
        bail!("unrecognized curve header [{}]; expected x,pdf,cdf or component,x,pdf", headers.join(","))
    }
}

fn parse_cell(cell: Option<&str>) -> Result<f64> {
    let cell = cell.unwrap_or("");
    cell.parse().with_context(|| format!("curve cell '{cell}' is not a number"))
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

struct Frame {
    width: f64,
    height: f64,
    x_min: f64,
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (x - self.x_min) / span * (self.width - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = self.y_max.max(f64::MIN_POSITIVE);
        self.height - MARGIN_BOTTOM - y / span * (self.height - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn render(curves: &Curves, width: u32, height: u32) -> String {
    let width = f64::from(width);
    let height = f64::from(height);

    // composite curve: the sum of stacked components at each grid point
    let (composite, components) = match curves {
        Curves::Composite(points) => (points.clone(), Vec::new()),
        Curves::Components(components) => {
            let mut sum: Vec<(f64, f64)> =
                components.first().map(|(_, pts)| pts.clone()).unwrap_or_default();
            for (_, pts) in components.iter().skip(1) {
                for (acc, p) in sum.iter_mut().zip(pts) {
                    acc.1 += p.1;
                }
            }
            (sum, components.clone())
        }
    };

    let x_min = composite.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = composite.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_max = composite.iter().map(|p| p.1).fold(0.0, f64::max);
    let frame = if composite.is_empty() {
        Frame { width, height, x_min: 0.0, x_max: 1.0, y_max: 1.0 }
    } else {
        Frame { width, height, x_min, x_max: x_max.max(x_min + 1e-12), y_max: y_max.max(1e-12) }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);

    // stacked component areas, bottom-up
    let mut baseline: Vec<f64> = composite.iter().map(|_| 0.0).collect();
    for (i, (name, pts)) in components.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, (x, y)) in pts.iter().enumerate() {
            let top = baseline[j] + y;
            let cmd = if j == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{} {} ", fmt(frame.px(*x)), fmt(frame.py(top)));
        }
        for (j, (x, _)) in pts.iter().enumerate().rev() {
            let _ = write!(d, "L{} {} ", fmt(frame.px(*x)), fmt(frame.py(baseline[j])));
        }
        d.push('Z');
        let _ = writeln!(
            svg,
            r#"<path d="{d}" fill="{color}" fill-opacity="0.55" stroke="none"><title>{name}</title></path>"#
        );
        for (j, (_, y)) in pts.iter().enumerate() {
            baseline[j] += y;
        }
    }

    // composite outline
    if !composite.is_empty() {
        let mut d = String::new();
        for (j, (x, y)) in composite.iter().enumerate() {
            let cmd = if j == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{} {} ", fmt(frame.px(*x)), fmt(frame.py(*y)));
        }
        let _ = writeln!(
            svg,
            r##"<path d="{}" fill="none" stroke="#222222" stroke-width="1.5"/>"##,
            d.trim_end()
        );
    }

    // axes
    let x0 = MARGIN_LEFT;
    let x1 = width - MARGIN_RIGHT;
    let y0 = height - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let x_val = frame.x_min + t * (frame.x_max - frame.x_min);
        let px = frame.px(x_val);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y0}" x2="{}" y2="{}" stroke="black" stroke-width="1"/>"#,
            fmt(px),
            fmt(px),
            fmt(y0 + 5.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            fmt(px),
            fmt(y0 + 18.0),
            fmt(x_val)
        );
        let y_val = t * frame.y_max;
        let py = frame.py(y_val);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{}" x2="{x0}" y2="{}" stroke="black" stroke-width="1"/>"#,
            fmt(x0 - 5.0),
            fmt(py),
            fmt(py)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#,
            fmt(x0 - 8.0),
            fmt(py + 4.0),
            format!("{y_val:.4}")
        );
    }

    // legend for component charts
    for (i, (name, _)) in components.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = MARGIN_TOP + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}" fill-opacity="0.55"/>"#,
            fmt(x1 - 110.0),
            fmt(ly)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">{name}</text>"#,
            fmt(x1 - 94.0),
            fmt(ly + 10.0)
        );
    }

    svg.push_str("</svg>\n");
    svg
}
