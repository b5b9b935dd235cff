//! Deterministic SVG output: the spectral-flow diagram from `eigenvalues.csv` and the plaquette
//! flux heatmap from `flux.csv`. Coordinates are printed with fixed precision so identical input
//! bytes give identical output bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::record::{RunRecord, EIGEN_CSV, FLUX_CSV, RECORD_FILE};
use crate::Failure;

pub const SF_SVG: &str = "spectral_flow.svg";
pub const FLUX_SVG: &str = "flux.svg";

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PANEL: f64 = 280.0;

fn missing(what: &str) -> Failure {
    Failure::invalid(format!("missing data: {what}"))
}

fn rows<'a>(csv: &'a str, header: &str) -> Result<Vec<Vec<&'a str>>, Failure> {
    let mut lines = csv.lines();
    if lines.next().map(str::trim) != Some(header) {
        return Err(missing(&format!("expected CSV header '{header}'")));
    }
    let ncol = header.split(',').count();
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() == ncol {
                Ok(cols)
            } else {
                Err(missing(&format!("malformed CSV row '{l}'")))
            }
        })
        .collect()
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T, Failure> {
    s.trim().parse().map_err(|_| missing(&format!("bad number '{s}'")))
}

pub fn spectral_flow_svg(csv: &str, window: f64) -> Result<String, Failure> {
    let mut points = Vec::new();
    for r in rows(csv, "s,index,eigenvalue,resolved")? {
        points.push((num::<f64>(r[0])?, num::<f64>(r[2])?, r[3].trim() == "1"));
    }
    let lim = if window > 0.0 { window } else { 1.0 };
    let x = |s: f64| MARGIN + s * (W - 2.0 * MARGIN);
    let y = |l: f64| H / 2.0 - l / lim * (H / 2.0 - MARGIN);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="gray" stroke-dasharray="4 3"/>"#,
        y(0.0),
        W - MARGIN,
        y(0.0)
    );
    for (s, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{label}</text>"#, x(s), H - MARGIN + 16.0);
    }
    for l in [-lim, 0.0, lim] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{l:.3}</text>"#, MARGIN - 6.0, y(l) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">s</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(out, r#"<text x="14" y="{:.1}" font-size="13">λ</text>"#, H / 2.0);
    for (s, l, res) in points {
        if l.abs() > lim {
            continue;
        }
        let fill = if res { "#1f5fa8" } else { "#9a9a9a" };
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{fill}"/>"#, x(s), y(l));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn color(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let fade = |t: f64| (255.0 * (1.0 - t.abs())).round() as u8;
    if t >= 0.0 {
        format!("#ff{:02x}{:02x}", fade(t), fade(t))
    } else {
        format!("#{:02x}{:02x}ff", fade(t), fade(t))
    }
}

pub fn flux_svg(csv: &str) -> Result<String, Failure> {
    let mut cells: Vec<(usize, usize, usize, f64)> = Vec::new();
    for r in rows(csv, "component,i,j,flux")? {
        cells.push((num(r[0])?, num(r[1])?, num(r[2])?, num(r[3])?));
    }
    let n_comp = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let scale = cells.iter().map(|c| c.3.abs()).fold(0.0, f64::max);
    let width = MARGIN + n_comp.max(1) as f64 * (PANEL + MARGIN);
    let height = PANEL + 2.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for comp in 0..n_comp {
        let mine: Vec<_> = cells.iter().filter(|c| c.0 == comp).collect();
        let nt = mine.iter().map(|c| c.1 + 1).max().unwrap_or(1);
        let ns = mine.iter().map(|c| c.2 + 1).max().unwrap_or(1);
        let (cw, ch) = (PANEL / nt as f64, PANEL / ns as f64);
        let x0 = MARGIN + comp as f64 * (PANEL + MARGIN);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">component {comp}</text>"#, x0 + PANEL / 2.0, MARGIN - 12.0);
        for (_, i, j, f) in mine {
            let v = if scale > 0.0 { f / scale } else { 0.0 };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x0 + *i as f64 * cw,
                MARGIN + PANEL - (*j as f64 + 1.0) * ch,
                cw,
                ch,
                color(v)
            );
        }
        let _ = writeln!(out, r#"<rect x="{x0:.1}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>"#);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">θ</text>"#, x0 + PANEL / 2.0, MARGIN + PANEL + 18.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">s</text>"#, x0 - 6.0, MARGIN + PANEL / 2.0);
    }
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{:.1}" font-size="11">max |flux| = {scale:.6e}</text>"#, height - 10.0);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Regenerates the plots of a run directory; returns the names of the files written.
pub fn emit(dir: &Path) -> Result<Vec<String>, Failure> {
    let eigen = std::fs::read_to_string(dir.join(EIGEN_CSV)).map_err(|_| missing(&format!("{} has no {EIGEN_CSV}", dir.display())))?;
    let window = std::fs::read_to_string(dir.join(RECORD_FILE))
        .ok()
        .and_then(|t| serde_json::from_str::<RunRecord>(&t).ok())
        .map(|r| r.scenario.window)
        .unwrap_or(1.0);
    std::fs::write(dir.join(SF_SVG), spectral_flow_svg(&eigen, window)?)?;
    let mut written = vec![SF_SVG.to_string()];
    if let Ok(flux) = std::fs::read_to_string(dir.join(FLUX_CSV)) {
        std::fs::write(dir.join(FLUX_SVG), flux_svg(&flux)?)?;
        written.push(FLUX_SVG.to_string());
    }
    Ok(written)
}
