//! Artifact writers: pretty JSON, CSV and a small SVG path writer.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(format!("serialize {name}: {e}")))?;
    text.push('\n');
    write_text(dir, name, &text)
}

/// CSV of a sign grid; the header lists `x1` values, each row starts with `x2`.
pub fn sign_grid_csv(x1: &[f64], x2: &[f64], rows: &[Vec<i8>]) -> String {
    let mut s = String::from("x2\\x1");
    for v in x1 {
        let _ = write!(s, ",{v:.4}");
    }
    s.push('\n');
    for (y, row) in x2.iter().zip(rows) {
        let _ = write!(s, "{y:.4}");
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

fn sign_color(s: i8) -> &'static str {
    match s {
        1 => "#d6604d",
        -1 => "#4393c3",
        _ => "#f7f7f7",
    }
}

/// Sign grid as filled cells, `+` red, `-` blue, `0` light grey. Runs of
/// equal sign along a row are merged into one path segment per color.
pub fn sign_grid_svg(title: &str, x1: (f64, f64), x2: (f64, f64), rows: &[Vec<i8>]) -> String {
    let (w, h, pad) = (600.0, 300.0, 40.0);
    let ny = rows.len().max(1);
    let nx = rows.first().map_or(1, |r| r.len().max(1));
    let cw = w / nx as f64;
    let ch = h / ny as f64;
    let mut paths: [String; 3] = Default::default();
    for (j, row) in rows.iter().enumerate() {
        // row 0 is the lowest x2, drawn at the bottom
        let y = pad + h - (j + 1) as f64 * ch;
        let mut i = 0;
        while i < row.len() {
            let s = row[i];
            let start = i;
            while i < row.len() && row[i] == s {
                i += 1;
            }
            let x = pad + start as f64 * cw;
            let len = (i - start) as f64 * cw;
            let _ = write!(paths[(s + 1) as usize], "M{x:.2} {y:.2}h{len:.2}v{ch:.2}h{:.2}z", -len);
        }
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + 2.0 * pad,
        h + 2.0 * pad,
        w + 2.0 * pad,
        h + 2.0 * pad
    );
    let _ = writeln!(svg, r#"<title>{title}</title>"#);
    for (k, d) in paths.iter().enumerate() {
        if !d.is_empty() {
            let _ = writeln!(svg, r#"<path fill="{}" stroke="none" d="{d}"/>"#, sign_color(k as i8 - 1));
        }
    }
    let _ = writeln!(svg, r#"<rect x="{pad}" y="{pad}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{pad}" y="{:.0}" font-size="12" font-family="sans-serif">x1 in [{}, {}], x2 in [{}, {}]</text>"#,
        pad - 10.0,
        x1.0,
        x1.1,
        x2.0,
        x2.1
    );
    svg.push_str("</svg>\n");
    svg
}
