//! Output emission: versioned CSV tables, JSON summaries, and optional SVG
//! line charts, all written atomically (write to a temporary sibling, then
//! rename) so a crashed run never leaves a truncated file behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::errors::CliError;

/// Bump when any CSV schema changes; emitted in the header comment of every
/// table so downstream readers can detect drift.
pub const CSV_FORMAT_VERSION: &str = "v1";

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

/// Shortest round-trip decimal for a float; `NaN`/infinities are rejected
/// earlier by validation, empty cells encode `None`.
pub fn csv_float(x: f64) -> String {
    format!("{x:?}")
}

pub fn csv_opt_float(x: Option<f64>) -> String {
    x.map(csv_float).unwrap_or_default()
}

/// Writes a CSV with the frozen-schema comment line:
/// `# kolsphere-csv v1 <name>` followed by the column header.
pub fn write_csv(
    path: &Path,
    name: &str,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let mut text = format!("# kolsphere-csv {CSV_FORMAT_VERSION} {name}\n");
    text.push_str(&columns.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Pretty JSON plus trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// One named polyline of an [`SvgChart`].
pub struct SvgSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Minimal static line chart: fixed-size canvas, decade or linear ticks,
/// one polyline per series. Rendering is deliberately dependency-free; the
/// CSVs remain the primary artifact and these are visual checks only.
pub struct SvgChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<SvgSeries>,
}

const SVG_W: f64 = 760.0;
const SVG_H: f64 = 520.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 168.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

impl SvgChart {
    pub fn render(&self) -> String {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                let x = if self.log_x { log_coord(x) } else { Some(x) };
                let y = if self.log_y { log_coord(y) } else { Some(y) };
                if let (Some(x), Some(y)) = (x, y) {
                    pts.push((x, y));
                }
            }
        }
        let (x0, x1) = span(pts.iter().map(|p| p.0));
        let (y0, y1) = span(pts.iter().map(|p| p.1));
        let to_px = |x: f64, y: f64| -> (f64, f64) {
            let fx = (x - x0) / (x1 - x0);
            let fy = (y - y0) / (y1 - y0);
            (
                MARGIN_L + fx * (SVG_W - MARGIN_L - MARGIN_R),
                SVG_H - MARGIN_B - fy * (SVG_H - MARGIN_T - MARGIN_B),
            )
        };

        let mut svg = String::new();
        let _ = write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
             viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"monospace\" font-size=\"12\">\n"
        );
        let _ = write!(svg, "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n");
        let _ = write!(
            svg,
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" \
             stroke=\"#333\"/>\n",
            SVG_W - MARGIN_L - MARGIN_R,
            SVG_H - MARGIN_T - MARGIN_B
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            MARGIN_L + (SVG_W - MARGIN_L - MARGIN_R) / 2.0,
            escape(&self.title)
        );

        for (tick, label) in ticks(x0, x1, self.log_x) {
            let (px, _) = to_px(tick, y0);
            let _ = write!(
                svg,
                "<line x1=\"{px:.1}\" y1=\"{}\" x2=\"{px:.1}\" y2=\"{}\" stroke=\"#ccc\"/>\n",
                MARGIN_T,
                SVG_H - MARGIN_B
            );
            let _ = write!(
                svg,
                "<text x=\"{px:.1}\" y=\"{}\" text-anchor=\"middle\">{label}</text>\n",
                SVG_H - MARGIN_B + 18.0
            );
        }
        for (tick, label) in ticks(y0, y1, self.log_y) {
            let (_, py) = to_px(x0, tick);
            let _ = write!(
                svg,
                "<line x1=\"{}\" y1=\"{py:.1}\" x2=\"{}\" y2=\"{py:.1}\" stroke=\"#ccc\"/>\n",
                MARGIN_L,
                SVG_W - MARGIN_R
            );
            let _ = write!(
                svg,
                "<text x=\"{}\" y=\"{py:.1}\" text-anchor=\"end\" dy=\"4\">{label}</text>\n",
                MARGIN_L - 6.0
            );
        }
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_L + (SVG_W - MARGIN_L - MARGIN_R) / 2.0,
            SVG_H - 12.0,
            escape(&self.x_label)
        );
        let _ = write!(
            svg,
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            MARGIN_T + (SVG_H - MARGIN_T - MARGIN_B) / 2.0,
            MARGIN_T + (SVG_H - MARGIN_T - MARGIN_B) / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut d = String::new();
            for &(x, y) in &s.points {
                let x = if self.log_x { log_coord(x) } else { Some(x) };
                let y = if self.log_y { log_coord(y) } else { Some(y) };
                if let (Some(x), Some(y)) = (x, y) {
                    let (px, py) = to_px(x, y);
                    let _ = write!(d, "{}{px:.1},{py:.1}", if d.is_empty() { "M" } else { " L" });
                }
            }
            if !d.is_empty() {
                let _ = write!(
                    svg,
                    "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
                );
            }
            let ly = MARGIN_T + 16.0 * i as f64 + 10.0;
            let _ = write!(
                svg,
                "<line x1=\"{}\" y1=\"{ly:.1}\" x2=\"{}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
                 stroke-width=\"3\"/><text x=\"{}\" y=\"{ly:.1}\" dy=\"4\">{}</text>\n",
                SVG_W - MARGIN_R + 8.0,
                SVG_W - MARGIN_R + 28.0,
                SVG_W - MARGIN_R + 34.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        atomic_write(path, self.render().as_bytes())
    }
}

fn log_coord(v: f64) -> Option<f64> {
    (v > 0.0 && v.is_finite()).then(|| v.log10())
}

fn span<I: Iterator<Item = f64>>(values: I) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    let mut out = Vec::new();
    if log {
        let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
        let step = (((b - a) / 8).max(1)) as usize;
        for e in (a..=b).step_by(step) {
            out.push((e as f64, format!("1e{e}")));
        }
    } else {
        let raw = (hi - lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|s| s * mag)
            .find(|s| *s >= raw)
            .unwrap_or(mag * 10.0);
        let mut t = (lo / step).ceil() * step;
        while t <= hi {
            out.push((t, format!("{:.4}", t).trim_end_matches('0').trim_end_matches('.').to_string()));
            t += step;
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
