//! Deterministic file emission: CSV sweep tables, JSON verdicts, and static
//! SVG polyline plots. Every file carries the tool version and an options
//! hash so identical runs produce byte-identical outputs.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
}

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex chars of the SHA-256 of a canonical options string.
pub fn options_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    let mut s = String::with_capacity(16);
    for byte in &digest[..8] {
        s.push_str(&format!("{byte:02x}"));
    }
    s
}

/// One sweep row: transport endpoint, energy, and the unitarity drift at c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub energy: Complex64,
    pub drift: f64,
}

pub const CSV_HEADER: &str = "c,re_a,im_a,re_b,im_b,re_Ea,im_Ea,drift";

/// Write the sweep CSV: metadata comment, header, one row per grid point,
/// 17 significant digits, LF endings.
pub fn write_csv(path: &Path, rows: &[SweepRow], hash: &str) -> Result<(), ReportError> {
    let mut out = String::new();
    out.push_str(&format!(
        "# holonomy-lab {TOOL_VERSION} options_hash={hash}\n"
    ));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.c, r.a.re, r.a.im, r.b.re, r.b.im, r.energy.re, r.energy.im, r.drift
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a sweep CSV back; returns the embedded options hash and the rows.
pub fn read_csv(path: &Path) -> Result<(String, Vec<SweepRow>), ReportError> {
    let text = std::fs::read_to_string(path)?;
    let mut hash = String::new();
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('#') {
            if let Some(h) = line.split("options_hash=").nth(1) {
                hash = h.trim().to_string();
            }
            continue;
        }
        if line == CSV_HEADER || line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| ReportError::MalformedCsv {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
        if fields.len() != 8 {
            return Err(ReportError::MalformedCsv {
                line: lineno + 1,
                reason: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        rows.push(SweepRow {
            c: fields[0],
            a: Complex64::new(fields[1], fields[2]),
            b: Complex64::new(fields[3], fields[4]),
            energy: Complex64::new(fields[5], fields[6]),
            drift: fields[7],
        });
    }
    Ok((hash, rows))
}

/// Write a pretty-printed JSON value with the options hash injected at the
/// top level (the value must be an object).
pub fn write_json(
    path: &Path,
    mut value: serde_json::Value,
    hash: &str,
) -> Result<(), ReportError> {
    if let Some(obj) = value.as_object_mut() {
        obj.insert(
            "tool_version".into(),
            serde_json::Value::String(TOOL_VERSION.into()),
        );
        obj.insert(
            "options_hash".into(),
            serde_json::Value::String(hash.into()),
        );
    }
    let mut f = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(&value).expect("json serialization");
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const SERIES_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// A named (x, y) series for plotting.
pub struct Series<'a> {
    pub label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

/// Static polyline plot with axes and min/max labels; no timestamps, fully
/// deterministic.
pub fn write_svg(
    path: &Path,
    title: &str,
    series: &[Series<'_>],
    hash: &str,
) -> Result<(), ReportError> {
    let finite = |v: &f64| v.is_finite();
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for x in s.xs.iter().filter(|v| finite(v)) {
            x_min = x_min.min(*x);
            x_max = x_max.max(*x);
        }
        for y in s.ys.iter().filter(|v| finite(v)) {
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
    }
    // Degenerate or empty ranges (including all-NaN input) get unit extent.
    if x_min.partial_cmp(&x_max) != Some(std::cmp::Ordering::Less) {
        x_max = x_min + 1.0;
    }
    if y_min.partial_cmp(&y_max) != Some(std::cmp::Ordering::Less) {
        y_max = y_min + 1.0;
    }
    let sx = (SVG_W - MARGIN_L - MARGIN_R) / (x_max - x_min);
    let sy = (SVG_H - MARGIN_T - MARGIN_B) / (y_max - y_min);
    let px = |x: f64| MARGIN_L + (x - x_min) * sx;
    let py = |y: f64| SVG_H - MARGIN_B - (y - y_min) * sy;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    ));
    svg.push_str(&format!(
        "<!-- holonomy-lab {TOOL_VERSION} options_hash={hash} -->\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        SVG_W / 2.0,
        xml_escape(title)
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_L,
        r = SVG_W - MARGIN_R,
        t = MARGIN_T,
        b = SVG_H - MARGIN_B
    ));
    for (x, anchor, label) in [
        (MARGIN_L, "start", x_min),
        (SVG_W - MARGIN_R, "end", x_max),
    ] {
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"{anchor}\">{label:.6e}</text>\n",
            SVG_H - MARGIN_B + 20.0
        ));
    }
    for (y, label) in [(SVG_H - MARGIN_B, y_min), (MARGIN_T, y_max)] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{label:.6e}</text>\n",
            MARGIN_L - 6.0,
            y + 4.0
        ));
    }
    for (si, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[si % SERIES_COLORS.len()];
        let mut points = String::new();
        for (x, y) in s.xs.iter().zip(s.ys).filter(|(x, y)| finite(x) && finite(y)) {
            points.push_str(&format!("{:.2},{:.2} ", px(*x), py(*y)));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            MARGIN_L + 10.0,
            MARGIN_T + 16.0 * (si + 1) as f64,
            xml_escape(s.label)
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_hash_is_stable_and_distinct() {
        let h1 = options_hash("curve=line.json;t=1;c=0,10,100;spacing=linear");
        let h2 = options_hash("curve=line.json;t=1;c=0,10,100;spacing=linear");
        let h3 = options_hash("curve=line.json;t=2;c=0,10,100;spacing=linear");
        assert_eq!(h1, h2);
        assert_ne!(h1, h3);
        assert_eq!(h1.len(), 16);
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows: Vec<SweepRow> = (0..10)
            .map(|k| SweepRow {
                c: 0.1 * k as f64 + 1.0 / 3.0,
                a: Complex64::new((k as f64).sin(), (k as f64).cos()),
                b: Complex64::new(1.0 / (k as f64 + 7.0), -2.0f64.sqrt() * k as f64),
                energy: Complex64::new(1e-15 * k as f64, -3.0),
                drift: 1e-16 * k as f64,
            })
            .collect();
        write_csv(&path, &rows, "deadbeefdeadbeef").unwrap();
        let (hash, back) = read_csv(&path).unwrap();
        assert_eq!(hash, "deadbeefdeadbeef");
        assert_eq!(rows.len(), back.len());
        for (r, s) in rows.iter().zip(&back) {
            // Bit-exact round trip of binary64 via 17 significant digits.
            assert_eq!(r, s);
        }
    }

    #[test]
    fn csv_rejects_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, format!("{CSV_HEADER}\n1.0,2.0,nope,4,5,6,7,8\n")).unwrap();
        assert!(matches!(
            read_csv(&path),
            Err(ReportError::MalformedCsv { line: 2, .. })
        ));
    }

    #[test]
    fn svg_is_deterministic_and_tagged() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.svg");
        let p2 = dir.path().join("b.svg");
        let xs: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (0.2 * x).sin()).collect();
        let series = [Series { label: "|b|", xs: &xs, ys: &ys }];
        write_svg(&p1, "test plot", &series, "cafe0000cafe0000").unwrap();
        write_svg(&p2, "test plot", &series, "cafe0000cafe0000").unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
        let text = String::from_utf8(b1).unwrap();
        assert!(text.contains("options_hash=cafe0000cafe0000"));
        assert!(text.contains("<polyline"));
    }

    #[test]
    fn json_gets_version_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdict.json");
        write_json(
            &path,
            serde_json::json!({"verdict": "Inconclusive"}),
            "0123456789abcdef",
        )
        .unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["options_hash"], "0123456789abcdef");
        assert_eq!(v["tool_version"], TOOL_VERSION);
        assert_eq!(v["verdict"], "Inconclusive");
    }
}
