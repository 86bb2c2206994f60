//! Sweep artifacts: JSON and CSV rows, a markdown exceptions table and SVG
//! disc plots over the weight plane.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plasticity::PlasticDomain;
use crate::sweep::{Study, SweepRow, ThresholdFit};

/// Serde helper for values that may be `+inf`, which JSON cannot hold. They
/// are written as `null` and read back as `+inf`.
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            s.serialize_f64(*value)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Column order of the CSV mirror.
pub const CSV_HEADER: [&str; 16] = [
    "study", "k1", "k2", "domain", "c1", "c2", "c3", "c4", "c5", "F", "R", "G", "C", "value",
    "label", "cluster",
];

fn csv_header() -> &'static [&'static str] {
    &CSV_HEADER
}

pub fn write_rows_json(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(rows)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_rows_json(path: &Path) -> Result<Vec<SweepRow>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Ten significant digits, so a value survives the round trip to within
/// `5e-10` relative.
fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9e}")
    } else {
        "inf".to_string()
    }
}

/// Rows as CSV with a fixed column order.
pub fn render_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header())?;
    for r in rows {
        let mut record = vec![
            r.study.to_string(),
            sci(r.k1),
            sci(r.k2),
            r.domain.to_string(),
        ];
        record.extend(r.c.iter().map(|&x| sci(x)));
        record.extend(
            [r.force, r.resistance, r.conductance, r.cost, r.value]
                .iter()
                .map(|&x| sci(x)),
        );
        record.push(r.label.clone());
        record.push(r.cluster.to_string());
        w.write_record(&record)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses what [`render_csv`] writes.
pub fn read_csv(reader: impl Read) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != csv_header() {
        return Err(Error::InvalidConfig(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("column {}: {e}", csv_header()[i])))
        };
        rows.push(SweepRow {
            study: record[0].parse()?,
            k1: num(1)?,
            k2: num(2)?,
            domain: record[3].parse()?,
            c: [num(4)?, num(5)?, num(6)?, num(7)?, num(8)?],
            force: num(9)?,
            resistance: num(10)?,
            conductance: num(11)?,
            cost: num(12)?,
            value: num(13)?,
            label: record[14].to_string(),
            cluster: record[15]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("column cluster: {e}")))?,
        });
    }
    Ok(rows)
}

/// Labels that are the expected outcome of their study. Anything else is an
/// exception.
fn is_expected(study: Study, label: &str) -> bool {
    match study {
        Study::A => matches!(label, "red" | "blue"),
        Study::B => label == "uniform",
        Study::C | Study::D => label == "base",
    }
}

/// Cells whose optimum departs from the study's regular pattern, one table
/// row each. Only the header is written when there are none.
pub fn render_exceptions(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str("| (k1,k2) | domain | (c1,c2,c3,c4,c5) | C | F | R | G | label |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in rows.iter().filter(|r| !is_expected(r.study, &r.label)) {
        let c: Vec<String> = r.c.iter().map(|x| format!("{x:.2}")).collect();
        let resistance = if r.resistance.is_finite() {
            format!("{:.2}", r.resistance)
        } else {
            "inf".into()
        };
        let _ = writeln!(
            out,
            "| ({},{}) | {} | ({}) | {:.2} | {:.2} | {} | {:.3} | {} |",
            r.k1,
            r.k2,
            r.domain,
            c.join(","),
            r.cost,
            r.force,
            resistance,
            r.conductance,
            r.label
        );
    }
    out
}

/// Writes the CSV to `csv_path` and the exceptions table next to it with a
/// `.md` extension. Returns the markdown path.
pub fn emit_tables(rows: &[SweepRow], csv_path: &Path) -> Result<PathBuf> {
    fs::write(csv_path, render_csv(rows)?)?;
    let md = csv_path.with_extension("md");
    fs::write(&md, render_exceptions(rows))?;
    Ok(md)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    /// Largest disc radius as a fraction of half the grid spacing.
    pub radius_scale: f64,
    pub colors: BTreeMap<String, String>,
    pub k1_range: (f64, f64),
    pub k2_range: (f64, f64),
    pub thresholds: Vec<ThresholdFit>,
    /// Which domain's cells to draw; the first present when unset.
    pub domain: Option<PlasticDomain>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 64.0;

fn default_colors() -> BTreeMap<String, String> {
    [
        ("red", "#d62728"),
        ("blue", "#1f77b4"),
        ("degenerate", "#2ca02c"),
        ("uniform", "#1f77b4"),
        ("base", "#d62728"),
        ("elevated", "#1f77b4"),
        ("other", "#7f7f7f"),
        ("infeasible", "#000000"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl PlotSpec {
    /// Axis ranges padded by one grid step around the data, default colors.
    pub fn for_rows(rows: &[SweepRow]) -> Self {
        let range = |pick: fn(&SweepRow) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(pick).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            match (v.first(), v.last()) {
                (Some(&lo), Some(&hi)) => {
                    let pad = v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                    let pad = if pad.is_finite() { pad } else { 0.1 };
                    (lo - pad, hi + pad)
                }
                _ => (0.0, 1.0),
            }
        };
        Self {
            radius_scale: 0.9,
            colors: default_colors(),
            k1_range: range(|r| r.k1),
            k2_range: range(|r| r.k2),
            thresholds: Vec::new(),
            domain: None,
        }
    }

    pub fn with_threshold(mut self, fit: ThresholdFit) -> Self {
        self.thresholds.push(fit);
        self
    }

    pub fn validate(&self, rows: &[SweepRow]) -> Result<()> {
        if !(self.radius_scale > 0.0) {
            return Err(Error::InvalidConfig("radius scale must be positive".into()));
        }
        for (lo, hi) in [self.k1_range, self.k2_range] {
            if !(lo < hi) {
                return Err(Error::InvalidConfig(format!("empty axis range {lo}..{hi}")));
            }
        }
        if let Some(r) = rows.iter().find(|r| !self.colors.contains_key(&r.label)) {
            return Err(Error::InvalidConfig(format!("no color for label {:?}", r.label)));
        }
        Ok(())
    }
}

/// The rows drawn by [`render_svg`]: one domain, in input order.
pub fn plotted_rows<'a>(rows: &'a [SweepRow], spec: &PlotSpec) -> Vec<&'a SweepRow> {
    let domain = spec.domain.or_else(|| rows.first().map(|r| r.domain));
    rows.iter().filter(|r| Some(r.domain) == domain).collect()
}

/// Disc plot over the `(k1, k2)` plane. Disc radius is proportional to the
/// optimum value, color follows the label. Output bytes depend only on the
/// inputs.
pub fn render_svg(rows: &[SweepRow], spec: &PlotSpec) -> Result<String> {
    spec.validate(rows)?;
    let drawn = plotted_rows(rows, spec);
    let (x0, x1) = spec.k1_range;
    let (y0, y1) = spec.k2_range;
    let sx = |k1: f64| MARGIN + (k1 - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |k2: f64| HEIGHT - MARGIN - (k2 - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let spacing = |pick: fn(&SweepRow) -> f64, scale: f64| {
        let mut v: Vec<f64> = drawn.iter().map(|r| pick(r)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.windows(2)
            .map(|w| (w[1] - w[0]) * scale)
            .fold(f64::INFINITY, f64::min)
    };
    let px = spacing(|r| r.k1, (WIDTH - 2.0 * MARGIN) / (x1 - x0));
    let py = spacing(|r| r.k2, (HEIGHT - 2.0 * MARGIN) / (y1 - y0));
    let cell = px.min(py);
    let cell = if cell.is_finite() { cell } else { 40.0 };
    let vmax = drawn
        .iter()
        .map(|r| r.value.abs())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{:.3}" height="{:.3}"/></clipPath>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );

    // Axes with five ticks each.
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{MARGIN}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{:.3}"/></g>"#,
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN,
        HEIGHT - MARGIN
    );
    svg.push_str(r#"<g font-family="sans-serif" font-size="12" fill="black">"#);
    svg.push('\n');
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let k1 = x0 + t * (x1 - x0);
        let k2 = y0 + t * (y1 - y0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{k1:.3}</text>"#,
            sx(k1),
            HEIGHT - MARGIN + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{k2:.3}</text>"#,
            MARGIN - 6.0,
            sy(k2) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">k1</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.3}" text-anchor="middle" transform="rotate(-90 16 {:.3})">k2</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    svg.push_str("</g>\n");

    svg.push_str("<g stroke=\"none\">\n");
    for r in &drawn {
        let radius = if vmax > 0.0 && r.value.is_finite() {
            spec.radius_scale * cell / 2.0 * r.value.abs() / vmax
        } else {
            1.0
        };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="{}" fill-opacity="0.8" data-label="{}"/>"#,
            sx(r.k1),
            sy(r.k2),
            radius,
            spec.colors[&r.label],
            r.label
        );
    }
    svg.push_str("</g>\n");

    for fit in &spec.thresholds {
        let (a, b) = if fit.slope.is_infinite() {
            ((fit.intercept, y0), (fit.intercept, y1))
        } else {
            ((x0, fit.k2_at(x0)), (x1, fit.k2_at(x1)))
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="black" stroke-dasharray="6 4" clip-path="url(#plot)"/>"#,
            sx(a.0),
            sy(a.1),
            sx(b.0),
            sy(b.1)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg(rows: &[SweepRow], spec: &PlotSpec, path: &Path) -> Result<()> {
    fs::write(path, render_svg(rows, spec)?)?;
    Ok(())
}
