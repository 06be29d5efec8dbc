//! Metrics, reference and comparison CSV files.
//!
//! Numbers are written with 6 significant digits in fixed notation. The
//! slice table produced by `inspect` carries one row per slice; the per-via
//! depth and diameter travel in a `<stem>.summary.csv` sidecar next to it.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrology::{ComparisonReport, Reference, ViaMeasurement};

pub const MEASUREMENT_HEADER: [&str; 6] = [
    "via_id",
    "level_um",
    "center_x_um",
    "center_y_um",
    "radius_um",
    "roundness_um",
];
pub const SUMMARY_HEADER: [&str; 3] = ["via_id", "depth_um", "diameter_um"];
pub const REFERENCE_HEADER: [&str; 3] = ["via_id", "ref_depth_um", "ref_diam_um"];
pub const COMPARISON_HEADER: [&str; 7] = [
    "via_id",
    "ref_depth_um",
    "meas_depth_um",
    "depth_err_pct",
    "ref_diam_um",
    "meas_diam_um",
    "diam_err_pct",
];
/// `via_id` of the trailing mean-absolute-error row in comparison files.
pub const MAPE_ROW: &str = "MAPE";

/// Six significant digits, never exponent notation.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let mut exp = x.abs().log10().floor() as i32;
    let decimals = |e: i32| (5 - e).max(0) as usize;
    let mut s = format!("{:.*}", decimals(exp), x);
    // rounding can carry into the next decade (9.999996 -> 10.00000)
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded.abs() >= 10f64.powi(exp + 1) {
        exp += 1;
        s = format!("{:.*}", decimals(exp), x);
    }
    if s.trim_start_matches('-')
        .trim_matches(['0', '.'])
        .is_empty()
    {
        return "0.00000".to_string();
    }
    s
}

fn writer() -> ::csv::Writer<Vec<u8>> {
    ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: ::csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("csv output is ascii")
}

fn write_row<I, S>(w: &mut ::csv::Writer<Vec<u8>>, row: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).expect("in-memory writer cannot fail");
}

/// One row per slice profile; `via_id` counts from 0 in tile order.
pub fn measurements_csv(measurements: &[ViaMeasurement]) -> String {
    let mut w = writer();
    write_row(&mut w, MEASUREMENT_HEADER);
    for (id, m) in measurements.iter().enumerate() {
        for p in &m.profiles {
            write_row(
                &mut w,
                [
                    id.to_string(),
                    format_sig6(p.level),
                    format_sig6(p.circle.cx),
                    format_sig6(p.circle.cy),
                    format_sig6(p.circle.r),
                    format_sig6(p.roundness),
                ],
            );
        }
    }
    finish(w)
}

pub fn summary_csv(measurements: &[ViaMeasurement]) -> String {
    let mut w = writer();
    write_row(&mut w, SUMMARY_HEADER);
    for (id, m) in measurements.iter().enumerate() {
        write_row(
            &mut w,
            [
                id.to_string(),
                format_sig6(m.depth),
                format_sig6(m.diameter),
            ],
        );
    }
    finish(w)
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut w = writer();
    write_row(&mut w, COMPARISON_HEADER);
    for (id, r) in report.rows.iter().enumerate() {
        write_row(
            &mut w,
            [
                id.to_string(),
                format_sig6(r.ref_depth),
                format_sig6(r.meas_depth),
                format_sig6(r.depth_err_pct),
                format_sig6(r.ref_diameter),
                format_sig6(r.meas_diameter),
                format_sig6(r.diameter_err_pct),
            ],
        );
    }
    if !report.rows.is_empty() {
        write_row(
            &mut w,
            [
                MAPE_ROW.to_string(),
                String::new(),
                String::new(),
                format_sig6(report.depth_mape),
                String::new(),
                String::new(),
                format_sig6(report.diameter_mape),
            ],
        );
    }
    finish(w)
}

pub fn reference_csv(references: &[Reference]) -> String {
    let mut w = writer();
    write_row(&mut w, REFERENCE_HEADER);
    for (id, r) in references.iter().enumerate() {
        write_row(
            &mut w,
            [
                id.to_string(),
                format_sig6(r.depth),
                format_sig6(r.diameter),
            ],
        );
    }
    finish(w)
}

/// `metrics.csv` -> `metrics.summary.csv`
pub fn summary_path(metrics: &Path) -> PathBuf {
    let stem = metrics
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    metrics.with_file_name(format!("{stem}.summary.csv"))
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv(format!("{}: {e}", path.display()))
}

/// Rows of `(via_id, values)` checked against an exact header.
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = ::csv::ReaderBuilder::new()
        .trim(::csv::Trim::All)
        .from_reader(&bytes[..]);
    let got = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(csv_err(
            path,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let id: usize = record[0].parse().map_err(|_| {
            csv_err(
                path,
                format!("row {}: bad via_id `{}`", line + 1, &record[0]),
            )
        })?;
        let values = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| csv_err(path, format!("row {}: bad number `{v}`", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, values));
    }
    for (expected, (id, _)) in rows.iter().enumerate() {
        if *id != expected {
            return Err(csv_err(
                path,
                format!("via ids must run 0, 1, 2, ... (found {id} at {expected})"),
            ));
        }
    }
    Ok(rows)
}

pub fn read_references(path: &Path) -> Result<Vec<Reference>> {
    Ok(read_table(path, &REFERENCE_HEADER)?
        .into_iter()
        .map(|(_, v)| Reference {
            depth: v[0],
            diameter: v[1],
        })
        .collect())
}

/// `(depth, diameter)` per via from a summary sidecar.
pub fn read_summary(path: &Path) -> Result<Vec<(f64, f64)>> {
    Ok(read_table(path, &SUMMARY_HEADER)?
        .into_iter()
        .map(|(_, v)| (v[0], v[1]))
        .collect())
}
