//! Dataset ingestion (numeric CSV, PGM images) and result persistence
//! (label maps, segmented images, JSON reports, CSV tables).
//!
//! Every writer goes through a temporary file and an atomic rename, so a
//! failed command never leaves partial output behind.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ComparisonTable, SensitivityResult};
use crate::model::{ClusterState, Dataset, RunReport};

/// Options for [`read_csv_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: char,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: ',',
            has_header: false,
        }
    }
}

/// Hard cluster labels, optionally tied to an image grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub labels: Vec<usize>,
    pub k: usize,
    pub image_shape: Option<(usize, usize)>,
}

impl LabelMap {
    pub fn from_state(state: &ClusterState, image_shape: Option<(usize, usize)>) -> Self {
        LabelMap {
            labels: state.assignments().to_vec(),
            k: state.k(),
            image_shape,
        }
    }
}

/// Reads a numeric feature table: rows become elements, columns features.
pub fn read_csv_dataset(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_idx, line) in content.lines().enumerate() {
        if line_idx == 0 && options.has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col_idx, field) in line.split(options.delimiter).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::ParseError {
                line: line_idx + 1,
                column: col_idx + 1,
            })?;
            row.push(value);
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::RaggedDimensions {
                    index: rows.len(),
                    expected: w,
                    found: row.len(),
                });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    crate::model::validate_dataset(&rows)
}

/// Reads an ASCII (P2) or binary (P5) PGM image into a one-dimensional
/// dataset of intensities on the original scale, row-major, with the image
/// shape recorded.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = PgmCursor::new(&bytes);
    let magic = cursor
        .token()
        .ok_or_else(|| Error::UnsupportedFormat("missing magic number".into()))?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(Error::UnsupportedFormat(other.into())),
    };
    let width = cursor.header_number("width")?;
    let height = cursor.header_number("height")?;
    let maxval = cursor.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::CorruptHeader("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65_535 {
        return Err(Error::CorruptHeader(format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the samples
        let data = cursor.binary_payload()?;
        let wide = maxval > 255;
        let needed = n * if wide { 2 } else { 1 };
        if data.len() < needed {
            return Err(Error::CorruptHeader(format!(
                "truncated pixel data: expected {needed} bytes, found {}",
                data.len()
            )));
        }
        if wide {
            for pair in data[..needed].chunks_exact(2) {
                let v = u16::from_be_bytes([pair[0], pair[1]]) as usize;
                if v > maxval {
                    return Err(Error::CorruptHeader(format!(
                        "sample {v} exceeds maxval {maxval}"
                    )));
                }
                values.push(v as f64);
            }
        } else {
            for &b in &data[..needed] {
                let v = b as usize;
                if v > maxval {
                    return Err(Error::CorruptHeader(format!(
                        "sample {v} exceeds maxval {maxval}"
                    )));
                }
                values.push(v as f64);
            }
        }
    } else {
        for _ in 0..n {
            let v = cursor.header_number("sample")?;
            if v > maxval {
                return Err(Error::CorruptHeader(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            values.push(v as f64);
        }
    }
    Dataset::from_flat(values, 1)?.with_image_shape(height, width)
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        PgmCursor { bytes, pos: 0 }
    }

    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Option<String> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        let token = self
            .token()
            .ok_or_else(|| Error::CorruptHeader(format!("missing {what}")))?;
        token
            .parse()
            .map_err(|_| Error::CorruptHeader(format!("invalid {what}: {token:?}")))
    }

    fn binary_payload(&mut self) -> Result<&'a [u8]> {
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_whitespace() {
            return Err(Error::CorruptHeader(
                "missing separator before pixel data".into(),
            ));
        }
        self.pos += 1;
        Ok(&self.bytes[self.pos..])
    }
}

/// Writes a binary PGM where every pixel takes its cluster's centroid
/// intensity, rounded to the nearest integer and clamped to the sample range.
pub fn write_segmented_pgm(
    path: impl AsRef<Path>,
    labels: &LabelMap,
    centroids: &[Vec<f64>],
) -> Result<()> {
    let path = path.as_ref();
    let (height, width) = labels.image_shape.ok_or(Error::NoImageShape)?;
    if centroids.len() != labels.k {
        return Err(Error::CenterCountMismatch {
            k: labels.k,
            given: centroids.len(),
        });
    }
    for c in centroids {
        if c.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: c.len(),
            });
        }
    }
    let rounded: Vec<i64> = centroids.iter().map(|c| c[0].round() as i64).collect();
    let maxval: usize = if rounded.iter().any(|&v| v > 255) {
        65_535
    } else {
        255
    };
    let mut out = Vec::with_capacity(32 + labels.labels.len() * 2);
    out.extend_from_slice(format!("P5\n{width} {height}\n{maxval}\n").as_bytes());
    for &label in &labels.labels {
        let v = rounded[label].clamp(0, maxval as i64) as u16;
        if maxval > 255 {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    write_atomic(path, &out)
}

/// Serializes a full run report; reading it back reproduces the report
/// exactly because floats are written in shortest round-trip form.
pub fn write_report_json(path: impl AsRef<Path>, report: &RunReport) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_vec_pretty(report).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    write_atomic(path, &json)
}

/// Reads a report previously written by [`write_report_json`].
pub fn read_report_json(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

/// Writes hard labels as a two-column CSV: element id, cluster label.
pub fn write_labels_csv(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let mut out = String::from("element,label\n");
    for (i, &label) in labels.labels.iter().enumerate() {
        let _ = writeln!(out, "{i},{label}");
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

fn fmt_cell(cell: &Option<f64>) -> String {
    match cell {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// Comparison table CSV: one row per dataset, one column per algorithm,
/// absent cells empty, the per-row minimum named in a trailing column.
pub fn write_comparison_csv(path: impl AsRef<Path>, table: &ComparisonTable) -> Result<()> {
    let mut out = String::from("dataset");
    for algo in &table.algorithms {
        let _ = write!(out, ",{algo}");
    }
    out.push_str(",min\n");
    for row in &table.rows {
        let _ = write!(out, "{}", row.dataset);
        for cell in &row.cells {
            let _ = write!(out, ",{}", fmt_cell(cell));
        }
        let min = row
            .min_index
            .map(|i| table.algorithms[i].name())
            .unwrap_or("");
        let _ = writeln!(out, ",{min}");
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Per-trial MSE series: one row per trial ordered by trial index, one
/// column per algorithm, the per-trial minimum named in a trailing column.
pub fn write_sensitivity_series_csv(
    path: impl AsRef<Path>,
    result: &SensitivityResult,
) -> Result<()> {
    let mut out = String::from("trial,seed");
    for algo in &result.algorithms {
        let _ = write!(out, ",{algo}");
    }
    out.push_str(",min\n");
    for trial in &result.trials {
        let _ = write!(out, "{},{}", trial.trial_index, trial.seed);
        for cell in &trial.final_mse {
            let _ = write!(out, ",{}", fmt_cell(cell));
        }
        let min = crate::metrics::row_minimum(&trial.final_mse)
            .map(|i| result.algorithms[i].name())
            .unwrap_or("");
        let _ = writeln!(out, ",{min}");
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Box-plot statistics per algorithm: count, mean, std and the five-number
/// summary.
pub fn write_sensitivity_summary_csv(
    path: impl AsRef<Path>,
    result: &SensitivityResult,
) -> Result<()> {
    let mut out = String::from("algorithm,count,mean,std,min,q1,median,q3,max\n");
    for (algo, summary) in result.algorithms.iter().zip(&result.per_algorithm_summary) {
        match summary {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{algo},{},{},{},{},{},{},{},{}",
                    s.count, s.mean, s.std, s.min, s.q1, s.median, s.q3, s.max
                );
            }
            None => {
                let _ = writeln!(out, "{algo},0,,,,,,,");
            }
        }
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| Error::io(path, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
