//! File formats for metric spaces.
//!
//! * points CSV: one point per row, columns are coordinates, optional header
//!   row, lines starting with `#` are comments;
//! * distance-matrix CSV: `n` rows of `n` comma-separated distances;
//! * distance-matrix JSON: `{"n": <int>, "dist": [[...], ...]}` with an
//!   optional `"labels"` array.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FiniteMetricSpace, MetricError, DEFAULT_TRIANGLE_TOLERANCE};

/// Fixed 17-significant-digit rendering used by every file writer.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn parse_rows<R: Read>(reader: R, allow_header: bool) -> Result<Vec<Vec<f64>>, MetricError> {
    let mut rows = Vec::new();
    for (line, record) in csv_reader(reader).records().enumerate() {
        let record = record.map_err(|e| MetricError::Parse(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if allow_header && line == 0 && rows.is_empty() => continue,
            Err(e) => {
                return Err(MetricError::Parse(format!(
                    "record {}: {e}",
                    line + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(rows)
}

/// Read a point cloud; the first row is treated as a header when it does
/// not parse as numbers.
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>, MetricError> {
    parse_rows(reader, true)
}

pub fn read_matrix_csv<R: Read>(reader: R, tolerance: f64) -> Result<FiniteMetricSpace, MetricError> {
    let rows = parse_rows(reader, false)?;
    FiniteMetricSpace::from_rows(&rows, tolerance)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDocument {
    n: usize,
    dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

pub fn read_matrix_json<R: Read>(reader: R, tolerance: f64) -> Result<FiniteMetricSpace, MetricError> {
    let doc: MatrixDocument =
        serde_json::from_reader(reader).map_err(|e| MetricError::Parse(e.to_string()))?;
    if doc.dist.len() != doc.n {
        return Err(MetricError::Parse(format!(
            "\"n\" is {} but \"dist\" has {} rows",
            doc.n,
            doc.dist.len()
        )));
    }
    let space = FiniteMetricSpace::from_rows(&doc.dist, tolerance)?;
    match doc.labels {
        Some(l) => space.with_labels(l),
        None => Ok(space),
    }
}

/// Input flavours accepted by [`load_space`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Points,
    Matrix,
}

/// Load a space from disk. JSON files are always distance matrices; CSV
/// files are point clouds unless `kind` says otherwise.
pub fn load_space(path: &Path, kind: Option<InputKind>) -> Result<FiniteMetricSpace, MetricError> {
    let file = std::fs::File::open(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        return read_matrix_json(file, DEFAULT_TRIANGLE_TOLERANCE);
    }
    match kind.unwrap_or(InputKind::Points) {
        InputKind::Points => FiniteMetricSpace::from_points(read_points_csv(file)?),
        InputKind::Matrix => read_matrix_csv(file, DEFAULT_TRIANGLE_TOLERANCE),
    }
}

pub fn write_points_csv<W: Write>(mut w: W, points: &[Vec<f64>]) -> std::io::Result<()> {
    for p in points {
        let row: Vec<String> = p.iter().map(|&x| format_f64(x)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_csv<W: Write>(mut w: W, space: &FiniteMetricSpace) -> std::io::Result<()> {
    let n = space.len();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format_f64(space.dist(i, j))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_json<W: Write>(w: W, space: &FiniteMetricSpace) -> std::io::Result<()> {
    let n = space.len();
    let doc = MatrixDocument {
        n,
        dist: (0..n)
            .map(|i| (0..n).map(|j| space.dist(i, j)).collect())
            .collect(),
        labels: space.labels().map(<[String]>::to_vec),
    };
    serde_json::to_writer(w, &doc).map_err(std::io::Error::other)
}
