//! Text formats: distribution tables, score tables, USPS-style datasets,
//! and CSV output.

use std::path::Path;
use std::str::FromStr;

use crate::domain::{FiniteJoint, LabelId, ScoreTable};
use crate::error::{Error, Result};
use crate::knn::FeatureVector;
use crate::numeric::{Rational, Scalar};
use crate::transducer::Example;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads `x,y,value` rows (0-based ids, `#` comments, optional header).
/// Cells that never appear are zero.
fn read_cells(text: &str) -> Result<(usize, usize, Vec<Rational>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut cells: Vec<(usize, usize, Rational, usize)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, got {}", record.len())));
        }
        let (x, y) = match (record[0].parse::<usize>(), record[1].parse::<usize>()) {
            (Ok(x), Ok(y)) => (x, y),
            _ if i == 0 => continue,
            _ => return Err(parse_err(line, format!("bad ids `{}`, `{}`", &record[0], &record[1]))),
        };
        let v = Rational::from_str(&record[2]).map_err(|e| parse_err(line, e.to_string()))?;
        if let Some(c) = cells.iter().find(|c| c.0 == x && c.1 == y) {
            return Err(parse_err(line, format!("cell ({x}, {y}) already given at line {}", c.3)));
        }
        cells.push((x, y, v, line));
    }
    if cells.is_empty() {
        return Err(parse_err(0, "no cells"));
    }
    let nx = cells.iter().map(|c| c.0).max().expect("non-empty") + 1;
    let ny = cells.iter().map(|c| c.1).max().expect("non-empty") + 1;
    let mut values = vec![<Rational as Scalar>::zero(); nx * ny];
    for (x, y, v, _) in cells {
        values[x * ny + y] = v;
    }
    Ok((nx, ny, values))
}

/// Parses a distribution file with rows `x,y,prob`.
pub fn parse_joint(text: &str) -> Result<FiniteJoint<Rational>> {
    let (nx, ny, probs) = read_cells(text)?;
    FiniteJoint::new(nx, ny, probs)
}

/// Parses a conformity measure file with rows `x,y,score`.
pub fn parse_scores(text: &str) -> Result<ScoreTable<Rational>> {
    let (nx, ny, scores) = read_cells(text)?;
    ScoreTable::new(nx, ny, scores)
}

/// Rows `x,y,prob` for every cell, with a header.
pub fn format_joint(joint: &FiniteJoint<Rational>) -> String {
    let mut out = String::from("x,y,prob\n");
    for x in 0..joint.n_objects() {
        for y in 0..joint.n_labels() {
            out.push_str(&format!("{x},{y},{}\n", joint.prob(x, y)));
        }
    }
    out
}

/// Parses `label v1 v2 …` lines; every line must have the same dimension,
/// `dim` when given, and labels must lie in 0..=9.
pub fn parse_usps(text: &str, dim: Option<usize>) -> Result<Vec<Example<FeatureVector>>> {
    let mut out = Vec::new();
    let mut expected = dim;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut fields = raw.split_whitespace();
        let label_field = fields.next().expect("non-empty line");
        let label: usize = label_field.parse().map_err(|_| parse_err(line, format!("bad label `{label_field}`")))?;
        if label > 9 {
            return Err(parse_err(line, format!("label {label} outside 0..=9")));
        }
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(line, format!("bad value `{f}`"))))
            .collect::<Result<Vec<f64>>>()?;
        match expected {
            Some(d) if d != values.len() => {
                return Err(parse_err(line, format!("expected {d} values, got {}", values.len())));
            }
            None => expected = Some(values.len()),
            _ => {}
        }
        let v = FeatureVector::new(values).map_err(|e| parse_err(line, e.to_string()))?;
        out.push(Example::new(v, LabelId(label)));
    }
    Ok(out)
}

pub fn format_usps(data: &[Example<FeatureVector>]) -> String {
    let mut out = String::new();
    for z in data {
        out.push_str(&z.label.0.to_string());
        for v in z.object.values() {
            out.push(' ');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// 17 significant digits, enough to round-trip.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
