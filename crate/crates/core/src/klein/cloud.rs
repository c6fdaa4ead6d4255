//! Point-cloud CSV files.
//!
//! The first line is a header `dim=<n>,model=<klein|poincare|hyperboloid>`,
//! followed by one point per row. Klein and Poincaré rows carry `n` columns;
//! hyperboloid rows carry `n+1` columns `(x0, x1, ..., xn)`. Everything is
//! converted to Klein coordinates on load.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::KleinPoint;
use crate::error::{HypError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudModel {
    Klein,
    Poincare,
    Hyperboloid,
}

impl FromStr for CloudModel {
    type Err = HypError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "klein" => Ok(CloudModel::Klein),
            "poincare" => Ok(CloudModel::Poincare),
            "hyperboloid" => Ok(CloudModel::Hyperboloid),
            other => Err(HypError::Parse { line: 1, message: format!("unknown model '{other}'") }),
        }
    }
}

fn parse_header(fields: &csv::StringRecord) -> Result<(usize, CloudModel)> {
    let mut dim = None;
    let mut model = None;
    for f in fields.iter() {
        let (key, value) = f
            .split_once('=')
            .ok_or_else(|| HypError::Parse { line: 1, message: format!("malformed header field '{f}'") })?;
        match key.trim() {
            "dim" => {
                dim = Some(value.trim().parse::<usize>().map_err(|e| HypError::Parse { line: 1, message: e.to_string() })?)
            }
            "model" => model = Some(value.parse::<CloudModel>()?),
            other => return Err(HypError::Parse { line: 1, message: format!("unknown header key '{other}'") }),
        }
    }
    match (dim, model) {
        (Some(d), Some(m)) => Ok((d, m)),
        _ => Err(HypError::Parse { line: 1, message: "header must be dim=<n>,model=<...>".into() }),
    }
}

pub fn parse_point_cloud<R: Read>(reader: R) -> Result<Vec<KleinPoint>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| HypError::Parse { line: 1, message: "empty file".into() })??;
    let (dim, model) = parse_header(&header)?;
    let width = if model == CloudModel::Hyperboloid { dim + 1 } else { dim };
    let mut points = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != width {
            return Err(HypError::Parse { line, message: format!("expected {width} columns, got {}", rec.len()) });
        }
        let row: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| HypError::Parse { line, message: e.to_string() }))
            .collect::<Result<_>>()?;
        let p = match model {
            CloudModel::Klein => KleinPoint::new(row),
            CloudModel::Poincare => KleinPoint::from_poincare(&row),
            CloudModel::Hyperboloid => KleinPoint::from_hyperboloid(&row),
        }
        .map_err(|e| HypError::Parse { line, message: e.to_string() })?;
        points.push(p);
    }
    Ok(points)
}

pub fn read_point_cloud(path: &Path) -> Result<Vec<KleinPoint>> {
    parse_point_cloud(std::fs::File::open(path)?)
}

/// Writes Klein coordinates with the standard header.
pub fn write_point_cloud<W: Write>(writer: W, points: &[KleinPoint]) -> Result<()> {
    let dim = points.first().map(|p| p.dim()).unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    w.write_record([format!("dim={dim}"), "model=klein".to_string()])?;
    for p in points {
        w.write_record(p.coords().iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
