//! Feature CSV (`t,f0,f1,...`), annotation files and probe files.

use std::io::{Read, Write};

use super::{FeatureSeries, StaterecError};

pub fn read_features(reader: impl Read) -> Result<FeatureSeries, StaterecError> {
    let fmt = |e: csv::Error| StaterecError::Format(e.to_string());
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(fmt)?.clone();
    let dim = header.len().saturating_sub(1);
    if header.get(0) != Some("t") || dim == 0 {
        return Err(StaterecError::Format(
            "header must be t,f0,f1,...".to_string(),
        ));
    }
    for (j, name) in header.iter().skip(1).enumerate() {
        if name != format!("f{j}") {
            return Err(StaterecError::Format(format!(
                "column {} must be named f{j}, found `{name}`",
                j + 1
            )));
        }
    }
    let mut timestamps = Vec::new();
    let mut features = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(fmt)?;
        if rec.len() != dim + 1 {
            return Err(StaterecError::DimensionMismatch {
                expected: dim,
                got: rec.len().saturating_sub(1),
            });
        }
        let num = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| {
                StaterecError::Format(format!("row {}: `{s}` is not a number", i + 1))
            })
        };
        timestamps.push(num(&rec[0])?);
        features.push(rec.iter().skip(1).map(num).collect::<Result<Vec<_>, _>>()?);
    }
    FeatureSeries::new(timestamps, features)
}

pub fn write_features(series: &FeatureSeries, writer: impl Write) -> Result<(), StaterecError> {
    let fmt = |e: csv::Error| StaterecError::Format(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((0..series.dim()).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(fmt)?;
    for (t, row) in series.timestamps().iter().zip(series.features()) {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(fmt)?;
    }
    w.flush()
        .map_err(|e| StaterecError::Format(e.to_string()))
}

/// Annotation files hold one number: the change time in seconds.
pub fn parse_annotation(text: &str) -> Result<f64, StaterecError> {
    let t = text.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| StaterecError::Format(format!("annotation `{t}` is not a time")))
}

pub fn format_annotation(time: f64) -> String {
    format!("{time}\n")
}
