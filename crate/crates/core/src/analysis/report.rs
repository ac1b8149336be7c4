//! CSV result rows shared by bounds, curves and simulations.
//!
//! Files start with a single `# generated_at_unix=<seconds>` comment line;
//! everything after it is a plain CSV body with a header row, and depends
//! only on the inputs.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    #[default]
    Exact,
    UpperBound,
    LowerBound,
    Simulated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Average delay in hops.
    #[default]
    Delay,
    /// Fitted log-log slope of delay against the swept parameter.
    Slope,
}

/// One line of the results CSV. The first eight columns are the analysis
/// schema; simulations add `seed`, `slots` and `policy_dynamic`; the rest is
/// provenance for re-running a single point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub policy: String,
    pub alpha: f64,
    #[serde(rename = "C")]
    pub content_count: usize,
    pub s: usize,
    pub d: Option<f64>,
    pub d_bar: Option<f64>,
    pub value: f64,
    pub kind: ValueKind,
    pub seed: Option<u64>,
    pub slots: Option<usize>,
    pub policy_dynamic: bool,
    pub plan: String,
    pub point: Option<usize>,
    pub scenario: String,
    pub topology: String,
    pub n: Option<usize>,
    pub cut_layer: Option<usize>,
    pub ci95: Option<f64>,
    pub metric: Metric,
}

/// Writes the header and rows without the timestamp line.
pub fn write_rows_to<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

const HEADER: [&str; 19] = [
    "policy",
    "alpha",
    "C",
    "s",
    "d",
    "d_bar",
    "value",
    "kind",
    "seed",
    "slots",
    "policy_dynamic",
    "plan",
    "point",
    "scenario",
    "topology",
    "n",
    "cut_layer",
    "ci95",
    "metric",
];

/// Writes a results file with a leading timestamp comment.
pub fn write_rows(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<()> {
    let path = path.as_ref();
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut buf = format!("# generated_at_unix={stamp}\n").into_bytes();
    write_rows_to(&mut buf, rows)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads a results file, skipping comment lines.
pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(file);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_serialized_fields() {
        let mut buf = Vec::new();
        write_rows_to(&mut buf, &[ResultRow::default()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
        assert!(text.starts_with("policy,alpha,C,s,d,d_bar,value,kind,seed,slots,policy_dynamic"));

        let mut empty = Vec::new();
        write_rows_to(&mut empty, &[]).unwrap();
        assert_eq!(
            String::from_utf8(empty).unwrap().trim_end(),
            HEADER.join(",")
        );
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let rows = vec![
            ResultRow {
                policy: "URP".into(),
                alpha: 1.5,
                content_count: 400,
                s: 50,
                d: Some(66.0),
                value: 7.9,
                ..Default::default()
            },
            ResultRow {
                policy: "LRU".into(),
                kind: ValueKind::Simulated,
                seed: Some(3),
                slots: Some(1000),
                policy_dynamic: true,
                ci95: Some(0.1),
                ..Default::default()
            },
        ];
        write_rows(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# generated_at_unix="));
        assert_eq!(read_rows(&path).unwrap(), rows);
    }
}
