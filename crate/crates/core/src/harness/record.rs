use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::OutputFormat;
use crate::error::{Error, Result};

pub const HEADER: [&str; 12] = [
    "experiment",
    "trial",
    "user",
    "rank",
    "L",
    "alpha",
    "filter",
    "ordering",
    "power",
    "sinr",
    "utility",
    "flag",
];

/// One output row. Missing values are empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub trial: Option<usize>,
    pub user: Option<usize>,
    pub rank: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub alpha: Option<f64>,
    pub filter: Option<String>,
    pub ordering: String,
    pub power: Option<f64>,
    pub sinr: Option<f64>,
    pub utility: Option<f64>,
    pub flag: String,
}

impl ExperimentRecord {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            trial: None,
            user: None,
            rank: None,
            l: None,
            alpha: None,
            filter: None,
            ordering: "none".to_string(),
            power: None,
            sinr: None,
            utility: None,
            flag: String::new(),
        }
    }
}

/// Writes records to any sink.
pub fn write_records<W: Write>(records: &[ExperimentRecord], format: OutputFormat, sink: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
            w.write_record(HEADER)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()
        }
        OutputFormat::Json => {
            let mut sink = std::io::BufWriter::new(sink);
            for r in records {
                serde_json::to_writer(&mut sink, r)?;
                sink.write_all(b"\n")?;
            }
            sink.flush()
        }
    }
}

/// Writes records to `path`, or to standard output when `path` is `None`.
pub fn emit_records(records: &[ExperimentRecord], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let io = |source| Error::Io {
                path: p.to_path_buf(),
                source,
            };
            let file = std::fs::File::create(p).map_err(io)?;
            write_records(records, format, file).map_err(io)
        }
        None => write_records(records, format, std::io::stdout().lock()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ExperimentRecord> {
        let mut a = ExperimentRecord::new("theory-vs-sim");
        a.trial = Some(0);
        a.user = Some(3);
        a.l = Some(2);
        a.alpha = Some(0.125);
        a.filter = Some("mmse".into());
        a.power = Some(0.1);
        a.sinr = Some(6.4746);
        a.utility = Some(1.0 / 3.0);
        let mut b = a.clone();
        b.user = None;
        b.flag = "aggregate".into();
        vec![a, b]
    }

    fn csv_text(r: &[ExperimentRecord]) -> String {
        let mut buf = Vec::new();
        write_records(r, OutputFormat::Csv, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_csv_has_header_only() {
        assert_eq!(
            csv_text(&[]),
            "experiment,trial,user,rank,L,alpha,filter,ordering,power,sinr,utility,flag\n"
        );
    }

    #[test]
    fn csv_rows_round_trip_floats() {
        let text = csv_text(&sample());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "theory-vs-sim,0,3,,2,0.125,mmse,none,0.1,6.4746,0.3333333333333333,");
        assert_eq!(lines[2], "theory-vs-sim,0,,,2,0.125,mmse,none,0.1,6.4746,0.3333333333333333,aggregate");
    }

    #[test]
    fn json_lines_parse() {
        let mut buf = Vec::new();
        write_records(&sample(), OutputFormat::Json, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["L"], 2);
        assert!(rows[0]["rank"].is_null());
        assert_eq!(rows[1]["flag"], "aggregate");
        let keys: Vec<&String> = rows[0].as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), HEADER.len());
    }

    #[test]
    fn io_errors_carry_path() {
        let e = emit_records(&[], OutputFormat::Csv, Some(Path::new("/nonexistent-dir/x.csv"))).unwrap_err();
        assert!(e.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
