use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeDelta};

use super::{HourlySeries, LabeledDataset, TIMESTAMP_FORMAT};
use crate::format_float;
use crate::error::{Error, IngestIssue, Result};

const COL_TIMESTAMP: &str = "timestamp";
const COL_TEMP: &str = "ambient_temp_c";
const COL_LOAD: &str = "load_ratio";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Inclusive plausibility bounds on ambient temperature, °C.
    pub temp_bounds: (f64, f64),
    /// Inclusive bounds on the load ratio.
    pub load_bounds: (f64, f64),
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            temp_bounds: (-60.0, 60.0),
            load_bounds: (0.0, 5.0),
        }
    }
}

fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S"))
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(text).ok().map(|t| t.naive_utc()))
}

/// Reads and validates an hourly CSV with header
/// `timestamp,ambient_temp_c,load_ratio`. Every problem found is reported
/// with its row number; nothing is returned unless the whole file is clean.
pub fn ingest_csv(path: impl AsRef<Path>, options: &IngestOptions) -> Result<HourlySeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_series(file, options).map_err(|e| match e {
        Error::Ingest { issues, .. } => Error::Ingest {
            path: path.to_path_buf(),
            issues,
        },
        other => other,
    })
}

/// Same as [`ingest_csv`] over any reader.
pub fn read_series<R: Read>(reader: R, options: &IngestOptions) -> Result<HourlySeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let fail = |issues: Vec<IngestIssue>| Error::Ingest {
        path: "<reader>".into(),
        issues,
    };

    let (Some(ts_col), Some(temp_col), Some(load_col)) =
        (column(COL_TIMESTAMP), column(COL_TEMP), column(COL_LOAD))
    else {
        let missing: Vec<&str> = [COL_TIMESTAMP, COL_TEMP, COL_LOAD]
            .into_iter()
            .filter(|c| column(c).is_none())
            .collect();
        return Err(fail(vec![IngestIssue {
            row: 0,
            message: format!("missing column(s): {}", missing.join(", ")),
        }]));
    };

    let mut issues = Vec::new();
    let mut timestamps = Vec::new();
    let mut temps = Vec::new();
    let mut loads = Vec::new();
    let mut previous: Option<NaiveDateTime> = None;

    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                issues.push(IngestIssue {
                    row,
                    message: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        let field = |col: usize| record.get(col).unwrap_or("");

        let timestamp = parse_timestamp(field(ts_col));
        match timestamp {
            None => issues.push(IngestIssue {
                row,
                message: format!("invalid timestamp `{}`", field(ts_col)),
            }),
            Some(t) => {
                if let Some(prev) = previous {
                    if t - prev != TimeDelta::hours(1) {
                        let what = if t == prev { "duplicated timestamp" } else { "timestamp spacing is not one hour" };
                        issues.push(IngestIssue {
                            row,
                            message: format!(
                                "{what}: {} follows {}",
                                t.format(TIMESTAMP_FORMAT),
                                prev.format(TIMESTAMP_FORMAT)
                            ),
                        });
                    }
                }
                previous = Some(t);
            }
        }

        let mut number = |col: usize, name: &str, bounds: (f64, f64)| -> f64 {
            match field(col).parse::<f64>() {
                Ok(v) if !v.is_finite() => {
                    issues.push(IngestIssue {
                        row,
                        message: format!("{name} is not finite"),
                    });
                    f64::NAN
                }
                Ok(v) if v < bounds.0 || v > bounds.1 => {
                    issues.push(IngestIssue {
                        row,
                        message: format!(
                            "{name} {v} outside plausible range [{}, {}]",
                            bounds.0, bounds.1
                        ),
                    });
                    v
                }
                Ok(v) => v,
                Err(_) => {
                    issues.push(IngestIssue {
                        row,
                        message: format!("{name} `{}` is not a number", field(col)),
                    });
                    f64::NAN
                }
            }
        };
        let temp = number(temp_col, COL_TEMP, options.temp_bounds);
        let load = number(load_col, COL_LOAD, options.load_bounds);

        timestamps.push(timestamp.unwrap_or_default());
        temps.push(temp);
        loads.push(load);
    }

    if !issues.is_empty() {
        return Err(fail(issues));
    }
    if timestamps.is_empty() {
        return Err(fail(vec![IngestIssue {
            row: 0,
            message: "file contains no data rows".into(),
        }]));
    }
    HourlySeries::new(timestamps, temps, loads)
}

fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_series_csv(path: impl AsRef<Path>, series: &HourlySeries) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{COL_TIMESTAMP},{COL_TEMP},{COL_LOAD}")?;
        for ((t, temp), load) in series
            .timestamps()
            .iter()
            .zip(series.ambient_temp())
            .zip(series.load_ratio())
        {
            writeln!(out, "{},{},{}", t.format(TIMESTAMP_FORMAT), format_float(*temp), format_float(*load))?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn write_labeled_csv(path: impl AsRef<Path>, data: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{COL_TIMESTAMP},{COL_TEMP},{COL_LOAD},lol_percent")?;
        for ((t, [temp, load]), y) in data.timestamps.iter().zip(&data.inputs).zip(&data.targets) {
            writeln!(
                out,
                "{},{},{},{}",
                t.format(TIMESTAMP_FORMAT),
                format_float(*temp),
                format_float(*load),
                format_float(*y)
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<HourlySeries> {
        read_series(text.as_bytes(), &IngestOptions::default())
    }

    fn issues(err: Error) -> Vec<IngestIssue> {
        match err {
            Error::Ingest { issues, .. } => issues,
            other => panic!("expected ingestion error, got {other}"),
        }
    }

    #[test]
    fn reads_well_formed_file() {
        let s = read(
            "timestamp,ambient_temp_c,load_ratio\n\
             2015-01-01T00:00:00,-3.5,0.61\n\
             2015-01-01T01:00:00,-4.0,0.55\n\
             2015-01-01T02:00:00,-4.2,0.52\n",
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.ambient_temp(), &[-3.5, -4.0, -4.2]);
    }

    #[test]
    fn column_order_is_free() {
        let s = read("load_ratio,timestamp,ambient_temp_c\n0.5,2015-06-01T12:00:00,21\n").unwrap();
        assert_eq!(s.load_ratio(), &[0.5]);
    }

    #[test]
    fn names_row_of_non_numeric_cell() {
        let err = read(
            "timestamp,ambient_temp_c,load_ratio\n\
             2015-01-01T00:00:00,1.0,0.5\n\
             2015-01-01T01:00:00,warm,0.5\n",
        )
        .unwrap_err();
        let issues = issues(err);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].row, 2);
        assert!(issues[0].message.contains("not a number"));
    }

    #[test]
    fn duplicated_timestamp_is_spacing_error() {
        let err = read(
            "timestamp,ambient_temp_c,load_ratio\n\
             2015-01-01T00:00:00,1.0,0.5\n\
             2015-01-01T00:00:00,1.0,0.5\n",
        )
        .unwrap_err();
        let issues = issues(err);
        assert_eq!(issues[0].row, 2);
        assert!(issues[0].message.contains("duplicated"));
    }

    #[test]
    fn reports_every_problem() {
        let err = read(
            "timestamp,ambient_temp_c,load_ratio\n\
             2015-01-01T00:00:00,99,0.5\n\
             2015-01-01T03:00:00,1.0,-1\n\
             yesterday,1.0,0.5\n",
        )
        .unwrap_err();
        let rows: Vec<usize> = issues(err).iter().map(|i| i.row).collect();
        assert_eq!(rows, vec![1, 2, 2, 3]);
    }

    #[test]
    fn missing_column() {
        let err = read("timestamp,temp,load_ratio\n2015-01-01T00:00:00,1,1\n").unwrap_err();
        assert!(issues(err)[0].message.contains("ambient_temp_c"));
    }

    #[test]
    fn missing_file_names_path() {
        let err = ingest_csv("/nonexistent/input.csv", &IngestOptions::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/input.csv"));
    }
}
