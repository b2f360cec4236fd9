use std::path::Path;

use super::DiagnosticsRecord;
use crate::error::{MhdError, Result};

/// A numeric table with named columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn from_records(orders: &[f64], records: &[DiagnosticsRecord]) -> Self {
        Self {
            header: DiagnosticsRecord::header(orders),
            rows: records.iter().map(DiagnosticsRecord::values).collect(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// `(t, value)` pairs for one column.
    pub fn series(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let t = self.column("t")?;
        Some(t.into_iter().zip(self.column(name)?).collect())
    }
}

fn io_err(path: &Path, e: csv::Error) -> MhdError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => MhdError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => MhdError::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Seventeen significant digits, so every `f64` survives a round trip.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes rows as they are produced, flushing after each one.
pub struct CsvRowWriter {
    path: std::path::PathBuf,
    inner: csv::Writer<std::fs::File>,
    step: Option<usize>,
}

impl CsvRowWriter {
    pub fn create(path: &Path, header: &[String]) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
        inner.write_record(header).map_err(|e| io_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
            step: header.iter().position(|h| h == "step"),
        })
    }

    pub fn write_row(&mut self, row: &[f64]) -> Result<()> {
        let fields = row.iter().enumerate().map(|(i, &v)| {
            if Some(i) == self.step {
                format!("{}", v as u64)
            } else {
                format_value(v)
            }
        });
        self.inner.write_record(fields).map_err(|e| io_err(&self.path, e))?;
        self.inner.flush().map_err(|source| MhdError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

pub fn write_csv(path: &Path, table: &CsvTable) -> Result<()> {
    let mut w = CsvRowWriter::create(path, &table.header)?;
    for row in &table.rows {
        w.write_row(row)?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, s)| {
                s.trim().parse::<f64>().map_err(|_| MhdError::Format {
                    path: path.to_path_buf(),
                    message: format!("row {}, column '{}': cannot parse '{s}'", line + 2, header[col]),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = std::env::temp_dir().join(format!("torus-mhd-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let table = CsvTable {
            header: vec!["t".into(), "step".into(), "x".into()],
            rows: vec![vec![0.1, 3.0, std::f64::consts::PI], vec![1e-300, 4.0, -2.0 / 3.0]],
        };
        write_csv(&path, &table).unwrap();
        assert_eq!(read_csv(&path).unwrap(), table);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,step,x\n"));
        assert!(text.contains("3.1415926535897931e0"));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
