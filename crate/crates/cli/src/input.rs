use std::path::Path;

use induced_sdr::DataSet;
use ndarray::{Array1, Array2};

use crate::error::{CliError, CliResult};

/// Response, optional status and covariate columns of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub y: Vec<f64>,
    pub status: Option<Vec<bool>>,
    pub names: Vec<String>,
    /// Row-major covariates.
    pub x: Vec<f64>,
}

fn open(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Reads a header-row CSV with a `y` column, an optional 0/1 `status`
/// column and numeric covariates in the remaining columns.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = open(path)?;
    let parse_err = |line: u64, column: &str, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, "-", e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(CliError::Usage(format!("{} is empty", path.display())));
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let y_col = find("y").ok_or_else(|| parse_err(1, "y", "no `y` column in header".into()))?;
    let status_col = find("status");
    let x_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != y_col && Some(j) != status_col)
        .collect();

    let mut table = Table {
        y: Vec::new(),
        status: status_col.map(|_| Vec::new()),
        names: x_cols.iter().map(|&j| headers[j].to_string()).collect(),
        x: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, "-", e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |j: usize| -> CliResult<f64> {
            let field = record.get(j).unwrap_or("");
            if field.is_empty() {
                return Err(parse_err(line, &headers[j], "missing value".into()));
            }
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(line, &headers[j], format!("not a finite number: {field:?}"))
                })
        };
        table.y.push(number(y_col)?);
        if let (Some(j), Some(status)) = (status_col, table.status.as_mut()) {
            match record.get(j).unwrap_or("") {
                "1" => status.push(true),
                "0" => status.push(false),
                other => {
                    return Err(parse_err(
                        line,
                        "status",
                        format!("status must be 0 or 1, got {other:?}"),
                    ))
                }
            }
        }
        for &j in &x_cols {
            table.x.push(number(j)?);
        }
    }
    if table.y.is_empty() {
        return Err(CliError::Usage(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    Ok(table)
}

impl Table {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }

    /// Divides every covariate by its sample standard deviation.
    pub fn standardize_columns(&mut self) -> CliResult<()> {
        let (n, p) = (self.n(), self.p());
        if n < 2 {
            return Err(CliError::Usage(
                "column scaling needs at least 2 rows".into(),
            ));
        }
        for j in 0..p {
            let col: Vec<f64> = (0..n).map(|i| self.x[i * p + j]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            if !(sd > 0.0) {
                return Err(CliError::Usage(format!(
                    "column {} is constant and cannot be scaled",
                    self.names[j]
                )));
            }
            for i in 0..n {
                self.x[i * p + j] /= sd;
            }
        }
        Ok(())
    }

    pub fn into_dataset(self) -> CliResult<DataSet> {
        let (n, p) = (self.n(), self.p());
        if p == 0 {
            return Err(CliError::Usage("no covariate columns".into()));
        }
        if n <= p + 1 {
            return Err(CliError::TooFewRows { n, p });
        }
        let x = Array2::from_shape_vec((n, p), self.x).expect("rectangular");
        Ok(DataSet::with_names(
            x,
            Array1::from(self.y),
            self.status,
            self.names,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn round_trips_values_and_order() {
        let f = file("a,y,b\n1.5,2,-3\n0.25,4,1e-3\n7,8,9\n");
        let t = read_table(f.path()).unwrap();
        assert_eq!(t.names, vec!["a", "b"]);
        assert_eq!(t.y, vec![2.0, 4.0, 8.0]);
        assert_eq!(t.x, vec![1.5, -3.0, 0.25, 1e-3, 7.0, 9.0]);
        assert!(t.status.is_none());
    }

    #[test]
    fn reports_line_and_column() {
        let f = file("y,x1,status\n1,2,1\n3,abc,0\n");
        match read_table(f.path()) {
            Err(CliError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "x1");
            }
            other => panic!("{other:?}"),
        }
        let f = file("y,x1\n1,\n");
        assert!(matches!(
            read_table(f.path()),
            Err(CliError::Parse { line: 2, .. })
        ));
        let f = file("y,x1,status\n1,2,2\n");
        assert!(matches!(read_table(f.path()), Err(CliError::Parse { .. })));
    }

    #[test]
    fn scaling_divides_by_sample_sd() {
        let f = file("y,x\n1,1\n2,3\n3,5\n");
        let mut t = read_table(f.path()).unwrap();
        t.standardize_columns().unwrap();
        assert_eq!(t.x, vec![0.5, 1.5, 2.5]);
    }

    #[test]
    fn too_few_rows_is_reported() {
        let f = file("y,x1,x2\n1,2,3\n4,5,6\n7,8,10\n");
        let t = read_table(f.path()).unwrap();
        assert!(matches!(
            t.into_dataset(),
            Err(CliError::TooFewRows { n: 3, p: 2 })
        ));
    }
}
