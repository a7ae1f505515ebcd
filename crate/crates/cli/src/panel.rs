//! Long-format panel CSV: `time_index, subject_index, <variables...>`.
//!
//! Indices are 1-based and must form a complete `T × n` grid. Values are
//! written with the shortest representation that parses back to the same
//! `f64`, so read → write is byte-stable.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use tvnet::TemporalDataset;

use crate::error::{CliError, CliResult};

const TIME_COLUMN: &str = "time_index";
const SUBJECT_COLUMN: &str = "subject_index";

/// Raw (uncentered) panel data with variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub variables: Vec<String>,
    /// `T` matrices of shape `n × p`.
    pub data: Vec<DMatrix<f64>>,
}

impl Panel {
    /// Default names `x1..xp`.
    pub fn from_dataset(dataset: &TemporalDataset<f64>) -> Self {
        Self { variables: (1..=dataset.p()).map(|i| format!("x{i}")).collect(), data: dataset.panels().to_vec() }
    }

    pub fn num_times(&self) -> usize {
        self.data.len()
    }

    pub fn n(&self) -> usize {
        self.data.first().map_or(0, |m| m.nrows())
    }

    pub fn p(&self) -> usize {
        self.variables.len()
    }

    /// Per-time centered dataset.
    pub fn to_dataset(&self) -> CliResult<TemporalDataset<f64>> {
        Ok(TemporalDataset::new(self.data.clone())?)
    }

    pub fn read_path(path: &Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::read(file).map_err(|e| match e {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn read<R: Read>(reader: R) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| CliError::input(format!("unreadable header: {e}")))?.clone();
        if header.len() < 4 || &header[0] != TIME_COLUMN || &header[1] != SUBJECT_COLUMN {
            return Err(CliError::input(format!("header must be `{TIME_COLUMN},{SUBJECT_COLUMN}` followed by at least two variables")));
        }
        let variables: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
        let p = variables.len();

        let mut cells: Vec<(usize, usize, Vec<f64>, u64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| CliError::input(format!("malformed row: {e}")))?;
            let line = rec.position().map_or(0, |pos| pos.line());
            if rec.len() != p + 2 {
                return Err(CliError::input(format!("line {line}: expected {} fields, found {}", p + 2, rec.len())));
            }
            let index = |c: usize| -> CliResult<usize> {
                match rec[c].parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v),
                    _ => Err(CliError::input(format!("line {line}: `{}` is not a 1-based index", &rec[c]))),
                }
            };
            let (t, s) = (index(0)?, index(1)?);
            let mut values = Vec::with_capacity(p);
            for c in 2..p + 2 {
                match rec[c].parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => {
                        return Err(CliError::input(format!(
                            "line {line}: column `{}` has non-numeric value `{}`",
                            variables[c - 2],
                            &rec[c]
                        )))
                    }
                }
            }
            cells.push((t, s, values, line));
        }
        let times = cells.iter().map(|c| c.0).max().ok_or_else(|| CliError::input("panel has no rows"))?;
        let n = cells.iter().map(|c| c.1).max().unwrap_or(0);
        if cells.len() != times * n {
            return Err(CliError::input(format!("incomplete grid: {} rows for {times} time points × {n} subjects", cells.len())));
        }
        let mut seen = vec![false; times * n];
        let mut data = vec![DMatrix::zeros(n, p); times];
        for (t, s, values, line) in cells {
            let slot = (t - 1) * n + (s - 1);
            if std::mem::replace(&mut seen[slot], true) {
                return Err(CliError::input(format!("line {line}: duplicate (time {t}, subject {s})")));
            }
            for (c, v) in values.into_iter().enumerate() {
                data[t - 1][(s - 1, c)] = v;
            }
        }
        Ok(Self { variables, data })
    }

    pub fn write_path(&self, path: &Path) -> CliResult<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
    }

    pub fn write<W: Write>(&self, writer: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header = [TIME_COLUMN, SUBJECT_COLUMN].into_iter().map(str::to_owned).chain(self.variables.iter().cloned());
        w.write_record(header).map_err(write_err)?;
        for (k, m) in self.data.iter().enumerate() {
            for s in 0..m.nrows() {
                let mut row = vec![(k + 1).to_string(), (s + 1).to_string()];
                row.extend(m.row(s).iter().map(|v| v.to_string()));
                w.write_record(&row).map_err(write_err)?;
            }
        }
        w.flush().map_err(|e| CliError::input(format!("write failed: {e}")))
    }
}

fn write_err(e: csv::Error) -> CliError {
    CliError::input(format!("write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "time_index,subject_index,a,b\n1,1,0.5,1\n1,2,-0.5,2\n2,1,3,0.25\n2,2,1,-1e-7\n";

    #[test]
    fn parses_complete_grid() {
        let p = Panel::read(SMALL.as_bytes()).unwrap();
        assert_eq!((p.num_times(), p.n(), p.p()), (2, 2, 2));
        assert_eq!(p.data[1][(1, 1)], -1e-7);
        assert_eq!(p.variables, vec!["a", "b"]);
    }

    #[test]
    fn row_order_does_not_matter() {
        let shuffled = "time_index,subject_index,a,b\n2,2,1,-1e-7\n1,2,-0.5,2\n2,1,3,0.25\n1,1,0.5,1\n";
        assert_eq!(Panel::read(shuffled.as_bytes()).unwrap(), Panel::read(SMALL.as_bytes()).unwrap());
    }

    #[test]
    fn write_read_write_is_byte_stable() {
        let p = Panel::read(SMALL.as_bytes()).unwrap();
        let mut first = Vec::new();
        p.write(&mut first).unwrap();
        let mut second = Vec::new();
        Panel::read(first.as_slice()).unwrap().write(&mut second).unwrap();
        assert_eq!(first, second);
    }

    fn err_of(text: &str) -> String {
        match Panel::read(text.as_bytes()) {
            Err(CliError::Input(m)) => m,
            other => panic!("expected an input error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_offending_line() {
        let m = err_of("time_index,subject_index,a,b\n1,1,0.5,1\n1,2,oops,2\n");
        assert!(m.contains("line 3") && m.contains("oops"), "{m}");
        let m = err_of("time_index,subject_index,a,b\n1,1,0.5,1\n0,2,1,2\n");
        assert!(m.contains("line 3"), "{m}");
        let m = err_of("time_index,subject_index,a,b\n1,1,0.5,1\n1,1,1,2\n1,2,1,2\n2,2,1,1\n");
        assert!(m.contains("duplicate"), "{m}");
    }

    #[test]
    fn incomplete_grid_and_bad_header_are_rejected() {
        assert!(err_of("time_index,subject_index,a,b\n1,1,0.5,1\n2,2,1,2\n").contains("incomplete"));
        assert!(err_of("t,s,a,b\n1,1,0.5,1\n").contains("header"));
        assert!(err_of("time_index,subject_index,a\n1,1,0.5\n").contains("header"));
    }
}
