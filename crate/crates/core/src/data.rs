//! Sample matrices and their CSV form.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `n x p` sample matrix, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl Dataset {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.ncols() {
            return Err(Error::InvalidConfig(format!(
                "{} labels for {} columns",
                labels.len(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            let (row, col) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InsufficientData(format!(
                "non-finite entry at row {}, column {}",
                row + 1,
                labels[col]
            )));
        }
        Ok(Self { values, labels })
    }

    /// Columns labelled `X1..Xp`.
    pub fn with_default_labels(values: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=values.ncols()).map(|j| format!("X{j}")).collect();
        Self::new(values, labels)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let values = self.values.select_columns(cols);
        let labels = cols.iter().map(|&c| self.labels[c].clone()).collect();
        Dataset { values, labels }
    }

    /// Subtracts the column means.
    pub fn centered(&self) -> Dataset {
        let mut values = self.values.clone();
        for mut col in values.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        Dataset { values, labels: self.labels.clone() }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(&self.labels).map_err(io)?;
        let mut row = Vec::with_capacity(self.p());
        for r in 0..self.n() {
            row.clear();
            row.extend((0..self.p()).map(|c| format!("{:?}", self.values[(r, c)])));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let labels: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        let p = labels.len();
        let mut flat = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != p {
                return Err(Error::Parse(format!("line {}: expected {p} fields, found {}", r + 2, rec.len())));
            }
            for (c, field) in rec.iter().enumerate() {
                let x: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!("line {}, column {}: '{field}' is not a number", r + 2, labels[c]))
                })?;
                flat.push(x);
            }
        }
        let n = flat.len() / p.max(1);
        Dataset::new(DMatrix::from_row_slice(n, p, &flat), labels)
    }
}
