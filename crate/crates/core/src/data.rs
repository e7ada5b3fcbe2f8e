//! Tabular datasets of `(x, y)` samples.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset must have at least one row and one feature")]
    Empty,
    #[error("row {row} has {got} features, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("interval {index} is empty or inverted: [{lo}, {hi}]")]
    BadInterval { index: usize, lo: f64, hi: f64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn widen(&self, margin: f64) -> Interval {
        Interval { lo: self.lo - margin, hi: self.hi + margin }
    }
}

/// Row-major samples. `intervals` describes the sampling range of the leading
/// features; trailing padded columns have none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    intervals: Vec<Interval>,
}

/// Wire shape of [`Dataset`], validated on the way in.
#[derive(Deserialize)]
struct RawDataset {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    #[serde(default)]
    intervals: Vec<Interval>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = DataError;

    fn try_from(r: RawDataset) -> Result<Dataset, DataError> {
        Dataset::new(r.dim, r.x, r.y, r.intervals)
    }
}

impl Dataset {
    pub fn new(dim: usize, x: Vec<f64>, y: Vec<f64>, intervals: Vec<Interval>) -> Result<Dataset, DataError> {
        if dim == 0 || y.is_empty() {
            return Err(DataError::Empty);
        }
        if x.len() != dim * y.len() {
            return Err(DataError::Ragged { row: x.len() / dim, got: x.len() % dim, expected: dim });
        }
        for (r, yv) in y.iter().enumerate() {
            if !yv.is_finite() || x[r * dim..(r + 1) * dim].iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row: r });
            }
        }
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.lo < iv.hi) {
                return Err(DataError::BadInterval { index: i, lo: iv.lo, hi: iv.hi });
            }
        }
        Ok(Dataset { dim, x, y, intervals })
    }

    /// Build from rows; intervals default to the per-feature bounding box.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Dataset, DataError> {
        let dim = rows.first().map(|r| r.len()).ok_or(DataError::Empty)?;
        let mut x = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(DataError::Ragged { row: i, got: r.len(), expected: dim });
            }
            x.extend_from_slice(r);
        }
        let mut d = Dataset::new(dim, x, y, Vec::new())?;
        d.intervals = d.bounding_box();
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|r| self.x[r * self.dim + j]).collect()
    }

    /// Per-feature `[min, max]`, widened by a hair when a column is constant.
    pub fn bounding_box(&self) -> Vec<Interval> {
        (0..self.dim)
            .map(|j| {
                let col = self.column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lo < hi {
                    Interval::new(lo, hi)
                } else {
                    Interval::new(lo - 0.5, hi + 0.5)
                }
            })
            .collect()
    }

    /// Ranges to sample fresh points from: declared intervals, else the bounding box.
    pub fn sampling_intervals(&self) -> Vec<Interval> {
        let mut iv = self.intervals.clone();
        let bb = self.bounding_box();
        iv.extend_from_slice(&bb[iv.len().min(bb.len())..]);
        iv
    }

    pub fn with_y(&self, y: Vec<f64>) -> Result<Dataset, DataError> {
        Dataset::new(self.dim, self.x.clone(), y, self.intervals.clone())
    }

    /// Keep only the first `d` feature columns.
    pub fn restrict(&self, d: usize) -> Dataset {
        let d = d.clamp(1, self.dim);
        let x = (0..self.n()).flat_map(|r| self.row(r)[..d].to_vec()).collect();
        let intervals = self.intervals.iter().take(d).copied().collect();
        Dataset { dim: d, x, y: self.y.clone(), intervals }
    }

    pub fn y_variance(&self) -> f64 {
        let n = self.n() as f64;
        let mean = self.y.iter().sum::<f64>() / n;
        self.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }

    /// Read `x0,...,x{d-1},y` CSV with a header row.
    pub fn read_csv(reader: impl Read) -> Result<Dataset, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 2 || cols.last() != Some(&"y") {
            return Err(DataError::Csv(format!("header must be x0,...,y; got `{}`", cols.join(","))));
        }
        for (i, c) in cols[..cols.len() - 1].iter().enumerate() {
            if *c != format!("x{i}") {
                return Err(DataError::Csv(format!("header column {i} is `{c}`, expected `x{i}`")));
            }
        }
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
            let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| DataError::Csv(format!("record {}: {e}", i + 1)))?;
            ys.push(vals[vals.len() - 1]);
            rows.push(vals[..vals.len() - 1].to_vec());
        }
        Dataset::from_rows(&rows, ys)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header).map_err(|e| DataError::Csv(e.to_string()))?;
        for r in 0..self.n() {
            let mut rec: Vec<String> = self.row(r).iter().map(|v| format!("{v:?}")).collect();
            rec.push(format!("{:?}", self.y[r]));
            w.write_record(&rec).map_err(|e| DataError::Csv(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.1]], vec![5.0, -1.25]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Dataset::read_csv(std::io::Cursor::new("a,b\n1,2\n")), Err(DataError::Csv(_))));
        assert!(matches!(Dataset::read_csv(std::io::Cursor::new("x0,y\n1,2,3\n")), Err(DataError::Csv(_))));
        assert!(matches!(
            Dataset::from_rows(&[vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]),
            Err(DataError::Ragged { .. })
        ));
        assert!(matches!(Dataset::from_rows(&[vec![f64::NAN]], vec![0.0]), Err(DataError::NonFinite { row: 0 })));
        assert!(matches!(
            Dataset::new(1, vec![0.0], vec![0.0], vec![Interval::new(1.0, 1.0)]),
            Err(DataError::BadInterval { .. })
        ));
    }

    #[test]
    fn json_is_validated() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![0.5, 0.25]).unwrap();
        let back: Dataset = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<Dataset>(r#"{"dim":2,"x":[1,2,3],"y":[1,2]}"#).is_err());
        assert!(serde_json::from_str::<Dataset>(r#"{"dim":1,"x":[1],"y":[1],"intervals":[{"lo":2,"hi":1}]}"#).is_err());
    }
}
