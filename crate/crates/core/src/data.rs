//! Labeled feature vectors and their CSV exchange format.
//!
//! Labeled CSV rows are `label,x_1,...,x_p` with integer labels `1..=L`.
//! Internally classes are indexed from zero.

use std::io::Read;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// Feature vectors with class labels in `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    labels: Vec<usize>,
    features: Array2<f64>,
    n_classes: usize,
}

/// A dataset in which every class is represented.
pub type TrainingSet = Dataset;

impl Dataset {
    pub fn new(labels: Vec<usize>, features: Array2<f64>, n_classes: usize) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(Error::domain(format!(
                "{} labels for {} feature vectors",
                labels.len(),
                features.nrows()
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(Error::domain(format!(
                "label {} of sample {i} is outside 1..={n_classes}",
                l + 1
            )));
        }
        Ok(Self {
            labels,
            features,
            n_classes,
        })
    }

    /// Like [`Dataset::new`] but also requires every class to appear.
    pub fn training(labels: Vec<usize>, features: Array2<f64>, n_classes: usize) -> Result<Self> {
        let d = Self::new(labels, features, n_classes)?;
        d.require_all_classes()?;
        Ok(d)
    }

    pub fn require_all_classes(&self) -> Result<()> {
        let counts = self.class_counts();
        match counts.iter().position(|&c| c == 0) {
            Some(l) => Err(Error::domain(format!("class {} has no samples", l + 1))),
            None => Ok(()),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn sample(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of features `p`.
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Per-class sample counts `n_l`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            features: self.features.select(Axis(0), indices),
            n_classes: self.n_classes,
        }
    }
}

fn parse_cell(s: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("'{}' is not a number", s.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            column,
            message: format!("'{}' is not finite", s.trim()),
        });
    }
    Ok(v)
}

fn read_rows<R: Read>(reader: R, has_header: bool) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

/// Reads a header-free (or headed) numeric matrix.
pub fn read_matrix_csv<R: Read>(reader: R, has_header: bool) -> Result<Array2<f64>> {
    let rows = read_rows(reader, has_header)?;
    let ncols = rows.first().map_or(0, |(_, r)| r.len());
    let mut data = Vec::with_capacity(rows.len() * ncols);
    for (line, rec) in &rows {
        if rec.len() != ncols {
            return Err(Error::Parse {
                line: *line,
                column: rec.len().min(ncols) + 1,
                message: format!("expected {ncols} columns, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            data.push(parse_cell(cell, *line, c + 1)?);
        }
    }
    Ok(Array2::from_shape_vec((rows.len(), ncols), data).expect("shape checked"))
}

/// Reads `label,x_1,...,x_p` rows; the number of classes is the largest label.
pub fn read_labeled_csv<R: Read>(reader: R, has_header: bool) -> Result<Dataset> {
    let rows = read_rows(reader, has_header)?;
    let ncols = rows.first().map_or(0, |(_, r)| r.len());
    if ncols < 2 && !rows.is_empty() {
        return Err(Error::Parse {
            line: rows[0].0,
            column: 1,
            message: "need a label column and at least one feature".into(),
        });
    }
    let p = ncols.saturating_sub(1);
    let mut labels = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * p);
    for (line, rec) in &rows {
        if rec.len() != ncols {
            return Err(Error::Parse {
                line: *line,
                column: rec.len().min(ncols) + 1,
                message: format!("expected {ncols} columns, found {}", rec.len()),
            });
        }
        let raw = &rec[0];
        let label: usize = raw
            .parse()
            .ok()
            .filter(|&l| l >= 1)
            .ok_or_else(|| Error::Parse {
                line: *line,
                column: 1,
                message: format!("label '{raw}' is not an integer >= 1"),
            })?;
        labels.push(label - 1);
        for (c, cell) in rec.iter().enumerate().skip(1) {
            data.push(parse_cell(cell, *line, c + 1)?);
        }
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let features = Array2::from_shape_vec((rows.len(), p), data).expect("shape checked");
    Dataset::new(labels, features, n_classes)
}

/// Writes a dense matrix as header-free, row-major CSV.
pub fn write_matrix_csv<W: std::io::Write>(writer: W, m: &Array2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in m.rows() {
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `label,x_1,...,x_p` rows with 1-based labels.
pub fn write_labeled_csv<W: std::io::Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for (i, &l) in data.labels().iter().enumerate() {
        let mut rec = vec![(l + 1).to_string()];
        rec.extend(data.sample(i).iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn reads_labeled_rows() {
        let src = "1,0.5,2\n2,1.5,-3\n\n1,0,0\n";
        let d = read_labeled_csv(src.as_bytes(), false).unwrap();
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.n_classes(), 2);
        assert_eq!(d.features(), &array![[0.5, 2.0], [1.5, -3.0], [0.0, 0.0]]);
        assert_eq!(d.class_counts(), vec![2, 1]);
    }

    #[test]
    fn header_is_skipped_when_requested() {
        let src = "label,a,b\n1,1,2\n";
        let d = read_labeled_csv(src.as_bytes(), true).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let src = "1,0.5,2\n2,abc,3\n";
        match read_labeled_csv(src.as_bytes(), false) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!((line, column), (2, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            read_labeled_csv("0,1\n".as_bytes(), false),
            Err(Error::Parse { column: 1, .. })
        ));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(read_matrix_csv("1,2\n3\n".as_bytes(), false).is_err());
    }

    #[test]
    fn missing_class_is_detected() {
        let d = Dataset::new(vec![0, 2], Array2::zeros((2, 1)), 3).unwrap();
        assert!(d.require_all_classes().is_err());
        assert!(Dataset::new(vec![3], Array2::zeros((1, 1)), 3).is_err());
    }

    #[test]
    fn labeled_round_trip() {
        let d = Dataset::new(vec![1, 0], array![[0.25, -1.0], [3.0, 1e-3]], 2).unwrap();
        let mut buf = Vec::new();
        write_labeled_csv(&mut buf, &d).unwrap();
        let back = read_labeled_csv(buf.as_slice(), false).unwrap();
        assert_eq!(back, d);
    }
}
