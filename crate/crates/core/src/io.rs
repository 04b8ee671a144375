//! CSV ingestion and emission for paired samples.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{AmiError, Result};
use crate::sample::Sample;

/// Reads columns `x_col` and `y_col` from a headed CSV. Rows are numbered from 1 after the
/// header in parse errors.
pub fn read_sample<R: Read>(reader: R, x_col: &str, y_col: &str, delimiter: u8) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| AmiError::UnknownColumn(name.to_string()))
    };
    let (ix, iy) = (find(x_col)?, find(y_col)?);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cell = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AmiError::Parse {
                    row,
                    column: name.to_string(),
                    value: raw.to_string(),
                })
        };
        x.push(cell(ix, x_col)?);
        y.push(cell(iy, y_col)?);
    }
    Sample::with_labels(x_col, y_col, x, y)
}

pub fn read_sample_path(path: &Path, x_col: &str, y_col: &str) -> Result<Sample> {
    let delimiter = if path.extension().is_some_and(|e| e == "tsv") { b'\t' } else { b',' };
    read_sample(File::open(path)?, x_col, y_col, delimiter)
}

/// Column names of a headed CSV.
pub fn read_headers(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(File::open(path)?);
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

/// Writes the sample with its labels as the header.
pub fn write_sample<W: Write>(sample: &Sample, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([sample.x_label(), sample.y_label()])?;
    for (a, b) in sample.x().iter().zip(sample.y()) {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_named_columns() {
        let text = "a,b,c\n1,2,3\n4,5,6\n";
        let s = read_sample(text.as_bytes(), "c", "a", b',').unwrap();
        assert_eq!(s.x(), &[3.0, 6.0]);
        assert_eq!(s.y(), &[1.0, 4.0]);
        assert_eq!(s.x_label(), "c");
    }

    #[test]
    fn reports_bad_rows() {
        let text = "x,y\n1,2\n3,NaN\n";
        match read_sample(text.as_bytes(), "x", "y", b',') {
            Err(AmiError::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "y")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_sample("x,y\n1,abc\n".as_bytes(), "x", "y", b','), Err(AmiError::Parse { row: 1, .. })));
        assert!(matches!(read_sample("x,y\n1,2\n".as_bytes(), "x", "z", b','), Err(AmiError::UnknownColumn(_))));
    }

    #[test]
    fn round_trips() {
        let s = Sample::with_labels("p", "q", vec![0.1, -2.5], vec![3.0, 1e-9]).unwrap();
        let mut buf = Vec::new();
        write_sample(&s, &mut buf).unwrap();
        assert_eq!(read_sample(buf.as_slice(), "p", "q", b',').unwrap(), s);
    }

    #[test]
    fn tab_delimited() {
        let s = read_sample("x\ty\n1\t2\n".as_bytes(), "x", "y", b'\t').unwrap();
        assert_eq!(s.y(), &[2.0]);
    }
}
