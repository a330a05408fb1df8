//! CSV helpers shared by scenario loading and output writing.
//!
//! Numbers are rendered with Rust's shortest round-trip formatting, so a
//! value read back parses to the same binary `f64`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })
}

/// Write a header and rows of pre-rendered cells.
pub fn write_csv<H, R, C>(path: &Path, header: H, rows: R) -> Result<()>
where
    H: IntoIterator,
    H::Item: AsRef<[u8]>,
    R: IntoIterator<Item = C>,
    C: IntoIterator,
    C::Item: AsRef<[u8]>,
{
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Matrix with a leading label column: header `corner,<col labels>`, then
/// one `label,<values>` line per row.
pub fn write_labeled_matrix(
    path: &Path,
    corner: &str,
    row_labels: &[String],
    col_labels: &[String],
    m: &DMatrix<f64>,
) -> Result<()> {
    let header = std::iter::once(corner.to_string()).chain(col_labels.iter().cloned());
    let rows = (0..m.nrows()).map(|i| {
        std::iter::once(row_labels[i].clone())
            .chain((0..m.ncols()).map(move |j| fmt_f64(m[(i, j)])))
            .collect::<Vec<_>>()
    });
    write_csv(path, header, rows)
}

pub struct LabeledMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: DMatrix<f64>,
}

pub fn read_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Csv {
                path: path.to_path_buf(),
                source: e,
            },
        })?;
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let records = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
    Ok((header, records))
}

pub fn parse_f64(path: &Path, line: usize, cell: &str) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| Error::parse(path, format!("line {line}: `{cell}` is not a number")))
}

pub fn read_labeled_matrix(path: &Path) -> Result<LabeledMatrix> {
    let (header, records) = read_records(path)?;
    if header.is_empty() {
        return Err(Error::parse(path, "missing header row"));
    }
    let col_labels: Vec<String> = header[1..].to_vec();
    let mut row_labels = Vec::with_capacity(records.len());
    let mut data = Vec::with_capacity(records.len() * col_labels.len());
    for (i, rec) in records.iter().enumerate() {
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(Error::parse(
                path,
                format!(
                    "line {line}: {} cells, header has {}",
                    rec.len(),
                    header.len()
                ),
            ));
        }
        row_labels.push(rec[0].to_string());
        for cell in rec.iter().skip(1) {
            data.push(parse_f64(path, line, cell)?);
        }
    }
    let values = DMatrix::from_row_slice(row_labels.len(), col_labels.len(), &data);
    Ok(LabeledMatrix {
        row_labels,
        col_labels,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labeled_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -2.5e-17, 3.0, 1.0 / 3.0, 7e300, -0.0]);
        let rows = vec!["a".to_string(), "b".to_string()];
        let cols = vec!["x".to_string(), "y".to_string(), "z".to_string()];
        write_labeled_matrix(&path, "parameter", &rows, &cols, &m).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("parameter,x,y,z\n"));
        assert!(!text.contains('\r'));
        let back = read_labeled_matrix(&path).unwrap();
        assert_eq!(back.row_labels, rows);
        assert_eq!(back.col_labels, cols);
        for (a, b) in back.values.iter().zip(m.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_labeled_matrix(Path::new("/nonexistent/A.csv"))
            .err()
            .unwrap();
        assert!(err.to_string().contains("/nonexistent/A.csv"));
    }

    #[test]
    fn bad_cell_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "parameter,x\na,1\nb,oops\n").unwrap();
        let err = read_labeled_matrix(&path).err().unwrap().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
