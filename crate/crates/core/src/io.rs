//! CSV ingestion and number formatting for every exported artifact.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// 17 significant digits: enough for an exact `f64` round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Which axis of the CSV holds observations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Orientation {
    #[default]
    RowsAreObservations,
    ColumnsAreObservations,
}

/// Reads a numeric CSV. A first line with any non-numeric, non-empty cell is
/// taken as a header. Empty cells are missing values.
pub fn load_csv(path: impl AsRef<Path>, orientation: Orientation) -> Result<DataMatrix> {
    let file = File::open(path.as_ref())?;
    parse_csv(file, orientation)
}

pub fn parse_csv<R: Read>(reader: R, orientation: Orientation) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<Option<f64>, String>> = record
            .iter()
            .map(|cell| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|_| cell.to_string())
                }
            })
            .collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(Result::is_err) {
            // Header line.
            width = Some(record.len());
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => width = Some(record.len()),
        }
        let mut row = Vec::with_capacity(parsed.len());
        for cell in parsed {
            match cell {
                Ok(v) => row.push(v),
                Err(text) => {
                    return Err(Error::Parse {
                        line,
                        message: format!("non-numeric cell '{text}'"),
                    })
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    let (r, c) = (rows.len(), rows[0].len());
    let table = |k: usize, i: usize| match orientation {
        Orientation::RowsAreObservations => rows[i][k],
        Orientation::ColumnsAreObservations => rows[k][i],
    };
    let (p, n) = match orientation {
        Orientation::RowsAreObservations => (c, r),
        Orientation::ColumnsAreObservations => (r, c),
    };
    let values = DMatrix::from_fn(p, n, |k, i| table(k, i).unwrap_or(f64::NAN));
    let mask = DMatrix::from_fn(p, n, |k, i| table(k, i).is_some());
    DataMatrix::with_mask(values, Some(mask))
}

/// Writes observations as rows, missing entries as empty cells.
pub fn write_data_csv<W: Write>(data: &DataMatrix, mut out: W) -> Result<()> {
    let (p, n) = (data.dim(), data.len());
    let header: Vec<String> = (0..p).map(|k| format!("x{k}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..n {
        let cells: Vec<String> = (0..p)
            .map(|k| {
                if data.is_observed(k, i) {
                    fmt_f64(data.values()[(k, i)])
                } else {
                    String::new()
                }
            })
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn save_data_csv(data: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_data_csv(data, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Pretty JSON whose floats carry 17 significant digits.
struct PreciseFormatter<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_two_file() {
        let d = parse_csv("1,2\n3,4\n5,6\n".as_bytes(), Orientation::RowsAreObservations).unwrap();
        assert_eq!((d.dim(), d.len()), (2, 3));
        assert!(d.mask().is_none());
        assert_eq!(d.values()[(1, 2)], 6.0);
        let t = parse_csv("1,2\n3,4\n5,6\n".as_bytes(), Orientation::ColumnsAreObservations).unwrap();
        assert_eq!((t.dim(), t.len()), (3, 2));
    }

    #[test]
    fn empty_cell_is_missing() {
        let d = parse_csv("a,b\n1,\n3,4\n".as_bytes(), Orientation::RowsAreObservations).unwrap();
        let mask = d.mask().unwrap();
        assert_eq!(mask.iter().filter(|o| !**o).count(), 1);
        assert!(!mask[(1, 0)]);
    }

    #[test]
    fn ragged_and_non_numeric_rows_name_the_line() {
        let err = parse_csv("1,2\n3\n5,6\n".as_bytes(), Orientation::RowsAreObservations).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_csv("1,2\n3,x\n".as_bytes(), Orientation::RowsAreObservations).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let values = DMatrix::from_fn(3, 5, |k, i| ((k * 7 + i) as f64).sin() * 1e3 / 7.0);
        let d = DataMatrix::new(values).unwrap();
        let mut buf = Vec::new();
        write_data_csv(&d, &mut buf).unwrap();
        let back = parse_csv(buf.as_slice(), Orientation::RowsAreObservations).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn json_floats_have_seventeen_digits() {
        let s = to_json_string(&serde_json::json!({"a": 0.1, "b": [1.0, 2]})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
    }
}
