//! CSV and JSON formats.
//!
//! Numbers are written with 17 significant digits (`{:.16e}`), which round
//! trips every binary64 value; fields are comma separated with LF line
//! endings, so identical runs give identical bytes on every platform.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulator::MomentSeries;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Data {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// `step,<descriptor>...` with one row per record. All series must share
/// their record steps.
pub fn write_series_csv<W: Write>(out: W, series: &[MomentSeries]) -> Result<()> {
    let mut w = csv_writer(out);
    let mut header = vec!["step".to_string()];
    header.extend(series.iter().map(|s| s.descriptor.clone()));
    w.write_record(&header).map_err(csv_error)?;
    let rows = series.first().map_or(0, |s| s.values.len());
    for k in 0..rows {
        let step = series[0].values[k].0;
        let mut record = vec![step.to_string()];
        for s in series {
            if s.values.get(k).map(|v| v.0) != Some(step) {
                return Err(Error::invalid(format!("series '{}' is not aligned", s.descriptor)));
            }
            record.push(format_float(s.values[k].1));
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `index,singular_value`, descending.
pub fn write_spectrum_csv<W: Write>(out: W, singular_values: &[f64]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["index", "singular_value"]).map_err(csv_error)?;
    for (k, s) in singular_values.iter().enumerate() {
        w.write_record([(k + 1).to_string(), format_float(*s)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

/// Numeric table with a header row; each row is `(coordinates, value)`
/// where the value is the last column. Errors carry one-based line numbers.
pub fn read_samples<R: Read>(input: R) -> Result<Vec<(Vec<f64>, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let width = reader.headers().map_err(csv_error)?.len();
    if width < 2 {
        return Err(Error::Data {
            line: 1,
            message: format!("expected coordinate columns and a value column, header has {width} field(s)"),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::Data {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data {
                        line,
                        message: format!("column {}: '{field}' is not a finite number", col + 1),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        let (coords, value) = values.split_at(width - 1);
        rows.push((coords.to_vec(), value[0]));
    }
    if rows.is_empty() {
        return Err(Error::Data {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn series_layout() {
        let s = |name: &str, v: f64| MomentSeries {
            descriptor: name.into(),
            particles: 1,
            values: vec![(0, v), (10, v)],
            std_devs: vec![0.0, 0.0],
        };
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &[s("1", 1.0), s("w1", 0.5)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "step,1,w1\n0,1.0000000000000000e0,5.0000000000000000e-1\n10,1.0000000000000000e0,5.0000000000000000e-1\n"
        );
    }

    #[test]
    fn sample_errors_have_lines() {
        let ok = read_samples("x,y,g\n1,0,2\n0,1,3\n".as_bytes()).unwrap();
        assert_eq!(ok, vec![(vec![1.0, 0.0], 2.0), (vec![0.0, 1.0], 3.0)]);
        match read_samples("x,y,g\n1,0,2\n0,abc,3\n".as_bytes()) {
            Err(Error::Data { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read_samples("x,y,g\n1,0\n".as_bytes()) {
            Err(Error::Data { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(read_samples("".as_bytes()).is_err());
        assert!(read_samples("x,g\n".as_bytes()).is_err());
    }
}
