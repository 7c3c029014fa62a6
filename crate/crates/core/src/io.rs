//! Uniformly sampled CSV traces: a header row, then a time column `t_s`
//! followed by one or more value columns.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::metrics::SampledSignal;

/// Relative tolerance on the sample spacing of loaded traces.
pub const UNIFORMITY_TOLERANCE: f64 = 1e-6;

/// A loaded table with validated uniform time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub t0: f64,
    pub dt: f64,
    /// Value columns (the time column excluded), in header order.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of a value column by header name.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().skip(1).position(|h| h == name)
    }

    /// Column `index` (0 = first value column) as a signal. Negative samples
    /// are rejected unless `clamp_negative`, in which case the clamp count is
    /// returned alongside.
    pub fn signal(
        &self,
        index: usize,
        clamp_negative: bool,
    ) -> Result<(SampledSignal<f64>, usize)> {
        let values = self.columns.get(index).cloned().ok_or_else(|| {
            Error::Parse(format!(
                "table has {} value columns, asked for #{index}",
                self.columns.len()
            ))
        })?;
        if clamp_negative {
            SampledSignal::new_clamped(self.dt, values)
        } else {
            Ok((SampledSignal::new(self.dt, values)?, 0))
        }
    }
}

/// Reads a CSV table. Rows must share the column count of the header; the
/// time column must be uniform to [`UNIFORMITY_TOLERANCE`]. Errors name the
/// 1-based line number.
pub fn read_table<R: BufRead>(reader: R) -> Result<Table> {
    let mut lines = reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trace file".into()))?;
    let header = header.map_err(|e| Error::Parse(e.to_string()))?;
    let headers: Vec<String> = header.split(',').map(|h| h.trim().to_string()).collect();
    if headers.len() < 2 {
        return Err(Error::Parse(
            "header needs a time column and at least one value column".into(),
        ));
    }
    if headers.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::Parse("missing header row".into()));
    }

    let mut times = Vec::new();
    let mut rows = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
    for (line_no, line) in lines {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != headers.len() {
            return Err(Error::Parse(format!(
                "line {line_no}: expected {} fields, found {}",
                headers.len(),
                fields.len()
            )));
        }
        let mut parsed = fields.iter().map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::Parse(format!("line {line_no}: `{f}` is not a finite number"))
                })
        });
        times.push(parsed.next().expect("nonempty row")?);
        for col in columns.iter_mut() {
            col.push(parsed.next().expect("field count checked")?);
        }
        rows.push(line_no);
    }
    if times.len() < 2 {
        return Err(Error::Parse("trace needs at least two samples".into()));
    }
    let n = times.len();
    // each interval is checked against the first, so the error names the row
    // where the spacing changes; the mean spacing is what gets stored
    let first = times[1] - times[0];
    if !(first > 0.0) {
        return Err(Error::NonUniformSampling { row: rows[1] });
    }
    for k in 1..n {
        if ((times[k] - times[k - 1]) - first).abs() > UNIFORMITY_TOLERANCE * first {
            return Err(Error::NonUniformSampling { row: rows[k] });
        }
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    Ok(Table {
        headers,
        t0: times[0],
        dt,
        columns,
    })
}

pub fn read_table_file(path: impl AsRef<std::path::Path>) -> Result<Table> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    read_table(std::io::BufReader::new(file))
}

/// Writes `headers` then rows `t0 + k·dt, columns[0][k], ...` in shortest
/// round-trip scientific notation.
pub fn write_table<W: Write>(
    mut w: W,
    headers: &[&str],
    t0: f64,
    dt: f64,
    columns: &[&[f64]],
) -> std::io::Result<()> {
    writeln!(w, "{}", headers.join(","))?;
    let n = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for k in 0..n {
        write!(w, "{:e}", t0 + dt * k as f64)?;
        for c in columns {
            write!(w, ",{:e}", c[k])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let values = vec![0.0, 1.5e-3, 2.25e-3, 1.0 / 3.0];
        let mut buf = Vec::new();
        write_table(&mut buf, &["t_s", "I_A"], 0.0, 1e-11, &[&values]).unwrap();
        let t = read_table(buf.as_slice()).unwrap();
        assert_eq!(t.headers, vec!["t_s", "I_A"]);
        assert_eq!(t.columns[0], values);
        assert!((t.dt - 1e-11).abs() < 1e-24);
        assert_eq!(t.column_index("I_A"), Some(0));
    }

    #[test]
    fn reports_first_nonuniform_line() {
        let text = "t_s,value\n0,1\n1e-9,2\n2e-9,3\n3.5e-9,4\n4e-9,5\n";
        assert_eq!(
            read_table(text.as_bytes()),
            Err(Error::NonUniformSampling { row: 5 })
        );
        // a gap late in the record is blamed on the row after it
        let text = "t_s,value\n0,0\n1,1\n2,1\n4,0\n5,0\n";
        assert_eq!(
            read_table(text.as_bytes()),
            Err(Error::NonUniformSampling { row: 5 })
        );
    }

    #[test]
    fn requires_header_and_numbers() {
        assert!(read_table("0,1\n1,2\n".as_bytes()).is_err());
        assert!(read_table("t_s,value\n0,1\n1,abc\n".as_bytes()).is_err());
        assert!(read_table("t_s,value\n0,1\n".as_bytes()).is_err());
        assert!(read_table("".as_bytes()).is_err());
    }

    #[test]
    fn negative_samples() {
        let t = read_table("t_s,value\n0,1\n1,-2\n2,0\n".as_bytes()).unwrap();
        assert!(matches!(
            t.signal(0, false),
            Err(Error::NegativeSample { index: 1, .. })
        ));
        let (s, n) = t.signal(0, true).unwrap();
        assert_eq!(n, 1);
        assert_eq!(s.values(), &[1.0, 0.0, 0.0]);
    }
}
