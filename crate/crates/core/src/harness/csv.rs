//! CSV output: comma separator, `.` decimal point, a header row, LF line
//! endings, and floats printed with 17 significant digits so that every
//! value round trips exactly.

use crate::error::{Error, Result};

/// 17 significant digits in scientific notation; `inf`, `-inf` and `nan`
/// for the non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// An absent value is an empty cell.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Parses a cell written by [`fmt_f64`] or [`fmt_opt`].
pub fn parse_cell(cell: &str) -> Option<f64> {
    match cell {
        "" => None,
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

/// Accumulates a CSV document in memory.
pub struct CsvBuf {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvBuf {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer
            .write_record(header.iter().map(|s| s.as_ref()))
            .expect("writing to memory");
        Self { writer }
    }

    /// Appends one row. Panics if the row width differs from the header.
    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.writer.write_record(&cells).expect("row width matches the header");
    }

    pub fn into_string(self) -> String {
        let bytes = self.writer.into_inner().expect("writing to memory");
        String::from_utf8(bytes).expect("cells are UTF-8")
    }
}

/// Splits a CSV document into its header and rows.
pub fn parse(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let bad = |e: csv::Error| Error::MissingData(format!("malformed CSV: {e}"));
    let header = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(bad)?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &v in &[0.1, 1.0 / 3.0, -2.338107410459767, 1e-300, 6.02e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn layout() {
        let mut c = CsvBuf::new(&["a", "b"]);
        c.row(["1".to_string(), fmt_f64(0.5)]);
        c.row(["2".to_string(), String::new()]);
        let text = c.into_string();
        assert_eq!(text, "a,b\n1,5.0000000000000000e-1\n2,\n");
        let (h, rows) = parse(&text).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(parse_cell(&rows[0][1]), Some(0.5));
        assert_eq!(parse_cell(&rows[1][1]), None);
    }

    #[test]
    #[should_panic]
    fn ragged_rows_are_rejected() {
        let mut c = CsvBuf::new(&["a", "b"]);
        c.row(["1".to_string()]);
    }
}
