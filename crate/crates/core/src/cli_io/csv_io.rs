//! CSV reading and writing with full-precision numbers.

use std::io::{Read, Write};

use thiserror::Error;

use super::config::ColumnSel;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("input has no header row")]
    NoHeader,
    #[error("column `{0}` not found in header")]
    NoColumn(String),
    #[error("row {row}: cannot parse `{text}` as a number")]
    BadNumber { row: usize, text: String },
    #[error("row {row}: missing column {column}")]
    ShortRow { row: usize, column: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Numbers are written with 17 significant digits so a parse returns the
/// identical `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    match s {
        "NaN" | "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

/// Read one numeric column. Rows are numbered from 1 after the header.
pub fn read_column<R: Read>(reader: R, column: &ColumnSel) -> Result<Vec<f64>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(CsvError::NoHeader);
    }
    let idx = match column {
        ColumnSel::Index(i) => {
            if *i >= headers.len() {
                return Err(CsvError::NoColumn(i.to_string()));
            }
            *i
        }
        ColumnSel::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CsvError::NoColumn(name.clone()))?,
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let cell = rec.get(idx).ok_or(CsvError::ShortRow { row, column: idx })?;
        let x = parse_f64(cell).ok_or_else(|| CsvError::BadNumber {
            row,
            text: cell.to_string(),
        })?;
        out.push(x);
    }
    Ok(out)
}

pub fn read_column_file(path: &std::path::Path, column: &ColumnSel) -> anyhow::Result<Vec<f64>> {
    let f = std::fs::File::open(path).map_err(|e| anyhow::anyhow!("cannot open {}: {e}", path.display()))?;
    read_column(std::io::BufReader::new(f), column).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// A table of already-formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, w: W) -> Result<(), CsvError> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(&self.header)?;
        for r in &self.rows {
            wtr.write_record(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &std::path::Path) -> anyhow::Result<()> {
        let f = std::fs::File::create(path).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", path.display()))?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 cells")
    }

    /// Parse a table written by [`Table::write`].
    pub fn read<R: Read>(r: R) -> Result<Self, CsvError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.into_iter().map(parse_f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_named_and_indexed_columns() {
        let data = "id,t\na,1.5\nb,-2\n";
        assert_eq!(
            read_column(data.as_bytes(), &ColumnSel::Name("t".into())).unwrap(),
            vec![1.5, -2.0]
        );
        assert_eq!(read_column(data.as_bytes(), &ColumnSel::Index(1)).unwrap(), vec![1.5, -2.0]);
        assert!(matches!(
            read_column(data.as_bytes(), &ColumnSel::Name("z".into())),
            Err(CsvError::NoColumn(_))
        ));
    }

    #[test]
    fn reports_bad_row_number() {
        let data = "t\n1\n2\nthree\n4\n";
        match read_column(data.as_bytes(), &ColumnSel::Index(0)) {
            Err(CsvError::BadNumber { row, text }) => {
                assert_eq!(row, 3);
                assert_eq!(text, "three");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn special_values_format() {
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert!(parse_f64("NaN").unwrap().is_nan());
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    proptest! {
        #[test]
        fn numbers_round_trip(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..40)) {
            let mut t = Table::new(["x"]);
            for &x in &xs {
                t.push(vec![fmt_f64(x)]);
            }
            let back = Table::read(t.to_string_lossy().as_bytes()).unwrap();
            let ys = back.column_f64("x").unwrap();
            prop_assert_eq!(xs.len(), ys.len());
            for (a, b) in xs.iter().zip(&ys) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
