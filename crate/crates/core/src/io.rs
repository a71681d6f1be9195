//! File formats: CSV vectors and tables, and JSON with every float written
//! to 17 significant digits.

use std::io::{Read, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{invalid, Error, Result};
use crate::transform::{Field, C64};

/// `x` with 17 significant digits, e.g. `2.5000000000000000e-1`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-digit floats and a trailing newline. Non-finite
/// floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::InvalidInput(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

/// Reads column `name` of a headed CSV; a headerless single-column file is
/// accepted as well.
pub fn read_column<R: Read>(reader: R, name: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let Some(first) = records.next().transpose().map_err(csv_err)? else {
        return Ok(Vec::new());
    };
    let (col, mut out) = match first.iter().position(|h| h == name) {
        Some(c) => (c, Vec::new()),
        None if first.len() == 1 => match parse_f64(&first[0]) {
            Some(v) => (0, vec![v]),
            None => (0, Vec::new()),
        },
        None => return invalid(format!("no column '{name}' in CSV header")),
    };
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let field = rec.get(col).ok_or_else(|| Error::InvalidInput("short CSV row".into()))?;
        out.push(parse_f64(field).ok_or_else(|| Error::InvalidInput(format!("not a number: '{field}'")))?);
    }
    Ok(out)
}

/// One column (real) or two columns `re,im` (complex), with an optional
/// header row.
pub fn read_vector<R: Read>(reader: R, field: Field) -> Result<Vec<C64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let want = match field {
        Field::Real => 1,
        Field::Complex => 2,
    };
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let vals: Option<Vec<f64>> = rec.iter().map(parse_f64).collect();
        match vals {
            Some(v) if v.len() == want => out.push(C64::new(v[0], if want == 2 { v[1] } else { 0.0 })),
            None if r == 0 => continue,
            _ => return invalid(format!("row {} must hold {want} number(s)", r + 1)),
        }
    }
    Ok(out)
}

pub fn write_vector<W: Write>(w: W, v: &[C64], field: Field) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for x in v {
        match field {
            Field::Real => wtr.write_record([fmt17(x.re)]),
            Field::Complex => wtr.write_record([fmt17(x.re), fmt17(x.im)]),
        }
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Accumulates CSV rows in memory; floats go through [`fmt17`].
pub struct Table {
    wtr: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(header).expect("in-memory write");
        Self { wtr }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.wtr.write_record(cells).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        String::from_utf8(self.wtr.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }
}
