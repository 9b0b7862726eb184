//! Deterministic JSON output and profile CSV files.

use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::extremal::{ExtremalSolution, RadialProfile};
use crate::metric::MetricSpec;

/// Pretty JSON with every float written at 17 significant digits.
pub struct FixedFloatFormatter<'a>(PrettyFormatter<'a>);

impl Default for FixedFloatFormatter<'_> {
    fn default() -> Self {
        FixedFloatFormatter(PrettyFormatter::new())
    }
}

/// `v` at 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `value` as pretty JSON with fixed float formatting; non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    t: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "Hdot")]
    hdot: f64,
}

/// Writes `t,H,Hdot` rows.
pub fn write_profile_csv<W: Write>(p: &RadialProfile, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "H", "Hdot"])?;
    for i in 0..p.len() {
        w.write_record([
            format_float(p.t_samples()[i]),
            format_float(p.h_samples()[i]),
            format_float(p.hdot_samples()[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn profile_csv_string(p: &RadialProfile) -> Result<String> {
    let mut buf = Vec::new();
    write_profile_csv(p, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Reads a profile CSV with header `t,H,Hdot`.
pub fn read_profile_csv<R: Read>(reader: R) -> Result<RadialProfile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "H", "Hdot"] {
        return Err(Error::Parse(format!("profile header must be `t,H,Hdot`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut t, mut h, mut d) = (Vec::new(), Vec::new(), Vec::new());
    for row in rdr.deserialize() {
        let row: ProfileRow = row.map_err(|e| Error::Parse(e.to_string()))?;
        t.push(row.t);
        h.push(row.h);
        d.push(row.hdot);
    }
    RadialProfile::new(t, h, d)
}

pub fn read_profile_csv_path(path: &Path) -> Result<RadialProfile> {
    read_profile_csv(std::fs::File::open(path)?)
}

/// Profile document: the instance and its samples.
#[derive(Debug, Serialize)]
pub struct ProfileDocument<'a> {
    pub metric: &'a MetricSpec,
    pub a: f64,
    pub b: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub alpha: f64,
    pub samples: &'a RadialProfile,
}

impl<'a> ProfileDocument<'a> {
    pub fn from_solution(sol: &'a ExtremalSolution) -> Self {
        ProfileDocument { metric: &sol.metric, a: sol.a, b: sol.b, r: sol.r, big_r: sol.big_r, alpha: sol.alpha, samples: &sol.profile }
    }
}
