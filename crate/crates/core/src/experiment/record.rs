use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Format;
use crate::error::{Error, Result};
use crate::matcore::Matrix;

/// One Monte-Carlo outcome. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub trial: u64,
    pub seed: u64,
    pub model: String,
    pub p: Option<u64>,
    pub n: Option<u64>,
    pub q: Option<u64>,
    pub statistic: String,
    /// Free-form `key=value;…` description of the remaining settings.
    pub param: String,
    pub z_re: Option<f64>,
    pub z_im: Option<f64>,
    pub value: f64,
    pub value_im: Option<f64>,
    pub se: Option<f64>,
    pub wall_ms: Option<f64>,
}

pub const FIELDS: [&str; 15] = [
    "experiment",
    "trial",
    "seed",
    "model",
    "p",
    "n",
    "q",
    "statistic",
    "param",
    "z_re",
    "z_im",
    "value",
    "value_im",
    "se",
    "wall_ms",
];

/// 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

enum Cell {
    Str(String),
    Int(Option<u64>),
    Float(Option<f64>),
}

impl TrialRecord {
    fn cells(&self) -> [Cell; 15] {
        [
            Cell::Str(self.experiment.clone()),
            Cell::Int(Some(self.trial)),
            Cell::Int(Some(self.seed)),
            Cell::Str(self.model.clone()),
            Cell::Int(self.p),
            Cell::Int(self.n),
            Cell::Int(self.q),
            Cell::Str(self.statistic.clone()),
            Cell::Str(self.param.clone()),
            Cell::Float(self.z_re),
            Cell::Float(self.z_im),
            Cell::Float(Some(self.value)),
            Cell::Float(self.value_im),
            Cell::Float(self.se),
            Cell::Float(self.wall_ms),
        ]
    }
}

/// Record-at-a-time writer.
pub trait RecordSink: Send {
    fn write(&mut self, record: &TrialRecord) -> Result<()>;
    fn finish(&mut self) -> Result<()>;
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
    path: PathBuf,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(FIELDS).map_err(|e| csv_err(&path, e))?;
        Ok(Self { inner, path })
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    }
}

impl<W: Write + Send> RecordSink for CsvSink<W> {
    fn write(&mut self, r: &TrialRecord) -> Result<()> {
        let row: Vec<String> = r
            .cells()
            .into_iter()
            .map(|c| match c {
                Cell::Str(s) => s,
                Cell::Int(v) => v.map_or(String::new(), |v| v.to_string()),
                Cell::Float(v) => v.map_or(String::new(), format_f64),
            })
            .collect();
        self.inner.write_record(&row).map_err(|e| csv_err(&self.path, e))
    }

    fn finish(&mut self) -> Result<()> {
        self.inner.flush().map_err(io_err(&self.path))
    }
}

/// JSON array of objects, written incrementally.
pub struct JsonSink<W: Write> {
    inner: W,
    path: PathBuf,
    first: bool,
}

impl<W: Write> JsonSink<W> {
    pub fn new(mut out: W, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        out.write_all(b"[").map_err(io_err(&path))?;
        Ok(Self {
            inner: out,
            path,
            first: true,
        })
    }
}

impl<W: Write + Send> RecordSink for JsonSink<W> {
    fn write(&mut self, r: &TrialRecord) -> Result<()> {
        let mut s = String::from(if self.first { "\n  {" } else { ",\n  {" });
        self.first = false;
        for (i, (name, cell)) in FIELDS.iter().zip(r.cells()).enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let v = match cell {
                Cell::Str(v) => serde_json::to_string(&v).expect("string"),
                Cell::Int(v) => v.map_or("null".into(), |v| v.to_string()),
                Cell::Float(v) => match v {
                    Some(v) if v.is_finite() => format_f64(v),
                    _ => "null".into(),
                },
            };
            s.push_str(&format!("\"{name}\": {v}"));
        }
        s.push('}');
        self.inner.write_all(s.as_bytes()).map_err(io_err(&self.path))
    }

    fn finish(&mut self) -> Result<()> {
        self.inner.write_all(b"\n]\n").map_err(io_err(&self.path))?;
        self.inner.flush().map_err(io_err(&self.path))
    }
}

/// Sink for `--out` (a file) or stdout.
pub fn open_sink(format: Format, out: Option<&Path>) -> Result<Box<dyn RecordSink>> {
    let (writer, path): (Box<dyn Write + Send>, PathBuf) = match out {
        Some(p) => {
            let f = File::create(p).map_err(io_err(p))?;
            (Box::new(BufWriter::new(f)), p.to_path_buf())
        }
        None => (Box::new(BufWriter::new(io::stdout())), PathBuf::from("<stdout>")),
    };
    Ok(match format {
        Format::Csv => Box::new(CsvSink::new(writer, path)?),
        Format::Json => Box::new(JsonSink::new(writer, path)?),
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(f));
    rdr.deserialize()
        .map(|r| r.map_err(|e| csv_err(path, e)))
        .collect()
}

pub fn read_json(path: &Path) -> Result<Vec<TrialRecord>> {
    let f = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    })
}

/// Binary matrix: rows and cols as little-endian `u64`, then the entries as
/// little-endian `f64` in row-major order.
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    let mut put = |b: &[u8]| w.write_all(b).map_err(io_err(path));
    put(&(m.rows() as u64).to_le_bytes())?;
    put(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    let bad = |reason: &str| Error::InvalidInput(format!("{}: {reason}", path.display()));
    if bytes.len() < 16 {
        return Err(bad("truncated header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(0) as usize, word(1) as usize);
    let len = rows
        .checked_mul(cols)
        .filter(|&l| bytes.len() == 16 + 8 * l)
        .ok_or_else(|| bad("size does not match header"))?;
    let data = (0..len).map(|i| f64::from_le_bytes(bytes[16 + 8 * i..24 + 8 * i].try_into().expect("8 bytes")));
    Matrix::from_vec(rows, cols, data.collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> TrialRecord {
        TrialRecord {
            experiment: "esd".into(),
            trial: 3,
            seed: 7,
            model: "weak-ma:1,0.5".into(),
            p: Some(4),
            n: Some(8),
            q: None,
            statistic: "ks_distance".into(),
            param: "a=1;b=2".into(),
            z_re: None,
            z_im: Some(0.1),
            value: 1.0 / 3.0,
            value_im: None,
            se: Some(1e-300),
            wall_ms: None,
        }
    }

    #[test]
    fn one_record_csv_has_two_lines() {
        let mut buf = Vec::new();
        {
            let mut s = CsvSink::new(&mut buf, "mem").unwrap();
            s.write(&record()).unwrap();
            s.finish().unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), FIELDS.join(","));
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn json_is_valid_array() {
        let mut buf = Vec::new();
        {
            let mut s = JsonSink::new(&mut buf, "mem").unwrap();
            s.write(&record()).unwrap();
            s.write(&record()).unwrap();
            s.finish().unwrap();
        }
        let back: Vec<TrialRecord> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, vec![record(), record()]);
    }

    #[test]
    fn empty_json_is_empty_array() {
        let mut buf = Vec::new();
        JsonSink::new(&mut buf, "mem").unwrap().finish().unwrap();
        let back: Vec<TrialRecord> = serde_json::from_slice(&buf).unwrap();
        assert!(back.is_empty());
    }
}
