//! CSV ingestion.

use std::fmt;
use std::path::{Path, PathBuf};

use hetgof::smoothing::{Covariates, Sample};
use serde::Serialize;

/// A column given by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    pub fn parse(s: &str) -> Self {
        match s.trim().parse() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.trim().to_string()),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "#{i}"),
            ColumnRef::Name(n) => write!(f, "'{n}'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Delimiter {
    Byte(u8),
    /// Runs of spaces or tabs.
    Whitespace,
}

impl Delimiter {
    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s {
            "tab" | "\\t" | "\t" => Ok(Delimiter::Byte(b'\t')),
            "space" | "whitespace" | " " => Ok(Delimiter::Whitespace),
            _ if s.len() == 1 => Ok(Delimiter::Byte(s.as_bytes()[0])),
            _ => Err(DataError::Config(format!("unsupported delimiter {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DataFile {
    pub path: PathBuf,
    pub response: ColumnRef,
    /// Empty means every column except the response.
    pub covariates: Vec<ColumnRef>,
    pub delimiter: Delimiter,
    pub header: bool,
}

#[derive(Debug)]
pub enum DataError {
    Io(std::io::Error),
    Config(String),
    Parse { row: usize, column: String, message: String },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::Io(e) => write!(f, "cannot read data: {e}"),
            DataError::Config(m) => write!(f, "{m}"),
            DataError::Parse { row, column, message } => write!(f, "line {row}, column {column}: {message}"),
        }
    }
}

impl std::error::Error for DataError {}

fn read_records(path: &Path, delimiter: Delimiter) -> Result<Vec<(usize, Vec<String>)>, DataError> {
    let text = std::fs::read_to_string(path).map_err(DataError::Io)?;
    match delimiter {
        Delimiter::Whitespace => Ok(text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_string).collect()))
            .collect()),
        Delimiter::Byte(b) => {
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(b)
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut out = Vec::new();
            for rec in reader.records() {
                let rec = rec.map_err(|e| DataError::Parse {
                    row: e.position().map_or(0, |p| p.line() as usize),
                    column: "-".into(),
                    message: e.to_string(),
                })?;
                let line = rec.position().map_or(out.len() + 1, |p| p.line() as usize);
                if rec.iter().all(|f| f.is_empty()) {
                    continue;
                }
                out.push((line, rec.iter().map(str::to_string).collect()));
            }
            Ok(out)
        }
    }
}

impl DataFile {
    /// Read the file into a sample.
    pub fn load(&self) -> Result<Sample, DataError> {
        let mut records = read_records(&self.path, self.delimiter)?;
        let header: Option<Vec<String>> = if self.header && !records.is_empty() {
            Some(records.remove(0).1)
        } else {
            None
        };
        let width = header
            .as_ref()
            .map(Vec::len)
            .or_else(|| records.first().map(|r| r.1.len()))
            .ok_or_else(|| DataError::Config(format!("{} contains no data", self.path.display())))?;
        let resolve = |c: &ColumnRef| -> Result<usize, DataError> {
            match c {
                ColumnRef::Index(i) if *i < width => Ok(*i),
                ColumnRef::Index(i) => Err(DataError::Config(format!("column index {i} out of range ({width} columns)"))),
                ColumnRef::Name(n) => header
                    .as_ref()
                    .and_then(|h| h.iter().position(|x| x == n))
                    .ok_or_else(|| DataError::Config(format!("no column named {n:?}"))),
            }
        };
        let resp = resolve(&self.response)?;
        let covs: Vec<usize> = if self.covariates.is_empty() {
            (0..width).filter(|&i| i != resp).collect()
        } else {
            self.covariates.iter().map(resolve).collect::<Result<_, _>>()?
        };
        if covs.is_empty() {
            return Err(DataError::Config("no covariate column".into()));
        }
        if covs.contains(&resp) {
            return Err(DataError::Config("the response column is also listed as a covariate".into()));
        }
        let name = |i: usize| match &header {
            Some(h) => format!("'{}'", h[i]),
            None => format!("#{i}"),
        };
        let mut y = Vec::with_capacity(records.len());
        let mut x = Vec::with_capacity(records.len() * covs.len());
        for (line, rec) in &records {
            let field = |i: usize| -> Result<f64, DataError> {
                let raw = rec.get(i).ok_or_else(|| DataError::Parse {
                    row: *line,
                    column: name(i),
                    message: format!("missing field ({} fields on this line)", rec.len()),
                })?;
                match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(DataError::Parse {
                        row: *line,
                        column: name(i),
                        message: format!("{raw:?} is not a finite number"),
                    }),
                }
            };
            y.push(field(resp)?);
            for &c in &covs {
                x.push(field(c)?);
            }
        }
        let rows = y.len();
        let cov = Covariates::new(rows, covs.len(), x).map_err(|e| DataError::Config(e.to_string()))?;
        Sample::new(y, cov).map_err(|e| DataError::Config(e.to_string()))
    }
}

/// Write a univariate sample as `y,x` CSV.
pub fn write_sample(path: &Path, sample: &Sample) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["y".to_string()];
    head.extend((1..=sample.dim()).map(|j| if sample.dim() == 1 { "x".into() } else { format!("x{j}") }));
    w.write_record(&head)?;
    for i in 0..sample.len() {
        let mut rec = vec![sample.y[i].to_string()];
        rec.extend(sample.x.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()
}
