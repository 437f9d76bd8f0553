use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

/// One evaluated point `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Observation {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Observation { x, y }
    }
}

/// A nonempty set of observations sharing one input dimension, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    observations: Vec<Observation>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        let first =
            observations.first().ok_or_else(|| Error::domain("dataset must contain at least one observation"))?;
        let dim = first.x.len();
        if dim == 0 {
            return Err(Error::domain("observations must have dimension at least 1"));
        }
        for (i, obs) in observations.iter().enumerate() {
            if obs.x.len() != dim {
                return Err(Error::Shape { expected: dim, found: obs.x.len() });
            }
            if obs.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("observation {} has a non-finite input", i + 1)));
            }
            if !obs.y.is_finite() {
                return Err(Error::domain(format!("observation {} has a non-finite objective value", i + 1)));
            }
        }
        Ok(Dataset { dim, observations })
    }

    pub fn from_xy(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Shape { expected: xs.len(), found: ys.len() });
        }
        Dataset::new(xs.into_iter().zip(ys).map(|(x, y)| Observation { x, y }).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.observations.iter().map(|o| o.x.as_slice())
    }

    pub fn targets(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.y)
    }

    /// Fails on the first `y ≤ 0`, naming its 1-based position.
    pub fn ensure_positive_targets(&self) -> Result<()> {
        match self.observations.iter().position(|o| o.y <= 0.0) {
            Some(i) => Err(Error::NonPositiveTarget { position: i + 1, value: self.observations[i].y }),
            None => Ok(()),
        }
    }

    pub fn max_target(&self) -> f64 {
        self.targets().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Parses the `x1,...,xD,y` CSV layout.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, CsvError> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);

        let header = rdr.headers().map_err(|e| CsvError::from_csv(e, 1))?.clone();
        let dim = check_header(&header)?;

        let mut observations = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| CsvError::from_csv(e, 0))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() == 1 && record.get(0) == Some("") {
                continue;
            }
            if record.len() != dim + 1 {
                return Err(CsvError::Parse {
                    line,
                    message: format!("expected {} fields, found {}", dim + 1, record.len()),
                });
            }
            let mut values = Vec::with_capacity(dim + 1);
            for (col, cell) in record.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| CsvError::Parse {
                    line,
                    message: format!("column {}: `{}` is not a number", col + 1, cell),
                })?;
                if !v.is_finite() {
                    return Err(CsvError::Parse {
                        line,
                        message: format!("column {}: `{}` is not finite", col + 1, cell),
                    });
                }
                values.push(v);
            }
            let y = values.pop().expect("dim + 1 ≥ 2 values");
            observations.push(Observation { x: values, y });
        }
        if observations.is_empty() {
            return Err(CsvError::Parse { line: 1, message: "no observations after the header".into() });
        }
        Ok(Dataset::new(observations)?)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, CsvError> {
        let file = std::fs::File::open(path.as_ref())?;
        Dataset::from_csv_reader(std::io::BufReader::new(file))
    }
}

fn check_header(header: &csv::StringRecord) -> Result<usize, CsvError> {
    let n = header.len();
    let bad = |message: String| CsvError::Parse { line: 1, message };
    if n < 2 {
        return Err(bad(format!("header must be `x1,...,xD,y`, found {} column(s)", n)));
    }
    for (i, name) in header.iter().take(n - 1).enumerate() {
        if name != format!("x{}", i + 1) {
            return Err(bad(format!("header column {} must be `x{}`, found `{}`", i + 1, i + 1, name)));
        }
    }
    if &header[n - 1] != "y" {
        return Err(bad(format!("last header column must be `y`, found `{}`", &header[n - 1])));
    }
    Ok(n - 1)
}

/// Errors from dataset CSV ingestion. `line` is 1-based and counts the header.
#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Invalid(#[from] Error),
}

impl CsvError {
    fn from_csv(err: csv::Error, fallback_line: u64) -> Self {
        let line = err.position().map_or(fallback_line, |p| p.line());
        match err.into_kind() {
            csv::ErrorKind::Io(e) => CsvError::Io(e),
            kind => CsvError::Parse { line, message: format!("{:?}", kind) },
        }
    }
}
