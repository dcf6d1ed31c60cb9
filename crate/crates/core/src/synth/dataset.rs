use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Covariate/response pairs with the seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pairs: Vec<(f64, f64)>,
    seed: u64,
    #[serde(default)]
    model_id: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct ResponseRow {
    y: f64,
}

impl Dataset {
    pub fn new(pairs: Vec<(f64, f64)>, seed: u64, model_id: Option<String>) -> Self {
        Dataset { pairs, seed, model_id }
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_id(&self) -> Option<&str> {
        self.model_id.as_deref()
    }

    pub fn with_model_id(mut self, id: impl Into<String>) -> Self {
        self.model_id = Some(id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn covariates(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn responses(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// CSV with header `x,y`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for &(x, y) in &self.pairs {
            w.serialize(Row { x, y }).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }

    pub fn read_csv(path: &Path, seed: u64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| io_or_format(path, e))?;
        let mut pairs = Vec::new();
        for row in r.deserialize::<Row>() {
            let row = row.map_err(|e| io_or_format(path, e))?;
            if !(row.x.is_finite() && row.y.is_finite()) {
                return Err(Error::format(path, "non-finite value"));
            }
            pairs.push((row.x, row.y));
        }
        Ok(Dataset::new(pairs, seed, None))
    }
}

/// CSV with header `y`.
pub fn responses_to_csv(ys: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for &y in ys {
        w.serialize(ResponseRow { y }).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn write_responses_csv(path: &Path, ys: &[f64]) -> Result<()> {
    write_atomic(path, &responses_to_csv(ys)?)
}

pub fn read_responses_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_or_format(path, e))?;
    let mut ys = Vec::new();
    for row in r.deserialize::<ResponseRow>() {
        let y = row.map_err(|e| io_or_format(path, e))?.y;
        if !y.is_finite() {
            return Err(Error::format(path, "non-finite value"));
        }
        ys.push(y);
    }
    Ok(ys)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(e.to_string())
}

fn io_or_format(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}
