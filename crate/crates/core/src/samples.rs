use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An `m x d` matrix of observations; rows are i.i.d. draws.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    data: DMatrix<f64>,
}

impl Samples {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "Samples: expected a nonempty matrix, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "Samples: entries must be finite".into(),
            ));
        }
        Ok(Samples { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("Samples: no rows".into()));
        }
        let d = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: rows[i].len(),
                });
            }
        }
        let data = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(data)
    }

    /// Number of observations.
    pub fn m(&self) -> usize {
        self.data.nrows()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}
