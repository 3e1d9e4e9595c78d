use ndarray::{Array1, Array2};

use crate::error::{Result, SdrError};

/// Covariates with a (possibly censored) response.
///
/// `status[i] == true` marks an observed failure; `false` a censored time.
/// Without a status vector the data are complete and `y` is the response itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    x: Array2<f64>,
    y: Array1<f64>,
    status: Option<Vec<bool>>,
    names: Vec<String>,
}

impl DataSet {
    pub fn new(x: Array2<f64>, y: Array1<f64>, status: Option<Vec<bool>>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, status, names)
    }

    pub fn with_names(
        x: Array2<f64>,
        y: Array1<f64>,
        status: Option<Vec<bool>>,
        names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 {
            return Err(SdrError::EmptyData);
        }
        if p == 0 {
            return Err(SdrError::InvalidData("no covariates".into()));
        }
        if y.len() != n {
            return Err(SdrError::InvalidData(format!(
                "{} responses for {n} covariate rows",
                y.len()
            )));
        }
        if let Some(s) = &status {
            if s.len() != n {
                return Err(SdrError::InvalidData(format!(
                    "{} status values for {n} rows",
                    s.len()
                )));
            }
        }
        if names.len() != p {
            return Err(SdrError::InvalidData(format!(
                "{} covariate names for {p} columns",
                names.len()
            )));
        }
        if let Some((i, _)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SdrError::InvalidData(format!(
                "non-finite covariate at row {}, column {}",
                i / p + 1,
                i % p + 1
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(SdrError::InvalidData(format!(
                "non-finite response at row {}",
                i + 1
            )));
        }
        Ok(DataSet {
            x,
            y,
            status,
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn status(&self) -> Option<&[bool]> {
        self.status.as_deref()
    }

    pub fn is_censored(&self) -> bool {
        self.status.is_some()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Estimation entry points need `n > p + 1` for an invertible covariance.
    pub fn require_estimable(&self) -> Result<()> {
        if self.n() <= self.p() + 1 {
            return Err(SdrError::TooFewObservations {
                n: self.n(),
                p: self.p(),
            });
        }
        Ok(())
    }

    /// Same covariates, covariate matrix replaced (shape must match).
    pub fn with_x(&self, x: Array2<f64>) -> Result<Self> {
        if x.dim() != self.x.dim() {
            return Err(SdrError::DimensionError(format!(
                "replacement covariates are {:?}, expected {:?}",
                x.dim(),
                self.x.dim()
            )));
        }
        Self::with_names(x, self.y.clone(), self.status.clone(), self.names.clone())
    }

    /// Drops the censoring status, treating `y` as fully observed.
    pub fn without_status(&self) -> Self {
        DataSet {
            status: None,
            ..self.clone()
        }
    }
}
