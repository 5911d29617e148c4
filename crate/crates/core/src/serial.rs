//! JSON-friendly encodings of complex matrices for configuration files and
//! reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StateLoop;
use crate::linalg::{c, CMatrix};
use crate::states::DensityMatrix;

/// A complex N×N matrix as nested row-major real/imaginary parts.
///
/// JSON shape: `{"dim": 2, "re": [[0.0, 1.0], [1.0, 0.0]], "im": [[…]]}`;
/// the `im` field may be omitted for real matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    /// Dimension.
    pub dim: usize,
    /// Real parts, row-major.
    pub re: Vec<Vec<f64>>,
    /// Imaginary parts, row-major; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    /// Encode a square matrix.
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Validation(format!(
                "only square matrices are encoded, got {:?}",
                m.shape()
            )));
        }
        let re = (0..n)
            .map(|r| (0..n).map(|s| m[(r, s)].re).collect())
            .collect();
        let im = (0..n)
            .map(|r| (0..n).map(|s| m[(r, s)].im).collect())
            .collect();
        Ok(MatrixJson {
            dim: n,
            re,
            im: Some(im),
        })
    }

    /// Decode, validating the shape of every row.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.dim == 0 {
            return Err(Error::Validation("matrix dimension must be ≥ 1".into()));
        }
        let check = |name: &str, rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != self.dim || rows.iter().any(|row| row.len() != self.dim) {
                return Err(Error::Validation(format!(
                    "'{name}' must be a {0}×{0} row-major array",
                    self.dim
                )));
            }
            Ok(())
        };
        check("re", &self.re)?;
        if let Some(im) = &self.im {
            check("im", im)?;
        }
        Ok(CMatrix::from_fn(self.dim, self.dim, |r, s| {
            let im = self.im.as_ref().map_or(0.0, |rows| rows[r][s]);
            c(self.re[r][s], im)
        }))
    }
}

/// A parametrized loop of density matrices: an array of matrix objects plus
/// the closure flag and the sample parameters s₀ … s_K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityLoopJson {
    /// One matrix object per sample, endpoint duplicated when closed.
    pub samples: Vec<MatrixJson>,
    /// Whether the endpoints coincide (within the closure tolerance).
    pub closed: bool,
    /// Strictly increasing sample parameters, one per sample.
    pub params: Vec<f64>,
}

impl DensityLoopJson {
    /// Encode a density-matrix loop.
    pub fn from_loop(state_loop: &StateLoop<DensityMatrix>) -> Result<Self> {
        let samples = state_loop
            .samples()
            .iter()
            .map(|rho| MatrixJson::from_matrix(rho.mat()))
            .collect::<Result<Vec<_>>>()?;
        Ok(DensityLoopJson {
            samples,
            closed: state_loop.is_closed(),
            params: state_loop.params().to_vec(),
        })
    }

    /// Decode and validate; the declared closure flag must match the
    /// reconstructed loop.
    pub fn to_loop(&self) -> Result<StateLoop<DensityMatrix>> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, m)| {
                DensityMatrix::new(m.to_matrix()?)
                    .map_err(|e| Error::Validation(format!("loop sample {k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let state_loop = StateLoop::new(samples, self.params.clone())?;
        if state_loop.is_closed() != self.closed {
            return Err(Error::Validation(format!(
                "loop declares closed = {}, but the samples say otherwise",
                self.closed
            )));
        }
        Ok(state_loop)
    }
}
