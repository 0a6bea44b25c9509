//! Midpoint-rule estimation of the coefficients `c_n = <b_n|psi>`.

use ndarray::{Array1, Array2};

use crate::autodiff::{Tape, Var};
use crate::basis::SpectralBasis;
use crate::error::{Error, Result};

/// Uniform midpoint grid `x_g = (g + 1/2) a / G` on `(0, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    width: f64,
    points: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(samples: usize, width: f64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Config("quadrature size G must be positive".into()));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Config(format!("well width must be positive, got {width}")));
        }
        let h = width / samples as f64;
        let points = (0..samples).map(|g| (g as f64 + 0.5) * h).collect();
        Ok(Self { width, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.width / self.points.len() as f64
    }
}

/// Precomputed `dx * b_n(x_g)`, an `N x G` matrix.
///
/// Projection of grid samples is then a single matrix-vector product.
#[derive(Debug, Clone)]
pub struct SampleTable {
    weighted: Array2<f64>,
}

impl SampleTable {
    pub fn new(basis: &SpectralBasis, grid: &QuadratureGrid) -> Result<Self> {
        if (basis.system().width - grid.width).abs() > 1e-12 * grid.width {
            return Err(Error::Config(format!(
                "grid width {} differs from well width {}",
                grid.width,
                basis.system().width
            )));
        }
        let dx = grid.spacing();
        let weighted = Array2::from_shape_fn((basis.size(), grid.len()), |(n, g)| {
            dx * basis.value(n + 1, grid.points[g])
        });
        Ok(Self { weighted })
    }

    pub fn basis_size(&self) -> usize {
        self.weighted.nrows()
    }

    pub fn grid_size(&self) -> usize {
        self.weighted.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.weighted
    }

    /// `c_n = dx * sum_g b_n(x_g) psi(x_g)`.
    pub fn project(&self, psi_samples: &[f64]) -> Result<Array1<f64>> {
        if psi_samples.len() != self.grid_size() {
            return Err(Error::Domain(format!(
                "expected {} samples, got {}",
                self.grid_size(),
                psi_samples.len()
            )));
        }
        if psi_samples.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateState {
                norm: 0.0,
                hint: "",
            });
        }
        let psi = Array1::from(psi_samples.to_vec());
        Ok(self.weighted.dot(&psi))
    }

    /// Graph-connected projection of a `G x 1` column of network outputs.
    pub fn project_var<'t>(&self, tape: &'t Tape, psi: Var<'t>) -> Result<Var<'t>> {
        let table = tape.constant(self.weighted.clone());
        Ok(table.matvec(psi)?)
    }
}

/// `psi(x) = sum_n c_n b_n(x)` at each position.
pub fn reconstruct(coefficients: &[f64], basis: &SpectralBasis, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            coefficients
                .iter()
                .enumerate()
                .map(|(n, c)| c * basis.value(n + 1, x))
                .sum()
        })
        .collect()
}
