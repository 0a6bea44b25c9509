//! Truncated Hamiltonian `H = diag(E_n) + alpha X` and its Rayleigh quotient.

use ndarray::{Array1, Array2, ArrayView1};

use crate::autodiff::{Tape, Var};
use crate::basis::SpectralBasis;
use crate::error::{Error, Result};

/// Coefficient norms below this are treated as the zero state.
pub const MIN_NORM: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    matrix: Array2<f64>,
    alpha: f64,
}

impl HamiltonianMatrix {
    /// `H_nm = delta_nm E_n + alpha x_nm`.
    pub fn build(basis: &SpectralBasis) -> Self {
        let alpha = basis.system().alpha;
        let mut matrix = basis.position_matrix() * alpha;
        for (n, e) in basis.energies().iter().enumerate() {
            matrix[[n, n]] += e;
        }
        Self { matrix, alpha }
    }

    /// Wraps an arbitrary symmetric matrix, e.g. for oracle tests.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Domain(format!("Hamiltonian must be square, got {:?}", matrix.dim())));
        }
        Ok(Self { matrix, alpha: 0.0 })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `c^T H c / c^T c`.
    pub fn energy(&self, c: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_len(c.len())?;
        let norm2 = nonzero_norm2(c)?;
        Ok(c.dot(&self.matrix.dot(&c)) / norm2)
    }

    /// Same quotient built on a tape, for backpropagation into `c`.
    pub fn energy_var<'t>(&self, tape: &'t Tape, c: Var<'t>) -> Result<Var<'t>> {
        let (len, cols) = c.shape();
        if cols != 1 {
            return Err(Error::Domain(format!("coefficients must be a column, got {len}x{cols}")));
        }
        self.check_len(len)?;
        let norm = c.value().iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < MIN_NORM {
            return Err(Error::DegenerateState {
                norm,
                hint: "; restart training with a different seed",
            });
        }
        let h = tape.constant(self.matrix.clone());
        let hc = h.matvec(c)?;
        let num = c.dot(hc)?;
        let den = c.dot(c)?;
        Ok(num.div(den)?)
    }

    /// Gradient of the quotient with respect to `c`: `2 (H c - E c) / c^T c`.
    pub fn energy_gradient(&self, c: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_len(c.len())?;
        let norm2 = nonzero_norm2(c)?;
        let hc = self.matrix.dot(&c);
        let e = c.dot(&hc) / norm2;
        Ok((&hc - &(&c * e)) * (2.0 / norm2))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(Error::Domain(format!(
                "{} coefficients for a {}-state basis",
                len,
                self.size()
            )));
        }
        Ok(())
    }
}

fn nonzero_norm2(c: ArrayView1<'_, f64>) -> Result<f64> {
    let norm2 = c.dot(&c);
    if norm2.sqrt() < MIN_NORM {
        return Err(Error::DegenerateState {
            norm: norm2.sqrt(),
            hint: "",
        });
    }
    Ok(norm2)
}

/// Unperturbed objective as a weighted average of `E_n` by `|c_n|^2`.
pub fn diagonal_energy(c: ArrayView1<'_, f64>, basis: &SpectralBasis) -> Result<f64> {
    let norm2 = nonzero_norm2(c)?;
    let weighted: f64 = c
        .iter()
        .zip(basis.energies())
        .map(|(cn, e)| cn * cn * e)
        .sum();
    Ok(weighted / norm2)
}

/// `<x> = c^T X c / c^T c`.
pub fn expectation_position(c: ArrayView1<'_, f64>, basis: &SpectralBasis) -> Result<f64> {
    let norm2 = nonzero_norm2(c)?;
    Ok(c.dot(&basis.position_matrix().dot(&c)) / norm2)
}

/// Local position estimator `x_loc(b_n) = sum_m x_nm c_m / c_n`.
///
/// Diagnostic only. Entries with `|c_n| < 1e-12` are `None`.
pub fn local_position(c: ArrayView1<'_, f64>, basis: &SpectralBasis) -> Vec<Option<f64>> {
    let xc = basis.position_matrix().dot(&c);
    c.iter()
        .zip(xc.iter())
        .map(|(&cn, &s)| (cn.abs() >= MIN_NORM).then(|| s / cn))
        .collect()
}

/// `<x>` assembled from [`local_position`], skipping vanishing coefficients.
pub fn expectation_position_local(c: ArrayView1<'_, f64>, basis: &SpectralBasis) -> Result<f64> {
    let norm2 = nonzero_norm2(c)?;
    let s: f64 = local_position(c, basis)
        .into_iter()
        .zip(c.iter())
        .filter_map(|(xl, cn)| xl.map(|x| cn * cn * x))
        .sum();
    Ok(s / norm2)
}
