//! Reference ground states from two independent routes: dense Jacobi
//! diagonalization of the truncated Hamiltonian, and inverse iteration on a
//! finite-difference discretization of the well.

use ndarray::{Array1, Array2};

use crate::basis::BoxSystem;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianMatrix;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Array1<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: Array2<f64>,
    pub sweeps: usize,
}

impl EigenResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Ground eigenvector with its largest-magnitude component positive.
    pub fn ground_vector(&self) -> Array1<f64> {
        let v = self.eigenvectors.column(0).to_owned();
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            -v
        } else {
            v
        }
    }
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(h: &HamiltonianMatrix) -> Result<EigenResult> {
    symmetric_eigen(h.matrix())
}

pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<EigenResult> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Domain(format!("matrix must be square, got {:?}", matrix.dim())));
    }
    let scale = frobenius(matrix);
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (matrix[[i, j]] - matrix[[j, i]]).abs();
            if gap > SYMMETRY_TOL * scale.max(1.0) {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    gap,
                });
            }
        }
    }

    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);
    let threshold = JACOBI_TOL * scale;
    let mut sweeps = 0;
    while off_diagonal(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                solver: "jacobi",
                iterations: sweeps,
                residual: off_diagonal(&a),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s, t);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let eigenvalues = order.iter().map(|&i| a[[i, i]]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (k, &i) in order.iter().enumerate() {
        eigenvectors.column_mut(k).assign(&v.column(i));
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// Applies the rotation zeroing `a[p][q]`, keeping `a` symmetric.
fn rotate(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = a.nrows();
    let apq = a[[p, q]];
    a[[p, p]] -= t * apq;
    a[[q, q]] += t * apq;
    a[[p, q]] = 0.0;
    a[[q, p]] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let akp = a[[k, p]];
            let akq = a[[k, q]];
            let np = c * akp - s * akq;
            let nq = s * akp + c * akq;
            a[[k, p]] = np;
            a[[p, k]] = np;
            a[[k, q]] = nq;
            a[[q, k]] = nq;
        }
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

fn off_diagonal(a: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for ((i, j), v) in a.indexed_iter() {
        if i != j {
            s += v * v;
        }
    }
    s.sqrt()
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Smallest eigenpair of the 3-point finite-difference Hamiltonian.
#[derive(Debug, Clone)]
pub struct FdGroundState {
    pub energy: f64,
    /// Interior grid points `x_i = i a / (M + 1)`, `i = 1..=M`.
    pub positions: Vec<f64>,
    /// Normalized so that `sum psi_i^2 h = 1`, largest component positive.
    pub psi: Vec<f64>,
    pub iterations: usize,
}

const FD_MAX_ITERS: usize = 10_000;

/// Inverse iteration on `-(hbar^2/2mu) d^2/dx^2 + alpha x` with Dirichlet
/// walls, discretized on `points` interior nodes.
pub fn fd_ground_state(system: &BoxSystem, points: usize) -> Result<FdGroundState> {
    if points < 16 {
        return Err(Error::Domain(format!("finite-difference grid needs at least 16 points, got {points}")));
    }
    system.validate()?;
    let m = points;
    let h = system.width / (m as f64 + 1.0);
    let k = system.kinetic_scale() / (h * h);
    let positions: Vec<f64> = (1..=m).map(|i| i as f64 * h).collect();
    let diag: Vec<f64> = positions.iter().map(|&x| 2.0 * k + system.alpha * x).collect();
    let off = -k;

    // Gershgorin: every eigenvalue is at least min_i(alpha x_i).
    let lower = diag.iter().fold(f64::INFINITY, |m, d| m.min(d - 2.0 * k));
    let shift = if lower > 0.0 { 0.0 } else { lower - 1.0 };
    let shifted: Vec<f64> = diag.iter().map(|d| d - shift).collect();

    let apply = |u: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let mut s = diag[i] * u[i];
                if i > 0 {
                    s += off * u[i - 1];
                }
                if i + 1 < m {
                    s += off * u[i + 1];
                }
                s
            })
            .collect()
    };

    let mut u: Vec<f64> = positions
        .iter()
        .map(|&x| (std::f64::consts::PI * x / system.width).sin())
        .collect();
    normalize(&mut u);
    let mut energy = dot(&u, &apply(&u));
    let mut residual = f64::INFINITY;
    for it in 1..=FD_MAX_ITERS {
        let mut next = thomas_solve(&shifted, off, &u);
        normalize(&mut next);
        let hu = apply(&next);
        let e = dot(&next, &hu);
        residual = hu
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - e * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let converged = (e - energy).abs() <= 1e-12 * e.abs().max(1.0)
            && residual <= 1e-9 * (4.0 * k + diag.iter().fold(0.0f64, |m, d| m.max(d.abs())));
        energy = e;
        u = next;
        if converged {
            let scale = 1.0 / h.sqrt();
            let pivot = u.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            return Ok(FdGroundState {
                energy,
                positions,
                psi: u.iter().map(|v| sign * v * scale).collect(),
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "finite-difference inverse iteration",
        iterations: FD_MAX_ITERS,
        residual,
    })
}

/// Solves a symmetric tridiagonal system with constant off-diagonal.
fn thomas_solve(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(u: &mut [f64]) {
    let n = dot(u, u).sqrt();
    u.iter_mut().for_each(|v| *v /= n);
}
