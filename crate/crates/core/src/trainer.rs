//! Gradient-based minimization of the spectral Rayleigh quotient over the
//! network parameters.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView1};

use crate::autodiff::Tape;
use crate::basis::{BoxSystem, SpectralBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianMatrix;
use crate::model::{Architecture, MlpParams};
use crate::oracle::{jacobi_eigen, EigenResult};
use crate::projection::{QuadratureGrid, SampleTable};

#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// `theta -= eta * grad`.
    PlainGd,
    /// Bias-corrected first/second moment estimates (Adam).
    AdaptiveMoments,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub system: BoxSystem,
    pub architecture: Architecture,
    pub basis_size: usize,
    pub grid_size: usize,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub window: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: usize,
}

impl TrainConfig {
    pub fn new(system: BoxSystem, architecture: Architecture) -> Self {
        Self {
            system,
            architecture,
            basis_size: 100,
            grid_size: 2048,
            optimizer: Optimizer::AdaptiveMoments,
            learning_rate: 1e-3,
            max_iters: 20_000,
            window: 200,
            tolerance: 1e-9,
            seed: 0,
            checkpoint: None,
            checkpoint_every: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.basis_size < 1 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.grid_size < self.basis_size {
            return Err(Error::Config(format!(
                "G = {} must be at least N = {}",
                self.grid_size, self.basis_size
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.learning_rate)));
        }
        if self.window < 1 {
            return Err(Error::Config("convergence window must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// One row of the energy trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub trace: Vec<TraceEntry>,
    pub final_energy: f64,
    /// Unit norm, largest component positive.
    pub final_coefficients: Array1<f64>,
    pub oracle_energy: f64,
    pub oracle_coefficients: Array1<f64>,
    pub oracle_overlap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub params: MlpParams,
    pub wall_time: Duration,
}

impl TrainReport {
    /// Lowest energy seen so far at each iteration.
    pub fn running_minimum(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|t| {
                best = best.min(t.energy);
                best
            })
            .collect()
    }
}

/// Energy with its weight and bias gradients, one array per layer each.
pub type EnergyGradient = (f64, Vec<Array2<f64>>, Vec<Array2<f64>>);

/// Everything that stays fixed during a run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub basis: SpectralBasis,
    pub grid: QuadratureGrid,
    pub table: SampleTable,
    pub hamiltonian: HamiltonianMatrix,
}

impl Problem {
    pub fn new(system: BoxSystem, basis_size: usize, grid_size: usize) -> Result<Self> {
        let basis = SpectralBasis::new(basis_size, system)?;
        let grid = QuadratureGrid::new(grid_size, system.width)?;
        let table = SampleTable::new(&basis, &grid)?;
        let hamiltonian = HamiltonianMatrix::build(&basis);
        Ok(Self {
            basis,
            grid,
            table,
            hamiltonian,
        })
    }

    /// Network inputs: grid positions scaled to `[0, 1]`.
    pub fn network_inputs(&self) -> Vec<f64> {
        let a = self.basis.system().width;
        self.grid.points().iter().map(|x| x / a).collect()
    }

    /// Coefficients of the network's current output (no graph).
    pub fn coefficients(&self, params: &MlpParams) -> Result<Array1<f64>> {
        let psi = params.forward_batch(&self.network_inputs());
        self.table.project(&psi)
    }

    pub fn energy(&self, params: &MlpParams) -> Result<f64> {
        let c = self.coefficients(params)?;
        self.hamiltonian.energy(c.view())
    }

    /// Energy and parameter gradients (weights, then biases, per layer).
    pub fn energy_and_gradient(&self, params: &MlpParams) -> Result<EnergyGradient> {
        let tape = Tape::new();
        let (psi, vars) = params.forward_var(&tape, &self.network_inputs())?;
        let c = self.table.project_var(&tape, psi)?;
        let energy = self.hamiltonian.energy_var(&tape, c)?;
        let grads = tape.backward(energy)?;
        let gw = vars.weights.iter().map(|&v| grads.wrt(v)).collect();
        let gb = vars.biases.iter().map(|&v| grads.wrt(v)).collect();
        Ok((energy.item(), gw, gb))
    }
}

/// `c / |c|`, flipped so the largest-magnitude component is positive.
pub fn sign_fix(c: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let norm = c.dot(&c).sqrt();
    if norm < crate::hamiltonian::MIN_NORM {
        return Err(Error::DegenerateState { norm, hint: "" });
    }
    let pivot = c.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    Ok(c.mapv(|v| sign * v / norm))
}

/// `|<u|v>|` of two unit vectors.
pub fn overlap(u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
    u.dot(&v).abs()
}

struct Moments {
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
    step: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

impl Moments {
    fn new(shapes: impl Iterator<Item = (usize, usize)>) -> Self {
        let first: Vec<_> = shapes.map(Array2::zeros).collect();
        let second = first.clone();
        Self {
            first,
            second,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [&mut Array2<f64>], grads: &[Array2<f64>], eta: f64) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first[k];
            let v = &mut self.second[k];
            ndarray::Zip::from(&mut **p)
                .and(m)
                .and(v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    let mh = *m / c1;
                    let vh = *v / c2;
                    *p -= eta * mh / (vh.sqrt() + EPSILON);
                });
        }
    }
}

/// Runs the optimizer and compares the result against the Jacobi oracle.
pub fn train(config: &TrainConfig) -> Result<TrainReport> {
    train_with(config, |_| {})
}

/// As [`train`], calling `observe` after every recorded iteration.
pub fn train_with(config: &TrainConfig, mut observe: impl FnMut(&TraceEntry)) -> Result<TrainReport> {
    config.validate()?;
    let start = Instant::now();
    let problem = Problem::new(config.system, config.basis_size, config.grid_size)?;
    let oracle: EigenResult = jacobi_eigen(&problem.hamiltonian)?;

    let mut params = MlpParams::init(&config.architecture.layer_dims(), config.seed)?;
    let shapes: Vec<(usize, usize)> = params
        .weights()
        .iter()
        .chain(params.biases())
        .map(|a| a.dim())
        .collect();
    let mut moments = Moments::new(shapes.into_iter());

    let mut trace = Vec::with_capacity(config.max_iters);
    let mut best: Option<(f64, MlpParams)> = None;
    let mut converged = false;

    for iter in 0..config.max_iters {
        let (energy, gw, gb) = problem.energy_and_gradient(&params).map_err(|e| match e {
            Error::DegenerateState { norm, .. } => Error::DegenerateState {
                norm,
                hint: "; restart training with a different seed",
            },
            other => other,
        })?;
        if !energy.is_finite() {
            return Err(Error::Diverged { iteration: iter });
        }
        let grads: Vec<Array2<f64>> = gw.into_iter().chain(gb).collect();
        let grad_norm = grads
            .iter()
            .map(|g| g.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if !grad_norm.is_finite() {
            return Err(Error::Diverged { iteration: iter });
        }
        let entry = TraceEntry {
            iter,
            energy,
            grad_norm,
        };
        observe(&entry);
        trace.push(entry);
        if best.as_ref().is_none_or(|(e, _)| energy < *e) {
            best = Some((energy, params.clone()));
        }

        if let Some(path) = &config.checkpoint {
            if config.checkpoint_every > 0 && iter > 0 && iter % config.checkpoint_every == 0 {
                write_checkpoint(path, &params)?;
            }
        }

        if window_converged(&trace, config.window, config.tolerance) {
            converged = true;
            break;
        }

        step(&mut params, &grads, config, &mut moments);
    }

    // The last update has not been evaluated yet.
    if !converged && config.max_iters > 0 {
        let energy = problem.energy(&params)?;
        if !energy.is_finite() {
            return Err(Error::Diverged {
                iteration: config.max_iters,
            });
        }
        if best.as_ref().is_none_or(|(e, _)| energy < *e) {
            best = Some((energy, params.clone()));
        }
    }
    let params = match best {
        Some((_, p)) => p,
        None => params,
    };
    if let Some(path) = &config.checkpoint {
        write_checkpoint(path, &params)?;
    }

    let coefficients = problem.coefficients(&params)?;
    let final_energy = problem.hamiltonian.energy(coefficients.view())?;
    let final_coefficients = sign_fix(coefficients.view())?;
    let oracle_coefficients = oracle.ground_vector();
    let oracle_overlap = overlap(final_coefficients.view(), oracle_coefficients.view());

    Ok(TrainReport {
        iterations: trace.len(),
        trace,
        final_energy,
        final_coefficients,
        oracle_energy: oracle.ground_energy(),
        oracle_coefficients,
        oracle_overlap,
        converged,
        params,
        wall_time: start.elapsed(),
    })
}

fn step(params: &mut MlpParams, grads: &[Array2<f64>], config: &TrainConfig, moments: &mut Moments) {
    let layers = params.num_layers();
    let (gw, gb) = grads.split_at(layers);
    match config.optimizer {
        Optimizer::PlainGd => {
            let eta = config.learning_rate;
            for (w, g) in params.weights_mut().iter_mut().zip(gw) {
                w.scaled_add(-eta, g);
            }
            for (b, g) in params.biases_mut().iter_mut().zip(gb) {
                b.scaled_add(-eta, g);
            }
        }
        Optimizer::AdaptiveMoments => {
            moments.update(&mut params.tensors_mut(), grads, config.learning_rate);
        }
    }
}

/// Relative change between the means of the last two windows.
fn window_converged(trace: &[TraceEntry], window: usize, tolerance: f64) -> bool {
    if trace.len() < 2 * window {
        return false;
    }
    let n = trace.len();
    let mean = |s: &[TraceEntry]| s.iter().map(|t| t.energy).sum::<f64>() / s.len() as f64;
    let recent = mean(&trace[n - window..]);
    let previous = mean(&trace[n - 2 * window..n - window]);
    (recent - previous).abs() <= tolerance * recent.abs()
}

fn write_checkpoint(path: &std::path::Path, params: &MlpParams) -> Result<()> {
    let file = File::create(path)?;
    params.write_checkpoint(BufWriter::new(file))
}
