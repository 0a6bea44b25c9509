//! Implementations behind the `vqs` subcommands.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::Array1;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianMatrix;
use crate::oracle::{fd_ground_state, jacobi_eigen, EigenResult, FdGroundState};
use crate::output::{self, num, Curve, Table, WavefunctionRow};
use crate::projection::reconstruct;
use crate::trainer::{sign_fix, train, Problem, TrainReport};
use crate::basis::SpectralBasis;

/// Number of points in `wavefunction.csv` and the plot.
pub const PLOT_POINTS: usize = 401;

/// Reference ground-state energies of the three bundled wells.
pub const REFERENCE_ENERGIES: [(&str, &str, f64); 3] = [
    ("Unperturbed", "unperturbed", 4.93480),
    ("Perturbed A", "perturbed_a", 8.79507),
    ("Perturbed B", "perturbed_b", 2.94583),
];

/// Parallelism cap for `table` and `sweep`, from `VQS_THREADS` (default 1).
pub fn thread_budget() -> usize {
    std::env::var("VQS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Maps `f` over `items` on at most `threads` workers, preserving order.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub jacobi: EigenResult,
    pub fd: FdGroundState,
}

impl OracleOutcome {
    pub fn basis_energy(&self) -> f64 {
        self.jacobi.ground_energy()
    }

    pub fn difference(&self) -> f64 {
        self.jacobi.ground_energy() - self.fd.energy
    }
}

/// Both oracles for a configuration.
pub fn compute_oracles(cfg: &ExperimentConfig) -> Result<OracleOutcome> {
    let system = cfg.system()?;
    let basis = SpectralBasis::new(cfg.basis.n, system)?;
    let jacobi = jacobi_eigen(&HamiltonianMatrix::build(&basis))?;
    let fd = fd_ground_state(&system, cfg.oracle.m)?;
    Ok(OracleOutcome { jacobi, fd })
}

/// `oracle` subcommand: writes `oracle_vector.csv` into `out_dir`.
pub fn run_oracle(cfg: &ExperimentConfig, out_dir: &Path) -> Result<OracleOutcome> {
    let outcome = compute_oracles(cfg)?;
    fs::create_dir_all(out_dir)?;
    let mut t = Table::new(&["n", "coefficient"]);
    for (n, c) in outcome.jacobi.ground_vector().iter().enumerate() {
        t.push(vec![(n + 1).to_string(), num(*c)]);
    }
    t.write(BufWriter::new(File::create(out_dir.join("oracle_vector.csv"))?))?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: TrainReport,
    pub fd_energy: f64,
    pub out_dir: PathBuf,
}

/// `solve` subcommand: train, then write every artifact into `out_dir`.
pub fn run_solve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SolveOutcome> {
    fs::create_dir_all(out_dir)?;
    let train_cfg = cfg.train_config_with_checkpoint(out_dir.join("model.ckpt"))?;
    let report = train(&train_cfg)?;
    let fd = fd_ground_state(&train_cfg.system, cfg.oracle.m)?;

    output::write_trace(BufWriter::new(File::create(out_dir.join("trace.csv"))?), &report.trace)?;

    let problem = Problem::new(train_cfg.system, train_cfg.basis_size, train_cfg.grid_size)?;
    let rows = wavefunction_rows(&problem, &report)?;
    output::write_wavefunction(BufWriter::new(File::create(out_dir.join("wavefunction.csv"))?), &rows)?;

    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let trained: Vec<f64> = rows.iter().map(|r| r.psi_reconstructed).collect();
    let exact: Vec<f64> = rows.iter().map(|r| r.psi_oracle).collect();
    let svg = output::svg_plot(
        &format!("Normalized ground state (a = {}, alpha = {})", train_cfg.system.width, train_cfg.system.alpha),
        "x",
        "psi(x)",
        &xs,
        &[
            Curve {
                label: "network",
                color: "#1f77b4",
                dashed: false,
                ys: &trained,
            },
            Curve {
                label: "exact",
                color: "#d62728",
                dashed: true,
                ys: &exact,
            },
        ],
    );
    fs::write(out_dir.join("wavefunction.svg"), svg)?;

    let mut t = Table::new(&[
        "final_energy",
        "oracle_energy",
        "oracle_fd_energy",
        "oracle_overlap",
        "iterations",
        "converged",
        "wall_time_s",
    ]);
    t.push(vec![
        num(report.final_energy),
        num(report.oracle_energy),
        num(fd.energy),
        num(report.oracle_overlap),
        report.iterations.to_string(),
        report.converged.to_string(),
        format!("{:.3}", report.wall_time.as_secs_f64()),
    ]);
    t.write(BufWriter::new(File::create(out_dir.join("report.csv"))?))?;

    Ok(SolveOutcome {
        report,
        fd_energy: fd.energy,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Raw network output, basis reconstruction and oracle state on a uniform
/// plot grid. The raw output is rescaled by the same factor and sign that
/// normalize its coefficients.
pub fn wavefunction_rows(problem: &Problem, report: &TrainReport) -> Result<Vec<WavefunctionRow>> {
    let a = problem.basis.system().width;
    let xs: Vec<f64> = (0..PLOT_POINTS)
        .map(|i| a * i as f64 / (PLOT_POINTS - 1) as f64)
        .collect();
    let raw_c = problem.coefficients(&report.params)?;
    let fixed = &report.final_coefficients;
    let norm = raw_c.dot(&raw_c).sqrt();
    let sign = if raw_c.dot(fixed) < 0.0 { -1.0 } else { 1.0 };
    let inputs: Vec<f64> = xs.iter().map(|x| x / a).collect();
    let raw = report.params.forward_batch(&inputs);
    let recon = reconstruct(fixed.as_slice().expect("contiguous"), &problem.basis, &xs);
    let exact = reconstruct(
        report.oracle_coefficients.as_slice().expect("contiguous"),
        &problem.basis,
        &xs,
    );
    Ok((0..xs.len())
        .map(|i| WavefunctionRow {
            x: xs[i],
            psi_net_raw: sign * raw[i] / norm,
            psi_reconstructed: recon[i],
            psi_oracle: exact[i],
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub system: &'static str,
    pub computed: f64,
    pub oracle_basis: f64,
    pub oracle_fd: f64,
    pub reference: f64,
    pub report: TrainReport,
}

/// `table` subcommand: trains the three bundled wells and writes
/// `system,computed,oracle_basis,oracle_fd,paper_exact`.
pub fn run_table(out: &Path, threads: usize) -> Result<Vec<TableRow>> {
    let jobs: Vec<(&'static str, ExperimentConfig, f64)> = REFERENCE_ENERGIES
        .iter()
        .map(|&(label, preset, e)| (label, ExperimentConfig::preset(preset).expect("bundled preset"), e))
        .collect();
    let results = parallel_map(&jobs, threads, |(label, cfg, reference)| -> Result<TableRow> {
        let report = train(&cfg.train_config()?)?;
        let fd = fd_ground_state(&cfg.system()?, cfg.oracle.m)?;
        Ok(TableRow {
            system: label,
            computed: report.final_energy,
            oracle_basis: report.oracle_energy,
            oracle_fd: fd.energy,
            reference: *reference,
            report,
        })
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut t = Table::new(&["system", "computed", "oracle_basis", "oracle_fd", "paper_exact"]);
    for r in &rows {
        t.push(vec![
            r.system.to_string(),
            num(r.computed),
            num(r.oracle_basis),
            num(r.oracle_fd),
            format!("{:.5}", r.reference),
        ]);
    }
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    t.write(BufWriter::new(File::create(out)?))?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    BasisSize,
    GridSize,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::BasisSize => "N",
            SweepParameter::GridSize => "G",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: usize,
    pub oracle_energy: f64,
    /// Trained energy; `None` for an oracle-only basis sweep.
    pub energy: Option<f64>,
    /// Largest change of the normalized coefficients against the previous
    /// row (grid sweeps only).
    pub coefficient_change: Option<f64>,
}

/// `sweep` subcommand.
///
/// Over `N`, reports the Jacobi ground energy per basis size, training a
/// network per size when `train_each` is set. Over `G`, trains once with the
/// configured grid and re-projects the trained network on every grid size.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    parameter: SweepParameter,
    values: &[usize],
    train_each: bool,
    threads: usize,
    out: &Path,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let system = cfg.system()?;
    let rows = match parameter {
        SweepParameter::BasisSize => {
            let results = parallel_map(values, threads, |&n| -> Result<SweepRow> {
                let basis = SpectralBasis::new(n, system)?;
                let oracle_energy = jacobi_eigen(&HamiltonianMatrix::build(&basis))?.ground_energy();
                let energy = if train_each {
                    let mut c = cfg.clone();
                    c.basis.n = n;
                    c.quadrature.g = c.quadrature.g.max(n);
                    Some(train(&c.train_config()?)?.final_energy)
                } else {
                    None
                };
                Ok(SweepRow {
                    value: n,
                    oracle_energy,
                    energy,
                    coefficient_change: None,
                })
            });
            results.into_iter().collect::<Result<Vec<_>>>()?
        }
        SweepParameter::GridSize => {
            let report = train(&cfg.train_config()?)?;
            let mut rows: Vec<SweepRow> = Vec::with_capacity(values.len());
            let mut previous: Option<Array1<f64>> = None;
            for &g in values {
                let problem = Problem::new(system, cfg.basis.n, g)?;
                let c = problem.coefficients(&report.params)?;
                let energy = problem.hamiltonian.energy(c.view())?;
                let fixed = sign_fix(c.view())?;
                let change = previous
                    .as_ref()
                    .map(|p| (p - &fixed).iter().fold(0.0f64, |m, v| m.max(v.abs())));
                rows.push(SweepRow {
                    value: g,
                    oracle_energy: report.oracle_energy,
                    energy: Some(energy),
                    coefficient_change: change,
                });
                previous = Some(fixed);
            }
            rows
        }
    };

    let mut t = Table::new(&["parameter", "value", "oracle_energy", "energy", "coefficient_change"]);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in &rows {
        t.push(vec![
            parameter.name().to_string(),
            r.value.to_string(),
            num(r.oracle_energy),
            opt(r.energy),
            opt(r.coefficient_change),
        ]);
    }
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    t.write(BufWriter::new(File::create(out)?))?;
    Ok(rows)
}
