use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vqs::cli::{self, SweepParameter};
use vqs::config::ExperimentConfig;
use vqs::Error;

#[derive(Parser)]
#[command(name = "vqs", version, about = "Neural-network ground states of 1-D quantum wells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write trace, wave function, report and plot.
    Solve {
        /// Experiment file, or the name of a bundled preset.
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the Jacobi and finite-difference ground energies.
    Oracle {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Train the three bundled wells and tabulate them against references.
    Table {
        #[arg(short, long, default_value = "table1.csv")]
        out: PathBuf,
    },
    /// Vary the basis or grid size and write a convergence table.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        over: Over,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        /// Also train a network at every basis size.
        #[arg(long)]
        train: bool,
        #[arg(short, long, default_value = "sweep.csv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Over {
    #[value(name = "N", alias = "n")]
    N,
    #[value(name = "G", alias = "g")]
    G,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Solve { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let s = cli::run_solve(&cfg, &out)?;
            let r = &s.report;
            println!("final energy      {:.8}", r.final_energy);
            println!("oracle (basis)    {:.8}", r.oracle_energy);
            println!("oracle (grid)     {:.8}", s.fd_energy);
            println!("overlap           {:.8}", r.oracle_overlap);
            println!("iterations        {}{}", r.iterations, if r.converged { " (converged)" } else { "" });
            println!("wrote {}", out.display());
        }
        Command::Oracle { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let o = cli::run_oracle(&cfg, &out)?;
            println!("jacobi (N = {})   {:.10}", cfg.basis.n, o.basis_energy());
            println!("finite difference (M = {})   {:.10}", cfg.oracle.m, o.fd.energy);
            println!("difference   {:.3e}", o.difference());
        }
        Command::Table { out } => {
            let rows = cli::run_table(&out, cli::thread_budget())?;
            for r in &rows {
                println!(
                    "{:<12} computed {:.5}  basis {:.5}  grid {:.5}  reference {:.5}",
                    r.system, r.computed, r.oracle_basis, r.oracle_fd, r.reference
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Sweep {
            config,
            over,
            values,
            train,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let parameter = match over {
                Over::N => SweepParameter::BasisSize,
                Over::G => SweepParameter::GridSize,
            };
            let rows = cli::run_sweep(&cfg, parameter, &values, train, cli::thread_budget(), &out)?;
            for r in &rows {
                println!("{} = {:>6}  oracle {:.10}", parameter.name(), r.value, r.oracle_energy);
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
