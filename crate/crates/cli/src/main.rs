use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparsecert::certificates::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use sparsecert::harness::{self, InstanceFile, EXIT_INPUT_ERROR};
use sparsecert::oracles::DEFAULT_MAX_COMBINATIONS;
use sparsecert::SupportSet;

#[derive(Parser)]
#[command(name = "sparsecert", version, about = "Exactness certificates for sparse ridge regression relaxations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check both certificates for a support on a JSON instance.
    Check {
        instance: PathBuf,
        /// Comma-separated column indices; defaults to the file's `support`.
        #[arg(long, value_delimiter = ',')]
        support: Option<Vec<usize>>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Brute-force optimum and continuous relaxation value.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_COMBINATIONS)]
        max_combinations: u128,
    },
    /// Gaussian-ensemble recovery sweep.
    Sweep {
        config: PathBuf,
        output: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Rate-vs-alpha SVG chart from an aggregate CSV.
    Plot { agg_csv: PathBuf, output_svg: PathBuf },
    /// Re-run built-in reference examples.
    Selftest,
}

fn fail(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_INPUT_ERROR as u8)
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            instance,
            support,
            tol,
            max_iter,
        } => {
            let (inst, file_support) = match InstanceFile::load(&instance).and_then(|f| f.into_instance()) {
                Ok(v) => v,
                Err(e) => return fail(e),
            };
            let support = match support {
                Some(ix) => match SupportSet::new(ix) {
                    Ok(s) => s,
                    Err(e) => return fail(e),
                },
                None => match file_support {
                    Some(s) => s,
                    None => return fail("no support given and the instance file has none"),
                },
            };
            match harness::run_check(&inst, &support, tol, max_iter) {
                Ok(report) => {
                    print!("{}", report.render());
                    code(report.exit_code())
                }
                Err(e) => fail(e),
            }
        }
        Command::Oracle {
            instance,
            max_combinations,
        } => {
            let inst = match InstanceFile::load(&instance).and_then(|f| f.into_instance()) {
                Ok((inst, _)) => inst,
                Err(e) => return fail(e),
            };
            match harness::run_oracle(&inst, max_combinations) {
                Ok(report) => {
                    print!("{}", report.render());
                    code(report.exit_code())
                }
                Err(e) => fail(e),
            }
        }
        Command::Sweep {
            config,
            output,
            workers,
        } => {
            let cfg = match harness::load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let workers = workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            });
            match harness::run_sweep(&cfg, &output, workers) {
                Ok(out) => {
                    println!(
                        "{} trials, {} cells -> {} and {}",
                        out.records.len(),
                        out.rows.len(),
                        output.display(),
                        harness::aggregate_path(&output).display()
                    );
                    code(0)
                }
                Err(e) => fail(e),
            }
        }
        Command::Plot {
            agg_csv,
            output_svg,
        } => match harness::run_plot(&agg_csv, &output_svg) {
            Ok(()) => code(0),
            Err(e) => fail(e),
        },
        Command::Selftest => {
            let (text, ok) = harness::selftest();
            print!("{text}");
            code(if ok { 0 } else { 1 })
        }
    }
}
