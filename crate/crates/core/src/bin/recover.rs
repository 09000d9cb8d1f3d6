use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use matvec_recovery::harness::{
    run_experiment, write_csv, Algorithm, ExperimentSpec, FunctionKind, MatrixSource, SensingChoice,
};
use matvec_recovery::{par, Error};

/// Worker count for the data-parallel parts; defaults to the number of CPUs.
const THREADS_ENV: &str = "RECOVER_THREADS";

/// Recover f(A) from matrix-vector products over a sweep of measurement
/// counts and write the error curve as CSV.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// spamram or bamram
    #[arg(long)]
    algo: Algorithm,
    /// banded:n,k,norm | sparse:n,density,norm | mm:PATH
    #[arg(long)]
    matrix: MatrixSource,
    /// id, exp, sqrt, log, sqrt1p or log1p
    #[arg(long, default_value = "id")]
    function: FunctionKind,
    /// Comma-separated, strictly increasing measurement counts
    #[arg(long, value_delimiter = ',', required = true)]
    sweep: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    krylov_steps: usize,
    #[arg(long, default_value_t = 50)]
    contour_points: usize,
    #[arg(long)]
    out: PathBuf,
    /// SpaMRAM sparsity; floor(s/8) when absent
    #[arg(long)]
    k: Option<usize>,
    /// gaussian, dct or sparse
    #[arg(long, default_value = "gaussian")]
    sensing: SensingChoice,
    /// dense or none
    #[arg(long, default_value = "dense", value_parser = ["dense", "none"])]
    oracle: String,
}

fn run(args: Args) -> Result<(), Error> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads = v
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        par::init_threads(threads)?;
    }
    let mut spec = ExperimentSpec::new(args.matrix, args.function, args.algo, args.sweep);
    spec.seed = args.seed;
    spec.krylov_steps = args.krylov_steps;
    spec.contour_points = args.contour_points;
    spec.k = args.k;
    spec.sensing = args.sensing;
    spec.oracle = args.oracle == "dense";
    let rows = run_experiment(&spec)?;
    write_csv(&rows, BufWriter::new(File::create(&args.out)?))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
