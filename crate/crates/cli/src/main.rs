//! Command-line harness for sparseconv: instance generation, convolution, verification,
//! benchmark grids and hashing experiments.
//!
//! Exit codes: 0 success, 1 verification rejected, 2 usage or malformed input,
//! 3 sizing or configuration error, 4 I/O failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sparseconv::dense_conv::dense_conv;
use sparseconv::hashing::concentration_experiment;
use sparseconv::instances::{generate, InstanceSpec, Structure};
use sparseconv::numeric::find_prime;
use sparseconv::par;
use sparseconv::pipeline::{sparse_conv_with_stats, PipelineConfig, PipelineStats};
use sparseconv::vectors::{brute_conv, SparseVec};
use sparseconv::verify::verify_sparse;

const DENSE_MAX_LEN: u64 = 1 << 27;

#[derive(Parser)]
#[command(name = "sparseconv", version, about = "Output-sensitive sparse nonnegative convolution")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance pair and write it as two SPARSEVEC files.
    Gen(GenArgs),
    /// Convolve two SPARSEVEC files; stats go to stdout as one JSON line.
    Conv(ConvArgs),
    /// Check C = A * B; exits 0 on accept and 1 on reject.
    Verify(VerifyArgs),
    /// Run a grid of instances and print one CSV row per run.
    Bench(BenchArgs),
    /// Measure bucket concentration of the linear hash family; prints CSV.
    HashExperiment(HashArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sparse,
    Dense,
    Brute,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Sparse => "sparse",
            Mode::Dense => "dense",
            Mode::Brute => "brute",
        }
    }
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "SPARSECONV_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k: usize,
    /// Largest entry value.
    #[arg(long, default_value_t = 1)]
    max_value: u64,
    #[arg(long, default_value = "uniform", value_parser = parse_structure)]
    structure: Structure,
    #[command(flatten)]
    seed: SeedArg,
    /// Directory receiving a.svec and b.svec.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, value_enum, default_value = "sparse")]
    mode: Mode,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    a: PathBuf,
    b: PathBuf,
    c: PathBuf,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1048576")]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "256,1024")]
    k: Vec<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1)]
    max_value: u64,
    #[arg(long, value_delimiter = ',', default_value = "uniform", value_parser = parse_structure)]
    structure: Vec<Structure>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sparse")]
    mode: Vec<Mode>,
    #[arg(long, default_value_t = 3)]
    trials: u64,
    /// Worker threads for independent trials; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HashArgs {
    /// Universe size U.
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k: usize,
    /// Number of buckets; defaults to k.
    #[arg(long)]
    m: Option<u64>,
    /// Trials per block.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    blocks: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_structure(s: &str) -> Result<Structure, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Sizing(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Sizing(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Sizing(m) | CliError::Io(m) => m,
        }
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn sizing(e: impl std::fmt::Display) -> CliError {
    CliError::Sizing(e.to_string())
}

fn read_vec(path: &Path) -> Result<SparseVec, CliError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    SparseVec::read_from(BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_vec(path: &Path, v: &SparseVec) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    v.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn output<'a>(out: &Option<PathBuf>) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn pipeline_config(delta: Option<f64>, gamma: Option<f64>, seed: u64) -> PipelineConfig {
    let d = PipelineConfig::default();
    PipelineConfig { delta: delta.unwrap_or(d.delta), gamma, seed, parallel: false, ..d }
}

#[derive(Serialize)]
struct ConvStats {
    mode: &'static str,
    n: u64,
    nnz_a: usize,
    nnz_b: usize,
    nnz_c: usize,
    seed: u64,
    wall_ns: u128,
    dense_calls: u64,
    hash_loop_iters: u64,
    estimate_steps: u64,
    restarts: u64,
    level_support: Vec<usize>,
    level_residuals: Vec<usize>,
    verified: bool,
}

struct ConvRun {
    c: SparseVec,
    stats: PipelineStats,
    wall_ns: u128,
}

fn run_conv(a: &SparseVec, b: &SparseVec, mode: Mode, cfg: &PipelineConfig) -> Result<ConvRun, CliError> {
    if a.len() != b.len() {
        return Err(CliError::Input(format!("universe mismatch: {} vs {}", a.len(), b.len())));
    }
    let start = Instant::now();
    let (c, stats) = match mode {
        Mode::Sparse => sparse_conv_with_stats(a, b, cfg).map_err(sizing)?,
        Mode::Brute => (brute_conv(a, b).map_err(sizing)?, PipelineStats { verified: true, ..Default::default() }),
        Mode::Dense => {
            if a.len() > DENSE_MAX_LEN {
                return Err(CliError::Sizing(format!("dense mode needs n <= 2^27, got {}", a.len())));
            }
            let d = dense_conv(&a.to_dense(), &b.to_dense()).map_err(sizing)?;
            let c = SparseVec::from_dense(&d).and_then(|c| c.with_len(2 * a.len() - 1)).map_err(sizing)?;
            (c, PipelineStats { dense_calls: 1, verified: true, ..Default::default() })
        }
    };
    Ok(ConvRun { c, stats, wall_ns: start.elapsed().as_nanos() })
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let spec = InstanceSpec { n: args.n, k: args.k, max_value: args.max_value, structure: args.structure, seed: args.seed.seed };
    let (a, b) = generate(&spec).map_err(sizing)?;
    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    write_vec(&args.out.join("a.svec"), &a)?;
    write_vec(&args.out.join("b.svec"), &b)
}

fn cmd_conv(args: ConvArgs) -> Result<(), CliError> {
    let (a, b) = (read_vec(&args.a)?, read_vec(&args.b)?);
    let cfg = pipeline_config(args.delta, args.gamma, args.seed.seed);
    par::set_enabled(false);
    let run = run_conv(&a, &b, args.mode, &cfg)?;
    write_vec(&args.out, &run.c)?;
    let s = run.stats;
    let stats = ConvStats {
        mode: args.mode.name(),
        n: a.len(),
        nnz_a: a.nnz(),
        nnz_b: b.nnz(),
        nnz_c: run.c.nnz(),
        seed: args.seed.seed,
        wall_ns: run.wall_ns,
        dense_calls: s.dense_calls,
        hash_loop_iters: s.hash_loop_iters,
        estimate_steps: s.estimate_steps,
        restarts: s.restarts,
        level_support: s.level_support,
        level_residuals: s.level_residuals,
        verified: s.verified,
    };
    println!("{}", serde_json::to_string(&stats).map_err(|e| CliError::Io(e.to_string()))?);
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<bool, CliError> {
    let (a, b, c) = (read_vec(&args.a)?, read_vec(&args.b)?, read_vec(&args.c)?);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.seed);
    Ok(verify_sparse(&a, &b, &c, &mut rng))
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut grid = Vec::new();
    for &n in &args.n {
        for &k in &args.k {
            for &structure in &args.structure {
                for trial in 0..args.trials {
                    for &mode in &args.mode {
                        grid.push((n, k, structure, args.seed.seed.wrapping_add(trial), mode));
                    }
                }
            }
        }
    }
    let rows: Vec<Result<String, CliError>> = par::with_jobs(args.jobs, || {
        par::map_range(grid.len(), |i| {
            let (n, k, structure, seed, mode) = grid[i];
            let spec = InstanceSpec { n, k, max_value: args.max_value, structure, seed };
            let (a, b) = generate(&spec).map_err(sizing)?;
            let cfg = pipeline_config(args.delta, args.gamma, seed);
            let run = run_conv(&a, &b, mode, &cfg)?;
            let verified = verify_sparse(&a, &b, &run.c, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
            Ok(format!(
                "{n},{k},{},{structure},{seed},{},{},{},{verified}",
                cfg.delta,
                mode.name(),
                run.wall_ns,
                run.stats.dense_calls
            ))
        })
    });
    let mut w = output(&args.out)?;
    let werr = |e: io::Error| CliError::Io(e.to_string());
    writeln!(w, "n,k,delta,structure,seed,mode,wall_ns,dense_calls,verified").map_err(werr)?;
    for row in rows {
        writeln!(w, "{}", row?).map_err(werr)?;
    }
    w.flush().map_err(werr)
}

fn cmd_hash(args: HashArgs) -> Result<(), CliError> {
    let (u, k) = (args.n, args.k);
    if k == 0 || k as u64 >= u {
        return Err(CliError::Sizing(format!("need 1 <= k < U, got k={k}, U={u}")));
    }
    let m = args.m.unwrap_or(k as u64);
    let u2 = u as u128 * u as u128;
    let rows: Vec<Result<Vec<String>, CliError>> = par::with_jobs(args.jobs, || {
        par::map_range(args.blocks as usize, |block| {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed.seed.wrapping_add(block as u64));
            let p = find_prime(4 * u2 + 1, 8 * u2, &mut rng).map_err(sizing)?;
            let mut pool: Vec<u64> = sample(&mut rng, u as usize, k + 1).into_iter().map(|i| i as u64).collect();
            let x = pool.pop().unwrap_or(0);
            let (ha, hb) = (rng.gen_range(0..m), rng.gen_range(0..m));
            let st = concentration_experiment(&pool, u, p, m, x, ha, hb, args.trials, &mut rng).map_err(sizing)?;
            Ok(st
                .tail_mass
                .iter()
                .map(|(lambda, mass)| format!("{u},{k},{m},{p},{lambda},{mass},{},{}", st.mean_f, st.cond_prob))
                .collect())
        })
    });
    let mut w = output(&args.out)?;
    let werr = |e: io::Error| CliError::Io(e.to_string());
    writeln!(w, "U,k,m,p,lambda,tail_mass,mean_F,cond_prob").map_err(werr)?;
    for block in rows {
        for row in block? {
            writeln!(w, "{row}").map_err(werr)?;
        }
    }
    w.flush().map_err(werr)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Conv(a) => cmd_conv(a),
        Cmd::Verify(a) => match cmd_verify(a) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("rejected");
                return ExitCode::from(1);
            }
            Err(e) => Err(e),
        },
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::HashExperiment(a) => cmd_hash(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
