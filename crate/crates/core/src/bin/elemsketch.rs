use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use elemsketch::harness::{self, ExperimentSpec, Generator, MatrixFormat, ReportFormat};
use elemsketch::mixing::{self, SigmaMinMode, DEFAULT_GRID_HI, DEFAULT_GRID_LO, DEFAULT_GRID_STEPS};
use elemsketch::sketch::{self, SamplingDistribution};
use elemsketch::spca::{self, IterSparseOptions};
use elemsketch::spectral::INTERNAL_SEED;
use elemsketch::{Error, Matrix, Result};

#[derive(Parser)]
#[command(name = "elemsketch", version, about = "Element-wise matrix sketches and sparse PCA")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Hybrid,
    Uniform,
    UniformNonzero,
    Leverage,
    Threshold,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    MaxR,
    IterSparse,
    BruteForce,
}

#[derive(Clone, Copy, ValueEnum)]
enum SigmaArg {
    Skip,
    Exact,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    SpikyPowerlaw,
    LowRankNoise,
    BinaryPixel,
}

#[derive(Subcommand)]
enum Command {
    /// Sample (or threshold) a sketch of a matrix file.
    Sketch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = DistArg::Hybrid)]
        dist: DistArg,
        /// Mixing weight; optimized when omitted.
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of draws.
        #[arg(long, conflicts_with = "fraction")]
        samples: Option<u64>,
        /// Draws as a fraction of the nonzero count.
        #[arg(long)]
        fraction: Option<f64>,
        /// Accuracy for the α search and the threshold cutoff.
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Rank for leverage scores.
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long)]
        center: bool,
        /// Where to write the sketch (.mtx or .csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Optimize the mixing weight and report the sample bound.
    Alpha {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = SigmaArg::Auto)]
        sigma_min: SigmaArg,
        #[arg(long, default_value_t = DEFAULT_GRID_LO)]
        grid_lo: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_HI)]
        grid_hi: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_STEPS)]
        grid_steps: usize,
        #[arg(long)]
        center: bool,
    },
    /// Sparse principal components of a matrix file.
    Spca {
        #[arg(long)]
        input: PathBuf,
        /// Score components against this matrix instead of the input.
        #[arg(long)]
        evaluate_on: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::IterSparse)]
        method: MethodArg,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long)]
        center: bool,
    },
    /// Spectral distance between a matrix and a sketch of it.
    Deviate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sketch: PathBuf,
    },
    /// Run an experiment spec (JSON) and emit its report.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic matrix.
    Generate {
        #[arg(long, value_enum)]
        generator: GeneratorArg,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 0.7)]
        exponent: f64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged(_) => 3,
        Error::Parameter(_)
        | Error::Dimension(_)
        | Error::Parse { .. }
        | Error::DuplicateCoordinate { .. }
        | Error::NonFinite { .. }
        | Error::SizeGuard(_)
        | Error::Degenerate(_)
        | Error::Consistency(_)
        | Error::Json(_) => 2,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

fn format_of(path: &Path) -> Result<MatrixFormat> {
    MatrixFormat::from_path(path)
        .ok_or_else(|| Error::Parameter(format!("unknown matrix extension: {} (use .mtx or .csv)", path.display())))
}

fn load(path: &Path, center: bool) -> Result<Matrix> {
    let a = harness::load_matrix(path, format_of(path)?)?;
    Ok(if center { a.center_columns() } else { a })
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SketchOutput {
    rows: usize,
    cols: usize,
    nnz: usize,
    /// Draw count; 0 for thresholded sketches.
    s: u64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    distribution: Option<sketch::DistributionDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<sketch::ThresholdChoice>,
    op_norm_diff: f64,
    gram_diff: f64,
}

#[derive(Serialize)]
struct AlphaOutput {
    #[serde(flatten)]
    profile: mixing::MixingProfile,
    sigma_min_computed: bool,
    delta: f64,
    k: usize,
    sample_complexity: u64,
}

#[derive(Serialize)]
struct SpcaOutput {
    method: spca::SpcaMethod,
    k: usize,
    r: usize,
    f: f64,
    converged: bool,
    loadings: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_sketch(
    cli: &Cli,
    input: &Path,
    dist: DistArg,
    alpha: Option<f64>,
    samples: Option<u64>,
    fraction: Option<f64>,
    eps: f64,
    rank: usize,
    center: bool,
    output: Option<&Path>,
) -> Result<()> {
    let a = load(input, center)?;
    let s = match (samples, fraction) {
        (Some(s), _) => s,
        (None, Some(f)) if f > 0.0 => (f * a.nnz() as f64).ceil() as u64,
        (None, Some(f)) => return Err(Error::Parameter(format!("fraction must be positive, got {f}"))),
        (None, None) => a.nnz() as u64,
    };
    let sampled = |d: SamplingDistribution| sketch::sample_sketch(&a, &d, s, cli.seed);
    let result = match dist {
        DistArg::Hybrid => {
            let alpha = match alpha {
                Some(x) => x,
                None => mixing::optimize_alpha(&a, eps, DEFAULT_GRID_LO, DEFAULT_GRID_HI, DEFAULT_GRID_STEPS, 0.0)?.alpha_star,
            };
            sampled(sketch::hybrid_probabilities(&a, alpha)?)?
        }
        DistArg::Uniform => sampled(sketch::uniform_probabilities(&a))?,
        DistArg::UniformNonzero => sampled(sketch::uniform_nonzero_probabilities(&a)?)?,
        DistArg::Leverage => {
            let scores = sketch::leverage_scores(&a, rank, INTERNAL_SEED)?;
            sampled(sketch::leverage_probabilities(&scores, a.rows(), a.cols())?)?
        }
        DistArg::Threshold => {
            let choice = sketch::select_threshold(&a, eps)?;
            let t = sketch::threshold_sketch(&a, choice.delta)?;
            if let Some(out) = output {
                harness::save_matrix(&t, out, format_of(out)?)?;
            }
            let dev = sketch::spectral_deviation(&a, &t)?;
            let out = SketchOutput {
                rows: t.rows(),
                cols: t.cols(),
                nnz: t.nnz(),
                s: 0,
                seed: cli.seed,
                distribution: None,
                threshold: Some(choice),
                op_norm_diff: dev.op_norm_diff,
                gram_diff: dev.gram_diff,
            };
            return emit_sketch(cli, out);
        }
    };
    if let Some(out) = output {
        harness::save_matrix(&result.sketch, out, format_of(out)?)?;
    }
    let dev = sketch::spectral_deviation(&a, &result.sketch)?;
    let summary = result.summary();
    emit_sketch(
        cli,
        SketchOutput {
            rows: summary.rows,
            cols: summary.cols,
            nnz: summary.nnz,
            s: summary.s,
            seed: summary.seed,
            distribution: Some(summary.distribution),
            threshold: None,
            op_norm_diff: dev.op_norm_diff,
            gram_diff: dev.gram_diff,
        },
    )
}

fn emit_sketch(cli: &Cli, out: SketchOutput) -> Result<()> {
    match cli.format {
        OutFormat::Json => print_json(&out),
        OutFormat::Csv => print_csv(
            &["rows", "cols", "nnz", "s", "seed", "op_norm_diff", "gram_diff"],
            [vec![
                out.rows.to_string(),
                out.cols.to_string(),
                out.nnz.to_string(),
                out.s.to_string(),
                out.seed.to_string(),
                out.op_norm_diff.to_string(),
                out.gram_diff.to_string(),
            ]],
        ),
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sketch { input, dist, alpha, samples, fraction, eps, rank, center, output } => {
            cmd_sketch(cli, input, *dist, *alpha, *samples, *fraction, *eps, *rank, *center, output.as_deref())
        }
        Command::Alpha { input, eps, delta, k, sigma_min, grid_lo, grid_hi, grid_steps, center } => {
            let a = load(input, *center)?;
            let mode = match sigma_min {
                SigmaArg::Skip => SigmaMinMode::Skip,
                SigmaArg::Exact => SigmaMinMode::Exact,
                SigmaArg::Auto => SigmaMinMode::Auto,
            };
            let (sigma_min_sq, computed) = mixing::resolve_sigma_min_sq(&a, mode)?;
            let profile = mixing::optimize_alpha(&a, *eps, *grid_lo, *grid_hi, *grid_steps, sigma_min_sq)?;
            let s = profile.sample_complexity(*delta, a.rows(), a.cols(), *k)?;
            match cli.format {
                OutFormat::Json => print_json(&AlphaOutput {
                    profile,
                    sigma_min_computed: computed,
                    delta: *delta,
                    k: *k,
                    sample_complexity: s,
                }),
                OutFormat::Csv => print_csv(
                    &["alpha", "objective"],
                    profile
                        .alpha_grid
                        .iter()
                        .zip(&profile.objective_values)
                        .map(|(a, o)| vec![a.to_string(), o.to_string()])
                        .chain(std::iter::once(vec![
                            profile.alpha_star.to_string(),
                            profile.objective_at_star.to_string(),
                        ])),
                ),
            }
        }
        Command::Spca { input, evaluate_on, k, r, method, restarts, tol, max_iter, center } => {
            let a = load(input, *center)?;
            let v = match method {
                MethodArg::Exact => spca::exact_pca(&a, *k, cli.seed)?,
                MethodArg::MaxR => spca::truncate_components(&spca::exact_pca(&a, *k, cli.seed)?, *r)?,
                MethodArg::IterSparse => {
                    let opts = IterSparseOptions { restarts: *restarts, tol: *tol, max_iter: *max_iter };
                    spca::iter_sparse_pca(&a, *k, *r, opts, cli.seed)?
                }
                MethodArg::BruteForce => spca::brute_force_spca(&a, *k, *r)?,
            };
            let target = match evaluate_on {
                Some(p) => load(p, *center)?,
                None => a,
            };
            let f = spca::variance(&target, &v)?;
            match cli.format {
                OutFormat::Json => print_json(&SpcaOutput {
                    method: v.method,
                    k: v.k(),
                    r: v.r,
                    f,
                    converged: v.converged,
                    loadings: v.loadings,
                }),
                OutFormat::Csv => {
                    let header: Vec<String> = (0..v.k()).map(|c| format!("v{}", c + 1)).collect();
                    let header: Vec<&str> = header.iter().map(String::as_str).collect();
                    let rows = (0..v.n()).map(|i| v.loadings.iter().map(|col| col[i].to_string()).collect());
                    print_csv(&header, rows)
                }
            }
        }
        Command::Deviate { input, sketch: sk } => {
            let a = load(input, false)?;
            let b = load(sk, false)?;
            let dev = sketch::spectral_deviation(&a, &b)?;
            match cli.format {
                OutFormat::Json => print_json(&dev),
                OutFormat::Csv => print_csv(
                    &["op_norm_diff", "gram_diff"],
                    [vec![dev.op_norm_diff.to_string(), dev.gram_diff.to_string()]],
                ),
            }
        }
        Command::Bench { spec, output } => {
            let text = std::fs::read_to_string(spec)?;
            let mut parsed: ExperimentSpec = serde_json::from_str(&text)?;
            // Relative data paths are taken relative to the spec file.
            if let harness::DatasetSource::File { path, .. } = &mut parsed.dataset {
                if path.is_relative() {
                    if let Some(dir) = spec.parent() {
                        *path = dir.join(&*path);
                    }
                }
            }
            let spec = parsed;
            let report = harness::run_experiment(&spec)?;
            let format = match cli.format {
                OutFormat::Json => ReportFormat::Json,
                OutFormat::Csv => ReportFormat::Csv,
            };
            harness::emit_report(&report, format, output.as_deref())
        }
        Command::Generate { generator, m, n, rank, exponent, noise, output } => {
            let g = match generator {
                GeneratorArg::SpikyPowerlaw => Generator::SpikyPowerlaw { m: *m, n: *n, rank: *rank, exponent: *exponent },
                GeneratorArg::LowRankNoise => Generator::LowRankNoise { m: *m, n: *n, rank: *rank, noise: *noise },
                GeneratorArg::BinaryPixel => Generator::BinaryPixel { m: *m, n: *n },
            };
            let a = harness::generate(&g, cli.seed)?;
            harness::save_matrix(&a, output, format_of(output)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
