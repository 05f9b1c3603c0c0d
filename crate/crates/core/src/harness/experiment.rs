//! Experiment specs and the sketch → solve → score pipeline.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate, Generator};
use super::io::{load_matrix, MatrixFormat};
use super::report::{
    median, Cell, DatasetInfo, ExperimentReport, MedianRow, MixingSummary, SketchRecord, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mixing::{self, SigmaMinMode, DEFAULT_GRID_HI, DEFAULT_GRID_LO, DEFAULT_GRID_STEPS};
use crate::rng::derive_seed;
use crate::sketch::{self, SamplingDistribution, SupportKind, ThresholdChoice};
use crate::spca::{self, ComponentSet, IterSparseOptions};
use crate::spectral::{self, INTERNAL_SEED};

/// Where the data matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    File {
        path: PathBuf,
        /// Inferred from the extension when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<MatrixFormat>,
    },
    Generator {
        generator: Generator,
        #[serde(default)]
        seed: u64,
    },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Matrix> {
        match self {
            DatasetSource::File { path, format } => {
                let format = match format {
                    Some(f) => *f,
                    None => MatrixFormat::from_path(path).ok_or_else(|| {
                        Error::param(format!("cannot infer matrix format of {}", path.display()))
                    })?,
                };
                load_matrix(path, format)
            }
            DatasetSource::Generator { generator, seed } => generate(generator, *seed),
        }
    }
}

/// Which matrix a variant's solver runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchFamily {
    Original,
    Hybrid,
    Uniform,
    Leverage,
    Threshold,
}

impl SketchFamily {
    fn tag(self) -> u64 {
        match self {
            SketchFamily::Original => 0,
            SketchFamily::Hybrid => 1,
            SketchFamily::Uniform => 2,
            SketchFamily::Leverage => 3,
            SketchFamily::Threshold => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Solver {
    /// Truncated exact principal components.
    MaxR,
    /// Multi-start truncated power iteration.
    Sparse,
}

/// Data source × solver. `G` is the original matrix, `H` the hybrid sketch,
/// `U` the uniform sketch, `L` the leverage sketch, `T` the thresholded matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "G_max")]
    GMax,
    #[serde(rename = "G_sp")]
    GSp,
    #[serde(rename = "H_max")]
    HMax,
    #[serde(rename = "H_sp")]
    HSp,
    #[serde(rename = "U_max")]
    UMax,
    #[serde(rename = "U_sp")]
    USp,
    #[serde(rename = "L_sp")]
    LSp,
    #[serde(rename = "T_sp")]
    TSp,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::GMax,
        Variant::GSp,
        Variant::HMax,
        Variant::HSp,
        Variant::UMax,
        Variant::USp,
        Variant::LSp,
        Variant::TSp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::GMax => "G_max",
            Variant::GSp => "G_sp",
            Variant::HMax => "H_max",
            Variant::HSp => "H_sp",
            Variant::UMax => "U_max",
            Variant::USp => "U_sp",
            Variant::LSp => "L_sp",
            Variant::TSp => "T_sp",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s))
    }

    pub fn family(self) -> SketchFamily {
        match self {
            Variant::GMax | Variant::GSp => SketchFamily::Original,
            Variant::HMax | Variant::HSp => SketchFamily::Hybrid,
            Variant::UMax | Variant::USp => SketchFamily::Uniform,
            Variant::LSp => SketchFamily::Leverage,
            Variant::TSp => SketchFamily::Threshold,
        }
    }

    pub fn solver(self) -> Solver {
        match self {
            Variant::GMax | Variant::HMax | Variant::UMax => Solver::MaxR,
            _ => Solver::Sparse,
        }
    }

    /// The G variant a ratio is taken against.
    pub fn baseline(self) -> Variant {
        match self.solver() {
            Solver::MaxR => Variant::GMax,
            Solver::Sparse => Variant::GSp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetBase {
    Nnz,
    Entries,
    /// Nonzeros for sparse storage, all entries for dense storage.
    Auto,
}

/// Sample count for the sampled sketches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Budget {
    /// s = ⌈fraction · base⌉ draws.
    Fraction { fraction: f64, base: BudgetBase },
    Samples { s: u64 },
    /// Sketch equals the (centered) matrix; a sanity mode.
    Copy,
}

impl Budget {
    fn samples(&self, a: &Matrix) -> Result<Option<u64>> {
        match *self {
            Budget::Copy => Ok(None),
            Budget::Samples { s } => Ok(Some(s)),
            Budget::Fraction { fraction, base } => {
                let count = match base {
                    BudgetBase::Nnz => a.nnz(),
                    BudgetBase::Entries => a.rows() * a.cols(),
                    BudgetBase::Auto if a.is_sparse() => a.nnz(),
                    BudgetBase::Auto => a.rows() * a.cols(),
                };
                let s = (fraction * count as f64).ceil();
                if s < 1.0 {
                    return Err(Error::param(format!("budget fraction {fraction} gives no samples")));
                }
                Ok(Some(s as u64))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlphaMode {
    Optimal,
    Fixed { alpha: f64 },
}

/// Solver timing: `warmup` discarded runs, then the median of `repeats`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub warmup: usize,
    pub repeats: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { warmup: 1, repeats: 5 }
    }
}

fn default_true() -> bool {
    true
}
fn default_k() -> usize {
    1
}
fn default_eps() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    0.1
}
fn default_alpha_mode() -> AlphaMode {
    AlphaMode::Optimal
}
fn default_support() -> SupportKind {
    SupportKind::AllEntries
}
fn default_restarts() -> usize {
    IterSparseOptions::default().restarts
}
fn default_sigma_min() -> SigmaMinMode {
    SigmaMinMode::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetSource,
    #[serde(default = "default_true")]
    pub center: bool,
    pub variants: Vec<Variant>,
    pub r_list: Vec<usize>,
    #[serde(default = "default_k")]
    pub k: usize,
    pub budget: Budget,
    /// Accuracy parameter for α* and the threshold cutoff.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Failure probability for the reported theoretical sample size.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_alpha_mode")]
    pub alpha_mode: AlphaMode,
    pub seeds: Vec<u64>,
    /// Rank for L_sp; defaults to k.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leverage_rank: Option<usize>,
    #[serde(default = "default_support")]
    pub uniform_support: SupportKind,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_sigma_min")]
    pub sigma_min: SigmaMinMode,
    /// Record ‖A−Ã‖₂ and ‖AᵀA−ÃᵀÃ‖₂ per sketch.
    #[serde(default = "default_true")]
    pub deviations: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingConfig>,
}

impl ExperimentSpec {
    /// Minimal spec with defaults for everything optional.
    pub fn new(dataset: DatasetSource, variants: Vec<Variant>, r_list: Vec<usize>, budget: Budget, seeds: Vec<u64>) -> Self {
        Self {
            dataset,
            center: true,
            variants,
            r_list,
            k: default_k(),
            budget,
            eps: default_eps(),
            delta: default_delta(),
            alpha_mode: default_alpha_mode(),
            seeds,
            leverage_rank: None,
            uniform_support: default_support(),
            restarts: default_restarts(),
            sigma_min: default_sigma_min(),
            deviations: true,
            timing: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::param("variants must not be empty"));
        }
        if self.r_list.is_empty() || self.r_list.contains(&0) {
            return Err(Error::param("r_list must be nonempty with every r >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::param("seeds must not be empty"));
        }
        if self.k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        match self.budget {
            Budget::Fraction { fraction, .. } if !(fraction > 0.0 && fraction.is_finite()) => {
                return Err(Error::param(format!("budget fraction must be positive, got {fraction}")));
            }
            Budget::Samples { s: 0 } => return Err(Error::param("budget must be at least one sample")),
            _ => {}
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let AlphaMode::Fixed { alpha } = self.alpha_mode {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::param(format!("alpha must lie in (0, 1], got {alpha}")));
            }
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts must be at least 1"));
        }
        if self.leverage_rank == Some(0) {
            return Err(Error::param("leverage_rank must be at least 1"));
        }
        if let Some(t) = self.timing {
            if t.repeats == 0 {
                return Err(Error::param("timing repeats must be at least 1"));
            }
        }
        Ok(())
    }

    /// Requested variants plus the G baselines they are compared against,
    /// deduplicated in canonical order.
    pub fn effective_variants(&self) -> Vec<Variant> {
        let mut v: Vec<Variant> = self.variants.iter().flat_map(|&x| [x, x.baseline()]).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Seed for the sketch of `family` under experiment seed `seed`.
pub fn sketch_seed(seed: u64, family: SketchFamily) -> u64 {
    derive_seed(seed, 0x5EC7_0000 + family.tag())
}

/// Seed for the solver at sparsity `r`; shared by all families so that G and
/// its sketches start from the same random restarts.
pub fn solver_seed(seed: u64, r: usize) -> u64 {
    derive_seed(seed, 0x501E_0000 + r as u64)
}

fn time_it<T>(timing: Option<TimingConfig>, mut f: impl FnMut() -> Result<T>) -> Result<(T, Option<f64>)> {
    let Some(t) = timing else {
        return f().map(|v| (v, None));
    };
    for _ in 0..t.warmup {
        f()?;
    }
    let mut times = Vec::with_capacity(t.repeats);
    let mut last = None;
    for _ in 0..t.repeats {
        let start = Instant::now();
        let v = f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(v);
    }
    Ok((last.expect("repeats >= 1"), median(&times)))
}

/// Seed-independent inputs shared by every seed.
struct Prepared {
    a: Matrix,
    hybrid: Option<SamplingDistribution>,
    uniform: Option<std::result::Result<SamplingDistribution, String>>,
    leverage: Option<std::result::Result<SamplingDistribution, String>>,
    threshold: Option<std::result::Result<(Matrix, ThresholdChoice), String>>,
    samples: Option<u64>,
}

struct BuiltSketch {
    matrix: Matrix,
    record: SketchRecord,
}

/// Runs every (variant, r, seed) cell of `spec`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let raw = spec.dataset.load()?;
    let a = if spec.center { raw.center_columns() } else { raw };
    let (m, n) = a.shape();
    if spec.k > m.min(n) {
        return Err(Error::param(format!("k = {} exceeds min(m, n) = {}", spec.k, m.min(n))));
    }
    if let Some(&r) = spec.r_list.iter().find(|&&r| r > n) {
        return Err(Error::param(format!("r = {r} exceeds the column count {n}")));
    }
    if a.nnz() == 0 {
        return Err(Error::Degenerate("data matrix is zero after centering".into()));
    }
    let summary = spectral::norms(&a, false)?;
    let dataset = DatasetInfo {
        rows: m,
        cols: n,
        nnz: a.nnz(),
        centered: spec.center,
        spectral_norm: summary.spectral_norm,
        frobenius_norm: summary.frobenius_norm,
        l1_norm: summary.l1_norm,
        stable_rank: summary.stable_rank,
    };

    let variants = spec.effective_variants();
    let families: Vec<SketchFamily> = {
        let mut f: Vec<SketchFamily> = variants.iter().map(|v| v.family()).collect();
        f.sort();
        f.dedup();
        f
    };
    let samples = spec.budget.samples(&a)?;
    let mut notes = vec![
        "f is trace(V^T A^T A V) on the original matrix (centered when center=true), never on the sketch".to_string(),
        "max-r components keep the r largest loadings and are rescaled to unit norm".to_string(),
        "theoretical_s uses rho2/||A||_2^2 and gamma/||A||_2 at alpha*".to_string(),
        "solver_ms excludes sketch construction; sketch_ms is reported per sketch".to_string(),
    ];
    if families.contains(&SketchFamily::Uniform) {
        notes.push(format!(
            "uniform sketch support: {}",
            match spec.uniform_support {
                SupportKind::AllEntries => "all m*n entries",
                SupportKind::NonzerosOnly => "nonzero entries only",
            }
        ));
    }

    let mut mixing = None;
    let mut alpha = None;
    if families.contains(&SketchFamily::Hybrid) {
        let (sigma_min_sq, computed) = mixing::resolve_sigma_min_sq(&a, spec.sigma_min)?;
        if m != n {
            notes.push("sigma_min is the min(m,n)-th singular value".to_string());
        }
        let ctx = mixing::MixingContext::new(&a)?;
        let s = match spec.alpha_mode {
            AlphaMode::Optimal => {
                let p = mixing::optimize_alpha_with(
                    &ctx,
                    spec.eps,
                    DEFAULT_GRID_LO,
                    DEFAULT_GRID_HI,
                    DEFAULT_GRID_STEPS,
                    sigma_min_sq,
                )?;
                MixingSummary {
                    alpha: p.alpha_star,
                    optimized: true,
                    grid_lo: DEFAULT_GRID_LO,
                    grid_hi: DEFAULT_GRID_HI,
                    grid_steps: DEFAULT_GRID_STEPS,
                    objective_at_alpha: Some(p.objective_at_star),
                    rho2: Some(p.rho2_at_star),
                    gamma: Some(p.gamma_at_star),
                    sigma_min_sq,
                    sigma_min_computed: computed,
                    theoretical_s: p.sample_complexity(spec.delta, m, n, spec.k).ok(),
                }
            }
            AlphaMode::Fixed { alpha } => {
                let rho2 = ctx.rho_squared(alpha, sigma_min_sq)?;
                let gamma = ctx.gamma(alpha)?;
                let sn = ctx.spectral_norm();
                MixingSummary {
                    alpha,
                    optimized: false,
                    grid_lo: DEFAULT_GRID_LO,
                    grid_hi: DEFAULT_GRID_HI,
                    grid_steps: 0,
                    objective_at_alpha: Some(ctx.objective(alpha, spec.eps, sigma_min_sq)?),
                    rho2: Some(rho2),
                    gamma: Some(gamma),
                    sigma_min_sq,
                    sigma_min_computed: computed,
                    theoretical_s: mixing::sample_complexity(
                        rho2 / (sn * sn),
                        gamma / sn,
                        spec.eps,
                        spec.delta,
                        m,
                        n,
                        spec.k,
                    )
                    .ok(),
                }
            }
        };
        alpha = Some(s.alpha);
        mixing = Some(s);
    }

    let hybrid = match alpha {
        Some(al) if samples.is_some() => Some(sketch::hybrid_probabilities(&a, al)?),
        _ => None,
    };
    let uniform = (families.contains(&SketchFamily::Uniform) && samples.is_some()).then(|| {
        match spec.uniform_support {
            SupportKind::AllEntries => Ok(sketch::uniform_probabilities(&a)),
            SupportKind::NonzerosOnly => sketch::uniform_nonzero_probabilities(&a),
        }
        .map_err(|e| e.to_string())
    });
    let leverage = (families.contains(&SketchFamily::Leverage) && samples.is_some()).then(|| {
        let rank = spec.leverage_rank.unwrap_or(spec.k);
        sketch::leverage_scores(&a, rank, INTERNAL_SEED)
            .and_then(|s| sketch::leverage_probabilities(&s, m, n))
            .map_err(|e| e.to_string())
    });
    let threshold = families.contains(&SketchFamily::Threshold).then(|| {
        sketch::select_threshold(&a, spec.eps)
            .and_then(|c| Ok((sketch::threshold_sketch(&a, c.delta)?, c)))
            .map_err(|e| e.to_string())
    });
    let threshold_choice = match &threshold {
        Some(Ok((_, c))) => Some(*c),
        _ => None,
    };

    let prepared = Prepared { a, hybrid, uniform, leverage, threshold, samples };

    let run_seed = |seed: u64| run_one_seed(spec, &prepared, &variants, &families, seed);
    let per_seed: Vec<(Vec<SketchRecord>, Vec<Cell>)> = if spec.timing.is_some() {
        spec.seeds.iter().map(|&s| run_seed(s)).collect()
    } else {
        spec.seeds.par_iter().map(|&s| run_seed(s)).collect()
    };

    let mut sketches = Vec::new();
    let mut cells_by_seed = Vec::new();
    for (s, c) in per_seed {
        sketches.extend(s);
        cells_by_seed.push(c);
    }
    // Order cells by variant, r, then seed (in spec order).
    let mut cells = Vec::with_capacity(variants.len() * spec.r_list.len() * spec.seeds.len());
    for &v in &variants {
        for &r in &spec.r_list {
            for seed_cells in &cells_by_seed {
                cells.extend(seed_cells.iter().filter(|c| c.variant == v && c.r == r).cloned());
            }
        }
    }
    let medians = median_rows(&variants, &spec.r_list, &cells);

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        variants,
        dataset,
        mixing,
        threshold: threshold_choice,
        notes,
        sketches,
        cells,
        medians,
    })
}

fn build_sketch(
    spec: &ExperimentSpec,
    p: &Prepared,
    family: SketchFamily,
    seed: u64,
) -> std::result::Result<BuiltSketch, SketchRecord> {
    let fail = |msg: String| SketchRecord {
        family,
        seed,
        s: 0,
        nnz: 0,
        op_norm_diff: None,
        gram_diff: None,
        sketch_ms: None,
        error: Some(msg),
    };
    let start = Instant::now();
    let sampled = |dist: &SamplingDistribution| -> std::result::Result<(Matrix, u64), String> {
        let s = p.samples.expect("sampled families need a sample count");
        sketch::sample_sketch(&p.a, dist, s, sketch_seed(seed, family))
            .map(|r| (r.sketch, s))
            .map_err(|e| e.to_string())
    };
    let built = match family {
        SketchFamily::Original => Ok((p.a.clone(), 0)),
        SketchFamily::Threshold => match &p.threshold {
            Some(Ok((t, _))) => Ok((t.clone(), 0)),
            Some(Err(e)) => Err(e.clone()),
            None => unreachable!("threshold prepared when requested"),
        },
        _ if p.samples.is_none() => Ok((p.a.clone(), 0)),
        SketchFamily::Hybrid => sampled(p.hybrid.as_ref().expect("hybrid prepared")),
        SketchFamily::Uniform => match p.uniform.as_ref().expect("uniform prepared") {
            Ok(d) => sampled(d),
            Err(e) => Err(e.clone()),
        },
        SketchFamily::Leverage => match p.leverage.as_ref().expect("leverage prepared") {
            Ok(d) => sampled(d),
            Err(e) => Err(e.clone()),
        },
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let (matrix, s) = built.map_err(fail)?;
    let mut record = SketchRecord {
        family,
        seed,
        s,
        nnz: matrix.nnz(),
        op_norm_diff: None,
        gram_diff: None,
        sketch_ms: spec.timing.map(|_| elapsed),
        error: None,
    };
    if spec.deviations && family != SketchFamily::Original {
        match sketch::spectral_deviation(&p.a, &matrix) {
            Ok(d) => {
                record.op_norm_diff = Some(d.op_norm_diff);
                record.gram_diff = Some(d.gram_diff);
            }
            Err(e) => record.error = Some(format!("deviation: {e}")),
        }
    }
    Ok(BuiltSketch { matrix, record })
}

fn solve(spec: &ExperimentSpec, b: &Matrix, variant: Variant, r: usize, seed: u64) -> Result<ComponentSet> {
    match variant.solver() {
        Solver::MaxR => {
            let exact = spca::exact_pca(b, spec.k, solver_seed(seed, r))?;
            spca::truncate_components(&exact, r)
        }
        Solver::Sparse => {
            let opts = IterSparseOptions { restarts: spec.restarts, ..IterSparseOptions::default() };
            spca::iter_sparse_pca(b, spec.k, r, opts, solver_seed(seed, r))
        }
    }
}

fn run_one_seed(
    spec: &ExperimentSpec,
    p: &Prepared,
    variants: &[Variant],
    families: &[SketchFamily],
    seed: u64,
) -> (Vec<SketchRecord>, Vec<Cell>) {
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for &family in families {
        let built = build_sketch(spec, p, family, seed);
        let (matrix, nnz) = match &built {
            Ok(b) => (Some(&b.matrix), Some(b.matrix.nnz())),
            Err(_) => (None, None),
        };
        for &variant in variants.iter().filter(|v| v.family() == family) {
            for &r in &spec.r_list {
                let mut cell = Cell {
                    variant,
                    r,
                    seed,
                    f: None,
                    ratio: None,
                    sketch_nnz: nnz,
                    converged: None,
                    solver_ms: None,
                    error: None,
                };
                match matrix {
                    None => cell.error = built.as_ref().err().and_then(|rec| rec.error.clone()),
                    Some(b) => match time_it(spec.timing, || solve(spec, b, variant, r, seed)) {
                        Ok((v, ms)) => {
                            cell.converged = Some(v.converged);
                            cell.solver_ms = ms;
                            // Scored on the original matrix only.
                            match spca::variance(&p.a, &v) {
                                Ok(f) => cell.f = Some(f),
                                Err(e) => cell.error = Some(e.to_string()),
                            }
                        }
                        Err(e) => cell.error = Some(e.to_string()),
                    },
                }
                cells.push(cell);
            }
        }
        records.push(match built {
            Ok(b) => b.record,
            Err(rec) => rec,
        });
    }
    let baseline: Vec<(Variant, usize, Option<f64>)> = cells
        .iter()
        .filter(|c| c.variant.family() == SketchFamily::Original)
        .map(|c| (c.variant, c.r, c.f))
        .collect();
    for c in &mut cells {
        let base = baseline.iter().find(|(v, r, _)| *v == c.variant.baseline() && *r == c.r).and_then(|b| b.2);
        c.ratio = match (c.f, base) {
            (Some(f), Some(g)) if g > 0.0 => Some(f / g),
            _ => None,
        };
    }
    (records, cells)
}

fn median_rows(variants: &[Variant], r_list: &[usize], cells: &[Cell]) -> Vec<MedianRow> {
    let mut rows = Vec::new();
    for &variant in variants {
        for &r in r_list {
            let sel: Vec<&Cell> = cells.iter().filter(|c| c.variant == variant && c.r == r).collect();
            let pick = |g: &dyn Fn(&Cell) -> Option<f64>| median(&sel.iter().filter_map(|c| g(c)).collect::<Vec<_>>());
            rows.push(MedianRow {
                variant,
                r,
                f: pick(&|c| c.f),
                ratio: pick(&|c| c.ratio),
                sketch_nnz: pick(&|c| c.sketch_nnz.map(|x| x as f64)),
                solver_ms: pick(&|c| c.solver_ms),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::report::{to_json, write_csv};

    fn small_spec(variants: Vec<Variant>, budget: Budget) -> ExperimentSpec {
        let dataset = DatasetSource::Generator {
            generator: Generator::SpikyPowerlaw { m: 30, n: 12, rank: 2, exponent: 0.8 },
            seed: 11,
        };
        ExperimentSpec::new(dataset, variants, vec![2, 4], budget, vec![1, 2, 3])
    }

    #[test]
    fn copy_mode_ratios_are_one() {
        let spec = small_spec(vec![Variant::HSp, Variant::HMax, Variant::USp], Budget::Copy);
        let report = run_experiment(&spec).unwrap();
        for c in &report.cells {
            assert!(c.error.is_none(), "{c:?}");
            let ratio = c.ratio.unwrap();
            assert!((ratio - 1.0).abs() <= 1e-6, "{} r={} ratio {ratio}", c.variant.name(), c.r);
        }
    }

    #[test]
    fn baselines_are_added() {
        let spec = small_spec(vec![Variant::USp, Variant::HMax], Budget::Copy);
        assert_eq!(spec.effective_variants(), vec![Variant::GMax, Variant::GSp, Variant::HMax, Variant::USp]);
    }

    #[test]
    fn f_is_scored_on_original() {
        let mut spec = small_spec(vec![Variant::HSp], Budget::Fraction { fraction: 0.1, base: BudgetBase::Entries });
        spec.seeds = vec![5];
        spec.r_list = vec![3];
        let report = run_experiment(&spec).unwrap();
        let cell = report.cells_for(Variant::HSp, 3).next().unwrap();

        let a = spec.dataset.load().unwrap().center_columns();
        let alpha = report.mixing.as_ref().unwrap().alpha;
        let dist = sketch::hybrid_probabilities(&a, alpha).unwrap();
        let s = spec.budget.samples(&a).unwrap().unwrap();
        let sk = sketch::sample_sketch(&a, &dist, s, sketch_seed(5, SketchFamily::Hybrid)).unwrap().sketch;
        let v = solve(&spec, &sk, Variant::HSp, 3, 5).unwrap();
        let on_original = spca::variance(&a, &v).unwrap();
        let on_sketch = spca::variance(&sk, &v).unwrap();
        assert_eq!(cell.f, Some(on_original));
        assert!((on_sketch - on_original).abs() > 1e-6 * on_original);
    }

    #[test]
    fn reports_are_deterministic() {
        let spec = small_spec(
            vec![Variant::HSp, Variant::USp, Variant::LSp, Variant::TSp, Variant::UMax],
            Budget::Fraction { fraction: 0.2, base: BudgetBase::Auto },
        );
        let a = to_json(&run_experiment(&spec).unwrap()).unwrap();
        let b = to_json(&run_experiment(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("\"solver_ms\":"));
    }

    #[test]
    fn csv_row_count() {
        let spec = small_spec(vec![Variant::HSp, Variant::USp], Budget::Samples { s: 50 });
        let report = run_experiment(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        let lines = String::from_utf8(buf).unwrap().lines().count();
        let expected = report.variants.len() * spec.r_list.len() * (spec.seeds.len() + 1);
        assert_eq!(lines, expected + 1);
    }

    #[test]
    fn cell_errors_do_not_abort() {
        // Leverage rank above the data rank fails; other cells still run.
        let dataset = DatasetSource::Generator {
            generator: Generator::LowRankNoise { m: 20, n: 10, rank: 1, noise: 0.0 },
            seed: 2,
        };
        let mut spec = ExperimentSpec::new(
            dataset,
            vec![Variant::LSp, Variant::HSp],
            vec![2],
            Budget::Samples { s: 40 },
            vec![0],
        );
        spec.leverage_rank = Some(3);
        let report = run_experiment(&spec).unwrap();
        assert!(report.cells_for(Variant::LSp, 2).all(|c| c.error.is_some() && c.f.is_none()));
        assert!(report.cells_for(Variant::HSp, 2).all(|c| c.error.is_none() && c.f.is_some()));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = small_spec(vec![], Budget::Copy);
        assert!(matches!(run_experiment(&spec), Err(Error::Parameter(_))));
        spec.variants = vec![Variant::HSp];
        spec.r_list = vec![13];
        assert!(matches!(run_experiment(&spec), Err(Error::Parameter(_))));
        spec.r_list = vec![2];
        spec.budget = Budget::Samples { s: 0 };
        assert!(matches!(run_experiment(&spec), Err(Error::Parameter(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = small_spec(vec![Variant::HSp, Variant::TSp], Budget::Fraction { fraction: 0.05, base: BudgetBase::Nnz });
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"H_sp\""));
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let minimal = r#"{"dataset":{"source":"generator","generator":{"name":"binary_pixel","m":4,"n":4}},
            "variants":["H_sp"],"r_list":[2],"budget":{"mode":"copy"},"seeds":[0]}"#;
        let parsed: ExperimentSpec = serde_json::from_str(minimal).unwrap();
        assert!(parsed.center && parsed.k == 1 && parsed.alpha_mode == AlphaMode::Optimal);
    }
}
