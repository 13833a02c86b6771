//! The reduction chain from large-universe sparse convolution down to dense convolution.
//!
//! Internally every vector is a sorted list of (index, residue) pairs over the pipeline
//! field Z_P, where P is the largest NTT prime below 2^63. Integer inputs are lifted into
//! Z_P at entry and lowered back at exit; results are exact whenever every output
//! coefficient is below P, which the entry checks enforce.

mod approx_supp;
mod fold;
mod set_query;
mod small;
mod sparse;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dense_conv::{pipeline_field, DenseError};
use crate::numeric::{FieldCtx, NumericError, Residue};
use crate::vandermonde::VandermondeError;
use crate::vectors::{SparseVec, VectorError};

pub use approx_supp::{approx_supp, indyk_sumset};
pub use fold::{fold, unfold};
pub use set_query::set_query;
pub use small::{
    estimate_and_conv, estimate_and_conv_with_stats, small_approx_conv, small_sparse_conv, small_sparse_conv_traced, tiny_approx_conv,
    TraceOptions,
};
pub use sparse::{sparse_conv, sparse_conv_with_stats};

/// How dense convolutions inside the set-query step are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenseBox {
    Exact,
    /// Each call corrupts one output coefficient with the given probability; calls are
    /// verified and repeated.
    Faulty(f64),
}

/// How the Boolean sumset inside support approximation is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndykMode {
    Exact,
    Subsampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub delta: f64,
    /// Error fraction of the approximate steps; defaults to `delta`.
    pub gamma: Option<f64>,
    pub eps_m: f64,
    pub vote_rounds_scale: f64,
    pub min_vote_rounds: usize,
    pub universe_cube_exponent: u32,
    pub large_universe_cap_log2: u32,
    pub supp_bucket_factor: u64,
    pub small_universe_factor: f64,
    pub flat_load_min: f64,
    pub max_restarts: usize,
    pub seed: u64,
    pub dense_box: DenseBox,
    pub indyk: IndykMode,
    pub parallel: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            delta: 1.0 / 64.0,
            gamma: None,
            eps_m: 0.25,
            vote_rounds_scale: 1.0 / 16.0,
            min_vote_rounds: 2,
            universe_cube_exponent: 3,
            large_universe_cap_log2: 40,
            supp_bucket_factor: 40,
            small_universe_factor: 320.0,
            flat_load_min: 8.0,
            max_restarts: 4,
            seed: 0,
            dense_box: DenseBox::Exact,
            indyk: IndykMode::Exact,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        PipelineConfig { seed, ..Self::default() }
    }

    /// min(1/64, 2^-ceil(sqrt(log k))).
    pub fn default_delta(k: usize) -> f64 {
        let lk = (k.max(2) as f64).log2();
        (1.0 / 64.0f64).min(2f64.powf(-lk.sqrt().ceil()))
    }

    pub(crate) fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(self.delta)
    }

    fn checked_delta(&self) -> Result<f64, PipelineError> {
        if !(self.delta > 0.0 && self.delta <= 1.0 / 3.0) {
            return Err(PipelineError::Config(format!("delta must lie in (0, 1/3], got {}", self.delta)));
        }
        Ok(self.delta)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineStats {
    /// Dense convolutions performed (including rejected calls of a faulty box).
    pub dense_calls: u64,
    pub hash_loop_iters: u64,
    pub estimate_steps: u64,
    pub restarts: u64,
    /// Support size of the kept residual V at each error-correction level.
    pub level_support: Vec<usize>,
    /// True residual sparsity per level; filled only by traced runs.
    pub level_residuals: Vec<usize>,
    pub verified: bool,
    pub fallback: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("sizing: {0}")]
    Sizing(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("no flat linear hash found within {0} attempts")]
    HashBudget(usize),
    #[error("omega collided too often; resample budget exhausted")]
    OmegaCollision,
    #[error("work budget exceeded for the current sparsity estimate")]
    Budget,
    #[error("result was rejected by the verifier")]
    Unverified,
    #[error("verification failed after {0} restarts")]
    VerificationFailed(usize),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Vandermonde(#[from] VandermondeError),
}

/// Sorted (index, nonzero residue) pairs over the pipeline field.
pub(crate) type FVec = Vec<(u64, Residue)>;

/// Mutable state of one pipeline invocation.
pub(crate) struct Run<'c> {
    pub cfg: &'c PipelineConfig,
    pub f: FieldCtx,
    pub rng: ChaCha8Rng,
    pub stats: PipelineStats,
    pub trace: Option<TraceOptions>,
}

impl<'c> Run<'c> {
    pub fn new(cfg: &'c PipelineConfig) -> Self {
        Run {
            cfg,
            f: pipeline_field(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            stats: PipelineStats::default(),
            trace: None,
        }
    }

    pub fn lift(&self, a: &SparseVec) -> FVec {
        crate::vectors::lift(a, &self.f)
    }

    /// Lowers to integers over the universe `len`; residues are read as values in [0, P).
    pub fn lower(&self, v: &FVec, len: u64) -> Result<SparseVec, PipelineError> {
        let entries = v
            .iter()
            .filter(|e| e.0 < len)
            .map(|&(i, r)| (i, self.f.to_u128(r) as u64))
            .collect();
        Ok(SparseVec::new(len, entries)?)
    }
}

/// Field derivative: (dv)_i = i v_i.
pub(crate) fn field_derivative(v: &FVec, f: &FieldCtx) -> FVec {
    v.iter()
        .filter(|e| e.0 != 0)
        .map(|&(i, x)| (i, f.mul(f.from_u64(i), x)))
        .filter(|e| !f.is_zero(e.1))
        .collect()
}

/// Applies an index map and sums collisions; the result is sorted and zero-free.
pub(crate) fn field_apply<F: Fn(u64) -> u64>(v: &FVec, map: F, f: &FieldCtx) -> FVec {
    let mut out: Vec<(u64, Residue)> = v.iter().map(|&(i, x)| (map(i), x)).collect();
    out.sort_unstable_by_key(|e| e.0);
    merge_sorted(out, f)
}

/// Merges adjacent equal indices of a sorted list, dropping zeros.
pub(crate) fn merge_sorted(v: Vec<(u64, Residue)>, f: &FieldCtx) -> FVec {
    let mut out: FVec = Vec::with_capacity(v.len());
    for (i, x) in v {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 = f.add(last.1, x),
            _ => {
                if out.last().is_some_and(|l| f.is_zero(l.1)) {
                    out.pop();
                }
                out.push((i, x));
            }
        }
    }
    if out.last().is_some_and(|l| f.is_zero(l.1)) {
        out.pop();
    }
    out
}

pub(crate) fn field_add(a: &FVec, b: &FVec, f: &FieldCtx) -> FVec {
    let mut v: Vec<(u64, Residue)> = a.iter().chain(b).copied().collect();
    v.sort_by_key(|e| e.0);
    merge_sorted(v, f)
}

/// Sorted union of the supports of several vectors.
pub(crate) fn support_union(vs: &[&FVec]) -> Vec<u64> {
    let mut s: Vec<u64> = vs.iter().flat_map(|v| v.iter().map(|e| e.0)).collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Schoolbook product over Z_P.
pub(crate) fn field_brute(a: &FVec, b: &FVec, f: &FieldCtx) -> FVec {
    let mut v: Vec<(u64, Residue)> = Vec::with_capacity(a.len() * b.len());
    for &(i, x) in a {
        for &(j, y) in b {
            v.push((i + j, f.mul(x, y)));
        }
    }
    v.sort_unstable_by_key(|e| e.0);
    merge_sorted(v, f)
}

/// Entry check: every coefficient of A * B must be below P so lowering is exact.
pub(crate) fn check_value_bound(a: &SparseVec, b: &SparseVec, f: &FieldCtx) -> Result<(), PipelineError> {
    let bound = (a.nnz().min(b.nnz()) as u128)
        .saturating_mul(a.max_value() as u128)
        .saturating_mul(b.max_value() as u128);
    if bound >= f.modulus() {
        return Err(PipelineError::Sizing(format!(
            "min(nnz) * max(A) * max(B) = {bound} does not fit below the pipeline prime {}",
            f.modulus()
        )));
    }
    Ok(())
}

pub(crate) fn log2f(x: f64) -> f64 {
    x.max(1.0).log2()
}
