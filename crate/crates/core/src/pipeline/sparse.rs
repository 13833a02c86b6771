//! Sparse convolution over an arbitrary universe: hash into a universe polynomial in
//! nnz(A) nnz(B), convolve there, and recover the original indices from derivatives.

use crate::hashing::LinearHash;
use crate::numeric::{find_prime, FieldCtx, Residue};
use crate::vectors::{brute_conv, SparseVec, VectorError};
use crate::verify::verify_sparse;

use super::small::{estimate_multi, hash_consistent, recover_quotients};
use super::{check_value_bound, field_apply, field_derivative, merge_sorted, FVec, PipelineConfig, PipelineError, PipelineStats, Run};

/// Exact A * B over the universe 2U - 1.
pub fn sparse_conv(a: &SparseVec, b: &SparseVec, cfg: &PipelineConfig) -> Result<SparseVec, PipelineError> {
    sparse_conv_with_stats(a, b, cfg).map(|r| r.0)
}

pub fn sparse_conv_with_stats(
    a: &SparseVec,
    b: &SparseVec,
    cfg: &PipelineConfig,
) -> Result<(SparseVec, PipelineStats), PipelineError> {
    let delta = cfg.checked_delta()?;
    if a.len() != b.len() {
        return Err(VectorError::UniverseMismatch(a.len(), b.len()).into());
    }
    let u = a.len();
    if u == 0 {
        return Err(PipelineError::Sizing("empty universe".into()));
    }
    let mut run = Run::new(cfg);
    check_value_bound(a, b, &run.f)?;
    if (2 * u as u128) > run.f.modulus() {
        return Err(PipelineError::Sizing(format!("universe {u} exceeds half the pipeline prime")));
    }
    let out_len = 2 * u - 1;
    let ab = a.nnz() as u128 * b.nnz() as u128;
    if ab <= 64 {
        run.stats.verified = true;
        return Ok((brute_conv(a, b)?, run.stats));
    }
    let cap = 1u128 << cfg.large_universe_cap_log2.min(60);
    let m5 = ab.checked_pow(cfg.universe_cube_exponent).map_or(cap, |v| v.min(cap)) as u64;
    let (la, lb) = (run.lift(a), run.lift(b));
    for attempt in 0..=cfg.max_restarts {
        match attempt_once(&mut run, &la, &lb, u, m5, delta) {
            Ok(c) => {
                let c = run.lower(&c, out_len)?;
                if verify_sparse(a, b, &c, &mut run.rng) {
                    run.stats.verified = true;
                    return Ok((c, run.stats));
                }
            }
            Err(
                PipelineError::Budget
                | PipelineError::Unverified
                | PipelineError::HashBudget(_)
                | PipelineError::OmegaCollision,
            ) => {}
            Err(e) => return Err(e),
        }
        if attempt < cfg.max_restarts {
            run.stats.restarts += 1;
            log::debug!("restarting after a failed attempt ({})", attempt + 1);
        }
    }
    Err(PipelineError::VerificationFailed(cfg.max_restarts))
}

fn attempt_once(run: &mut Run, la: &FVec, lb: &FVec, u: u64, m5: u64, delta: f64) -> Result<FVec, PipelineError> {
    let f = run.f;
    let lo = u as u128 * m5 as u128 + 1;
    let p5 = find_prime(lo, 2 * lo, &mut run.rng)?;
    let h = LinearHash::sample_in(&FieldCtx::new_unchecked(p5), m5, &mut run.rng);
    let hashed = |v: &FVec| field_apply(v, |i| h.eval(i as u128), &f);
    let a_vecs = [hashed(la), hashed(&field_derivative(la, &f))];
    let b_vecs = [hashed(lb), hashed(&field_derivative(lb, &f))];
    let res = estimate_multi(run, &a_vecs, &b_vecs, &[(0, 0), (1, 0), (0, 1)], m5, delta)?;
    let v = field_apply(&res[0], |i| i % m5, &f);
    let mut w: Vec<(u64, Residue)> = res[1].iter().chain(&res[2]).map(|&(i, r)| (i % m5, r)).collect();
    w.sort_unstable_by_key(|e| e.0);
    let w = merge_sorted(w, &f);
    Ok(recover_quotients(&f, &v, &w, 2 * u - 1, |x, i| hash_consistent(&h, x, i)))
}
