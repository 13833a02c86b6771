//! Support approximation by coarse-to-fine voting over hashed Boolean sumsets.

use rand::Rng;

use crate::dense_conv::cyclic_sumset_counts;
use crate::hashing::LinearHash;
use crate::numeric::{find_prime, FieldCtx};

use super::{log2f, IndykMode, PipelineConfig, PipelineError, Run};

const SUBSAMPLED_ROUNDS: usize = 17;
pub const INDYK_MAX_UNIVERSE: u64 = 1 << 27;

/// Indicator of (Y + Z) mod m for index sets in [0, m); m must be a power of two.
fn exact_sumset_mod(y: &[usize], z: &[usize], m: usize) -> Vec<bool> {
    if y.is_empty() || z.is_empty() {
        return vec![false; m];
    }
    if y.len().saturating_mul(z.len()) <= 4 * m * (m.trailing_zeros() as usize + 1) {
        let mut out = vec![false; m];
        for &a in y {
            for &b in z {
                out[(a + b) & (m - 1)] = true;
            }
        }
        return out;
    }
    cyclic_sumset_counts(y, z, m)
}

fn sumset_mod<R: Rng + ?Sized>(y: &[usize], z: &[usize], m: usize, mode: IndykMode, rng: &mut R) -> Vec<bool> {
    match mode {
        IndykMode::Exact => exact_sumset_mod(y, z, m),
        IndykMode::Subsampled => {
            let mut out = vec![false; m];
            for _ in 0..SUBSAMPLED_ROUNDS {
                let ys: Vec<usize> = y.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                let zs: Vec<usize> = z.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                for (o, s) in out.iter_mut().zip(exact_sumset_mod(&ys, &zs, m)) {
                    *o |= s;
                }
            }
            out
        }
    }
}

/// Boolean sumset Y + Z of index sets in [0, U). Exact mode returns Y + Z; subsampled
/// mode returns a subset containing each element with probability at least 99/100.
pub fn indyk_sumset<R: Rng + ?Sized>(y: &[u64], z: &[u64], mode: IndykMode, rng: &mut R) -> Result<Vec<u64>, PipelineError> {
    if y.is_empty() || z.is_empty() {
        return Ok(Vec::new());
    }
    let top = y.iter().max().unwrap() + z.iter().max().unwrap();
    if top >= 2 * INDYK_MAX_UNIVERSE {
        return Err(PipelineError::Sizing(format!("sumset universe {top} exceeds 2^28")));
    }
    let m = (top as usize + 1).next_power_of_two();
    let yi: Vec<usize> = y.iter().map(|&v| v as usize).collect();
    let zi: Vec<usize> = z.iter().map(|&v| v as usize).collect();
    let ind = sumset_mod(&yi, &zi, m, mode, rng);
    Ok(ind.into_iter().enumerate().filter(|e| e.1).map(|e| e.0 as u64).collect())
}

fn nearest_pow2(x: f64) -> u64 {
    1u64 << (x.max(4.0).log2().round() as u32).min(40)
}

fn shifted(v: &[u64], l: u32) -> Vec<u64> {
    let mut out: Vec<u64> = v.iter().map(|&x| x >> l).collect();
    out.dedup();
    out
}

/// Candidate superset X of Y + Z for sorted sets Y, Z in [0, u). Fails with `Budget` when
/// a level grows beyond `budget` candidates.
#[allow(clippy::too_many_arguments)]
pub(crate) fn approx_supp_run(
    run: &mut Run,
    y: &[u64],
    z: &[u64],
    u: u64,
    k: usize,
    gamma: f64,
    delta: f64,
    budget: Option<usize>,
) -> Result<Vec<u64>, PipelineError> {
    if y.is_empty() || z.is_empty() {
        return Ok(Vec::new());
    }
    let cfg = run.cfg;
    let kk = k.max(1) as u64;
    let m_as = nearest_pow2((cfg.supp_bucket_factor * kk) as f64);
    let levels = if 2 * u > kk { log2f(2.0 * u as f64 / kk as f64).ceil() as u32 } else { 0 };
    let lo = 2 * u as u128 + 4;
    let p = find_prime(lo, 2 * lo, &mut run.rng)?;
    let hctx = FieldCtx::new_unchecked(p);
    let rounds = cfg
        .min_vote_rounds
        .max((cfg.vote_rounds_scale * (log2f(1.0 / gamma) + log2f(1.0 / delta))).ceil() as usize);
    let thr = (3 * rounds).div_ceil(4);
    let mut x: Vec<u64> = (0..=((2 * u) >> levels) + 1).collect();
    for l in (0..levels).rev() {
        let clock = std::time::Instant::now();
        let yl = shifted(y, l);
        let zl = shifted(z, l);
        let mut cand: Vec<u64> = x.iter().flat_map(|&v| [2 * v, 2 * v + 1, 2 * v + 2]).collect();
        cand.sort_unstable();
        cand.dedup();
        let ul = ((u - 1) >> l) + 1;
        if 2 * ul <= m_as {
            let m = (2 * ul as usize).next_power_of_two();
            let yi: Vec<usize> = yl.iter().map(|&v| v as usize).collect();
            let zi: Vec<usize> = zl.iter().map(|&v| v as usize).collect();
            let s = exact_sumset_mod(&yi, &zi, m);
            run.stats.dense_calls += 1;
            x = cand.into_iter().filter(|&v| (v as usize) < m && s[v as usize]).collect();
        } else {
            let mut votes = vec![0usize; cand.len()];
            let mut alive: Vec<usize> = (0..cand.len()).collect();
            let m = m_as as usize;
            let pm = (p % m_as as u128) as usize;
            for r in 0..rounds {
                let h = LinearHash::with_ctx(hctx, m_as, run.rng.gen_range(0..p), run.rng.gen_range(0..p));
                let mut hy: Vec<usize> = yl.iter().map(|&v| h.eval(v as u128) as usize).collect();
                let mut hz: Vec<usize> = zl.iter().map(|&v| h.eval(v as u128) as usize).collect();
                hy.sort_unstable();
                hy.dedup();
                hz.sort_unstable();
                hz.dedup();
                let o = sumset_mod(&hy, &hz, m, cfg.indyk, &mut run.rng);
                run.stats.dense_calls += 1;
                let h0 = h.eval(0) as usize;
                for &i in &alive {
                    let b = (h0 + h.eval(cand[i] as u128) as usize) % m;
                    if o[b] || o[(b + pm) % m] || o[(b + m - pm) % m] {
                        votes[i] += 1;
                    }
                }
                let left = rounds - r - 1;
                alive.retain(|&i| votes[i] + left >= thr);
            }
            x = alive.into_iter().map(|i| cand[i]).collect();
        }
        log::trace!("level {l}: |X| = {} in {:?}", x.len(), clock.elapsed());
        if budget.is_some_and(|b| x.len() > b) {
            return Err(PipelineError::Budget);
        }
    }
    let out_len = 2 * u - 1;
    x.retain(|&v| v < out_len);
    Ok(x)
}

/// A set X of size O(k) missing at most gamma k elements of Y + Z, for Y, Z in [0, u).
pub fn approx_supp(y: &[u64], z: &[u64], u: u64, k: usize, cfg: &PipelineConfig) -> Result<Vec<u64>, PipelineError> {
    let delta = cfg.checked_delta()?;
    if y.iter().chain(z).any(|&v| v >= u) {
        return Err(PipelineError::Sizing(format!("set element outside the universe [0, {u})")));
    }
    let mut ys = y.to_vec();
    let mut zs = z.to_vec();
    ys.sort_unstable();
    ys.dedup();
    zs.sort_unstable();
    zs.dedup();
    let mut run = Run::new(cfg);
    approx_supp_run(&mut run, &ys, &zs, u, k, cfg.gamma(), delta, None)
}
