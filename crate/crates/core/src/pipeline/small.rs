//! Small-universe convolution: approximate recovery through tiny-universe set queries,
//! exact recovery by error correction modulo random primes, and the search over the
//! unknown output sparsity.

use std::collections::HashSet;

use rand::seq::index::sample;

use crate::dense_conv::{pipeline_forward, pipeline_inverse_of_products};
use crate::hashing::LinearHash;
use crate::numeric::{bulk_inverse, find_prime, FieldCtx, Residue};
use crate::par;
use crate::vectors::{SparseVec, VectorError};
use crate::verify::{verify_sparse, verify_sparse_field};

use super::approx_supp::approx_supp_run;
use super::set_query::{set_query_multi, Terms};
use super::{
    check_value_bound, field_apply, field_brute, field_derivative, log2f, merge_sorted, support_union, FVec,
    PipelineConfig, PipelineError, PipelineStats, Run,
};

/// Instrumentation for the error-correction levels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceOptions {
    /// The exact product, used to record the true residual after every level.
    pub truth: Option<SparseVec>,
    /// Number of entries removed from the initial approximation before correction.
    pub corrupt_c0: usize,
}

/// Recovers x = W_i / V_i over supp(V) where the quotient is in range and consistent.
pub(crate) fn recover_quotients<C: Fn(u64, u64) -> bool>(
    f: &FieldCtx,
    v: &FVec,
    w: &FVec,
    out_len: u64,
    consistent: C,
) -> FVec {
    if v.is_empty() {
        return Vec::new();
    }
    let vals: Vec<Residue> = v.iter().map(|e| e.1).collect();
    let inv = bulk_inverse(&vals, f).expect("support entries are nonzero");
    let mut wi = w.iter().peekable();
    let mut out = Vec::new();
    for (&(i, vi), iv) in v.iter().zip(inv) {
        while wi.peek().is_some_and(|e| e.0 < i) {
            wi.next();
        }
        let wv = match wi.peek() {
            Some(e) if e.0 == i => e.1,
            _ => f.zero(),
        };
        let x = f.to_u128(f.mul(wv, iv));
        if x < out_len as u128 && consistent(x as u64, i) {
            out.push((x as u64, vi));
        }
    }
    out.sort_unstable_by_key(|e| e.0);
    merge_sorted(out, f)
}

/// True when bucket i is one of (h(0) + h(x) + {-p, 0, p}) mod m.
pub(crate) fn hash_consistent(h: &LinearHash, x: u64, i: u64) -> bool {
    let m = h.m() as u128;
    let pm = h.p() % m;
    let b = (h.eval(0) as u128 + h.eval(x as u128) as u128) % m;
    let i = i as u128;
    i == b || i == (b + pm) % m || i == (b + m - pm) % m
}

/// Approximate products for several pairs over [0, u), through one shared hash into a
/// tiny universe of size about 320 k / delta^2.
#[allow(clippy::too_many_arguments)]
pub(crate) fn small_approx_multi(
    run: &mut Run,
    a_vecs: &[FVec],
    b_vecs: &[FVec],
    pairs: &[(usize, usize)],
    u: u64,
    k: usize,
    delta: f64,
    budget: Option<usize>,
) -> Result<Vec<FVec>, PipelineError> {
    let f = run.f;
    let kk = k.max(1);
    let p3 = find_prime(u as u128 + 1, 2 * u as u128 + 2, &mut run.rng)?;
    let m3 = ((run.cfg.small_universe_factor * kk as f64 / (delta * delta)).ceil() as u128).clamp(1, p3) as u64;
    let h = LinearHash::sample_in(&FieldCtx::new_unchecked(p3), m3, &mut run.rng);
    let hashed = |v: &FVec| -> [FVec; 2] {
        [field_apply(v, |i| h.eval(i as u128), &f), field_apply(&field_derivative(v, &f), |i| h.eval(i as u128), &f)]
    };
    let ta: Vec<FVec> = a_vecs.iter().flat_map(hashed).collect();
    let tb: Vec<FVec> = b_vecs.iter().flat_map(hashed).collect();
    let outputs: Vec<Terms> = pairs
        .iter()
        .flat_map(|&(i, j)| [vec![(2 * i, 2 * j)], vec![(2 * i + 1, 2 * j), (2 * i, 2 * j + 1)]])
        .collect();
    let gamma = (delta / 6.0).min((kk as f64 / m3 as f64).sqrt());
    let y = support_union(&ta.iter().collect::<Vec<_>>());
    let z = support_union(&tb.iter().collect::<Vec<_>>());
    let gprime = gamma * gamma / log2f(kk as f64).max(1.0);
    let clock = std::time::Instant::now();
    let x = approx_supp_run(run, &y, &z, m3, kk, gprime, delta / 6.0, budget)?;
    log::debug!("approx_supp: |Y|={} |Z|={} m3={m3} |X|={} in {:?}", y.len(), z.len(), x.len(), clock.elapsed());
    let clock = std::time::Instant::now();
    let res = set_query_multi(run, &ta, &tb, &outputs, m3, kk, &x, gamma, delta / 6.0)?;
    log::debug!("set_query: {} outputs in {:?}", outputs.len(), clock.elapsed());
    let out_len = 2 * u - 1;
    Ok((0..pairs.len())
        .map(|j| {
            let v = field_apply(&res[2 * j], |i| i % m3, &f);
            let w = field_apply(&res[2 * j + 1], |i| i % m3, &f);
            recover_quotients(&f, &v, &w, out_len, |x, i| hash_consistent(&h, x, i))
        })
        .collect())
}

/// Entries (i, V_i, W_i) over supp(V) of the residuals modulo the prime p.
type Residual = Vec<(u64, Residue, Residue)>;

fn residuals_mod_prime(
    f: &FieldCtx,
    a: &[FVec],
    da: &[FVec],
    b: &[FVec],
    db: &[FVec],
    pairs: &[(usize, usize)],
    cs: &[FVec],
    p: u64,
) -> Vec<Residual> {
    let n = (2 * p as usize - 1).next_power_of_two();
    let dense = |v: &FVec| {
        let mut d = vec![f.zero(); p as usize];
        for &(i, x) in v {
            let s = &mut d[(i % p) as usize];
            *s = f.add(*s, x);
        }
        pipeline_forward(&d, n)
    };
    let used_a: HashSet<usize> = pairs.iter().map(|e| e.0).collect();
    let used_b: HashSet<usize> = pairs.iter().map(|e| e.1).collect();
    let tr = |vs: &[FVec], used: &HashSet<usize>| -> Vec<Option<Vec<u64>>> {
        vs.iter().enumerate().map(|(i, v)| used.contains(&i).then(|| dense(v))).collect()
    };
    let (fa, fda, fb, fdb) = (tr(a, &used_a), tr(da, &used_a), tr(b, &used_b), tr(db, &used_b));
    let fold_p = |t: Vec<Residue>| -> Vec<Residue> {
        let mut out = vec![f.zero(); p as usize];
        for (i, x) in t.into_iter().enumerate() {
            let s = &mut out[i % p as usize];
            *s = f.add(*s, x);
        }
        out
    };
    pairs
        .iter()
        .zip(cs)
        .map(|(&(ia, ib), c)| {
            let (xa, xda) = (fa[ia].as_ref().unwrap(), fda[ia].as_ref().unwrap());
            let (xb, xdb) = (fb[ib].as_ref().unwrap(), fdb[ib].as_ref().unwrap());
            let mut v = fold_p(pipeline_inverse_of_products(&[(xa, xb)], n));
            let mut w = fold_p(pipeline_inverse_of_products(&[(xda, xb), (xa, xdb)], n));
            for &(i, x) in c {
                let s = &mut v[(i % p) as usize];
                *s = f.sub(*s, x);
            }
            for (i, x) in field_derivative(c, f) {
                let s = &mut w[(i % p) as usize];
                *s = f.sub(*s, x);
            }
            v.into_iter()
                .zip(w)
                .enumerate()
                .filter(|(_, (vi, _))| !f.is_zero(*vi))
                .map(|(i, (vi, wi))| (i as u64, vi, wi))
                .collect()
        })
        .collect()
}

fn residual_count(truth: &FVec, c: &FVec) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < truth.len() || j < c.len() {
        match (truth.get(i), c.get(j)) {
            (Some(a), Some(b)) if a.0 == b.0 => {
                n += usize::from(a.1 != b.1);
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a.0 < b.0 => {
                n += 1;
                i += 1;
            }
            (Some(_), None) => {
                n += 1;
                i += 1;
            }
            _ => {
                n += 1;
                j += 1;
            }
        }
    }
    n
}

/// Exact products for several pairs over [0, u): an approximation followed by levels of
/// error correction modulo random primes.
#[allow(clippy::too_many_arguments)]
pub(crate) fn small_exact_multi(
    run: &mut Run,
    a_vecs: &[FVec],
    b_vecs: &[FVec],
    pairs: &[(usize, usize)],
    u: u64,
    k: usize,
    delta: f64,
    budget: Option<usize>,
) -> Result<Vec<FVec>, PipelineError> {
    let f = run.f;
    let kk = k.max(2) as f64;
    let lk = kk.log2();
    let d4 = delta.min(1.0 / (lk * lk));
    let mut cs = small_approx_multi(run, a_vecs, b_vecs, pairs, u, k, d4 / 2.0, budget)?;
    let truth = run.trace.as_ref().and_then(|t| t.truth.as_ref()).map(|t| crate::vectors::lift(t, &f));
    if let Some(n) = run.trace.as_ref().map(|t| t.corrupt_c0).filter(|&n| n > 0) {
        let c0 = &mut cs[0];
        let drop: HashSet<usize> = sample(&mut run.rng, c0.len(), n.min(c0.len())).into_iter().collect();
        *c0 = c0.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, e)| *e).collect();
    }
    let record = |run: &mut Run, cs: &[FVec]| {
        if let Some(t) = &truth {
            run.stats.level_residuals.push(residual_count(t, &cs[0]));
        }
    };
    record(run, &cs);
    let m4 = ((8.0 * kk * log2f(u as f64) / (lk * lk)).ceil() as u64).max(4);
    let levels = 2usize.max(lk.log2().ceil() as usize + 1);
    let da: Vec<FVec> = a_vecs.iter().map(|v| field_derivative(v, &f)).collect();
    let db: Vec<FVec> = b_vecs.iter().map(|v| field_derivative(v, &f)).collect();
    let out_len = 2 * u - 1;
    let all_verified = |run: &mut Run, cs: &[FVec]| {
        pairs
            .iter()
            .zip(cs)
            .all(|(&(i, j), c)| verify_sparse_field(&a_vecs[i], &b_vecs[j], c, &f, &mut run.rng))
    };
    for level in 1..=levels {
        if all_verified(run, &cs) {
            for _ in level..=levels {
                record(run, &cs);
            }
            return Ok(cs);
        }
        let reps = ((2.0 * (2.0 * levels as f64 / d4).log2() / 1.5f64.powi(level as i32 - 1)).ceil() as usize).max(1);
        let primes: Vec<u64> = (0..reps)
            .map(|_| find_prime(m4 as u128, 2 * m4 as u128, &mut run.rng).map(|p| p as u64))
            .collect::<Result<_, _>>()?;
        run.stats.dense_calls += (3 * reps * pairs.len()) as u64;
        let snapshot = &cs;
        let per_rep = par::map_range_if(run.cfg.parallel, reps, |r| {
            residuals_mod_prime(&f, a_vecs, &da, b_vecs, &db, pairs, snapshot, primes[r])
        });
        let mut best: Vec<(usize, usize)> = vec![(0, 0); pairs.len()];
        for (r, res) in per_rep.iter().enumerate() {
            for (j, v) in res.iter().enumerate() {
                if v.len() > best[j].1 {
                    best[j] = (r, v.len());
                }
            }
        }
        run.stats.level_support.push(best.first().map_or(0, |b| b.1));
        log::debug!("level {level}: {reps} primes near {m4}, best support {:?}", best.iter().map(|b| b.1).collect::<Vec<_>>());
        for (j, &(r, _)) in best.iter().enumerate() {
            let p = primes[r];
            let res = &per_rep[r][j];
            let v: FVec = res.iter().map(|e| (e.0, e.1)).collect();
            let w: FVec = res.iter().filter(|e| !f.is_zero(e.2)).map(|e| (e.0, e.2)).collect();
            let fix = recover_quotients(&f, &v, &w, out_len, |x, i| x % p == i);
            cs[j] = super::field_add(&cs[j], &fix, &f);
        }
        record(run, &cs);
    }
    if all_verified(run, &cs) {
        Ok(cs)
    } else {
        Err(PipelineError::Unverified)
    }
}

/// Exact products with unknown output sparsity: doubles the estimate k* from
/// nnz(A) + nnz(B) until a run finishes within budget and verifies.
pub(crate) fn estimate_multi(
    run: &mut Run,
    a_vecs: &[FVec],
    b_vecs: &[FVec],
    pairs: &[(usize, usize)],
    u: u64,
    delta: f64,
) -> Result<Vec<FVec>, PipelineError> {
    let sa = support_union(&a_vecs.iter().collect::<Vec<_>>()).len();
    let sb = support_union(&b_vecs.iter().collect::<Vec<_>>()).len();
    let brute = |run: &Run| pairs.iter().map(|&(i, j)| field_brute(&a_vecs[i], &b_vecs[j], &run.f)).collect();
    if sa == 0 || sb == 0 {
        return Ok(vec![Vec::new(); pairs.len()]);
    }
    let max_k = sa * sb;
    if max_k <= 64 {
        return Ok(brute(run));
    }
    let mut kstar = sa + sb;
    loop {
        if kstar >= max_k {
            log::warn!("sparsity estimate reached nnz(A) * nnz(B) = {max_k}; using the schoolbook product");
            run.stats.fallback = true;
            return Ok(brute(run));
        }
        run.stats.estimate_steps += 1;
        let r = small_exact_multi(run, a_vecs, b_vecs, pairs, u, kstar, delta, Some(8 * kstar + 64));
        log::debug!("estimate k* = {kstar}: {:?}", r.as_ref().err());
        match r {
            Ok(r) => return Ok(r),
            Err(PipelineError::Budget | PipelineError::Unverified | PipelineError::HashBudget(_)) => kstar *= 2,
            Err(e) => return Err(e),
        }
    }
}

fn prepare(a: &SparseVec, b: &SparseVec, cfg: &PipelineConfig) -> Result<(f64, u64), PipelineError> {
    let delta = cfg.checked_delta()?;
    if a.len() != b.len() {
        return Err(VectorError::UniverseMismatch(a.len(), b.len()).into());
    }
    if a.len() == 0 {
        return Err(PipelineError::Sizing("empty universe".into()));
    }
    Ok((delta, a.len()))
}

fn check_poly_universe(u: u64, k: usize) -> Result<(), PipelineError> {
    if (u as f64).log2() > 8.0 * log2f(k.max(2) as f64) {
        return Err(PipelineError::Sizing(format!("universe {u} exceeds k^8 for k = {k}")));
    }
    Ok(())
}

/// Exact A * B with unknown output sparsity.
pub fn estimate_and_conv(a: &SparseVec, b: &SparseVec, cfg: &PipelineConfig) -> Result<SparseVec, PipelineError> {
    estimate_and_conv_with_stats(a, b, cfg).map(|r| r.0)
}

pub fn estimate_and_conv_with_stats(
    a: &SparseVec,
    b: &SparseVec,
    cfg: &PipelineConfig,
) -> Result<(SparseVec, PipelineStats), PipelineError> {
    let (delta, u) = prepare(a, b, cfg)?;
    let mut run = Run::new(cfg);
    check_value_bound(a, b, &run.f)?;
    let (la, lb) = (run.lift(a), run.lift(b));
    let res = estimate_multi(&mut run, &[la], &[lb], &[(0, 0)], u, delta)?;
    let c = run.lower(&res[0], 2 * u - 1)?;
    if verify_sparse(a, b, &c, &mut run.rng) {
        run.stats.verified = true;
        Ok((c, run.stats))
    } else {
        Err(PipelineError::Unverified)
    }
}

/// Exact A * B for ||A * B||_0 <= k and a universe polynomial in k.
pub fn small_sparse_conv(a: &SparseVec, b: &SparseVec, k: usize, cfg: &PipelineConfig) -> Result<SparseVec, PipelineError> {
    small_sparse_conv_traced(a, b, k, cfg, TraceOptions::default()).map(|r| r.0)
}

/// As [`small_sparse_conv`], also returning statistics with per-level residuals.
pub fn small_sparse_conv_traced(
    a: &SparseVec,
    b: &SparseVec,
    k: usize,
    cfg: &PipelineConfig,
    trace: TraceOptions,
) -> Result<(SparseVec, PipelineStats), PipelineError> {
    let (delta, u) = prepare(a, b, cfg)?;
    check_poly_universe(u, k)?;
    let mut run = Run::new(cfg);
    check_value_bound(a, b, &run.f)?;
    run.trace = Some(trace);
    let (la, lb) = (run.lift(a), run.lift(b));
    let res = small_exact_multi(&mut run, &[la], &[lb], &[(0, 0)], u, k, delta, None)?;
    run.stats.verified = true;
    let c = run.lower(&res[0], 2 * u - 1)?;
    Ok((c, run.stats))
}

/// Approximation C~ with ||A * B - C~||_0 = O(delta k), for a universe polynomial in k.
pub fn small_approx_conv(a: &SparseVec, b: &SparseVec, k: usize, cfg: &PipelineConfig) -> Result<SparseVec, PipelineError> {
    let (delta, u) = prepare(a, b, cfg)?;
    check_poly_universe(u, k)?;
    let mut run = Run::new(cfg);
    check_value_bound(a, b, &run.f)?;
    let (la, lb) = (run.lift(a), run.lift(b));
    let res = small_approx_multi(&mut run, &[la], &[lb], &[(0, 0)], u, k, delta, None)?;
    run.lower(&res[0], 2 * u - 1)
}

/// Approximation C~ with ||A * B - C~||_0 <= gamma k, for a universe at most k / gamma^2.
pub fn tiny_approx_conv(a: &SparseVec, b: &SparseVec, k: usize, cfg: &PipelineConfig) -> Result<SparseVec, PipelineError> {
    let (delta, u) = prepare(a, b, cfg)?;
    let gamma = cfg.gamma();
    let kk = k.max(1);
    if u as f64 > kk as f64 / (gamma * gamma) {
        return Err(PipelineError::Sizing(format!("universe {u} exceeds k / gamma^2 for k = {k}")));
    }
    let mut run = Run::new(cfg);
    check_value_bound(a, b, &run.f)?;
    if a.is_empty() || b.is_empty() {
        return Ok(SparseVec::zero(2 * u - 1));
    }
    let (la, lb) = (run.lift(a), run.lift(b));
    let gprime = gamma * gamma / log2f(kk as f64).max(1.0);
    let x = approx_supp_run(&mut run, &a.support(), &b.support(), u, kk, gprime, delta, None)?;
    let res = set_query_multi(&mut run, &[la], &[lb], &[vec![(0, 0)]], u, kk, &x, gamma, delta)?;
    run.lower(&res[0], 2 * u - 1)
}
