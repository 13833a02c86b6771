//! Approximate set query in a tiny universe: hash to a flat layout, fold, convolve densely,
//! unfold on the candidate support.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::dense_conv::{linear_conv_modq, pipeline_forward, pipeline_inverse_of_products, reliable_conv};
use crate::hashing::LinearHash;
use crate::numeric::{find_prime, rand_unit, FieldCtx, Residue};
use crate::par;
use crate::vectors::SparseVec;

use super::fold::{fold, unfold_multi};
use super::{check_value_bound, DenseBox, FVec, PipelineConfig, PipelineError, Run};

const OMEGA_ATTEMPTS: usize = 8;
const MAX_BUCKETS: u64 = 1 << 28;

fn pow2_floor(x: f64) -> u64 {
    if x < 1.0 {
        1
    } else {
        1u64 << (x.log2().floor() as u32).min(62)
    }
}

fn flatness_u128(xt: &[u128], m: u64) -> usize {
    let mut counts = vec![0u32; m as usize];
    for &v in xt {
        counts[(v % m as u128) as usize] += 1;
    }
    let n = xt.len() as u128;
    counts.into_iter().filter(|&c| c as u128 * m as u128 > 2 * n).map(|c| c as usize).sum()
}

/// Bucket count, fold count and hash for one set-query call.
struct Layout {
    m: u64,
    t: usize,
    p: u128,
    pi_a: LinearHash,
    pi_b: LinearHash,
    xt: Vec<u128>,
}

fn find_layout(run: &mut Run, u: u64, k: usize, x: &[u64], gamma: f64, delta: f64) -> Result<Layout, PipelineError> {
    let cfg = run.cfg;
    let u = u as u128;
    let lo = (4 * u * u).max(2 * u + 2);
    let p = find_prime(lo, 2 * lo, &mut run.rng)?;
    let hctx = FieldCtx::new_unchecked(p);
    let xt_len = 2 * x.len();
    let gk = (gamma * k as f64).max(1.0);
    let lam = cfg.flat_load_min.max((4.0 * xt_len as f64 / gk).ln() / (2.0 * LN_2 - 1.0));
    let m = pow2_floor(xt_len as f64 / lam)
        .max(pow2_floor(cfg.eps_m * gamma * k as f64))
        .min(MAX_BUCKETS);
    let t = (2 * xt_len).div_ceil(m as usize).max(1);
    let budget = 64 * ((1.0 / delta).log2().ceil().max(1.0) as usize);
    for _ in 0..budget {
        run.stats.hash_loop_iters += 1;
        let sigma = run.rng.gen_range(1..p);
        let tau = run.rng.gen_range(0..p);
        let pi_a = LinearHash::with_ctx(hctx, m, sigma, tau);
        let mut xt = Vec::with_capacity(xt_len);
        for &y in x {
            let v = pi_a.pi(y as u128);
            xt.push(v);
            xt.push(v + p);
        }
        if flatness_u128(&xt, m) as f64 <= gamma * k as f64 / 2.0 {
            let pi_b = LinearHash::with_ctx(hctx, m, sigma, 0);
            return Ok(Layout { m, t, p, pi_a, pi_b, xt });
        }
    }
    Err(PipelineError::HashBudget(budget))
}

/// Products of vectors indexed into the a-side and b-side lists, summed.
pub(crate) type Terms = Vec<(usize, usize)>;

/// Cyclic convolutions C^t = sum A^t *_m B^t over each output's terms; indexed [output][t].
fn convolve_folds(
    run: &mut Run,
    fa: &[Vec<Vec<Residue>>],
    fb: &[Vec<Vec<Residue>>],
    outputs: &[Terms],
    m: u64,
    t: usize,
) -> Result<Vec<Vec<Vec<Residue>>>, PipelineError> {
    let m_us = m as usize;
    let f = run.f;
    match run.cfg.dense_box {
        DenseBox::Exact => {
            run.stats.dense_calls += (outputs.iter().map(|o| o.len()).sum::<usize>() * t) as u64;
            let per_t = par::map_range_if(run.cfg.parallel, t, |ti| {
                let tf = |v: &Vec<Vec<Residue>>| pipeline_forward(&v[ti], m_us);
                let ta: Vec<Vec<u64>> = fa.iter().map(tf).collect();
                let tb: Vec<Vec<u64>> = fb.iter().map(tf).collect();
                outputs
                    .iter()
                    .map(|terms| {
                        let prods: Vec<(&[u64], &[u64])> =
                            terms.iter().map(|&(i, j)| (ta[i].as_slice(), tb[j].as_slice())).collect();
                        pipeline_inverse_of_products(&prods, m_us)
                    })
                    .collect::<Vec<_>>()
            });
            let mut out = vec![Vec::with_capacity(t); outputs.len()];
            for row in per_t {
                for (j, c) in row.into_iter().enumerate() {
                    out[j].push(c);
                }
            }
            Ok(out)
        }
        DenseBox::Faulty(prob) => {
            let mut out = vec![vec![vec![f.zero(); m_us]; t]; outputs.len()];
            for (j, terms) in outputs.iter().enumerate() {
                for (&(ia, ib), ti) in terms.iter().flat_map(|p| (0..t).map(move |ti| (p, ti))) {
                    let (a, b) = (&fa[ia][ti], &fb[ib][ti]);
                    let res = reliable_conv(
                        |rng: &mut rand_chacha::ChaCha8Rng| {
                            let mut c = linear_conv_modq(a, b, &f)?;
                            if rng.gen_bool(prob.clamp(0.0, 1.0)) {
                                let i = rng.gen_range(0..c.len());
                                c[i] = f.add(c[i], f.one());
                            }
                            Ok(c)
                        },
                        |c: &Vec<Residue>, rng: &mut rand_chacha::ChaCha8Rng| verify_linear_field(a, b, c, &f, rng),
                        &mut run.rng,
                    )?;
                    run.stats.dense_calls += res.calls as u64;
                    let folded = &mut out[j][ti];
                    for (i, v) in res.value.into_iter().enumerate() {
                        folded[i % m_us] = f.add(folded[i % m_us], v);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Checks c = a * b over the field at one random point.
pub(crate) fn verify_linear_field<R: Rng + ?Sized>(a: &[Residue], b: &[Residue], c: &[Residue], f: &FieldCtx, rng: &mut R) -> bool {
    let x = rand_unit(f, rng);
    let ev = |v: &[Residue]| v.iter().rev().fold(f.zero(), |acc, &c| f.add(f.mul(acc, x), c));
    f.mul(ev(a), ev(b)) == ev(c)
}

/// Set query for several outputs sharing the hash, omega and fold layout; each output is a
/// sum of products over its terms. Vectors live on [0, u); the candidate set `x` is sorted
/// and lies in [0, 2u - 1). Results are supported on `x`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn set_query_multi(
    run: &mut Run,
    a_vecs: &[FVec],
    b_vecs: &[FVec],
    outputs: &[Terms],
    u: u64,
    k: usize,
    x: &[u64],
    gamma: f64,
    delta: f64,
) -> Result<Vec<FVec>, PipelineError> {
    if x.is_empty() || outputs.is_empty() {
        return Ok(vec![Vec::new(); outputs.len()]);
    }
    let lay = find_layout(run, u, k, x, gamma, delta)?;
    let f = run.f;
    for _ in 0..OMEGA_ATTEMPTS {
        let omega = loop {
            let w = rand_unit(&f, &mut run.rng);
            if w != f.one() {
                break w;
            }
        };
        let attempt = (|| -> Result<Vec<FVec>, PipelineError> {
            let fold_with = |v: &FVec, h: &LinearHash| {
                let pv: Vec<(u128, Residue)> = v.iter().map(|&(i, r)| (h.pi(i as u128), r)).collect();
                fold(&pv, omega, lay.m, lay.t, &f)
            };
            let clock = std::time::Instant::now();
            let fa = a_vecs.iter().map(|v| fold_with(v, &lay.pi_a)).collect::<Result<Vec<_>, _>>()?;
            let fb = b_vecs.iter().map(|v| fold_with(v, &lay.pi_b)).collect::<Result<Vec<_>, _>>()?;
            log::trace!("fold m={} T={} in {:?}", lay.m, lay.t, clock.elapsed());
            let clock = std::time::Instant::now();
            let cs = convolve_folds(run, &fa, &fb, outputs, lay.m, lay.t)?;
            log::trace!("convolve in {:?}", clock.elapsed());
            let clock = std::time::Instant::now();
            let fams: Vec<&[Vec<Residue>]> = cs.iter().map(|c| c.as_slice()).collect();
            let recovered = unfold_multi(&fams, omega, lay.m, &lay.xt, &f)?;
            log::trace!("unfold |X~|={} in {:?}", lay.xt.len(), clock.elapsed());
            Ok(recovered
                .into_iter()
                .map(|r| {
                    let get = |key: u128| r.binary_search_by_key(&key, |e| e.0).map_or(f.zero(), |i| r[i].1);
                    x.iter()
                        .filter_map(|&y| {
                            let py = lay.pi_a.pi(y as u128);
                            let lo = get(py);
                            let hi = get(py + lay.p);
                            let v = f.add(lo, hi);
                            (!f.is_zero(v)).then_some((y, v))
                        })
                        .collect()
                })
                .collect())
        })();
        match attempt {
            Err(PipelineError::OmegaCollision) => continue,
            other => return other,
        }
    }
    Err(PipelineError::OmegaCollision)
}

/// Approximates A * B on the candidate set X, for A, B over a universe U <= k / gamma^2.
pub fn set_query(a: &SparseVec, b: &SparseVec, k: usize, x: &[u64], cfg: &PipelineConfig) -> Result<SparseVec, PipelineError> {
    let delta = cfg.checked_delta()?;
    let gamma = cfg.gamma();
    if a.len() != b.len() {
        return Err(crate::vectors::VectorError::UniverseMismatch(a.len(), b.len()).into());
    }
    let u = a.len();
    let out_len = (2 * u).saturating_sub(1);
    if (u as f64) > k.max(1) as f64 / (gamma * gamma) {
        return Err(PipelineError::Sizing(format!("universe {u} exceeds k / gamma^2 for k = {k}")));
    }
    let mut run = Run::new(cfg);
    check_value_bound(a, b, &run.f)?;
    if a.is_empty() || b.is_empty() {
        return Ok(SparseVec::zero(out_len));
    }
    let mut xs: Vec<u64> = x.iter().copied().filter(|&v| v < out_len).collect();
    xs.sort_unstable();
    xs.dedup();
    let (la, lb) = (run.lift(a), run.lift(b));
    let res = set_query_multi(&mut run, &[la], &[lb], &[vec![(0, 0)]], u, k, &xs, gamma, delta)?;
    run.lower(&res[0], out_len)
}
