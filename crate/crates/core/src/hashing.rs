//! Linear hashing, hashing modulo a random prime, flatness and isolation, and the
//! height-based concentration experiments.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numeric::{find_prime, gcd, FieldCtx, Residue};
use crate::par;

pub const HEIGHT_GUARD: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HashError {
    #[error("sigma is zero, so pi is not invertible; resample the hash")]
    SigmaZero,
    #[error("invalid hash parameters: {0}")]
    BadParams(String),
    #[error("set of size {0} exceeds the quadratic guard")]
    Guard(usize),
    #[error("height is undefined for a zero argument")]
    ZeroArgument,
    #[error("infeasible construction: {0}")]
    Infeasible(String),
}

/// h(x) = ((sigma x + tau) mod p) mod m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearHash {
    p: u128,
    m: u64,
    sigma: u128,
    tau: u128,
    ctx: FieldCtx,
    sigma_r: Residue,
}

impl LinearHash {
    pub fn new(p: u128, m: u64, sigma: u128, tau: u128) -> Result<Self, HashError> {
        if m == 0 || m as u128 > p || sigma >= p || tau >= p {
            return Err(HashError::BadParams(format!("p={p} m={m} sigma={sigma} tau={tau}")));
        }
        let ctx = FieldCtx::new(p).map_err(|e| HashError::BadParams(e.to_string()))?;
        Ok(Self::with_ctx(ctx, m, sigma, tau))
    }

    pub(crate) fn with_ctx(ctx: FieldCtx, m: u64, sigma: u128, tau: u128) -> Self {
        LinearHash { p: ctx.modulus(), m, sigma, tau, ctx, sigma_r: ctx.from_u128(sigma) }
    }

    pub fn sample<R: Rng + ?Sized>(p: u128, m: u64, rng: &mut R) -> Result<Self, HashError> {
        let ctx = FieldCtx::new(p).map_err(|e| HashError::BadParams(e.to_string()))?;
        if m == 0 || m as u128 > p {
            return Err(HashError::BadParams(format!("m={m} must lie in [1, p]")));
        }
        Ok(Self::sample_in(&ctx, m, rng))
    }

    pub(crate) fn sample_in<R: Rng + ?Sized>(ctx: &FieldCtx, m: u64, rng: &mut R) -> Self {
        let p = ctx.modulus();
        Self::with_ctx(*ctx, m, rng.gen_range(0..p), rng.gen_range(0..p))
    }

    pub fn p(&self) -> u128 {
        self.p
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn sigma(&self) -> u128 {
        self.sigma
    }

    pub fn tau(&self) -> u128 {
        self.tau
    }

    /// pi(x) = (sigma x + tau) mod p.
    #[inline]
    pub fn pi(&self, x: u128) -> u128 {
        let s = self.ctx.mul_plain(self.sigma_r, x) + self.tau;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn eval(&self, x: u128) -> u64 {
        (self.pi(x) % self.m as u128) as u64
    }

    pub fn pi_invert(&self, y: u128) -> Result<u128, HashError> {
        if self.sigma == 0 {
            return Err(HashError::SigmaZero);
        }
        let inv = self.ctx.inv(self.sigma_r).ok_or(HashError::SigmaZero)?;
        let d = self.ctx.sub(self.ctx.from_u128(y), self.ctx.from_u128(self.tau));
        Ok(self.ctx.to_u128(self.ctx.mul(d, inv)))
    }

    /// The offset o in {-p, 0, p} with h(x) + h(y) = h(0) + h(x + y) + o mod m.
    pub fn offset_for(&self, x: u128, y: u128) -> i128 {
        let d = self.pi(x) as i128 + self.pi(y) as i128 - self.pi(0) as i128 - self.pi(x + y) as i128;
        d.signum() * self.p as i128
    }
}

pub fn offsets_for(h: &LinearHash, x: u128, y: u128) -> i128 {
    h.offset_for(x, y)
}

/// g(x) = x mod p for a prime p in [m, 2m].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeModHash {
    pub p: u64,
}

impl PrimeModHash {
    pub fn sample<R: Rng + ?Sized>(m: u64, rng: &mut R) -> Result<Self, HashError> {
        let m = m.max(2);
        let p = find_prime(m as u128, 2 * m as u128, rng).map_err(|e| HashError::BadParams(e.to_string()))?;
        Ok(PrimeModHash { p: p as u64 })
    }

    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        x % self.p
    }
}

/// Number of x in X whose residue class mod m has more than 2|X|/m members.
pub fn flatness(x: &[u64], m: u64) -> usize {
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &v in x {
        *counts.entry(v % m).or_default() += 1;
    }
    let n = x.len() as u128;
    counts.values().filter(|&&c| c as u128 * m as u128 > 2 * n).sum()
}

/// The default isolation window {-2p, -p, 0, p, 2p}.
pub fn default_spread(p: u128) -> Vec<i128> {
    let p = p as i128;
    vec![-2 * p, -p, 0, p, 2 * p]
}

/// Elements x of S with no other x' in S such that h(x') lies in h(x) + spread mod m.
pub fn isolated_indices(s: &[u64], h: &LinearHash, spread: &[i128]) -> Vec<u64> {
    let m = h.m() as i128;
    let hashes: Vec<u64> = s.iter().map(|&x| h.eval(x as u128)).collect();
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &b in &hashes {
        *counts.entry(b).or_default() += 1;
    }
    s.iter()
        .zip(&hashes)
        .filter(|&(_, &hx)| {
            let mut seen = Vec::with_capacity(spread.len());
            for &o in spread {
                let b = (hx as i128 + o).rem_euclid(m) as u64;
                if seen.contains(&b) {
                    continue;
                }
                seen.push(b);
                let c = counts.get(&b).copied().unwrap_or(0) - usize::from(b == hx);
                if c > 0 {
                    return false;
                }
            }
            true
        })
        .map(|(&x, _)| x)
        .collect()
}

/// H(x/y) = max(|a|, |b|) for x/y = a/b in lowest terms.
pub fn height(x: i128, y: i128) -> Result<u128, HashError> {
    if x == 0 || y == 0 {
        return Err(HashError::ZeroArgument);
    }
    let (a, b) = (x.unsigned_abs(), y.unsigned_abs());
    Ok(a.max(b) / gcd(a, b))
}

/// Neumaier-compensated sum.
fn compensated_sum(v: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Sum over ordered pairs (x, y) of X x X of 1 / H(x/y).
pub fn inverse_height_sum(x: &[u64]) -> Result<f64, HashError> {
    if x.len() > HEIGHT_GUARD {
        return Err(HashError::Guard(x.len()));
    }
    if x.contains(&0) {
        return Err(HashError::ZeroArgument);
    }
    let rows = par::map_range(x.len(), |i| {
        compensated_sum(x[i + 1..].iter().map(|&y| {
            let (a, b) = (x[i] as u128, y as u128);
            gcd(a, b) as f64 / a.max(b) as f64
        }))
    });
    Ok(x.len() as f64 + 2.0 * compensated_sum(rows))
}

fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    let mut sieve = vec![true; hi as usize + 1];
    let mut out = Vec::new();
    for i in 2..=hi as usize {
        if sieve[i] {
            if i as u64 >= lo {
                out.push(i as u64);
            }
            let mut j = i * i;
            while j <= hi as usize {
                sieve[j] = false;
                j += i;
            }
        }
    }
    out
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Parameters chosen by the lower-bound construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundParams {
    pub n: usize,
    pub c: u64,
    pub primes: Vec<u64>,
    pub s: u64,
    pub core_size: usize,
}

/// A size-k subset of [1, U] built from products of n/2 out of n small primes, scaled by
/// s <= S and padded with the smallest unused positive integers.
pub fn lower_bound_set<R: Rng + ?Sized>(k: usize, u: u64, rng: &mut R) -> Result<Vec<u64>, HashError> {
    let _ = rng;
    lower_bound_set_with_params(k, u).map(|r| r.0)
}

pub fn lower_bound_set_with_params(k: usize, u: u64) -> Result<(Vec<u64>, LowerBoundParams), HashError> {
    if k < 2 || u < k as u64 {
        return Err(HashError::Infeasible(format!("k={k}, U={u}")));
    }
    let (lu, lk) = ((u as f64).log2(), (k as f64).log2());
    let eps = lu / lk - 1.0;
    if eps <= 0.0 || lu.log2() <= 0.0 {
        return Err(HashError::Infeasible(format!("U={u} is not above k^(1+eps) for k={k}")));
    }
    let mut c = 2u64;
    let (n, primes) = loop {
        let raw = (eps * lu / ((1.0 + eps) * c as f64 * lu.log2())).min(lk);
        let n = (raw.floor() as usize) & !1;
        if n < 2 {
            return Err(HashError::Infeasible(format!("n rounds to {n} for k={k}, U={u}")));
        }
        let nlogn = n as f64 * (n as f64).log2();
        let ps = primes_in(nlogn.floor() as u64, (c as f64 * nlogn).ceil() as u64);
        if ps.len() >= n {
            break (n, ps[..n].to_vec());
        }
        c += 1;
    };
    let products: Vec<u64> = combinations(n, n / 2)
        .into_iter()
        .map(|idx| idx.iter().map(|&i| primes[i]).product())
        .collect();
    let mut set = HashSet::new();
    let mut s = 0u64;
    loop {
        let mut next = set.clone();
        for &q in &products {
            if let Some(v) = q.checked_mul(s + 1).filter(|&v| v <= u) {
                next.insert(v);
            }
        }
        if next.len() > k || next.len() == set.len() {
            break;
        }
        set = next;
        s += 1;
    }
    if set.len() < k / 2 {
        return Err(HashError::Infeasible(format!("core has only {} elements", set.len())));
    }
    let core_size = set.len();
    let mut pad = 1u64;
    while set.len() < k {
        set.insert(pad);
        pad += 1;
    }
    let mut out: Vec<u64> = set.into_iter().collect();
    out.sort_unstable();
    Ok((out, LowerBoundParams { n, c, primes, s, core_size }))
}

/// Outcome of the conditional bucket-load experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationStats {
    pub k: usize,
    pub m: u64,
    pub universe: u64,
    pub p: u128,
    pub trials: usize,
    /// Estimate of Pr(h(y) = h(z) = b | h(x) = a) for uniform y, z in X.
    pub cond_prob: f64,
    /// Constant c solving cond_prob = 1/m^2 + c U log U / (m k^2).
    pub fitted_c: f64,
    pub mean_f: f64,
    /// (lambda, Pr(|F - E F| >= lambda sqrt(E F))) for lambda in {1, 2, 4, 8}.
    pub tail_mass: Vec<(u32, f64)>,
    /// Load F of bucket b in every trial.
    pub f_values: Vec<u64>,
}

pub const TAIL_LAMBDAS: [u32; 4] = [1, 2, 4, 8];

impl ConcentrationStats {
    pub fn summarize(f_values: Vec<u64>, k: usize, m: u64, universe: u64, p: u128) -> Self {
        let t = f_values.len().max(1) as f64;
        let mean_f = compensated_sum(f_values.iter().map(|&f| f as f64)) / t;
        let kk = (k as f64).powi(2);
        let cond_prob = if k == 0 {
            0.0
        } else {
            compensated_sum(f_values.iter().map(|&f| (f as f64).powi(2) / kk)) / t
        };
        let (mf, uf) = (m as f64, universe as f64);
        let fitted_c = (cond_prob - 1.0 / (mf * mf)) * mf * kk / (uf * uf.log2());
        let tail_mass = TAIL_LAMBDAS
            .iter()
            .map(|&l| {
                let thr = l as f64 * mean_f.sqrt();
                let hit = f_values.iter().filter(|&&f| (f as f64 - mean_f).abs() >= thr).count();
                (l, hit as f64 / t)
            })
            .collect();
        ConcentrationStats {
            k,
            m,
            universe,
            p,
            trials: f_values.len(),
            cond_prob,
            fitted_c,
            mean_f,
            tail_mass,
            f_values,
        }
    }
}

const EXPERIMENT_CHUNKS: usize = 64;

/// Samples `trials` linear hashes conditioned on h(x) = a and records the load of bucket b.
#[allow(clippy::too_many_arguments)]
pub fn concentration_experiment<R: Rng + ?Sized>(
    set: &[u64],
    universe: u64,
    p: u128,
    m: u64,
    x: u64,
    a: u64,
    b: u64,
    trials: usize,
    rng: &mut R,
) -> Result<ConcentrationStats, HashError> {
    let u = universe as u128;
    if p <= 4 * u * u || m == 0 || m > universe || a >= m || b >= m {
        return Err(HashError::BadParams(format!("need p > 4U^2, 1 <= m <= U, a, b < m (p={p}, U={universe}, m={m})")));
    }
    if set.contains(&x) || set.iter().any(|&y| y >= universe) || x >= universe {
        return Err(HashError::BadParams("x must lie outside X and all keys inside [0, U)".into()));
    }
    let ctx = FieldCtx::new(p).map_err(|e| HashError::BadParams(e.to_string()))?;
    let seeds: Vec<u64> = (0..EXPERIMENT_CHUNKS).map(|_| rng.gen()).collect();
    let classes = (p - 1 - a as u128) / m as u128 + 1;
    let per_chunk = trials.div_ceil(EXPERIMENT_CHUNKS);
    let chunks = par::map_range(EXPERIMENT_CHUNKS, |c| {
        let mut r = ChaCha8Rng::seed_from_u64(seeds[c]);
        let count = per_chunk.min(trials.saturating_sub(c * per_chunk));
        (0..count)
            .map(|_| {
                let sigma = r.gen_range(0..p);
                let target = a as u128 + r.gen_range(0..classes) * m as u128;
                let sx = ctx.to_u128(ctx.mul(ctx.from_u128(sigma), ctx.from_u64(x)));
                let tau = (target + p - sx) % p;
                let h = LinearHash::with_ctx(ctx, m, sigma, tau);
                debug_assert_eq!(h.eval(x as u128), a);
                set.iter().filter(|&&y| h.eval(y as u128) == b).count() as u64
            })
            .collect::<Vec<u64>>()
    });
    let f_values = chunks.into_iter().flatten().collect();
    Ok(ConcentrationStats::summarize(f_values, set.len(), m, universe, p))
}
