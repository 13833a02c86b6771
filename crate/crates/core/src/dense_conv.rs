//! Exact dense convolution: NTT over word-size primes with CRT, plus the fault-injection
//! wrapper and the test-and-repeat loop for a fallible convolution box.

use std::sync::{Arc, OnceLock, RwLock};

use rand::Rng;
use thiserror::Error;

use crate::numeric::{is_prime, FieldCtx, Mont64, Residue};
use crate::par;

pub const MAX_LEN: usize = 1 << 27;
const VALUE_LIMIT: u64 = 1 << 63;
const TWIDDLE_CAP: usize = 1 << 20;
const SCHOOLBOOK_CUTOFF: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DenseError {
    #[error("input length {0} exceeds the limit 2^27")]
    TooLong(usize),
    #[error("input value {0} is not below 2^63")]
    ValueTooLarge(u64),
    #[error("output coefficient at index {0} does not fit below 2^63")]
    Overflow(usize),
    #[error("vectors must both have length {0}")]
    LengthMismatch(usize),
    #[error("the convolution box was rejected {0} times in a row")]
    BoxBroken(usize),
}

/// One NTT-friendly prime p = c * 2^32 + 1 with cached twiddle tables.
pub(crate) struct NttPrime {
    pub p: u64,
    pub m: Mont64,
    root: u64,
    tables: RwLock<Arc<(Vec<u64>, Vec<u64>)>>,
}

/// The three NTT primes used by the engine, largest first.
pub struct NttPlan {
    primes: Vec<NttPrime>,
}

impl NttPlan {
    pub fn ntt_primes(&self) -> Vec<u64> {
        self.primes.iter().map(|q| q.p).collect()
    }
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl NttPrime {
    fn new(p: u64) -> Self {
        let m = Mont64::new(p);
        let mut factors = distinct_prime_factors((p - 1) >> 32);
        if !factors.contains(&2) {
            factors.push(2);
        }
        let g = (2..)
            .find(|&g| {
                let gm = m.to_mont(g);
                factors.iter().all(|&f| m.pow(gm, ((p - 1) / f) as u128) != m.one())
            })
            .unwrap();
        NttPrime {
            p,
            m,
            root: m.to_mont(g),
            tables: RwLock::new(Arc::new((Vec::new(), Vec::new()))),
        }
    }

    /// Primitive 2^k-th root of unity (Montgomery form) and its inverse.
    fn unit_root(&self, k: u32) -> (u64, u64) {
        let w = self.m.pow(self.root, ((self.p - 1) >> k) as u128);
        let wi = self.m.pow(w, ((1u128 << k) - 1) as u128);
        (w, wi)
    }

    fn twiddles(&self, half: usize) -> Arc<(Vec<u64>, Vec<u64>)> {
        let want = half.min(TWIDDLE_CAP);
        {
            let t = self.tables.read().unwrap();
            if t.0.len() >= 2 * want {
                return t.clone();
            }
        }
        let mut guard = self.tables.write().unwrap();
        if guard.0.len() >= 2 * want {
            return guard.clone();
        }
        let size = 2 * want.next_power_of_two();
        let mut fw = vec![0u64; size];
        let mut iw = vec![0u64; size];
        let mut h = 1;
        while h < size {
            let (w, wi) = self.unit_root(h.trailing_zeros() + 1);
            let (mut a, mut b) = (self.m.one(), self.m.one());
            for j in 0..h {
                fw[h + j] = a;
                iw[h + j] = b;
                a = self.m.mul(a, w);
                b = self.m.mul(b, wi);
            }
            h *= 2;
        }
        *guard = Arc::new((fw, iw));
        guard.clone()
    }

    /// Decimation in frequency: natural order in, bit-reversed order out.
    fn forward(&self, a: &mut [u64]) {
        let n = a.len();
        let tw = self.twiddles(n / 2);
        let m = &self.m;
        let mut h = n / 2;
        while h >= 1 {
            if h <= TWIDDLE_CAP {
                let t = &tw.0[h..2 * h];
                for block in a.chunks_exact_mut(2 * h) {
                    let (lo, hi) = block.split_at_mut(h);
                    for j in 0..h {
                        let (u, v) = (lo[j], hi[j]);
                        lo[j] = m.add(u, v);
                        hi[j] = m.mul(m.sub(u, v), t[j]);
                    }
                }
            } else {
                let (w, _) = self.unit_root(h.trailing_zeros() + 1);
                for block in a.chunks_exact_mut(2 * h) {
                    let (lo, hi) = block.split_at_mut(h);
                    let mut wj = m.one();
                    for j in 0..h {
                        let (u, v) = (lo[j], hi[j]);
                        lo[j] = m.add(u, v);
                        hi[j] = m.mul(m.sub(u, v), wj);
                        wj = m.mul(wj, w);
                    }
                }
            }
            h /= 2;
        }
    }

    /// Decimation in time: bit-reversed order in, natural order out, unscaled.
    fn inverse(&self, a: &mut [u64]) {
        let n = a.len();
        let tw = self.twiddles(n / 2);
        let m = &self.m;
        let mut h = 1;
        while h < n {
            if h <= TWIDDLE_CAP {
                let t = &tw.1[h..2 * h];
                for block in a.chunks_exact_mut(2 * h) {
                    let (lo, hi) = block.split_at_mut(h);
                    for j in 0..h {
                        let u = lo[j];
                        let v = m.mul(hi[j], t[j]);
                        lo[j] = m.add(u, v);
                        hi[j] = m.sub(u, v);
                    }
                }
            } else {
                let (_, wi) = self.unit_root(h.trailing_zeros() + 1);
                for block in a.chunks_exact_mut(2 * h) {
                    let (lo, hi) = block.split_at_mut(h);
                    let mut wj = m.one();
                    for j in 0..h {
                        let u = lo[j];
                        let v = m.mul(hi[j], wj);
                        lo[j] = m.add(u, v);
                        hi[j] = m.sub(u, v);
                        wj = m.mul(wj, wi);
                    }
                }
            }
            h *= 2;
        }
    }

    fn inv_len(&self, n: usize) -> u64 {
        self.p - (self.p - 1) / n as u64
    }

    /// Scale that turns the inverse transform of products of plain inputs into plain outputs.
    fn plain_scale(&self, n: usize) -> u64 {
        self.m.to_mont(self.m.to_mont(self.inv_len(n)))
    }

    /// Scale for inputs already in Montgomery form.
    fn mont_scale(&self, n: usize) -> u64 {
        self.m.to_mont(self.inv_len(n))
    }

    /// Convolution of raw words: linear when `size` >= la + lb - 1, cyclic of length `size`
    /// when the inputs already have that length. Inputs must be reduced below p.
    fn convolve_raw(&self, a: &[u64], b: &[u64], size: usize, scale: u64, out_len: usize) -> Vec<u64> {
        let mut fa = vec![0u64; size];
        fa[..a.len()].copy_from_slice(a);
        self.forward(&mut fa);
        if std::ptr::eq(a, b) {
            for x in fa.iter_mut() {
                *x = self.m.mul(*x, *x);
            }
        } else {
            let mut fb = vec![0u64; size];
            fb[..b.len()].copy_from_slice(b);
            self.forward(&mut fb);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = self.m.mul(*x, *y);
            }
        }
        self.inverse(&mut fa);
        fa.truncate(out_len);
        for x in fa.iter_mut() {
            *x = self.m.mul(*x, scale);
        }
        fa
    }
}

fn find_ntt_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c: u64 = (1 << 31) - 1;
    while out.len() < count {
        let p = (c << 32) + 1;
        if is_prime(p as u128) {
            out.push(p);
        }
        c -= 1;
    }
    out
}

pub fn plan() -> &'static NttPlan {
    static PLAN: OnceLock<NttPlan> = OnceLock::new();
    PLAN.get_or_init(|| NttPlan {
        primes: find_ntt_primes(3).into_iter().map(NttPrime::new).collect(),
    })
}

/// The field used by the sparse pipeline: the largest NTT prime, just below 2^63.
pub fn pipeline_field() -> FieldCtx {
    FieldCtx::new_unchecked(plan().primes[0].p as u128)
}

fn ntt_prime_for(q: u128) -> Option<&'static NttPrime> {
    plan().primes.iter().find(|x| x.p as u128 == q)
}

/// Linear convolutions of plain words modulo the first `count` NTT primes.
fn per_prime_convs(a: &[u64], b: &[u64], count: usize) -> Vec<Vec<u64>> {
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let same = std::ptr::eq(a, b);
    par::map_range(count, |i| {
        let pr = &plan().primes[i];
        let reduce = |v: &[u64]| -> Option<Vec<u64>> { v.iter().any(|&x| x >= pr.p).then(|| v.iter().map(|&x| x % pr.p).collect()) };
        let ra = reduce(a);
        let ra: &[u64] = ra.as_deref().unwrap_or(a);
        if same {
            pr.convolve_raw(ra, ra, size, pr.plain_scale(size), out_len)
        } else {
            let rb = reduce(b);
            pr.convolve_raw(ra, rb.as_deref().unwrap_or(b), size, pr.plain_scale(size), out_len)
        }
    })
}

struct Garner {
    p: [u64; 3],
    inv_p0_mod_p1: u64,
    inv_p0_mod_p2: u64,
    inv_p1_mod_p2: u64,
}

fn garner() -> &'static Garner {
    static G: OnceLock<Garner> = OnceLock::new();
    G.get_or_init(|| {
        let ps = plan().ntt_primes();
        let inv = |a: u64, p: u64| {
            let f = FieldCtx::new_unchecked(p as u128);
            f.to_u128(f.inv(f.from_u64(a)).unwrap()) as u64
        };
        Garner {
            p: [ps[0], ps[1], ps[2]],
            inv_p0_mod_p1: inv(ps[0] % ps[1], ps[1]),
            inv_p0_mod_p2: inv(ps[0] % ps[2], ps[2]),
            inv_p1_mod_p2: inv(ps[1] % ps[2], ps[2]),
        }
    })
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

/// Mixed-radix digits (x0, x1, x2) with value x0 + x1 p0 + x2 p0 p1.
fn garner_digits(r: &[u64]) -> [u64; 3] {
    let g = garner();
    let x0 = r[0];
    if r.len() == 1 {
        return [x0, 0, 0];
    }
    let [p0, p1, p2] = g.p;
    let x1 = mulmod((r[1] + p1 - x0 % p1) % p1, g.inv_p0_mod_p1, p1);
    if r.len() == 2 {
        return [x0, x1, 0];
    }
    let t = mulmod((r[2] + p2 - x0 % p2) % p2, g.inv_p0_mod_p2, p2);
    let x2 = mulmod((t + p2 - x1 % p2) % p2, g.inv_p1_mod_p2, p2);
    let _ = p0;
    [x0, x1, x2]
}

fn primes_needed(bound_bits: f64) -> usize {
    let ps = plan().ntt_primes();
    let mut bits = 0.0;
    for (i, &p) in ps.iter().enumerate() {
        bits += (p as f64).log2();
        if bits > bound_bits + 1.0 {
            return i + 1;
        }
    }
    ps.len()
}

fn bits_of(x: u64) -> f64 {
    (x.max(1) as f64).log2()
}

/// Unsigned 192-bit integer, little-endian limbs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct U192(pub [u64; 3]);

impl U192 {
    pub fn from_u128(v: u128) -> Self {
        U192([v as u64, (v >> 64) as u64, 0])
    }

    fn add_u128(&mut self, v: u128) {
        let (lo, c0) = self.0[0].overflowing_add(v as u64);
        let (mid, c1) = self.0[1].overflowing_add((v >> 64) as u64);
        let (mid, c2) = mid.overflowing_add(c0 as u64);
        self.0[0] = lo;
        self.0[1] = mid;
        self.0[2] = self.0[2].wrapping_add(c1 as u64 + c2 as u64);
    }

    /// x0 + p0 (x1 + p1 x2).
    fn from_digits([x0, x1, x2]: [u64; 3], p0: u64, p1: u64) -> Self {
        let t = x2 as u128 * p1 as u128 + x1 as u128;
        let lo = p0 as u128 * (t as u64) as u128;
        let hi = p0 as u128 * (t >> 64);
        let mut r = U192([0, 0, (hi >> 64) as u64]);
        r.add_u128(hi << 64);
        r.add_u128(lo);
        r.add_u128(x0 as u128);
        r
    }

    pub fn to_u128(self) -> Option<u128> {
        (self.0[2] == 0).then(|| self.0[0] as u128 | (self.0[1] as u128) << 64)
    }
}

enum RawConv {
    Plain(Vec<u64>),
    Wide(Vec<U192>),
}

fn raw_conv(a: &[u64], b: &[u64]) -> Result<RawConv, DenseError> {
    if a.is_empty() || b.is_empty() {
        return Ok(RawConv::Plain(Vec::new()));
    }
    for v in [a, b] {
        if v.len() > MAX_LEN {
            return Err(DenseError::TooLong(v.len()));
        }
        if let Some(&x) = v.iter().find(|&&x| x >= VALUE_LIMIT) {
            return Err(DenseError::ValueTooLarge(x));
        }
    }
    let out_len = a.len() + b.len() - 1;
    let (ma, mb) = (*a.iter().max().unwrap(), *b.iter().max().unwrap());
    if ma == 0 || mb == 0 {
        return Ok(RawConv::Plain(vec![0; out_len]));
    }
    if a.len().min(b.len()) <= SCHOOLBOOK_CUTOFF {
        let mut acc = vec![U192::default(); out_len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                acc[i + j].add_u128(x as u128 * y as u128);
            }
        }
        return Ok(RawConv::Wide(acc));
    }
    let bound = bits_of(a.len().min(b.len()) as u64) + bits_of(ma) + bits_of(mb);
    let count = primes_needed(bound);
    let mut res = per_prime_convs(a, b, count);
    if count == 1 {
        return Ok(RawConv::Plain(res.pop().unwrap()));
    }
    let g = garner();
    let mut r = [0u64; 3];
    Ok(RawConv::Wide(
        (0..out_len)
            .map(|i| {
                for (t, v) in res.iter().enumerate() {
                    r[t] = v[i];
                }
                U192::from_digits(garner_digits(&r[..count]), g.p[0], g.p[1])
            })
            .collect(),
    ))
}

/// Exact linear convolution of nonnegative vectors with entries below 2^63.
pub fn dense_conv(a: &[u64], b: &[u64]) -> Result<Vec<u64>, DenseError> {
    match raw_conv(a, b)? {
        RawConv::Plain(v) => Ok(v),
        RawConv::Wide(v) => v
            .into_iter()
            .enumerate()
            .map(|(i, x)| x.to_u128().filter(|&y| y < VALUE_LIMIT as u128).map(|y| y as u64).ok_or(DenseError::Overflow(i)))
            .collect(),
    }
}

/// As [`dense_conv`] without the output bound: coefficients up to 2^27 (2^63 - 1)^2.
pub fn dense_conv_wide(a: &[u64], b: &[u64]) -> Result<Vec<U192>, DenseError> {
    Ok(match raw_conv(a, b)? {
        RawConv::Plain(v) => v.into_iter().map(|x| U192::from_u128(x as u128)).collect(),
        RawConv::Wide(v) => v,
    })
}

/// Cyclic convolution of two length-m vectors.
pub fn cyclic_conv(a: &[u64], b: &[u64], m: usize) -> Result<Vec<u64>, DenseError> {
    if a.len() != m || b.len() != m {
        return Err(DenseError::LengthMismatch(m));
    }
    let lin = dense_conv(a, b)?;
    let mut out = vec![0u64; m];
    for (i, v) in lin.into_iter().enumerate() {
        let s = out[i % m] as u128 + v as u128;
        if s >= VALUE_LIMIT as u128 {
            return Err(DenseError::Overflow(i % m));
        }
        out[i % m] = s as u64;
    }
    Ok(out)
}

fn fold_field(lin: Vec<Residue>, m: usize, ctx: &FieldCtx) -> Vec<Residue> {
    let mut out = vec![ctx.zero(); m];
    for (i, v) in lin.into_iter().enumerate() {
        out[i % m] = ctx.add(out[i % m], v);
    }
    out
}

/// Linear convolution over Z_q computed exactly through the NTT primes.
pub fn linear_conv_modq(a: &[Residue], b: &[Residue], ctx: &FieldCtx) -> Result<Vec<Residue>, DenseError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    for v in [a, b] {
        if v.len() > MAX_LEN {
            return Err(DenseError::TooLong(v.len()));
        }
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= SCHOOLBOOK_CUTOFF {
        let mut out = vec![ctx.zero(); out_len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = ctx.add(out[i + j], ctx.mul(x, y));
            }
        }
        return Ok(out);
    }
    if let Some(pr) = ntt_prime_for(ctx.modulus()) {
        let ra: Vec<u64> = a.iter().map(|&x| FieldCtx::raw(x) as u64).collect();
        let rb: Vec<u64> = b.iter().map(|&x| FieldCtx::raw(x) as u64).collect();
        let size = out_len.next_power_of_two();
        let c = pr.convolve_raw(&ra, &rb, size, pr.mont_scale(size), out_len);
        return Ok(c.into_iter().map(|x| FieldCtx::from_raw(x as u128)).collect());
    }
    let q = ctx.modulus();
    let g = garner();
    let p0 = ctx.from_u64(g.p[0]);
    let p01 = ctx.mul(p0, ctx.from_u64(g.p[1]));
    let combine = |res: &[Vec<u64>], i: usize| {
        let r = [res[0][i], res[1][i], res[2][i]];
        let [x0, x1, x2] = garner_digits(&r);
        let v = ctx.add(ctx.from_u64(x0), ctx.mul(ctx.from_u64(x1), p0));
        ctx.add(v, ctx.mul(ctx.from_u64(x2), p01))
    };
    if q < 1 << 63 {
        let la: Vec<u64> = a.iter().map(|&x| ctx.to_u128(x) as u64).collect();
        let lb: Vec<u64> = b.iter().map(|&x| ctx.to_u128(x) as u64).collect();
        let res = per_prime_convs(&la, &lb, 3);
        return Ok((0..out_len).map(|i| combine(&res, i)).collect());
    }
    // 63-bit limbs with one Karatsuba level; each product fits below the CRT modulus.
    let mask = (1u128 << 63) - 1;
    let split = |v: &[Residue]| -> [Vec<u64>; 3] {
        let mut lo = Vec::with_capacity(v.len());
        let mut hi = Vec::with_capacity(v.len());
        let mut sum = Vec::with_capacity(v.len());
        for &x in v {
            let y = ctx.to_u128(x);
            let (l, h) = ((y & mask) as u64, (y >> 63) as u64);
            lo.push(l);
            hi.push(h);
            sum.push(l + h);
        }
        [lo, hi, sum]
    };
    let [alo, ahi, asum] = split(a);
    let [blo, bhi, bsum] = split(b);
    let c0 = per_prime_convs(&alo, &blo, 3);
    let c2 = per_prime_convs(&ahi, &bhi, 3);
    let cm = per_prime_convs(&asum, &bsum, 3);
    let s63 = ctx.from_u128(1 << 63);
    let s126 = ctx.mul(s63, s63);
    Ok((0..out_len)
        .map(|i| {
            let (v0, v2, vm) = (combine(&c0, i), combine(&c2, i), combine(&cm, i));
            let v1 = ctx.sub(ctx.sub(vm, v0), v2);
            ctx.add(ctx.add(v0, ctx.mul(v1, s63)), ctx.mul(v2, s126))
        })
        .collect())
}

/// Cyclic convolution of two length-m vectors over Z_q.
pub fn cyclic_conv_modq(a: &[Residue], b: &[Residue], m: usize, ctx: &FieldCtx) -> Result<Vec<Residue>, DenseError> {
    if a.len() != m || b.len() != m {
        return Err(DenseError::LengthMismatch(m));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    if m.is_power_of_two() && m > SCHOOLBOOK_CUTOFF {
        if let Some(pr) = ntt_prime_for(ctx.modulus()) {
            let ra: Vec<u64> = a.iter().map(|&x| FieldCtx::raw(x) as u64).collect();
            let rb: Vec<u64> = b.iter().map(|&x| FieldCtx::raw(x) as u64).collect();
            let c = pr.convolve_raw(&ra, &rb, m, pr.mont_scale(m), m);
            return Ok(c.into_iter().map(|x| FieldCtx::from_raw(x as u128)).collect());
        }
    }
    Ok(fold_field(linear_conv_modq(a, b, ctx)?, m, ctx))
}

/// Forward transforms of several length-m vectors over the pipeline field, for reuse
/// across many pointwise products (m a power of two).
pub(crate) fn pipeline_forward(v: &[Residue], m: usize) -> Vec<u64> {
    let pr = &plan().primes[0];
    let mut f = vec![0u64; m];
    for (i, &x) in v.iter().enumerate() {
        f[i % m] = pr.m.add(f[i % m], FieldCtx::raw(x) as u64);
    }
    pr.forward(&mut f);
    f
}

/// Pointwise products summed over `terms`, transformed back: returns sum_i a_i *_m b_i.
pub(crate) fn pipeline_inverse_of_products(terms: &[(&[u64], &[u64])], m: usize) -> Vec<Residue> {
    let pr = &plan().primes[0];
    let mut acc = vec![0u64; m];
    for (fa, fb) in terms {
        for i in 0..m {
            acc[i] = pr.m.add(acc[i], pr.m.mul(fa[i], fb[i]));
        }
    }
    pr.inverse(&mut acc);
    let s = pr.mont_scale(m);
    acc.into_iter().map(|x| FieldCtx::from_raw(pr.m.mul(x, s) as u128)).collect()
}

/// Boolean sumset indicator of two index sets in [0, m) taken cyclically mod m
/// (m a power of two): entry i is nonzero iff i = y + z mod m for some y, z.
pub(crate) fn cyclic_sumset_counts(y: &[usize], z: &[usize], m: usize) -> Vec<bool> {
    let pr = &plan().primes[0];
    let mut fa = vec![0u64; m];
    let mut fb = vec![0u64; m];
    for &i in y {
        fa[i] = 1;
    }
    for &i in z {
        fb[i] = 1;
    }
    pr.forward(&mut fa);
    pr.forward(&mut fb);
    for (x, w) in fa.iter_mut().zip(&fb) {
        *x = pr.m.mul(*x, *w);
    }
    pr.inverse(&mut fa);
    fa.into_iter().map(|x| x != 0).collect()
}

/// With probability `fail_prob` the exact result has one uniformly chosen coefficient
/// increased by one. Returns the output and whether it was corrupted.
pub fn faulty_dense_conv<R: Rng + ?Sized>(
    a: &[u64],
    b: &[u64],
    fail_prob: f64,
    rng: &mut R,
) -> Result<(Vec<u64>, bool), DenseError> {
    let mut c = dense_conv(a, b)?;
    if !c.is_empty() && rng.gen_bool(fail_prob.clamp(0.0, 1.0)) {
        let i = rng.gen_range(0..c.len());
        c[i] += 1;
        return Ok((c, true));
    }
    Ok((c, false))
}

pub const RELIABLE_MAX_REJECTIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliableOutput<T> {
    pub value: T,
    pub calls: usize,
}

/// Calls the box until the verifier accepts its output.
pub fn reliable_conv<T, R, C, V>(
    mut conv_box: C,
    mut verifier: V,
    rng: &mut R,
) -> Result<ReliableOutput<T>, DenseError>
where
    R: Rng + ?Sized,
    C: FnMut(&mut R) -> Result<T, DenseError>,
    V: FnMut(&T, &mut R) -> bool,
{
    for calls in 1..=RELIABLE_MAX_REJECTIONS {
        let c = conv_box(rng)?;
        if verifier(&c, rng) {
            return Ok(ReliableOutput { value: c, calls });
        }
    }
    Err(DenseError::BoxBroken(RELIABLE_MAX_REJECTIONS))
}
