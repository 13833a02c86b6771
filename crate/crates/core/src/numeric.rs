//! Primes, Montgomery arithmetic for moduli below 2^126, bulk powering and bulk inversion.

use std::cell::Cell;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericError {
    #[error("modulus {0} is not an odd prime below 2^126")]
    BadModulus(u128),
    #[error("no prime found in [{lo}, {hi}] within the candidate budget")]
    NoPrime { lo: u128, hi: u128 },
    #[error("element at position {0} is zero and has no inverse")]
    ZeroElement(usize),
}

thread_local! {
    static MULS: Cell<u64> = const { Cell::new(0) };
    static INVERSIONS: Cell<u64> = const { Cell::new(0) };
}

/// Operation counts recorded by the instrumented primitives on the current thread.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub mults: u64,
    pub inversions: u64,
}

pub fn op_counters() -> OpCounters {
    OpCounters {
        mults: MULS.with(|c| c.get()),
        inversions: INVERSIONS.with(|c| c.get()),
    }
}

pub fn reset_op_counters() {
    MULS.with(|c| c.set(0));
    INVERSIONS.with(|c| c.set(0));
}

fn count_mults(n: u64) {
    MULS.with(|c| c.set(c.get() + n));
}

fn count_inversion() {
    INVERSIONS.with(|c| c.set(c.get() + 1));
}

#[inline]
pub(crate) fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a0, a1) = (a as u64 as u128, a >> 64);
    let (b0, b1) = (b as u64 as u128, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 as u64 as u128) + (p10 as u64 as u128);
    let lo = (p00 as u64 as u128) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Montgomery arithmetic modulo an odd n < 2^63 with R = 2^64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Mont64 {
    pub n: u64,
    ninv: u64,
    r2: u64,
    one: u64,
}

impl Mont64 {
    pub fn new(n: u64) -> Self {
        debug_assert!(n % 2 == 1 && n < 1 << 63);
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n.wrapping_mul(inv)));
        }
        let one = ((1u128 << 64) % n as u128) as u64;
        let mut r2 = one;
        for _ in 0..64 {
            r2 <<= 1;
            if r2 >= n {
                r2 -= n;
            }
        }
        Mont64 { n, ninv: inv.wrapping_neg(), r2, one }
    }

    #[inline(always)]
    pub fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.ninv);
        let u = ((t + m as u128 * self.n as u128) >> 64) as u64;
        if u >= self.n {
            u - self.n
        } else {
            u
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline(always)]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.n {
            s - self.n
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.n - b
        }
    }

    #[inline(always)]
    pub fn to_mont(&self, a: u64) -> u64 {
        self.mul(a % self.n, self.r2)
    }

    #[inline(always)]
    pub fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    pub fn one(&self) -> u64 {
        self.one
    }

    pub fn pow(&self, mut a: u64, mut e: u128) -> u64 {
        let mut r = self.one;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }
}

/// Montgomery arithmetic modulo an odd n < 2^126 with R = 2^128.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Mont128 {
    pub n: u128,
    ninv: u128,
    r2: u128,
    one: u128,
}

impl Mont128 {
    pub fn new(n: u128) -> Self {
        debug_assert!(n % 2 == 1 && n < 1 << 126);
        let mut inv: u128 = 1;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        let one = (u128::MAX % n + 1) % n;
        let mut r2 = one;
        for _ in 0..128 {
            r2 <<= 1;
            if r2 >= n {
                r2 -= n;
            }
        }
        Mont128 { n, ninv: inv.wrapping_neg(), r2, one }
    }

    /// Reduces a * b * R^-1 for any a, b with a * b < n * 2^128.
    #[inline(always)]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        let (hi, lo) = mul_wide(a, b);
        let m = lo.wrapping_mul(self.ninv);
        let (mhi, _) = mul_wide(m, self.n);
        let u = hi + mhi + (lo != 0) as u128;
        if u >= self.n {
            u - self.n
        } else {
            u
        }
    }

    #[inline(always)]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        let s = a + b;
        if s >= self.n {
            s - self.n
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a + self.n - b
        }
    }

    #[inline(always)]
    pub fn to_mont(&self, a: u128) -> u128 {
        self.mul(a % self.n, self.r2)
    }

    #[inline(always)]
    pub fn from_mont(&self, a: u128) -> u128 {
        self.mul(a, 1)
    }

    pub fn one(&self) -> u128 {
        self.one
    }

    pub fn pow(&self, mut a: u128, mut e: u128) -> u128 {
        let mut r = self.one;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arith {
    Small(Mont64),
    Large(Mont128),
}

/// A prime field Z_q with q < 2^126.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldCtx {
    q: u128,
    arith: Arith,
}

/// An element of Z_q, stored in the Montgomery form of its FieldCtx.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Residue(u128);

impl fmt::Display for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z_{}", self.q)
    }
}

impl FieldCtx {
    pub fn new(q: u128) -> Result<Self, NumericError> {
        if q < 3 || q >= 1 << 126 || !is_prime(q) {
            return Err(NumericError::BadModulus(q));
        }
        Ok(Self::new_unchecked(q))
    }

    pub(crate) fn new_unchecked(q: u128) -> Self {
        let arith = if q < 1 << 63 {
            Arith::Small(Mont64::new(q as u64))
        } else {
            Arith::Large(Mont128::new(q))
        };
        FieldCtx { q, arith }
    }

    pub fn modulus(&self) -> u128 {
        self.q
    }

    pub fn from_u128(&self, a: u128) -> Residue {
        match &self.arith {
            Arith::Small(m) => Residue(m.to_mont((a % self.q) as u64) as u128),
            Arith::Large(m) => Residue(m.to_mont(a)),
        }
    }

    pub fn from_u64(&self, a: u64) -> Residue {
        self.from_u128(a as u128)
    }

    pub fn from_i128(&self, a: i128) -> Residue {
        if a >= 0 {
            self.from_u128(a as u128)
        } else {
            self.neg(self.from_u128(a.unsigned_abs()))
        }
    }

    pub fn to_u128(&self, a: Residue) -> u128 {
        match &self.arith {
            Arith::Small(m) => m.from_mont(a.0 as u64) as u128,
            Arith::Large(m) => m.from_mont(a.0),
        }
    }

    pub fn zero(&self) -> Residue {
        Residue(0)
    }

    pub fn one(&self) -> Residue {
        match &self.arith {
            Arith::Small(m) => Residue(m.one() as u128),
            Arith::Large(m) => Residue(m.one()),
        }
    }

    #[inline(always)]
    pub fn add(&self, a: Residue, b: Residue) -> Residue {
        match &self.arith {
            Arith::Small(m) => Residue(m.add(a.0 as u64, b.0 as u64) as u128),
            Arith::Large(m) => Residue(m.add(a.0, b.0)),
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: Residue, b: Residue) -> Residue {
        match &self.arith {
            Arith::Small(m) => Residue(m.sub(a.0 as u64, b.0 as u64) as u128),
            Arith::Large(m) => Residue(m.sub(a.0, b.0)),
        }
    }

    #[inline(always)]
    pub fn neg(&self, a: Residue) -> Residue {
        self.sub(Residue(0), a)
    }

    #[inline(always)]
    pub fn mul(&self, a: Residue, b: Residue) -> Residue {
        match &self.arith {
            Arith::Small(m) => Residue(m.mul(a.0 as u64, b.0 as u64) as u128),
            Arith::Large(m) => Residue(m.mul(a.0, b.0)),
        }
    }

    pub fn pow(&self, a: Residue, e: u128) -> Residue {
        match &self.arith {
            Arith::Small(m) => Residue(m.pow(a.0 as u64, e) as u128),
            Arith::Large(m) => Residue(m.pow(a.0, e)),
        }
    }

    pub fn is_zero(&self, a: Residue) -> bool {
        a.0 == 0
    }

    /// Inverse by the extended Euclidean algorithm; counted as one inversion.
    pub fn inv(&self, a: Residue) -> Option<Residue> {
        let v = self.to_u128(a);
        if v == 0 {
            return None;
        }
        count_inversion();
        let (mut r0, mut r1) = (self.q as i128, v as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let t = r0 / r1;
            (r0, r1) = (r1, r0 - t * r1);
            (s0, s1) = (s1, s0 - t * s1);
        }
        Some(self.from_i128(s0))
    }

    /// Plain value of a * x mod q for a plain integer x.
    #[inline(always)]
    pub fn mul_plain(&self, a: Residue, x: u128) -> u128 {
        match &self.arith {
            Arith::Small(m) => {
                let x = if x >> 64 == 0 { x as u64 } else { (x % self.q) as u64 };
                m.mul(a.0 as u64, x) as u128
            }
            Arith::Large(m) => m.mul(a.0, x),
        }
    }

    pub(crate) fn raw(a: Residue) -> u128 {
        a.0
    }

    pub(crate) fn from_raw(v: u128) -> Residue {
        Residue(v)
    }
}

const SMALL_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mr_round64(m: &Mont64, d: u64, s: u32, a: u64) -> bool {
    let n = m.n;
    let a = a % n;
    if a == 0 {
        return true;
    }
    let one = m.one();
    let minus_one = m.sub(0, one);
    let mut x = m.pow(m.to_mont(a), d as u128);
    if x == one || x == minus_one {
        return true;
    }
    for _ in 1..s {
        x = m.mul(x, x);
        if x == minus_one {
            return true;
        }
        if x == one {
            return false;
        }
    }
    false
}

fn mr_round128(m: &Mont128, d: u128, s: u32, a: u128) -> bool {
    let n = m.n;
    let a = a % n;
    if a == 0 {
        return true;
    }
    let one = m.one();
    let minus_one = m.sub(0, one);
    let mut x = m.pow(m.to_mont(a), d);
    if x == one || x == minus_one {
        return true;
    }
    for _ in 1..s {
        x = m.mul(x, x);
        if x == minus_one {
            return true;
        }
        if x == one {
            return false;
        }
    }
    false
}

/// Miller-Rabin: the fixed witness set is deterministic below 2^64; above it 40 extra
/// pseudo-random witnesses derived from n are used.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p as u128 {
            return true;
        }
        if n % p as u128 == 0 {
            return false;
        }
    }
    if n < 97 * 97 {
        return true;
    }
    assert!(n < 1 << 126, "is_prime supports n < 2^126");
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    if n < 1 << 63 {
        let m = Mont64::new(n as u64);
        return MR_BASES.iter().all(|&a| mr_round64(&m, d as u64, s, a));
    }
    let m = Mont128::new(n);
    if !MR_BASES.iter().all(|&a| mr_round128(&m, d, s, a as u128)) {
        return false;
    }
    if n < 1 << 64 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64((n as u64) ^ ((n >> 64) as u64).rotate_left(17));
    (0..40).all(|_| mr_round128(&m, d, s, rng.gen_range(2..n - 1)))
}

/// Samples a prime from [lo, hi] by rejection, giving up after 512 log^2(hi) candidates.
pub fn find_prime<R: Rng + ?Sized>(lo: u128, hi: u128, rng: &mut R) -> Result<u128, NumericError> {
    let lo = lo.max(2);
    if lo > hi || hi >= 1 << 126 {
        return Err(NumericError::NoPrime { lo, hi });
    }
    if hi - lo < 64 {
        let primes: Vec<u128> = (lo..=hi).filter(|&x| is_prime(x)).collect();
        if primes.is_empty() {
            return Err(NumericError::NoPrime { lo, hi });
        }
        return Ok(primes[rng.gen_range(0..primes.len())]);
    }
    let bits = (128 - hi.leading_zeros()) as u128;
    let budget = 512 * bits * bits;
    for _ in 0..budget {
        let x = rng.gen_range(lo..=hi) | 1;
        if x <= hi && is_prime(x) {
            return Ok(x);
        }
    }
    Err(NumericError::NoPrime { lo, hi })
}

/// Computes x^e for every e in `exps` with base-n digit tables.
pub fn bulk_pow(x: Residue, exps: &[u128], ctx: &FieldCtx) -> Vec<Residue> {
    let n = exps.len();
    let emax = exps.iter().copied().max().unwrap_or(0);
    if n == 0 {
        return Vec::new();
    }
    if emax == 0 {
        return vec![ctx.one(); n];
    }
    let w = (usize::BITS - (n.max(2) - 1).leading_zeros()).max(1);
    let base = 1usize << w;
    let ebits = 128 - emax.leading_zeros();
    let digits = ebits.div_ceil(w) as usize;
    let mut tables: Vec<Vec<Residue>> = Vec::with_capacity(digits);
    let mut g = x;
    let mut ops = 0u64;
    for _ in 0..digits {
        let mut t = Vec::with_capacity(base);
        t.push(ctx.one());
        for j in 1..base {
            t.push(ctx.mul(t[j - 1], g));
        }
        g = ctx.mul(t[base - 1], g);
        ops += base as u64;
        tables.push(t);
    }
    let mask = (base - 1) as u128;
    let out = exps
        .iter()
        .map(|&e| {
            let mut acc: Option<Residue> = None;
            let mut e = e;
            let mut d = 0;
            while e > 0 {
                let digit = (e & mask) as usize;
                if digit != 0 {
                    let f = tables[d][digit];
                    acc = Some(match acc {
                        None => f,
                        Some(a) => {
                            ops += 1;
                            ctx.mul(a, f)
                        }
                    });
                }
                e >>= w;
                d += 1;
            }
            acc.unwrap_or_else(|| ctx.one())
        })
        .collect();
    count_mults(ops);
    out
}

/// Inverts every element with O(n) multiplications and a single inversion.
pub fn bulk_inverse(a: &[Residue], ctx: &FieldCtx) -> Result<Vec<Residue>, NumericError> {
    if let Some(pos) = a.iter().position(|&x| ctx.is_zero(x)) {
        return Err(NumericError::ZeroElement(pos));
    }
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let mut prefix = Vec::with_capacity(a.len());
    let mut acc = ctx.one();
    for &x in a {
        prefix.push(acc);
        acc = ctx.mul(acc, x);
    }
    let mut inv = ctx.inv(acc).expect("product of nonzero elements is nonzero");
    let mut out = vec![Residue(0); a.len()];
    for i in (0..a.len()).rev() {
        out[i] = ctx.mul(inv, prefix[i]);
        inv = ctx.mul(inv, a[i]);
    }
    count_mults(3 * a.len() as u64);
    Ok(out)
}

/// Uniform element of {1, ..., q-1}.
pub fn rand_unit<R: Rng + ?Sized>(ctx: &FieldCtx, rng: &mut R) -> Residue {
    ctx.from_u128(rng.gen_range(1..ctx.q))
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
