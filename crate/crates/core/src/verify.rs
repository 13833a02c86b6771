//! Randomized identity tests for dense and sparse convolution results.

use rand::Rng;

use crate::numeric::{bulk_pow, find_prime, rand_unit, FieldCtx, Residue};
use crate::vectors::SparseVec;

const DENSE_PRIME_LO: u128 = 1 << 120;
const SPARSE_PRIME_FLOOR: u128 = 1 << 100;
const SPARSE_PRIME_CAP: u128 = 1 << 124;

fn horner(v: &[u64], x: Residue, ctx: &FieldCtx) -> Residue {
    v.iter().rev().fold(ctx.zero(), |acc, &c| ctx.add(ctx.mul(acc, x), ctx.from_u64(c)))
}

/// Checks A * B = C by evaluating all three polynomials at one random point.
pub fn verify_dense<R: Rng + ?Sized>(a: &[u64], b: &[u64], c: &[u64], rng: &mut R) -> bool {
    if a.is_empty() || b.is_empty() {
        return c.iter().all(|&x| x == 0);
    }
    if c.len() != a.len() + b.len() - 1 {
        return false;
    }
    let p = find_prime(DENSE_PRIME_LO, 2 * DENSE_PRIME_LO, rng).expect("prime range is dense");
    let ctx = FieldCtx::new_unchecked(p);
    let x = ctx.from_u128(rng.gen_range(0..p));
    ctx.mul(horner(a, x, &ctx), horner(b, x, &ctx)) == horner(c, x, &ctx)
}

fn eval_sparse(v: &[(u64, Residue)], x: Residue, ctx: &FieldCtx) -> Residue {
    let exps: Vec<u128> = v.iter().map(|e| e.0 as u128).collect();
    bulk_pow(x, &exps, ctx)
        .into_iter()
        .zip(v)
        .fold(ctx.zero(), |acc, (w, e)| ctx.add(acc, ctx.mul(w, e.1)))
}

/// Checks A * B = C for sparse vectors. A correct C is always accepted.
pub fn verify_sparse<R: Rng + ?Sized>(a: &SparseVec, b: &SparseVec, c: &SparseVec, rng: &mut R) -> bool {
    let out_len = (2 * a.len()).saturating_sub(1);
    if a.len() != b.len() || c.max_index().is_some_and(|i| i >= out_len) {
        return false;
    }
    if a.is_empty() || b.is_empty() {
        return c.is_empty();
    }
    let k = a.nnz().max(b.nnz()).max(c.nnz()) as u128;
    let (ma, mb) = (a.max_value() as u128, b.max_value() as u128);
    let cap = k.saturating_mul(ma).saturating_mul(mb);
    if c.max_value() as u128 > cap {
        return false;
    }
    let lo = k
        .saturating_mul(a.len() as u128)
        .saturating_add(cap)
        .saturating_add(1)
        .clamp(SPARSE_PRIME_FLOOR, SPARSE_PRIME_CAP);
    let p = find_prime(lo, 2 * lo, rng).expect("prime range is dense");
    let ctx = FieldCtx::new_unchecked(p);
    let x = ctx.from_u128(rng.gen_range(0..p));
    let lift = |v: &SparseVec| -> Vec<(u64, Residue)> {
        v.entries().iter().map(|&(i, y)| (i, ctx.from_u64(y))).collect()
    };
    let (la, lb, lc) = (lift(a), lift(b), lift(c));
    ctx.mul(eval_sparse(&la, x, &ctx), eval_sparse(&lb, x, &ctx)) == eval_sparse(&lc, x, &ctx)
}

/// The same test for vectors already reduced into Z_q, at one random point of Z_q.
pub fn verify_sparse_field<R: Rng + ?Sized>(
    a: &[(u64, Residue)],
    b: &[(u64, Residue)],
    c: &[(u64, Residue)],
    ctx: &FieldCtx,
    rng: &mut R,
) -> bool {
    let x = rand_unit(ctx, rng);
    ctx.mul(eval_sparse(a, x, ctx), eval_sparse(b, x, ctx)) == eval_sparse(c, x, ctx)
}
