//! Folding: the T vectors (omega^t . A) mod m, and their inversion on a candidate support.

use crate::numeric::{bulk_pow, FieldCtx, Residue};
use crate::vandermonde::{vandermonde_mul_rows, SolveBatch, VandermondeError};

use super::PipelineError;

const UNFOLD_DIRECT_CUTOFF: usize = 1024;

fn collision(e: VandermondeError) -> PipelineError {
    match e {
        VandermondeError::DuplicatePoint => PipelineError::OmegaCollision,
        other => other.into(),
    }
}

/// Indices of `keys` grouped by residue class mod m, classes in increasing order.
fn classes(keys: &[u128], m: u64) -> Vec<(u64, Vec<usize>)> {
    let mut tagged: Vec<(u64, usize)> = keys.iter().enumerate().map(|(i, &x)| ((x % m as u128) as u64, i)).collect();
    tagged.sort_unstable();
    let mut out: Vec<(u64, Vec<usize>)> = Vec::new();
    for (c, i) in tagged {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1.push(i),
            _ => out.push((c, vec![i])),
        }
    }
    out
}

/// Returns out[t] = (omega^t . A) mod m for t < T. Each residue class is cut into
/// chunks of at most T entries, and each chunk costs one transposed Vandermonde product.
pub fn fold(
    a: &[(u128, Residue)],
    omega: Residue,
    m: u64,
    t_count: usize,
    ctx: &FieldCtx,
) -> Result<Vec<Vec<Residue>>, PipelineError> {
    if m == 0 || t_count == 0 {
        return Err(PipelineError::Config("fold needs m >= 1 and T >= 1".into()));
    }
    let mut out = vec![vec![ctx.zero(); m as usize]; t_count];
    if a.is_empty() {
        return Ok(out);
    }
    let keys: Vec<u128> = a.iter().map(|e| e.0).collect();
    let pts = bulk_pow(omega, &keys, ctx);
    for (class, idx) in classes(&keys, m) {
        for chunk in idx.chunks(t_count) {
            let points: Vec<Residue> = chunk.iter().map(|&i| pts[i]).collect();
            let vals: Vec<Residue> = chunk.iter().map(|&i| a[i].1).collect();
            let y = vandermonde_mul_rows(&points, &vals, t_count, ctx).map_err(collision)?;
            for (t, v) in y.into_iter().enumerate() {
                let slot = &mut out[t][class as usize];
                *slot = ctx.add(*slot, v);
            }
        }
    }
    Ok(out)
}

/// Recovers a vector supported on X from its folds. Classes with more than T members of X
/// are skipped; the others are solved exactly from their first |X_i| folds.
pub fn unfold(
    folds: &[Vec<Residue>],
    omega: Residue,
    m: u64,
    x: &[u128],
    ctx: &FieldCtx,
) -> Result<Vec<(u128, Residue)>, PipelineError> {
    Ok(unfold_multi(&[folds], omega, m, x, ctx)?.pop().unwrap())
}

/// Unfolds several fold families sharing the same omega, m and X with one inversion.
pub(crate) fn unfold_multi(
    families: &[&[Vec<Residue>]],
    omega: Residue,
    m: u64,
    x: &[u128],
    ctx: &FieldCtx,
) -> Result<Vec<Vec<(u128, Residue)>>, PipelineError> {
    let t_count = families.first().map_or(0, |f| f.len());
    let mut outs = vec![Vec::new(); families.len()];
    if x.is_empty() || t_count == 0 {
        return Ok(outs);
    }
    let pts = bulk_pow(omega, x, ctx);
    let mut batch = SolveBatch::new(ctx).with_direct_cutoff(UNFOLD_DIRECT_CUTOFF);
    let mut members = Vec::new();
    for (class, idx) in classes(x, m) {
        if idx.len() > t_count {
            continue;
        }
        let points: Vec<Residue> = idx.iter().map(|&i| pts[i]).collect();
        let rhs = families
            .iter()
            .map(|fam| (0..idx.len()).map(|t| fam[t][class as usize]).collect())
            .collect();
        batch.push_multi(points, rhs).map_err(collision)?;
        members.push(idx);
    }
    let sols = batch.solve_all_multi().map_err(collision)?;
    for (idx, per_family) in members.iter().zip(sols) {
        for (out, vals) in outs.iter_mut().zip(per_family) {
            for (&i, v) in idx.iter().zip(vals) {
                if !ctx.is_zero(v) {
                    out.push((x[i], v));
                }
            }
        }
    }
    for out in outs.iter_mut() {
        out.sort_unstable_by_key(|e| e.0);
    }
    Ok(outs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fold_is_plain_mod() {
        let ctx = FieldCtx::new((1 << 61) - 1).unwrap();
        let a: Vec<(u128, Residue)> = [(0u128, 1u64), (3, 2), (5, 7)].iter().map(|&(i, v)| (i, ctx.from_u64(v))).collect();
        let f = fold(&a, ctx.from_u64(3), 2, 1, &ctx).unwrap();
        assert_eq!(f[0], vec![ctx.from_u64(1), ctx.from_u64(9)]);
        let empty = fold(&[], ctx.from_u64(3), 4, 3, &ctx).unwrap();
        assert!(empty.iter().flatten().all(|&v| ctx.is_zero(v)));
        assert!(unfold(&f, ctx.from_u64(3), 2, &[], &ctx).unwrap().is_empty());
    }
}
