//! Sparse and dense nonnegative vectors, folding, the derivative operator and the
//! quadratic convolution oracle.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::numeric::{bulk_pow, FieldCtx, Residue};

pub const MAX_UNIVERSE: u64 = 1 << 60;
pub const VALUE_LIMIT: u64 = 1 << 63;
pub const BRUTE_GUARD: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VectorError {
    #[error("value at index {0} does not fit below 2^63")]
    Sizing(u64),
    #[error("universe size {0} exceeds 2^60")]
    UniverseTooLarge(u64),
    #[error("index {index} is outside the universe [0, {len})")]
    IndexOutOfRange { index: u64, len: u64 },
    #[error("indices must be strictly increasing (at {0})")]
    Unsorted(u64),
    #[error("stored zero value at index {0}")]
    StoredZero(u64),
    #[error("universe sizes differ: {0} vs {1}")]
    UniverseMismatch(u64, u64),
    #[error("schoolbook convolution refused: {0} support pairs exceeds the guard")]
    GuardExceeded(u64),
    #[error("length mismatch: expected {0}")]
    LengthMismatch(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Dense vector of nonnegative integers.
pub type DenseVec = Vec<u64>;

/// Sparse vector over the universe [0, len) with sorted, nonzero entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SparseVec {
    len: u64,
    entries: Vec<(u64, u64)>,
}

impl SparseVec {
    pub fn zero(len: u64) -> Self {
        SparseVec { len, entries: Vec::new() }
    }

    /// Builds from sorted entries, checking every invariant.
    pub fn new(len: u64, entries: Vec<(u64, u64)>) -> Result<Self, VectorError> {
        if len > MAX_UNIVERSE {
            return Err(VectorError::UniverseTooLarge(len));
        }
        let mut prev: Option<u64> = None;
        for &(i, v) in &entries {
            if i >= len {
                return Err(VectorError::IndexOutOfRange { index: i, len });
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(VectorError::Unsorted(i));
            }
            if v == 0 {
                return Err(VectorError::StoredZero(i));
            }
            if v >= VALUE_LIMIT {
                return Err(VectorError::Sizing(i));
            }
            prev = Some(i);
        }
        Ok(SparseVec { len, entries })
    }

    /// Builds from unsorted pairs; duplicates are summed and zeros dropped.
    pub fn from_pairs(len: u64, pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self, VectorError> {
        let mut acc: HashMap<u64, u128> = HashMap::new();
        for (i, v) in pairs {
            if i >= len {
                return Err(VectorError::IndexOutOfRange { index: i, len });
            }
            *acc.entry(i).or_default() += v as u128;
        }
        let mut entries = Vec::with_capacity(acc.len());
        for (i, v) in acc {
            if v >= VALUE_LIMIT as u128 {
                return Err(VectorError::Sizing(i));
            }
            if v > 0 {
                entries.push((i, v as u64));
            }
        }
        entries.sort_unstable();
        Self::new(len, entries)
    }

    pub fn from_dense(values: &[u64]) -> Result<Self, VectorError> {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i as u64, v))
            .collect();
        Self::new(values.len() as u64, entries)
    }

    pub fn to_dense(&self) -> DenseVec {
        let mut out = vec![0; self.len as usize];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_value(&self) -> u64 {
        self.entries.iter().map(|e| e.1).max().unwrap_or(0)
    }

    pub fn max_index(&self) -> Option<u64> {
        self.entries.last().map(|e| e.0)
    }

    pub fn support(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn get(&self, i: u64) -> u64 {
        self.entries
            .binary_search_by_key(&i, |e| e.0)
            .map(|p| self.entries[p].1)
            .unwrap_or(0)
    }

    /// Same entries over a different universe size.
    pub fn with_len(&self, len: u64) -> Result<Self, VectorError> {
        Self::new(len, self.entries.clone())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("SPARSEVEC 1 {} {}\n", self.len, self.entries.len());
        for (i, v) in &self.entries {
            let _ = writeln!(s, "{i} {v}");
        }
        s
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_text().as_bytes())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, VectorError> {
        let perr = |line: usize, msg: &str| VectorError::Parse { line, msg: msg.to_string() };
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| perr(1, "missing header"))?
            .map_err(|e| perr(1, &e.to_string()))?;
        let h: Vec<&str> = header.split(' ').collect();
        if h.len() != 4 || h[0] != "SPARSEVEC" || h[1] != "1" {
            return Err(perr(1, "expected `SPARSEVEC 1 <U> <nnz>`"));
        }
        let len: u64 = h[2].parse().map_err(|_| perr(1, "bad universe size"))?;
        let nnz: usize = h[3].parse().map_err(|_| perr(1, "bad entry count"))?;
        let mut entries = Vec::with_capacity(nnz.min(1 << 24));
        for k in 0..nnz {
            let ln = k + 2;
            let line = lines
                .next()
                .ok_or_else(|| perr(ln, "missing entry"))?
                .map_err(|e| perr(ln, &e.to_string()))?;
            let (a, b) = line.split_once(' ').ok_or_else(|| perr(ln, "expected `<index> <value>`"))?;
            let i: u64 = a.parse().map_err(|_| perr(ln, "bad index"))?;
            let v: u64 = b.parse().map_err(|_| perr(ln, "bad value"))?;
            entries.push((i, v));
        }
        if let Some(extra) = lines.next() {
            if !extra.map(|l| l.is_empty()).unwrap_or(false) || lines.next().is_some() {
                return Err(perr(nnz + 2, "trailing content"));
            }
        }
        Self::new(len, entries)
    }
}

/// (dA)_i = i * A_i.
pub fn derivative(a: &SparseVec) -> Result<SparseVec, VectorError> {
    let mut entries = Vec::with_capacity(a.nnz());
    for &(i, v) in a.entries() {
        if i == 0 {
            continue;
        }
        let p = i as u128 * v as u128;
        if p >= VALUE_LIMIT as u128 {
            return Err(VectorError::Sizing(i));
        }
        entries.push((i, p as u64));
    }
    Ok(SparseVec { len: a.len, entries })
}

/// (omega . A)_i = omega^i A_i over Z_q, as (index, residue) pairs with zeros dropped.
pub fn bullet(omega: Residue, a: &[(u64, Residue)], ctx: &FieldCtx) -> Vec<(u64, Residue)> {
    let exps: Vec<u128> = a.iter().map(|e| e.0 as u128).collect();
    let pw = bulk_pow(omega, &exps, ctx);
    a.iter()
        .zip(pw)
        .map(|(&(i, v), w)| (i, ctx.mul(v, w)))
        .filter(|e| !ctx.is_zero(e.1))
        .collect()
}

/// Integer entries reduced into Z_q, zeros dropped.
pub fn lift(a: &SparseVec, ctx: &FieldCtx) -> Vec<(u64, Residue)> {
    a.entries()
        .iter()
        .map(|&(i, v)| (i, ctx.from_u64(v)))
        .filter(|e| !ctx.is_zero(e.1))
        .collect()
}

/// (A mod m)_j = sum of A_i over i = j mod m.
pub fn fold_mod(a: &SparseVec, m: u64) -> Result<DenseVec, VectorError> {
    apply_hash(|i| i % m, a, m)
}

/// f(A)_j = sum of A_i over f(i) = j.
pub fn apply_hash<F: Fn(u64) -> u64>(f: F, a: &SparseVec, m: u64) -> Result<DenseVec, VectorError> {
    let mut out = vec![0u64; m as usize];
    for &(i, v) in a.entries() {
        let j = f(i) as usize;
        let s = out[j] as u128 + v as u128;
        if s >= VALUE_LIMIT as u128 {
            return Err(VectorError::Sizing(j as u64));
        }
        out[j] = s as u64;
    }
    Ok(out)
}

/// Exact A * B by summing over support pairs. The result lives on [0, 2U - 1).
pub fn brute_conv(a: &SparseVec, b: &SparseVec) -> Result<SparseVec, VectorError> {
    if a.len() != b.len() {
        return Err(VectorError::UniverseMismatch(a.len(), b.len()));
    }
    let pairs = a.nnz() as u64 * b.nnz() as u64;
    if pairs > BRUTE_GUARD {
        return Err(VectorError::GuardExceeded(pairs));
    }
    let out_len = (2 * a.len()).saturating_sub(1);
    let mut acc: HashMap<u64, u128> = HashMap::with_capacity(pairs.min(1 << 20) as usize);
    for &(i, x) in a.entries() {
        for &(j, y) in b.entries() {
            *acc.entry(i + j).or_default() += x as u128 * y as u128;
        }
    }
    let mut entries = Vec::with_capacity(acc.len());
    for (i, v) in acc {
        if v >= VALUE_LIMIT as u128 {
            return Err(VectorError::Sizing(i));
        }
        entries.push((i, v as u64));
    }
    entries.sort_unstable();
    Ok(SparseVec { len: out_len, entries })
}

/// Exact cyclic convolution of two length-m vectors.
pub fn brute_cyclic_conv(a: &[u64], b: &[u64], m: usize) -> Result<DenseVec, VectorError> {
    if a.len() != m || b.len() != m {
        return Err(VectorError::LengthMismatch(m));
    }
    let mut acc = vec![0u128; m];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            acc[(i + j) % m] += x as u128 * y as u128;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, v)| if v < VALUE_LIMIT as u128 { Ok(v as u64) } else { Err(VectorError::Sizing(i as u64)) })
        .collect()
}

/// Entrywise sum of two sparse vectors over the same universe.
pub fn add(a: &SparseVec, b: &SparseVec) -> Result<SparseVec, VectorError> {
    if a.len() != b.len() {
        return Err(VectorError::UniverseMismatch(a.len(), b.len()));
    }
    SparseVec::from_pairs(a.len(), a.entries().iter().chain(b.entries()).copied())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(d: &[u64]) -> SparseVec {
        SparseVec::from_dense(d).unwrap()
    }

    #[test]
    fn derivative_small() {
        assert_eq!(derivative(&sv(&[5, 0, 7])).unwrap(), sv(&[0, 0, 14]));
        assert!(derivative(&sv(&[9])).unwrap().is_empty());
    }

    #[test]
    fn derivative_overflow_names_index() {
        let a = SparseVec::new(1 << 40, vec![(1 << 39, 1 << 30)]).unwrap();
        assert_eq!(derivative(&a), Err(VectorError::Sizing(1 << 39)));
    }

    #[test]
    fn bullet_small() {
        let ctx = FieldCtx::new(101).unwrap();
        let a = lift(&sv(&[1, 0, 3]), &ctx);
        let r = bullet(ctx.from_u64(2), &a, &ctx);
        let got: Vec<(u64, u128)> = r.iter().map(|&(i, v)| (i, ctx.to_u128(v))).collect();
        assert_eq!(got, vec![(0, 1), (2, 12)]);
        let same = bullet(ctx.one(), &a, &ctx);
        assert_eq!(same, a);
    }

    #[test]
    fn fold_and_hash_small() {
        assert_eq!(fold_mod(&sv(&[1, 2, 3, 4]), 2).unwrap(), vec![4, 6]);
        assert_eq!(fold_mod(&sv(&[1, 2]), 4).unwrap(), vec![1, 2, 0, 0]);
        assert_eq!(apply_hash(|i| i % 3, &sv(&[1, 1, 1, 1]), 3).unwrap(), vec![2, 1, 1]);
        assert_eq!(apply_hash(|_| 0, &sv(&[1, 5, 2]), 1).unwrap(), vec![8]);
    }

    #[test]
    fn brute_small() {
        let c = brute_conv(&sv(&[1, 2]), &sv(&[3, 4])).unwrap();
        assert_eq!(c.to_dense(), vec![3, 10, 8]);
        assert_eq!(brute_cyclic_conv(&[1, 2], &[3, 4], 2).unwrap(), vec![11, 10]);
    }

    #[test]
    fn text_round_trip() {
        let a = sv(&[0, 3, 0, 0, 9]);
        let t = a.to_text();
        assert_eq!(t, "SPARSEVEC 1 5 2\n1 3\n4 9\n");
        assert_eq!(SparseVec::read_from(t.as_bytes()).unwrap(), a);
        assert!(SparseVec::read_from("SPARSEVEC 1 5 2\n4 3\n1 9\n".as_bytes()).is_err());
        assert!(SparseVec::read_from("SPARSEVEC 1 5 1\n1 0\n".as_bytes()).is_err());
    }
}
