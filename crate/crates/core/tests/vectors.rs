use std::collections::BTreeMap;

use proptest::prelude::*;
use sparseconv::numeric::{FieldCtx, Residue};
use sparseconv::vectors::*;

fn sparse(len: u64, max_nnz: usize, max_value: u64) -> impl Strategy<Value = SparseVec> {
    prop::collection::btree_map(0..len, 1..=max_value, 0..=max_nnz)
        .prop_map(move |m| SparseVec::from_pairs(len, m).unwrap())
}

fn pair(len: u64, max_nnz: usize, max_value: u64) -> impl Strategy<Value = (SparseVec, SparseVec)> {
    (sparse(len, max_nnz, max_value), sparse(len, max_nnz, max_value))
}

fn schoolbook(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut c = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    c
}

#[test]
fn spec_examples() {
    let d = derivative(&SparseVec::from_dense(&[5, 0, 7]).unwrap()).unwrap();
    assert_eq!(d.to_dense(), [0, 0, 14]);
    assert!(derivative(&SparseVec::from_dense(&[9, 0]).unwrap()).unwrap().is_empty());

    let a = SparseVec::from_dense(&[1, 2, 3, 4]).unwrap();
    assert_eq!(fold_mod(&a, 2).unwrap(), [4, 6]);
    assert_eq!(fold_mod(&a, 6).unwrap(), [1, 2, 3, 4, 0, 0]);
    let ones = SparseVec::from_dense(&[1, 1, 1, 1]).unwrap();
    assert_eq!(apply_hash(|x| x % 3, &ones, 3).unwrap(), [2, 1, 1]);
    assert_eq!(apply_hash(|_| 0, &a, 1).unwrap(), [10]);
    assert_eq!(apply_hash(|x| x, &a, 4).unwrap(), a.to_dense());

    let b = SparseVec::from_dense(&[3, 4]).unwrap();
    let c = brute_conv(&SparseVec::from_dense(&[1, 2]).unwrap(), &b).unwrap();
    assert_eq!(c.entries(), [(0, 3), (1, 10), (2, 8)]);
    assert_eq!(brute_cyclic_conv(&[1, 2], &[3, 4], 2).unwrap(), [11, 10]);
    assert_eq!(brute_cyclic_conv(&[5, 6, 7], &[1, 0, 0], 3).unwrap(), [5, 6, 7]);

    let ctx = FieldCtx::new(101).unwrap();
    let v = lift(&SparseVec::from_dense(&[1, 0, 3]).unwrap(), &ctx);
    let got: Vec<(u64, u128)> = bullet(ctx.from_u64(2), &v, &ctx).iter().map(|&(i, r)| (i, ctx.to_u128(r))).collect();
    assert_eq!(got, [(0, 1), (2, 12)]);
    assert_eq!(bullet(ctx.one(), &v, &ctx), v);
}

#[test]
fn empty_vectors_convolve_to_empty() {
    let z = SparseVec::zero(10);
    let a = SparseVec::from_dense(&[0, 4, 0, 1, 0, 0, 0, 0, 0, 0]).unwrap();
    assert!(brute_conv(&z, &a).unwrap().is_empty());
    assert!(brute_conv(&z, &z).unwrap().is_empty());
}

#[test]
fn malformed_vectors_rejected() {
    assert_eq!(SparseVec::new(5, vec![(3, 1), (2, 1)]), Err(VectorError::Unsorted(2)));
    assert_eq!(SparseVec::new(5, vec![(1, 0)]), Err(VectorError::StoredZero(1)));
    assert!(matches!(SparseVec::new(5, vec![(5, 1)]), Err(VectorError::IndexOutOfRange { .. })));
    assert!(SparseVec::new((1 << 60) + 1, vec![]).is_err());
    assert!(SparseVec::new(5, vec![(1, 1 << 63)]).is_err());
    let err = SparseVec::read_from("SPARSEVEC 1 10 2\n1 5\nx 2\n".as_bytes()).unwrap_err();
    assert!(matches!(err, VectorError::Parse { line: 3, .. }));
}

#[test]
fn brute_guard_and_overflow() {
    let big = SparseVec::from_pairs(1 << 20, (0..10_001u64).map(|i| (i, 1))).unwrap();
    assert!(matches!(brute_conv(&big, &big), Err(VectorError::GuardExceeded(_))));
    let huge = SparseVec::from_dense(&[1 << 62, 1 << 62]).unwrap();
    assert!(matches!(brute_conv(&huge, &huge), Err(VectorError::Sizing(_))));
}

proptest! {
    #[test]
    fn dense_round_trip(a in sparse(300, 40, 1 << 62)) {
        prop_assert_eq!(SparseVec::from_dense(&a.to_dense()).unwrap().with_len(300).unwrap(), a.clone());
        prop_assert_eq!(SparseVec::read_from(a.to_text().as_bytes()).unwrap(), a);
    }

    #[test]
    fn brute_matches_dense_schoolbook((a, b) in pair(200, 30, 1 << 20)) {
        let c = brute_conv(&a, &b).unwrap();
        let want = schoolbook(&a.to_dense(), &b.to_dense());
        let mut got = c.to_dense();
        got.resize(want.len(), 0);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn support_is_sumset_and_sparsity_bounds((a, b) in pair(1 << 30, 30, 1000)) {
        let c = brute_conv(&a, &b).unwrap();
        let mut sums: Vec<u64> = a.support().iter().flat_map(|&y| b.support().into_iter().map(move |z| y + z)).collect();
        sums.sort_unstable();
        sums.dedup();
        prop_assert_eq!(c.support(), sums);
        prop_assert!(c.nnz() <= a.nnz() * b.nnz());
        if !a.is_empty() && !b.is_empty() {
            prop_assert!(c.nnz() >= a.nnz().max(b.nnz()));
        }
    }

    #[test]
    fn impulse_is_identity(a in sparse(500, 40, 1 << 40)) {
        let e0 = SparseVec::from_pairs(500, [(0, 1)]).unwrap();
        let c = brute_conv(&a, &e0).unwrap();
        prop_assert_eq!(c.entries(), a.entries());
    }

    #[test]
    fn derivative_pointwise(a in sparse(1 << 40, 30, 1 << 20)) {
        let d = derivative(&a).unwrap();
        for &(i, v) in a.entries() {
            prop_assert_eq!(d.get(i), i * v);
        }
        prop_assert_eq!(d.nnz(), a.entries().iter().filter(|e| e.0 != 0).count());
    }

    #[test]
    fn product_rule((a, b) in pair(1 << 20, 30, 1 << 10)) {
        let lhs = derivative(&brute_conv(&a, &b).unwrap()).unwrap();
        let rhs = add(&brute_conv(&derivative(&a).unwrap(), &b).unwrap(), &brute_conv(&a, &derivative(&b).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn fold_conserves_mass(a in sparse(1000, 50, 1 << 40), m in 1u64..64) {
        let f = fold_mod(&a, m).unwrap();
        prop_assert_eq!(f.len(), m as usize);
        prop_assert_eq!(f.iter().sum::<u64>(), a.entries().iter().map(|e| e.1).sum::<u64>());
    }

    #[test]
    fn cyclic_is_folded_linear((a, b) in pair(64, 20, 1 << 20), m in 1usize..40) {
        let fa = fold_mod(&a, m as u64).unwrap();
        let fb = fold_mod(&b, m as u64).unwrap();
        let want = fold_mod(&brute_conv(&a, &b).unwrap(), m as u64).unwrap();
        prop_assert_eq!(brute_cyclic_conv(&fa, &fb, m).unwrap(), want);
    }

    #[test]
    fn bullet_commutes_with_convolution((a, b) in pair(1 << 20, 20, 1 << 30), w in 1u128..(1 << 61) - 1) {
        let ctx = FieldCtx::new((1 << 61) - 1).unwrap();
        let omega = ctx.from_u128(w);
        let conv = |x: &[(u64, Residue)], y: &[(u64, Residue)]| {
            let mut acc: BTreeMap<u64, Residue> = BTreeMap::new();
            for &(i, u) in x {
                for &(j, v) in y {
                    let e = acc.entry(i + j).or_insert(ctx.zero());
                    *e = ctx.add(*e, ctx.mul(u, v));
                }
            }
            acc.into_iter().filter(|e| !ctx.is_zero(e.1)).collect::<Vec<_>>()
        };
        let lhs = bullet(omega, &lift(&brute_conv(&a, &b).unwrap(), &ctx), &ctx);
        let rhs = conv(&bullet(omega, &lift(&a, &ctx), &ctx), &bullet(omega, &lift(&b, &ctx), &ctx));
        prop_assert_eq!(lhs, rhs);
    }
}
