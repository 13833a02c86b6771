use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparseconv::vectors::{brute_conv, SparseVec};
use sparseconv::verify::{verify_dense, verify_sparse};

fn random_sparse(u: u64, nnz: usize, rng: &mut ChaCha8Rng) -> SparseVec {
    let idx = sample(rng, u as usize, nnz);
    SparseVec::from_pairs(u, idx.into_iter().map(|i| (i as u64, rng.gen_range(1..1000)))).unwrap()
}

#[test]
fn dense_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(verify_dense(&[1, 2], &[3, 4], &[3, 10, 8], &mut rng));
    let rejected = (0..1000).filter(|_| !verify_dense(&[1, 2], &[3, 4], &[3, 10, 9], &mut rng)).count();
    assert_eq!(rejected, 1000);
    assert!(!verify_dense(&[1, 2], &[3, 4], &[3, 10], &mut rng));
}

#[test]
fn dense_single_corruptions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rejected = 0;
    for _ in 0..1000 {
        let a: Vec<u64> = (0..rng.gen_range(1..50)).map(|_| rng.gen_range(0..1 << 30)).collect();
        let b: Vec<u64> = (0..rng.gen_range(1..50)).map(|_| rng.gen_range(0..1 << 30)).collect();
        let mut c = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        let i = rng.gen_range(0..c.len());
        c[i] += 1;
        rejected += !verify_dense(&a, &b, &c, &mut rng) as usize;
    }
    assert!(rejected >= 999);
}

#[test]
fn sparse_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = 1_000_000;
    let mut shifted_rejections = 0;
    for _ in 0..1000 {
        let (a, b) = (random_sparse(u, 50, &mut rng), random_sparse(u, 50, &mut rng));
        let c = brute_conv(&a, &b).unwrap();
        assert!(verify_sparse(&a, &b, &c, &mut rng));
        let mut entries = c.entries().to_vec();
        let j = rng.gen_range(0..entries.len());
        let target = entries[j].0 + 1;
        if entries.iter().any(|e| e.0 == target) || target >= c.len() {
            shifted_rejections += 1;
            continue;
        }
        entries[j].0 = target;
        entries.sort_unstable();
        let bad = SparseVec::new(c.len(), entries).unwrap();
        shifted_rejections += !verify_sparse(&a, &b, &bad, &mut rng) as usize;
    }
    assert!(shifted_rejections >= 999);
}

#[test]
fn sparse_infinity_norm_precheck() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = SparseVec::from_dense(&[1, 1]).unwrap();
    let c = SparseVec::from_pairs(3, [(0, 100)]).unwrap();
    assert!(!verify_sparse(&a, &a, &c, &mut rng));
    assert!(verify_sparse(&SparseVec::zero(2), &a, &SparseVec::zero(3), &mut rng));
}

proptest! {
    #[test]
    fn completeness_is_absolute(seed in any::<u64>(), na in 0usize..40, nb in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_sparse(1 << 20, na, &mut rng), random_sparse(1 << 20, nb, &mut rng));
        prop_assert!(verify_sparse(&a, &b, &brute_conv(&a, &b).unwrap(), &mut rng));
        let da: Vec<u64> = a.to_dense().into_iter().take(64).collect();
        let db: Vec<u64> = b.to_dense().into_iter().take(64).collect();
        let mut dc = vec![0u64; 127];
        for (i, &x) in da.iter().enumerate() {
            for (j, &y) in db.iter().enumerate() {
                dc[i + j] += x * y;
            }
        }
        prop_assert!(verify_dense(&da, &db, &dc, &mut rng));
    }
}
