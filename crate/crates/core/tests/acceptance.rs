//! Acceptance criteria 1 to 10. Prints one line per criterion and exits nonzero on failure.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparseconv::dense_conv::{dense_conv, dense_conv_wide, faulty_dense_conv, reliable_conv};
use sparseconv::hashing::{concentration_experiment, flatness, inverse_height_sum, lower_bound_set};
use sparseconv::instances::{generate, InstanceSpec, Structure};
use sparseconv::numeric::{find_prime, op_counters, reset_op_counters, FieldCtx, Residue};
use sparseconv::pipeline::{fold, small_sparse_conv_traced, sparse_conv, unfold, PipelineConfig, TraceOptions};
use sparseconv::vandermonde::{build_eval_circuit, transpose_slp, vandermonde_mul, vandermonde_solve};
use sparseconv::vectors::{brute_conv, SparseVec};
use sparseconv::verify::{verify_dense, verify_sparse};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cfg(seed: u64) -> PipelineConfig {
    PipelineConfig { seed, parallel: false, ..PipelineConfig::default() }
}

fn binomial_floor(delta: f64, trials: usize) -> f64 {
    let sigma = (delta * (1.0 - delta) / trials as f64).sqrt();
    1.0 - delta - 5.0 * sigma
}

fn criterion_1() -> Outcome {
    const PER_STRUCTURE: usize = 200;
    const DELTA: f64 = 1.0 / 64.0;
    let ns = [1u64 << 20, 1 << 30, 1 << 40];
    let ks = [1usize << 7, 1 << 10, 1 << 13];
    let maxes = [1u64, 1 << 20];
    let cells = ns.len() * ks.len() * maxes.len();
    let start = Instant::now();
    let mut worst = (1.0f64, String::new());
    let mut failures = Vec::new();
    for (si, structure) in [Structure::Uniform, Structure::Clustered, Structure::ArithmeticProgression].into_iter().enumerate() {
        let mut tally = vec![(0usize, 0usize); cells];
        for i in 0..PER_STRUCTURE {
            let cell = i % cells;
            let (n, k, max_value) = (ns[cell / 6], ks[(cell / 2) % 3], maxes[cell % 2]);
            let seed = 1_000_003 * si as u64 + i as u64;
            let (a, b) = generate(&InstanceSpec { n, k, max_value, structure, seed }).map_err(|e| e.to_string())?;
            let c = sparse_conv(&a, &b, &PipelineConfig { delta: DELTA, ..cfg(seed) });
            tally[cell].1 += 1;
            if let Ok(c) = c {
                if c != brute_conv(&a, &b).map_err(|e| e.to_string())? {
                    return Err(format!("{structure} n={n} k={k} seed={seed}: accepted output differs from schoolbook"));
                }
                tally[cell].0 += 1;
            }
        }
        for (cell, &(ok, total)) in tally.iter().enumerate() {
            let rate = ok as f64 / total as f64;
            let label = format!("{structure} n=2^{} k=2^{} max={}", ns[cell / 6].trailing_zeros(), ks[(cell / 2) % 3].trailing_zeros(), maxes[cell % 2]);
            if rate < worst.0 || worst.1.is_empty() {
                worst = (rate, label.clone());
            }
            if rate < binomial_floor(DELTA, total) {
                failures.push(format!("{label}: {ok}/{total}"));
            }
        }
    }
    let elapsed = start.elapsed();
    if !failures.is_empty() {
        return Err(format!("acceptance below the 5 sigma floor in {}", failures.join(", ")));
    }
    if elapsed > Duration::from_secs(30 * 60) {
        return Err(format!("grid took {elapsed:.1?}, budget 30 min"));
    }
    Ok(format!(
        "{} instances, all accepted outputs exact, lowest cell acceptance {:.3} ({}), {elapsed:.1?} single-threaded",
        3 * PER_STRUCTURE,
        worst.0,
        worst.1
    ))
}

fn to_big(v: sparseconv::dense_conv::U192) -> BigUint {
    BigUint::from_slice(&[v.0[0] as u32, (v.0[0] >> 32) as u32, v.0[1] as u32, (v.0[1] >> 32) as u32, v.0[2] as u32, (v.0[2] >> 32) as u32])
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    for trial in 0..1000 {
        let (la, lb) = (r.gen_range(1..=2048), r.gen_range(1..=2048));
        let bits = r.gen_range(1..=62);
        let a: Vec<u64> = (0..la).map(|_| r.gen_range(0..=1u64 << bits)).collect();
        let b: Vec<u64> = (0..lb).map(|_| r.gen_range(0..=1u64 << bits)).collect();
        let got = dense_conv_wide(&a, &b).map_err(|e| e.to_string())?;
        let mut want = vec![BigUint::default(); la + lb - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let x = BigUint::from(x);
            for (j, &y) in b.iter().enumerate() {
                want[i + j] += &x * y;
            }
        }
        if got.len() != want.len() || got.into_iter().zip(&want).any(|(g, w)| &to_big(g) != w) {
            return Err(format!("trial {trial}: lengths {la}x{lb}, values < 2^{bits}"));
        }
    }
    Ok("1000 instances, lengths <= 2048, values <= 2^62, exact".into())
}

fn criterion_3() -> Outcome {
    let ctx = FieldCtx::new((1 << 61) - 1).unwrap();
    let mut r = rng(3);
    let (mut exact_cases, mut planted_cases, mut literal_violations) = (0usize, 0usize, 0usize);
    for trial in 0..500 {
        let k = r.gen_range(1..=200usize);
        let universe = r.gen_range(k as u64..=1_000_000);
        let mut idx: Vec<u64> = sample(&mut r, universe as usize, k).into_iter().map(|i| i as u64).collect();
        idx.sort_unstable();
        let a: Vec<(u128, Residue)> = idx.iter().map(|&i| (i as u128, ctx.from_u128(r.gen_range(1..ctx.modulus())))).collect();
        let m = r.gen_range(1..=2 * k as u64);
        let planted = trial % 2 == 1;
        let x: Vec<u64> = if planted {
            let miss = r.gen_range(1..=k.div_ceil(4));
            let drop: HashSet<usize> = sample(&mut r, k, miss).into_iter().collect();
            let mut x: Vec<u64> = idx.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, &v)| v).collect();
            let extra = r.gen_range(0..=k / 4);
            let present: HashSet<u64> = idx.iter().copied().collect();
            while x.len() < k - miss + extra {
                let v = r.gen_range(0..universe);
                if !present.contains(&v) && !x.contains(&v) {
                    x.push(v);
                }
            }
            x.sort_unstable();
            x
        } else {
            idx.clone()
        };
        let t = ((2 * x.len()).div_ceil(m as usize)).max(1) + r.gen_range(0..3);
        let omega = sparseconv::numeric::rand_unit(&ctx, &mut r);
        let folds = fold(&a, omega, m, t, &ctx).map_err(|e| e.to_string())?;
        let xs: Vec<u128> = x.iter().map(|&v| v as u128).collect();
        let rec = unfold(&folds, omega, m, &xs, &ctx).map_err(|e| e.to_string())?;
        let truth: std::collections::HashMap<u128, Residue> = a.iter().copied().collect();
        let got: std::collections::HashMap<u128, Residue> = rec.iter().copied().collect();
        if got.keys().any(|i| !xs.contains(i)) {
            return Err(format!("trial {trial}: recovered entry outside X"));
        }
        let wrong = |i: &u128| truth.get(i).copied().unwrap_or(ctx.zero()) != got.get(i).copied().unwrap_or(ctx.zero());
        let in_x = xs.iter().filter(|i| wrong(i)).count();
        let total = truth.keys().chain(got.keys()).collect::<HashSet<_>>().into_iter().filter(|i| wrong(i)).count();
        let present: HashSet<u64> = x.iter().copied().collect();
        let miss = idx.iter().filter(|i| !present.contains(i)).count();
        let flat = flatness(&x, m);
        let overfull = {
            let mut counts = std::collections::HashMap::new();
            for &v in &x {
                *counts.entry(v % m).or_insert(0usize) += 1;
            }
            counts.values().any(|&c| c > t)
        };
        if !planted && !overfull {
            exact_cases += 1;
            if total != 0 {
                return Err(format!("trial {trial}: X = supp(A), no overfull class, {total} wrong entries"));
            }
        }
        planted_cases += planted as usize;
        if in_x > t * miss + flat {
            return Err(format!("trial {trial}: {in_x} wrong entries inside X > T|miss| + F = {}", t * miss + flat));
        }
        if total > (t + 1) * miss + flat {
            return Err(format!("trial {trial}: {total} wrong entries > (T+1)|miss| + F = {}", (t + 1) * miss + flat));
        }
        literal_violations += (total > t * miss + flat) as usize;
    }
    Ok(format!(
        "500 configurations: {exact_cases} exact roundtrips without overfull classes; {planted_cases} planted-miss trials within the bound on X \
         and within (T+1)|miss| + F overall; the bound with the missing coordinates counted exceeded T|miss| + F in {literal_violations}"
    ))
}

fn criterion_4() -> Outcome {
    let ctx = FieldCtx::new((1 << 61) - 1).unwrap();
    let mut r = rng(4);
    let mut max_inv = 0;
    for s in 0..100 {
        let n = match s {
            0 => 1,
            1 => 512,
            _ => r.gen_range(1..=512),
        };
        let mut seen = HashSet::new();
        let mut a = Vec::with_capacity(n);
        while a.len() < n {
            let v = r.gen_range(0..ctx.modulus());
            if seen.insert(v) {
                a.push(ctx.from_u128(v));
            }
        }
        let x: Vec<Residue> = (0..n).map(|_| ctx.from_u128(r.gen_range(0..ctx.modulus()))).collect();
        let y = vandermonde_mul(&a, &x, &ctx).map_err(|e| e.to_string())?;
        reset_op_counters();
        let back = vandermonde_solve(&a, &y, &ctx).map_err(|e| e.to_string())?;
        let inv = op_counters().inversions;
        max_inv = max_inv.max(inv);
        if back != x {
            return Err(format!("system {s}: solve(mul(x)) != x at n = {n}"));
        }
        if inv > 1 {
            return Err(format!("system {s}: {inv} inversions in one solve"));
        }
    }
    for n in [1usize, 2, 3, 8, 17, 32, 64] {
        let a: Vec<Residue> = (0..n).map(|i| ctx.from_u64(3 + 7 * i as u64)).collect();
        let t = transpose_slp(&build_eval_circuit(&a, n, &ctx).map_err(|e| e.to_string())?, &ctx).map_err(|e| e.to_string())?;
        for j in 0..n {
            let mut e = vec![ctx.zero(); n];
            e[j] = ctx.one();
            let col = t.eval(&e, &ctx);
            let want: Vec<Residue> = (0..n).map(|i| ctx.pow(a[j], i as u128)).collect();
            if col != want {
                return Err(format!("transposed circuit column {j} differs at n = {n}"));
            }
        }
    }
    Ok(format!("100 systems with n in 1..=512 exact, at most {max_inv} inversion per solve, transposes exact for n <= 64"))
}

fn criterion_5() -> Outcome {
    let k = 1usize << 12;
    let lk = (k as f64).log2();
    let planted = (k as f64 / (lk * lk)).floor() as usize;
    let mut residuals: Vec<Vec<usize>> = Vec::new();
    let mut terminal_zero = 0;
    let trials = 100;
    let delta = 1.0 / 64.0;
    for seed in 0..trials {
        let (a, b) = generate(&InstanceSpec { n: 1 << 36, k, max_value: 1, structure: Structure::Uniform, seed }).map_err(|e| e.to_string())?;
        let truth = brute_conv(&a, &b).map_err(|e| e.to_string())?;
        let trace = TraceOptions { truth: Some(truth.clone()), corrupt_c0: planted };
        if let Ok((c, stats)) = small_sparse_conv_traced(&a, &b, truth.nnz(), &PipelineConfig { delta, ..cfg(seed) }, trace) {
            if c != truth {
                return Err(format!("seed {seed}: exact output differs from schoolbook"));
            }
            terminal_zero += (stats.level_residuals.last() == Some(&0)) as usize;
            residuals.push(stats.level_residuals);
        }
    }
    let levels = residuals.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut report = Vec::new();
    for level in 1..levels {
        let mut col: Vec<usize> = residuals.iter().map(|r| r.get(level).copied().unwrap_or(0)).collect();
        col.sort_unstable();
        let median = col[col.len() / 2];
        let bound = 4.0 * 2f64.powf(-1.5f64.powi(level as i32)) * k as f64 / (lk * lk);
        report.push(format!("l{level} {median}<={bound:.1}"));
        if median as f64 > bound {
            return Err(format!("median residual {median} at level {level} exceeds {bound:.2}"));
        }
    }
    if (terminal_zero as f64) < (1.0 - delta) * trials as f64 {
        return Err(format!("terminal residual zero in only {terminal_zero}/{trials}"));
    }
    Ok(format!("{planted} planted errors, medians [{}], terminal zero in {terminal_zero}/{trials}", report.join(", ")))
}

fn criterion_6() -> Outcome {
    const N: usize = 10_000;
    let mut r = rng(6);
    let (mut dense_wrong_accept, mut sparse_wrong_accept) = (0, 0);
    for i in 0..N {
        let (la, lb) = (r.gen_range(1..=64), r.gen_range(1..=64));
        let a: Vec<u64> = (0..la).map(|_| r.gen_range(0..1u64 << 20)).collect();
        let b: Vec<u64> = (0..lb).map(|_| r.gen_range(0..1u64 << 20)).collect();
        let mut c = dense_conv(&a, &b).map_err(|e| e.to_string())?;
        if !verify_dense(&a, &b, &c, &mut r) {
            return Err(format!("dense instance {i}: correct product rejected"));
        }
        let pos = r.gen_range(0..c.len());
        c[pos] += 1;
        dense_wrong_accept += verify_dense(&a, &b, &c, &mut r) as usize;

        let universe = 1_000_000u64;
        let pick = |r: &mut ChaCha8Rng| {
            let idx = sample(r, universe as usize, 50);
            SparseVec::from_pairs(universe, idx.into_iter().map(|i| (i as u64, r.gen_range(1..1u64 << 20)))).unwrap()
        };
        let (sa, sb) = (pick(&mut r), pick(&mut r));
        let sc = brute_conv(&sa, &sb).map_err(|e| e.to_string())?;
        let out_len = sc.len();
        if !verify_sparse(&sa, &sb, &sc, &mut r) {
            return Err(format!("sparse instance {i}: correct product rejected"));
        }
        let mut entries = sc.entries().to_vec();
        let j = r.gen_range(0..entries.len());
        if i % 2 == 0 {
            entries[j].1 += 1;
        } else {
            let taken: HashSet<u64> = entries.iter().map(|e| e.0).collect();
            let shifted = if entries[j].0 + 1 < out_len && !taken.contains(&(entries[j].0 + 1)) {
                entries[j].0 + 1
            } else {
                (0..out_len).find(|v| !taken.contains(v)).unwrap()
            };
            entries[j].0 = shifted;
        }
        let bad = SparseVec::from_pairs(out_len, entries).map_err(|e| e.to_string())?;
        sparse_wrong_accept += verify_sparse(&sa, &sb, &bad, &mut r) as usize;
    }
    let limit = N / 1000;
    if dense_wrong_accept > limit || sparse_wrong_accept > limit {
        return Err(format!("wrong accepts dense {dense_wrong_accept}, sparse {sparse_wrong_accept} of {N}"));
    }
    Ok(format!("{N} corrupted instances per verifier: wrong accepts dense {dense_wrong_accept}, sparse {sparse_wrong_accept}; zero wrong rejects"))
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut calls = 0usize;
    for i in 0..1000 {
        let (la, lb) = (r.gen_range(1..=128), r.gen_range(1..=128));
        let a: Vec<u64> = (0..la).map(|_| r.gen_range(0..1u64 << 26)).collect();
        let b: Vec<u64> = (0..lb).map(|_| r.gen_range(0..1u64 << 26)).collect();
        let out = reliable_conv(
            |rng: &mut ChaCha8Rng| faulty_dense_conv(&a, &b, 1.0 / 3.0, rng).map(|c| c.0),
            |c: &Vec<u64>, rng: &mut ChaCha8Rng| verify_dense(&a, &b, c, rng),
            &mut r,
        )
        .map_err(|e| e.to_string())?;
        let mut want = vec![0u64; la + lb - 1];
        for (x, &u) in a.iter().enumerate() {
            for (y, &v) in b.iter().enumerate() {
                want[x + y] += u * v;
            }
        }
        if out.value != want {
            return Err(format!("instance {i}: reliable output differs from schoolbook"));
        }
        calls += out.calls;
    }
    let mean = calls as f64 / 1000.0;
    if !(1.3..=1.7).contains(&mean) {
        return Err(format!("mean calls {mean:.3} outside [1.3, 1.7]"));
    }
    Ok(format!("mean calls {mean:.3} over 1000 instances, all outputs exact"))
}

fn criterion_8() -> Outcome {
    let k = 1usize << 12;
    let universe = 8 * k as u64;
    let m = k as u64;
    let mut r = rng(8);
    let u2 = universe as u128 * universe as u128;
    let p = find_prime(4 * u2 + 1, 8 * u2, &mut r).map_err(|e| e.to_string())?;
    let mut pool: Vec<u64> = sample(&mut r, universe as usize, k + 1).into_iter().map(|i| i as u64).collect();
    let x = pool.pop().unwrap();
    let (a, b) = (r.gen_range(0..m), r.gen_range(0..m));
    let st = concentration_experiment(&pool, universe, p, m, x, a, b, 10_000, &mut r).map_err(|e| e.to_string())?;
    let expect = k as f64 / m as f64;
    if st.fitted_c > 64.0 {
        return Err(format!("fitted c = {:.3} exceeds 64", st.fitted_c));
    }
    if (st.mean_f - expect).abs() > 2.0 {
        return Err(format!("E(F) = {:.3} outside {expect} +- 2", st.mean_f));
    }
    Ok(format!("Pr = {:.3e} vs 1/m^2 = {:.3e}, fitted c = {:.3}, E(F) = {:.3}", st.cond_prob, 1.0 / (m * m) as f64, st.fitted_c, st.mean_f))
}

fn criterion_9() -> Outcome {
    let (k, universe) = (1usize << 12, 1u64 << 36);
    let mut r = rng(9);
    let lb = lower_bound_set(k, universe, &mut r).map_err(|e| e.to_string())?;
    let uniform: Vec<u64> = {
        let mut s = HashSet::with_capacity(k);
        while s.len() < k {
            s.insert(r.gen_range(1..=universe));
        }
        s.into_iter().collect()
    };
    let hl = inverse_height_sum(&lb).map_err(|e| e.to_string())? / k as f64;
    let hu = inverse_height_sum(&uniform).map_err(|e| e.to_string())? / k as f64;
    if hl < 2.0 * hu {
        return Err(format!("construction ratio {hl:.3} < 2 x uniform ratio {hu:.3}"));
    }
    Ok(format!("inverse height sum / k: construction {hl:.3}, uniform {hu:.3}, factor {:.1}", hl / hu))
}

fn time_sparse(a: &SparseVec, b: &SparseVec, seed: u64) -> Result<Duration, String> {
    let t = Instant::now();
    sparse_conv(a, b, &cfg(seed)).map_err(|e| e.to_string())?;
    Ok(t.elapsed())
}

fn criterion_10() -> Outcome {
    let n = 1u64 << 26;
    let seeds = 3;
    let mut medians = Vec::new();
    let mut at_1024 = None;
    for lk in 8..=13 {
        let k = 1usize << lk;
        let mut times = Vec::new();
        for seed in 0..seeds {
            let (a, b) = generate(&InstanceSpec { n, k, max_value: 1, structure: Structure::Uniform, seed }).map_err(|e| e.to_string())?;
            times.push(time_sparse(&a, &b, seed)?);
            if lk == 10 && seed == 0 {
                at_1024 = Some((a, b));
            }
        }
        times.sort();
        medians.push(times[times.len() / 2]);
    }
    let (a, b) = at_1024.unwrap();
    let start = Instant::now();
    let dense = dense_conv(&a.to_dense(), &b.to_dense()).map_err(|e| e.to_string())?;
    let dense_time = start.elapsed();
    let sparse = sparse_conv(&a, &b, &cfg(0)).map_err(|e| e.to_string())?;
    let nonzero: Vec<(u64, u64)> = dense.iter().enumerate().filter(|e| *e.1 != 0).map(|(i, &v)| (i as u64, v)).collect();
    drop(dense);
    if nonzero != sparse.entries() {
        return Err("sparse and dense outputs differ at k = 2^10".into());
    }
    for (lk, t) in (8..=10).zip(&medians) {
        let ratio = t.as_secs_f64() / dense_time.as_secs_f64();
        if ratio >= 1.0 {
            return Err(format!("sparse/dense time ratio {ratio:.3} at k = 2^{lk}"));
        }
    }
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1].as_secs_f64() / w[0].as_secs_f64()).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if mean > 3.0 {
        return Err(format!("mean T(2k)/T(k) = {mean:.2} above 3.0"));
    }
    Ok(format!(
        "dense {dense_time:.2?}; sparse medians k=2^8..2^13 {:?}; sparse/dense at 2^10 = {:.4}; mean T(2k)/T(k) = {mean:.2}",
        medians.iter().map(|d| format!("{d:.1?}")).collect::<Vec<_>>(),
        medians[2].as_secs_f64() / dense_time.as_secs_f64()
    ))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    sparseconv::par::set_enabled(false);
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let criteria: [(usize, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = 0;
    for (id, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {id}: PASS ({secs:.1}s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id}: FAIL ({secs:.1}s) {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
