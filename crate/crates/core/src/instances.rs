//! Seeded instance generators with a controlled output sparsity.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hashing::lower_bound_set;
use crate::vectors::{SparseVec, VectorError};

const MAX_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Uniform,
    Clustered,
    ArithmeticProgression,
    AdversarialHeights,
}

impl Structure {
    pub const ALL: [Structure; 4] =
        [Structure::Uniform, Structure::Clustered, Structure::ArithmeticProgression, Structure::AdversarialHeights];
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Uniform => "uniform",
            Structure::Clustered => "clustered",
            Structure::ArithmeticProgression => "ap",
            Structure::AdversarialHeights => "adversarial-heights",
        })
    }
}

impl FromStr for Structure {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" | "uniform-random" => Ok(Structure::Uniform),
            "clustered" => Ok(Structure::Clustered),
            "ap" | "arithmetic-progression" => Ok(Structure::ArithmeticProgression),
            "adversarial-heights" | "heights" => Ok(Structure::AdversarialHeights),
            other => Err(InstanceError::UnknownStructure(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("unknown structure '{0}'")]
    UnknownStructure(String),
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Universe n, target output sparsity k, value bound `max_value`, structure and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSpec {
    pub n: u64,
    pub k: usize,
    pub max_value: u64,
    pub structure: Structure,
    pub seed: u64,
}

/// Number of distinct sums y + z.
pub fn sumset_size(y: &[u64], z: &[u64]) -> usize {
    let mut s: HashSet<u64> = HashSet::with_capacity(y.len() * z.len() / 2 + 1);
    for &a in y {
        for &b in z {
            s.insert(a + b);
        }
    }
    s.len()
}

fn with_values(n: u64, idx: &[u64], max_value: u64, rng: &mut ChaCha8Rng) -> Result<SparseVec, VectorError> {
    SparseVec::from_pairs(n, idx.iter().map(|&i| (i, rng.gen_range(1..=max_value))))
}

fn random_subset(n: u64, s: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let s = s.min(n as usize);
    if n <= 1 << 24 {
        let mut v: Vec<u64> = sample(rng, n as usize, s).into_iter().map(|i| i as u64).collect();
        v.sort_unstable();
        return v;
    }
    let mut set = HashSet::with_capacity(s);
    while set.len() < s {
        set.insert(rng.gen_range(0..n));
    }
    let mut v: Vec<u64> = set.into_iter().collect();
    v.sort_unstable();
    v
}

/// Supports of size about `scale` for the structure; larger scale means larger sumsets.
fn supports(spec: &InstanceSpec, scale: f64, rng: &mut ChaCha8Rng) -> Result<(Vec<u64>, Vec<u64>), InstanceError> {
    let n = spec.n;
    match spec.structure {
        Structure::Uniform => {
            let s = (scale.round() as usize).max(1);
            Ok((random_subset(n, s, rng), random_subset(n, s, rng)))
        }
        Structure::Clustered => {
            let clusters = 4u64;
            let w = ((scale.round() as u64).max(2)).min(n / (2 * clusters)).max(1);
            let mut side = || {
                let mut v = Vec::new();
                for _ in 0..clusters {
                    let start = rng.gen_range(0..=n - w);
                    v.extend((start..start + w).filter(|_| rng.gen_bool(0.5)));
                }
                v.sort_unstable();
                v.dedup();
                if v.is_empty() {
                    v.push(rng.gen_range(0..n));
                }
                v
            };
            Ok((side(), side()))
        }
        Structure::ArithmeticProgression => {
            let len = (scale.round() as u64).max(1).min(n);
            let d_max = ((n - 1) / len.max(1)).max(1);
            let d = rng.gen_range(1..=d_max);
            let span = d * (len - 1);
            let mut side = || {
                let start = rng.gen_range(0..=n - 1 - span);
                (0..len).map(|i| start + i * d).collect::<Vec<u64>>()
            };
            Ok((side(), side()))
        }
        Structure::AdversarialHeights => {
            let s = (scale.round() as usize).max(2);
            let pool = match lower_bound_set(2 * s, n - 1, rng) {
                Ok(p) => p,
                Err(_) => {
                    let mult = (s as u64 * s as u64).max(2 * s as u64);
                    if mult >= n {
                        return Err(InstanceError::Infeasible(format!("universe {n} too small for heights instance")));
                    }
                    let d = rng.gen_range(1..=(n - 1) / mult);
                    (1..=mult).map(|i| i * d).collect()
                }
            };
            let pick = |rng: &mut ChaCha8Rng| {
                let mut v: Vec<u64> = sample(rng, pool.len(), s).into_iter().map(|i| pool[i]).collect();
                v.sort_unstable();
                v
            };
            Ok((pick(rng), pick(rng)))
        }
    }
}

fn initial_scale(spec: &InstanceSpec) -> f64 {
    let k = spec.k as f64;
    match spec.structure {
        Structure::Uniform => k.sqrt(),
        Structure::Clustered => k / 32.0,
        Structure::ArithmeticProgression => k / 2.0,
        Structure::AdversarialHeights => (2.0 * k).sqrt(),
    }
}

/// Generates (A, B) over [0, n) with ||A * B||_0 in [k/2, 2k] and entries in [1, max_value].
pub fn generate(spec: &InstanceSpec) -> Result<(SparseVec, SparseVec), InstanceError> {
    if spec.n < 2 || spec.k < 2 || spec.max_value == 0 {
        return Err(InstanceError::Infeasible(format!("n={}, k={}, max={}", spec.n, spec.k, spec.max_value)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut scale = initial_scale(spec);
    let target = spec.k as f64;
    for _ in 0..MAX_ATTEMPTS {
        let (y, z) = supports(spec, scale, &mut rng)?;
        let size = sumset_size(&y, &z);
        if 2 * size >= spec.k && size <= 2 * spec.k {
            let a = with_values(spec.n, &y, spec.max_value, &mut rng)?;
            let b = with_values(spec.n, &z, spec.max_value, &mut rng)?;
            return Ok((a, b));
        }
        let ratio = (target / size.max(1) as f64).clamp(0.25, 4.0);
        scale *= match spec.structure {
            Structure::Uniform | Structure::AdversarialHeights => ratio.sqrt(),
            _ => ratio,
        };
    }
    Err(InstanceError::Infeasible(format!(
        "no {} instance with output sparsity near {} in universe {}",
        spec.structure, spec.k, spec.n
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_band_and_bounds() {
        for structure in Structure::ALL {
            for (n, k) in [(1u64 << 20, 128usize), (1 << 40, 1024)] {
                let spec = InstanceSpec { n, k, max_value: 5, structure, seed: 3 };
                let (a, b) = generate(&spec).unwrap();
                let s = sumset_size(&a.support(), &b.support());
                assert!(2 * s >= k && s <= 2 * k, "{structure} {n} {k}: {s}");
                assert!(a.max_value() <= 5 && b.max_value() <= 5);
                assert_eq!(a.len(), n);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = InstanceSpec { n: 1 << 30, k: 512, max_value: 1 << 20, structure: Structure::Clustered, seed: 9 };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn structure_names_roundtrip() {
        for s in Structure::ALL {
            assert_eq!(s.to_string().parse::<Structure>().unwrap(), s);
        }
        assert!("nope".parse::<Structure>().is_err());
    }
}
