//! Splittable, reproducible random streams.
//!
//! A stream is identified by a root seed and a path of 32-bit indices, e.g.
//! `(mc_rep, boot_rep, purpose)`. The path is hashed into a 256-bit key for a
//! ChaCha8 generator, which is itself counter based, so the sequence drawn from
//! a stream depends only on `(root_seed, path)` and never on which worker or in
//! which order streams are consumed.
//!
//! Normal variates use the ziggurat sampler from `rand_distr`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream purposes used as the last path component.
pub mod purpose {
    pub const DATA: u32 = 0;
    pub const RESAMPLE_INDEX: u32 = 1;
    pub const RESAMPLE_NOISE: u32 = 2;
    pub const BOOTSTRAP: u32 = 3;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RngStream {
    root_seed: u64,
    path: Vec<u32>,
}

impl RngStream {
    pub fn new(root_seed: u64) -> Self {
        RngStream {
            root_seed,
            path: Vec::new(),
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    /// Child stream at `parent.path ++ [index]`.
    pub fn derive(&self, index: u32) -> RngStream {
        let mut path = self.path.clone();
        path.push(index);
        RngStream {
            root_seed: self.root_seed,
            path,
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut h = mix64(self.root_seed ^ GOLDEN);
        // The length is folded in so that a path and its zero-padded extension differ.
        h = mix64(h ^ (self.path.len() as u64).wrapping_mul(GOLDEN));
        for &idx in &self.path {
            h = mix64(h.wrapping_add(GOLDEN) ^ mix64(u64::from(idx).wrapping_add(0x632B_E59B_D9B4_E019)));
        }
        let mut key = [0u8; 32];
        let mut state = h;
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        key
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        StreamRng(ChaCha8Rng::from_seed(self.key()))
    }

    pub fn standard_normal(&self, n: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    pub fn uniform01(&self, n: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    pub fn categorical_uniform(&self, n: usize, k: usize) -> Result<Vec<usize>> {
        if k == 0 {
            return Err(Error::Domain("categorical_uniform needs k >= 1".into()));
        }
        let mut rng = self.rng();
        Ok((0..n).map(|_| rng.random_range(0..k)).collect())
    }
}

/// Generator bound to one stream. Must not be shared between workers.
#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_deterministic() {
        let s = RngStream::new(42);
        assert_eq!(s.derive(0).uniform01(100), s.derive(0).uniform01(100));
    }

    #[test]
    fn siblings_differ_almost_everywhere() {
        let s = RngStream::new(7).derive(3);
        let a = s.derive(0).uniform01(1000);
        let b = s.derive(1).uniform01(1000);
        let differ = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        assert!(differ >= 990, "{differ}");
    }

    #[test]
    fn path_order_matters() {
        let s = RngStream::new(0);
        let a = s.derive(1).derive(2).uniform01(64);
        let b = s.derive(2).derive(1).uniform01(64);
        assert_ne!(a, b);
    }

    #[test]
    fn root_seed_matters() {
        assert_ne!(RngStream::new(1).uniform01(8), RngStream::new(2).uniform01(8));
        assert_ne!(
            RngStream::new(0).uniform01(8),
            RngStream::new(0).derive(0).uniform01(8)
        );
    }

    #[test]
    fn single_category() {
        let s = RngStream::new(1);
        assert_eq!(s.categorical_uniform(5, 1).unwrap(), vec![0; 5]);
        assert!(matches!(s.categorical_uniform(5, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn uniform_mean_and_normal_variance() {
        let s = RngStream::new(11);
        let u = s.derive(0).uniform01(100_000);
        assert!(u.iter().all(|&x| (0.0..1.0).contains(&x)));
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");

        let z = s.derive(1).standard_normal(100_000);
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (z.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn categorical_is_roughly_uniform() {
        let draws = RngStream::new(5).categorical_uniform(60_000, 6).unwrap();
        let mut counts = [0usize; 6];
        for d in draws {
            counts[d] += 1;
        }
        // 10_000 expected per cell, sd ~ 91
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }

    #[test]
    fn lag_one_autocorrelation() {
        let u = RngStream::new(2024).uniform01(1_000_000);
        let n = u.len();
        let mean = u.iter().sum::<f64>() / n as f64;
        let var = u.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let cov: f64 = u.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let rho = cov / var;
        assert!(rho.abs() < 0.005, "{rho}");
    }
}
