//! Counter-based Gaussian draws addressed by `(seed, path, step, mode)`.
//!
//! Every draw is a pure function of its address: a ChaCha8 stream keyed by
//! `(seed, path)`, with the step selecting the stream id and the mode selecting
//! the word position. Box–Muller consumes a fixed four words per draw, so draws
//! can be requested in any order, on any thread, with identical results.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const WORDS_PER_DRAW: u128 = 4;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key(seed: u64, path: u64) -> [u8; 32] {
    let mut state = seed ^ path.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut out = [0u8; 32];
    for chunk in out.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    out
}

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Standard normal draw at a fixed address.
pub fn standard_normal(seed: u64, path: u64, step: u64, mode: u64) -> f64 {
    let mut rng = ChaCha8Rng::from_seed(key(seed, path));
    rng.set_stream(step);
    rng.set_word_pos(mode as u128 * WORDS_PER_DRAW);
    box_muller(&mut rng)
}

/// Standard normal draws for modes `0..count` at one `(path, step)` address.
pub fn standard_normals(seed: u64, path: u64, step: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::from_seed(key(seed, path));
    rng.set_stream(step);
    (0..count).map(|_| box_muller(&mut rng)).collect()
}

/// Uniform `(0, 1]` draw sharing the address space of the normals, offset by `mode`.
pub fn uniform(seed: u64, path: u64, step: u64, mode: u64) -> f64 {
    let mut rng = ChaCha8Rng::from_seed(key(seed, path));
    rng.set_stream(step);
    rng.set_word_pos(mode as u128 * WORDS_PER_DRAW);
    unit_open(rng.next_u64())
}

/// Brownian increments over steps of `fine_dt · factor`, built by summing
/// `factor` fine increments so that refinements share one underlying path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianDriver {
    pub seed: u64,
    pub path: u64,
    pub fine_dt: f64,
    pub factor: u64,
}

impl BrownianDriver {
    pub fn new(seed: u64, dt: f64) -> Self {
        Self { seed, path: 0, fine_dt: dt, factor: 1 }
    }

    pub fn with_path(self, path: u64) -> Self {
        Self { path, ..self }
    }

    /// The same fine path, coarsened by `factor`.
    pub fn coarsened(self, factor: u64) -> Self {
        assert!(factor >= 1);
        Self { factor: self.factor * factor, ..self }
    }

    pub fn dt(&self) -> f64 {
        self.fine_dt * self.factor as f64
    }

    /// Increment of the scalar Brownian motion `mode` over step `step`.
    pub fn increment(&self, step: u64, mode: u64) -> f64 {
        let sum: f64 = (0..self.factor)
            .map(|f| standard_normal(self.seed, self.path, step * self.factor + f, mode))
            .sum();
        self.fine_dt.sqrt() * sum
    }

    /// Increments of modes `0..count` over step `step`.
    pub fn increments(&self, step: u64, count: usize) -> Vec<f64> {
        let mut acc = vec![0.0; count];
        for f in 0..self.factor {
            let z = standard_normals(self.seed, self.path, step * self.factor + f, count);
            for (a, v) in acc.iter_mut().zip(z) {
                *a += v;
            }
        }
        let scale = self.fine_dt.sqrt();
        acc.iter_mut().for_each(|a| *a *= scale);
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_addressable() {
        let seq = standard_normals(7, 3, 11, 5);
        for (m, v) in seq.iter().enumerate() {
            assert_eq!(*v, standard_normal(7, 3, 11, m as u64));
        }
        assert_ne!(standard_normal(7, 3, 11, 0), standard_normal(7, 4, 11, 0));
        assert_ne!(standard_normal(7, 3, 11, 0), standard_normal(7, 3, 12, 0));
    }

    #[test]
    fn moments_are_standard() {
        let n = 20000;
        let xs: Vec<f64> = (0..n).map(|i| standard_normal(1, 0, i, 0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn coarse_increments_sum_fine_ones() {
        let fine = BrownianDriver::new(9, 1e-3).with_path(2);
        let coarse = fine.coarsened(4);
        assert_eq!(coarse.dt(), 4e-3);
        for step in 0..3u64 {
            let want: f64 = (0..4).map(|f| fine.increment(step * 4 + f, 1)).sum();
            assert!((coarse.increment(step, 1) - want).abs() < 1e-15);
            assert!((coarse.increments(step, 2)[1] - want).abs() < 1e-15);
        }
    }
}
