//! Reproducible random streams.
//!
//! Every matrix or vector draws from its own ChaCha20 stream. The 256-bit key
//! is the 64-bit seed in little-endian order followed by 24 zero bytes; the
//! 64-bit stream id is `(kind << 32) | index`. Uniforms take the top 53 bits
//! of each output word, and complex normals come from one Box-Muller pair per
//! entry, so fixtures can be regenerated from any language with a ChaCha20
//! implementation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::{CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum StreamKind {
    Uplink = 0,
    Downlink = 1,
    RelayNoise = 2,
    Symbols = 3,
    UserNoise = 4,
    Combiner = 5,
}

pub struct StreamRng(ChaCha20Rng);

impl StreamRng {
    pub fn new(seed: u64, kind: StreamKind, index: u32) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(((kind as u64) << 32) | index as u64);
        StreamRng(rng)
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Circularly-symmetric complex normal with unit variance: (x + iy)/sqrt(2).
    pub fn complex_normal(&mut self) -> Complex64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        Complex64::new(radius * theta.cos(), radius * theta.sin()) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Unit-energy QPSK symbol.
    pub fn qpsk(&mut self) -> Complex64 {
        let bits = self.0.next_u32();
        let re = if bits & 1 == 0 { 1.0 } else { -1.0 };
        let im = if bits & 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Row-major fill with CN(0, 1) entries.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> CMat {
        let mut m = CMat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = self.complex_normal();
            }
        }
        m
    }

    pub fn gaussian_vector(&mut self, len: usize) -> CVec {
        CVec::from_iterator(len, (0..len).map(|_| self.complex_normal()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: Vec<u64> = {
            let mut r = StreamRng::new(7, StreamKind::Uplink, 0);
            (0..4).map(|_| r.0.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = StreamRng::new(7, StreamKind::Uplink, 0);
            (0..4).map(|_| r.0.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut r = StreamRng::new(7, StreamKind::Uplink, 1);
            (0..4).map(|_| r.0.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_in_open_interval() {
        let mut r = StreamRng::new(1, StreamKind::Symbols, 0);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let mut r = StreamRng::new(3, StreamKind::RelayNoise, 0);
        let n = 40_000;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut power = 0.0;
        let mut pseudo = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let z = r.complex_normal();
            mean += z;
            power += z.norm_sqr();
            pseudo += z * z;
        }
        let nf = n as f64;
        assert!((mean / nf).norm() < 0.02);
        assert!((power / nf - 1.0).abs() < 0.03);
        // Circular symmetry: E[z^2] = 0.
        assert!((pseudo / nf).norm() < 0.03);
    }
}
