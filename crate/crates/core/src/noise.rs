//! Independent phase-flip and measurement noise from counter-based streams.
//!
//! A stream is addressed by `(master_seed, trial, cycle, phase)`. The master
//! seed keys a ChaCha8 generator, the trial selects its stream number and the
//! `(cycle, phase)` pair a disjoint block of the keystream, so any sample can
//! be regenerated without replaying earlier ones.

use crate::gf2::BitVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("probability {name} = {value} outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
    pub q: f64,
}

impl NoiseModel {
    pub fn new(p: f64, q: f64) -> Result<Self, NoiseError> {
        for (name, value) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseError::BadProbability { name, value });
            }
        }
        Ok(Self { p, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    QubitError = 0,
    SyndromeError = 1,
}

/// Address of one block of random words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub trial: u64,
    pub cycle: u64,
    pub phase: Phase,
}

// Each (cycle, phase) block spans 2^40 keystream words, far more than any
// single sample consumes.
const BLOCK_SHIFT: u32 = 40;

impl RngStream {
    pub fn new(master_seed: u64, trial: u64, cycle: u64, phase: Phase) -> Self {
        Self { master_seed, trial, cycle, phase }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.trial);
        let block = (self.cycle as u128) * 2 + self.phase as u128;
        rng.set_word_pos(block << BLOCK_SHIFT);
        rng
    }
}

/// `len` independent Bernoulli(`prob`) bits.
pub fn sample_bits(len: usize, prob: f64, stream: &RngStream) -> BitVector {
    let mut v = BitVector::zeros(len);
    if prob <= 0.0 {
        return v;
    }
    if prob >= 1.0 {
        return BitVector::ones(len);
    }
    let mut rng = stream.rng();
    for i in 0..len {
        if rng.random::<f64>() < prob {
            v.set(i, true);
        }
    }
    v
}

pub fn sample_qubit_error(n: usize, p: f64, stream: &RngStream) -> BitVector {
    sample_bits(n, p, stream)
}

pub fn sample_syndrome_error(m: usize, q: f64, stream: &RngStream) -> BitVector {
    sample_bits(m, q, stream)
}
