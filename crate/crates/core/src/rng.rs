//! Deterministic seed derivation and complex Gaussian sampling.
//!
//! Every random draw in the crate is keyed by a [`SeedPath`]: a master seed plus
//! an ordered list of labels such as `["airsim", block, "noise"]`. The path is
//! folded into a 64-bit substream seed with the SplitMix64 finalizer, and the
//! substream is driven by ChaCha8. Results therefore depend only on the path,
//! never on the order in which work items execute.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random generator used for every substream.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const TAG_NAME: u64 = 0x6e61_6d65_5f6c_626c;
const TAG_INDEX: u64 = 0x696e_6465_785f_6c62;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SeedLabel {
    Name(String),
    Index(u64),
}

/// A master seed plus a label path identifying one random substream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedPath {
    master: u64,
    labels: Vec<SeedLabel>,
}

impl SeedPath {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            labels: Vec::new(),
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn labels(&self) -> &[SeedLabel] {
        &self.labels
    }

    /// Extends the path with a named component.
    pub fn child(&self, name: &str) -> Self {
        let mut next = self.clone();
        next.labels.push(SeedLabel::Name(name.to_owned()));
        next
    }

    /// Extends the path with an integer component (trial, block, user).
    pub fn index(&self, i: u64) -> Self {
        let mut next = self.clone();
        next.labels.push(SeedLabel::Index(i));
        next
    }

    pub fn seed(&self) -> u64 {
        derive_seed(self)
    }

    pub fn rng(&self) -> SimRng {
        SimRng::seed_from_u64(self.seed())
    }
}

impl std::fmt::Display for SeedPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.master)?;
        for label in &self.labels {
            match label {
                SeedLabel::Name(s) => write!(f, "/{s}")?,
                SeedLabel::Index(i) => write!(f, "/{i}")?,
            }
        }
        Ok(())
    }
}

/// Folds a seed path into a 64-bit substream seed.
///
/// Names are absorbed eight bytes at a time followed by their length; indices
/// are absorbed as a single word. Each kind carries its own tag so that a name
/// can never alias an index.
pub fn derive_seed(path: &SeedPath) -> u64 {
    let mut h = mix64(path.master.wrapping_add(GOLDEN));
    for label in &path.labels {
        match label {
            SeedLabel::Name(name) => {
                h = mix64(h ^ TAG_NAME);
                for chunk in name.as_bytes().chunks(8) {
                    let mut word = [0u8; 8];
                    word[..chunk.len()].copy_from_slice(chunk);
                    h = mix64(h.wrapping_add(GOLDEN) ^ u64::from_le_bytes(word));
                }
                h = mix64(h ^ name.len() as u64);
            }
            SeedLabel::Index(i) => {
                h = mix64(h ^ TAG_INDEX);
                h = mix64(h.wrapping_add(GOLDEN) ^ *i);
            }
        }
    }
    h
}

/// One draw from CN(0, variance): independent real and imaginary parts, each
/// with variance `variance / 2`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Matrix with i.i.d. CN(0, variance) entries, filled in row-major order.
pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Array2<Complex64> {
    let data = (0..rows * cols)
        .map(|_| complex_normal(rng, variance))
        .collect::<Vec<_>>();
    Array2::from_shape_vec((rows, cols), data).expect("shape matches data length")
}

/// Uniform ordered draw of `count` distinct values from `0..population`
/// (partial Fisher-Yates).
pub fn sample_distinct<R: Rng + ?Sized>(rng: &mut R, population: usize, count: usize) -> Vec<usize> {
    assert!(count <= population, "cannot draw {count} from {population}");
    let mut pool: Vec<usize> = (0..population).collect();
    for i in 0..count {
        let j = rng.random_range(i..population);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}
