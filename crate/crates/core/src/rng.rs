//! Counter-based random streams.
//!
//! Every sample index gets its own ChaCha stream keyed by `(seed, purpose)`,
//! so the i-th draw never depends on how work is split between threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

/// What a stream is used for; distinct purposes never share randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Volume,
    Uniform,
    Importance,
    Stratified,
    SupNorm,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Volume => 0x766f_6c75,
            Purpose::Uniform => 0x756e_6966,
            Purpose::Importance => 0x696d_706f,
            Purpose::Stratified => 0x7374_7261,
            Purpose::SupNorm => 0x7375_706e,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug)]
pub struct StreamKey {
    key: [u8; 32],
}

impl StreamKey {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        let mut state = seed ^ purpose.tag().rotate_left(29);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Uniform point of the unit disc.
pub fn disc<R: Rng>(rng: &mut R) -> Complex64 {
    let r = rng.random::<f64>().sqrt();
    Complex64::from_polar(r, TAU * rng.random::<f64>())
}

/// Uniform point of the unit ball of C^n written into `out`.
pub fn ball<R: Rng>(rng: &mut R, out: &mut [Complex64]) {
    let mut norm2 = 0.0;
    for z in out.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z = Complex64::new(re, im);
        norm2 += re * re + im * im;
    }
    let dim = 2.0 * out.len() as f64;
    let radius = rng.random::<f64>().powf(1.0 / dim);
    let scale = radius / norm2.sqrt();
    for z in out.iter_mut() {
        *z *= scale;
    }
}
