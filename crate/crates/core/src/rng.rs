//! Counter-based random streams.
//!
//! Every Monte Carlo task gets its own stream derived from a master seed and a
//! sequence of labels, so results never depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every random stream in the crate.
pub type Stream = ChaCha8Rng;

/// One component of a seed derivation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label<'a> {
    Int(u64),
    Str(&'a str),
}

impl From<u64> for Label<'_> {
    fn from(v: u64) -> Self {
        Label::Int(v)
    }
}

impl From<usize> for Label<'_> {
    fn from(v: usize) -> Self {
        Label::Int(v as u64)
    }
}

impl From<u32> for Label<'_> {
    fn from(v: u32) -> Self {
        Label::Int(u64::from(v))
    }
}

impl<'a> From<&'a str> for Label<'a> {
    fn from(v: &'a str) -> Self {
        Label::Str(v)
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TAG_INT: u64 = 0x1D8E_4E27_C47D_124F;
const TAG_STR: u64 = 0x7F4A_7C15_F39C_C060;

/// SplitMix64 finalizer: a bijective 64-bit mixing permutation.
pub const fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Mixes a master seed with a label path into a 64-bit stream seed.
///
/// With no labels the result is `mix(master)`.
pub fn derive_seed(master: u64, labels: &[Label<'_>]) -> u64 {
    labels.iter().fold(mix(master), |h, label| {
        let v = match *label {
            Label::Int(i) => mix(i ^ TAG_INT),
            Label::Str(s) => mix(fnv1a(s) ^ TAG_STR),
        };
        mix(h.rotate_left(17) ^ v)
    })
}

/// Seeds a stream directly.
pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

/// `stream(derive_seed(master, labels))`.
pub fn derive_stream(master: u64, labels: &[Label<'_>]) -> Stream {
    stream(derive_seed(master, labels))
}

/// The `index`-th child stream of `seed`.
pub fn substream(seed: u64, index: u64) -> Stream {
    stream(derive_seed(seed, &[Label::Int(index)]))
}
