//! Addressable random streams.
//!
//! Every replica of every experiment draws from its own ChaCha8 stream,
//! selected by `(root seed, stream id)`. ChaCha is counter based, so stream
//! `k` is available without generating streams `0..k`, and the same pair
//! always reproduces the same draws bit for bit regardless of how replicas
//! are scheduled across workers.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible random stream identified by a root seed and a stream id.
#[derive(Clone, Debug)]
pub struct SeededStream {
    root_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(root_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
        rng.set_stream(stream_id);
        Self {
            root_seed,
            stream_id,
            rng,
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential draw with the given rate.
    #[inline]
    pub fn exp(&mut self, rate: f64) -> f64 {
        -self.open01().ln() / rate
    }
}

impl RngCore for SeededStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Hands out streams for the replicas of one experiment.
///
/// Stream ids pack a 24-bit experiment tag above a 40-bit replica index, so
/// two experiments sharing a root seed never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFactory {
    pub root_seed: u64,
    pub tag: u32,
}

impl StreamFactory {
    pub const REPLICA_BITS: u32 = 40;

    pub fn new(root_seed: u64, tag: u32) -> Self {
        Self { root_seed, tag }
    }

    pub fn stream(&self, replica: u64) -> SeededStream {
        debug_assert!(replica < 1 << Self::REPLICA_BITS);
        let id = ((self.tag as u64) << Self::REPLICA_BITS) | replica;
        SeededStream::new(self.root_seed, id)
    }

    /// A factory for a sub-experiment, derived from this one's tag.
    pub fn child(&self, sub: u32) -> StreamFactory {
        StreamFactory {
            root_seed: self.root_seed,
            tag: self.tag.wrapping_mul(31).wrapping_add(sub + 1) & 0x00ff_ffff,
        }
    }
}

/// Threshold for a Bernoulli(p) draw from a raw 64-bit word: success iff
/// `word < threshold`.
#[inline]
pub fn bernoulli_threshold(p: f64) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if p >= 1.0 {
        u64::MAX
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pairs_reproduce() {
        let mut a = SeededStream::new(42, 7);
        let mut b = SeededStream::new(42, 7);
        let xs: Vec<u64> = (0..100).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..100).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_eq!(a.counter(), 200);
    }

    #[test]
    fn distinct_ids_differ() {
        let mut a = SeededStream::new(42, 7);
        let mut b = SeededStream::new(42, 8);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn replica_stream_is_addressable() {
        let f = StreamFactory::new(9, 3);
        let mut direct = f.stream(1000);
        let mut again = StreamFactory::new(9, 3).stream(1000);
        assert_eq!(direct.next_u64(), again.next_u64());
        assert_ne!(f.child(0).tag, f.tag);
    }

    #[test]
    fn independent_streams_have_uncorrelated_sums() {
        // normalized sums of two streams over 1e6 draws: correlation of the
        // block means stays inside a 3-sigma band
        let mut a = SeededStream::new(1, 1);
        let mut b = SeededStream::new(1, 2);
        let blocks = 1000;
        let per = 1000;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..blocks {
            let mut xa = 0.0;
            let mut xb = 0.0;
            for _ in 0..per {
                xa += a.open01() - 0.5;
                xb += b.open01() - 0.5;
            }
            sa += xa;
            sb += xb;
            sab += xa * xb;
            saa += xa * xa;
            sbb += xb * xb;
        }
        let n = blocks as f64;
        let cov = sab / n - (sa / n) * (sb / n);
        let corr = cov / ((saa / n - (sa / n).powi(2)) * (sbb / n - (sb / n).powi(2))).sqrt();
        assert!(corr.abs() < 3.0 / n.sqrt(), "corr = {corr}");
    }

    #[test]
    fn bernoulli_threshold_edges() {
        assert_eq!(bernoulli_threshold(0.0), 0);
        assert_eq!(bernoulli_threshold(1.0), u64::MAX);
        let t = bernoulli_threshold(0.5);
        assert_eq!(t, 1u64 << 63);
    }
}
