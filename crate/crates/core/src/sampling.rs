//! Seeded random streams and uniform tuple sampling.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Generator behind every [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// Human-readable description of the generator, recorded in run metadata.
pub const GENERATOR_DESCRIPTION: &str =
    "ChaCha8 (rand_chacha 0.9): key from seed_from_u64(master_seed), 64-bit stream selector = stream_id";

/// Handle naming one reproducible random stream.
///
/// Identical `(master_seed, stream_id)` pairs always produce the same sequence;
/// trials use `stream_id = trial index` so parallel scheduling cannot change
/// their draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent stream for a sub-purpose of the same trial (scene, algorithm, ...).
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            master_seed: splitmix64(self.master_seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream_id: self.stream_id,
        }
    }

    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A sorted set of distinct point indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleDraw(Vec<usize>);

impl TupleDraw {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("tuple indices must be distinct"));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Whether tuples may repeat across iterations of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ReplacementMode {
    #[default]
    With,
    Without,
}

impl fmt::Display for ReplacementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReplacementMode::With => "with",
            ReplacementMode::Without => "without",
        })
    }
}

impl std::str::FromStr for ReplacementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with" => Ok(Self::With),
            "without" => Ok(Self::Without),
            other => Err(Error::invalid(format!("unknown replacement mode `{other}`"))),
        }
    }
}

/// Exact `C(n, q)`, or `None` if it overflows `u128`.
pub fn subset_count(n: usize, q: usize) -> Option<u128> {
    if q > n {
        return Some(0);
    }
    let q = q.min(n - q);
    let mut acc: u128 = 1;
    for i in 0..q {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn check_sizes(n: usize, q: usize) -> Result<()> {
    if q == 0 || q > n {
        return Err(Error::invalid(format!("tuple size {q} must be in 1..={n}")));
    }
    Ok(())
}

/// Uniformly random `q`-subset of `0..n`.
pub fn sample_tuple<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> Result<TupleDraw> {
    check_sizes(n, q)?;
    let mut indices = index::sample(rng, n, q).into_vec();
    indices.sort_unstable();
    Ok(TupleDraw(indices))
}

/// Uniformly random `q`-subset of `0..n` that is not in `seen`.
///
/// Rejection sampling keeps the draw exactly uniform over the unseen subsets.
/// The caller records the result in `seen`.
pub fn sample_tuple_without_replacement<R: Rng + ?Sized>(
    n: usize,
    q: usize,
    seen: &HashSet<TupleDraw>,
    rng: &mut R,
) -> Result<TupleDraw> {
    check_sizes(n, q)?;
    if let Some(total) = subset_count(n, q) {
        if seen.len() as u128 >= total {
            return Err(Error::ExhaustedSampler { total });
        }
    }
    loop {
        let draw = sample_tuple(n, q, rng)?;
        if !seen.contains(&draw) {
            return Ok(draw);
        }
    }
}

/// Stateful sampler for one algorithm run.
#[derive(Debug, Clone)]
pub struct TupleSampler {
    n: usize,
    q: usize,
    mode: ReplacementMode,
    seen: HashSet<TupleDraw>,
}

impl TupleSampler {
    pub fn new(n: usize, q: usize, mode: ReplacementMode) -> Result<Self> {
        check_sizes(n, q)?;
        Ok(Self {
            n,
            q,
            mode,
            seen: HashSet::new(),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<TupleDraw> {
        match self.mode {
            ReplacementMode::With => sample_tuple(self.n, self.q, rng),
            ReplacementMode::Without => {
                let draw = sample_tuple_without_replacement(self.n, self.q, &self.seen, rng)?;
                self.seen.insert(draw.clone());
                Ok(draw)
            }
        }
    }
}
