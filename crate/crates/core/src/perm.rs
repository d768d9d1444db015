//! Reproducible per-level permutations: splitmix64 seeded with
//! `seed ^ level`, driving a descending Fisher–Yates shuffle.

use crate::error::{Error, Result};

/// Largest level a permutation is built for (2^32 entries).
pub const MAX_PERM_LEVEL: u64 = 32;

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Fisher–Yates from the top index down: `j = next % (i + 1)`, swap `i, j`.
pub fn shuffle<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// The order in which the words of one level are emitted: output slot `i`
/// carries the word at position `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelPermutation {
    level: u64,
    seed: u64,
    perm: Vec<u32>,
}

impl LevelPermutation {
    pub fn new(level: u64, seed: u64) -> Result<Self> {
        if level > MAX_PERM_LEVEL {
            return Err(Error::Budget(format!(
                "permutation of level {level} exceeds {MAX_PERM_LEVEL}"
            )));
        }
        let size = 1usize << level;
        let mut perm: Vec<u32> = (0..size).map(|i| i as u32).collect();
        let mut rng = SplitMix64::new(seed ^ level);
        shuffle(&mut perm, &mut rng);
        Ok(LevelPermutation { level, seed, perm })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, slot: u64) -> u64 {
        self.perm[slot as usize] as u64
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.perm
    }

    /// Checks that every index is hit exactly once.
    pub fn is_bijection(&self) -> bool {
        let mut hit = vec![false; self.perm.len()];
        for &p in &self.perm {
            match hit.get_mut(p as usize) {
                Some(h) if !*h => *h = true,
                _ => return false,
            }
        }
        true
    }
}
