use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::compose::{FilterState, PairState};
use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Largest `V_A * V_B` accepted by the dense pair-keyed tables.
pub const MAX_PAIRS: u64 = 100_000_000;

/// Dimensions of the composed state space.
///
/// A node pair `(ua, ub)` has pair index `ua * V_B + ub`; adding the filter
/// state gives the flattened key `(ua * V_B + ub) * 3 + f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSpace {
    pub nodes_a: u64,
    pub nodes_b: u64,
}

impl PairSpace {
    pub fn new(nodes_a: usize, nodes_b: usize) -> Result<Self> {
        let pairs = (nodes_a as u64).saturating_mul(nodes_b as u64);
        if pairs > MAX_PAIRS {
            return Err(Error::ResourceLimit(format!(
                "pair space {nodes_a} x {nodes_b} = {pairs} exceeds {MAX_PAIRS} pairs"
            )));
        }
        Ok(PairSpace {
            nodes_a: nodes_a as u64,
            nodes_b: nodes_b as u64,
        })
    }

    #[inline]
    pub fn num_pairs(&self) -> u64 {
        self.nodes_a * self.nodes_b
    }

    #[inline]
    pub fn num_keys(&self) -> u64 {
        self.num_pairs() * 3
    }

    #[inline]
    pub fn pair_index(&self, ua: NodeId, ub: NodeId) -> u64 {
        ua as u64 * self.nodes_b + ub as u64
    }

    #[inline]
    pub fn key(&self, p: PairState) -> u64 {
        self.pair_index(p.ua, p.ub) * 3 + p.f as u64
    }

    #[inline]
    pub fn pair_of_index(&self, index: u64) -> (NodeId, NodeId) {
        ((index / self.nodes_b) as NodeId, (index % self.nodes_b) as NodeId)
    }

    #[inline]
    pub fn state_of_key(&self, key: u64) -> PairState {
        let (ua, ub) = self.pair_of_index(key / 3);
        PairState {
            ua,
            ub,
            f: FilterState::from_index((key % 3) as u8),
        }
    }
}

/// A fixed-size bitmap with atomic test-and-set.
pub struct MarkerTable {
    words: Vec<AtomicU64>,
    len: u64,
}

impl MarkerTable {
    pub fn new(len: u64) -> Self {
        let n = len.div_ceil(64) as usize;
        MarkerTable {
            words: (0..n).map(|_| AtomicU64::new(0)).collect(),
            len,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: u64) -> bool {
        debug_assert!(i < self.len);
        self.words[(i / 64) as usize].load(Ordering::Relaxed) & (1 << (i % 64)) != 0
    }

    /// Sets bit `i`; returns `true` iff this call changed it from unset. Of
    /// any number of concurrent callers on the same bit, exactly one wins.
    #[inline]
    pub fn test_and_set(&self, i: u64) -> bool {
        debug_assert!(i < self.len);
        let word = &self.words[(i / 64) as usize];
        let mask = 1u64 << (i % 64);
        if word.load(Ordering::Relaxed) & mask != 0 {
            return false;
        }
        word.fetch_or(mask, Ordering::Relaxed) & mask == 0
    }

    pub fn count_ones(&self) -> u64 {
        self.words
            .par_iter()
            .map(|w| w.load(Ordering::Relaxed).count_ones() as u64)
            .sum()
    }

    /// Indices of all set bits, ascending.
    pub fn ones(&self) -> Vec<u64> {
        self.words
            .par_iter()
            .enumerate()
            .flat_map_iter(|(wi, w)| {
                let mut bits = w.load(Ordering::Relaxed);
                std::iter::from_fn(move || {
                    if bits == 0 {
                        return None;
                    }
                    let b = bits.trailing_zeros() as u64;
                    bits &= bits - 1;
                    Some(wi as u64 * 64 + b)
                })
            })
            .collect()
    }

    /// Prefix popcounts so that set bits can be numbered by rank.
    pub fn rank_index(&self) -> RankIndex<'_> {
        let mut prefix = Vec::with_capacity(self.words.len() + 1);
        let mut total = 0u64;
        prefix.push(0);
        for w in &self.words {
            total += w.load(Ordering::Relaxed).count_ones() as u64;
            prefix.push(total);
        }
        RankIndex { table: self, prefix }
    }
}

/// Maps each set bit of a [`MarkerTable`] to the number of set bits below it.
pub struct RankIndex<'t> {
    table: &'t MarkerTable,
    prefix: Vec<u64>,
}

impl RankIndex<'_> {
    #[inline]
    pub fn rank(&self, i: u64) -> u64 {
        let wi = (i / 64) as usize;
        let below = self.table.words[wi].load(Ordering::Relaxed) & ((1u64 << (i % 64)) - 1);
        self.prefix[wi] + below.count_ones() as u64
    }

    pub fn total(&self) -> u64 {
        *self.prefix.last().unwrap()
    }
}
