//! Dynamic Itemset Counting.
//!
//! The database is cut into `stop_max` chunks of `M` transactions. Every
//! itemset under count ("dashed") accumulates one chunk per stop; at each stop
//! the engine promotes, prunes, spawns new candidates, and retires itemsets
//! that have seen every chunk once. Two engines share these steps:
//! [`mine_serial`] counts with transactions in the outer loop, [`mine_parallel`]
//! swaps the loops so that each worker owns whole itemsets.

mod audit;
mod catalog;
mod engine;
mod ops;
mod params;

pub use audit::{Transition, TransitionLog};
pub use catalog::ItemsetCatalog;
pub use engine::{mine_parallel, mine_serial, Engine, Miner};
pub use ops::{
    check_full_pass, count_support_interval, first_pass, make_candidates, prune, Exec,
};
pub use params::MiningParams;

use std::time::Duration;

use crate::bitcore::Mask64;

/// Where an itemset sits in its lifecycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// Under count, not yet known to be frequent.
    DashedCircle,
    /// Under count, already frequent.
    DashedBox,
    /// Fully counted, infrequent.
    SolidCircle,
    /// Fully counted, frequent.
    SolidBox,
    /// Marked for removal from the dashed collection.
    Nil,
}

impl Shape {
    pub fn is_dashed(self) -> bool {
        matches!(self, Shape::DashedCircle | Shape::DashedBox)
    }

    pub fn is_solid(self) -> bool {
        matches!(self, Shape::SolidCircle | Shape::SolidBox)
    }

    pub fn is_box(self) -> bool {
        matches!(self, Shape::DashedBox | Shape::SolidBox)
    }

    /// Edges of the lifecycle graph. Solid shapes and `Nil` are terminal.
    pub fn can_transition_to(self, next: Shape) -> bool {
        use Shape::*;
        matches!(
            (self, next),
            (DashedCircle, DashedBox)
                | (DashedCircle, SolidCircle)
                | (DashedBox, SolidBox)
                | (DashedCircle, Nil)
                | (DashedBox, Nil)
        )
    }
}

/// One itemset together with its counting state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountedItemset {
    pub mask: Mask64,
    pub k: u32,
    /// Number of chunks this itemset has been counted over.
    pub stop: u32,
    pub supp: u64,
    pub shape: Shape,
}

impl CountedItemset {
    /// A fresh candidate: nothing counted yet.
    pub fn candidate(mask: Mask64) -> Self {
        CountedItemset { mask, k: mask.cardinality(), stop: 0, supp: 0, shape: Shape::DashedCircle }
    }

    pub fn with_counts(mask: Mask64, stop: u32, supp: u64, shape: Shape) -> Self {
        CountedItemset { mask, k: mask.cardinality(), stop, supp, shape }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrequentItemset {
    pub k: u32,
    pub mask: Mask64,
    pub support: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MiningStats {
    /// Chunks of `M` transactions read after the first pass.
    pub chunks_scanned: u64,
    pub stop_max: u32,
    pub peak_dashed: usize,
    pub candidates_generated: u64,
    pub candidates_pruned: u64,
    /// Sum over all counted chunks of the number of itemsets counted in it.
    pub itemset_chunks_counted: u64,
    pub wall_time: Duration,
}

impl MiningStats {
    /// Full scans of the database, including the first pass.
    pub fn passes(&self) -> f64 {
        1.0 + self.chunks_scanned as f64 / f64::from(self.stop_max.max(1))
    }
}

#[derive(Debug, Clone)]
pub struct MiningResult {
    /// Sorted by `(k, mask)`.
    pub frequent: Vec<FrequentItemset>,
    pub stats: MiningStats,
    /// Present when the run was audited.
    pub transitions: Option<TransitionLog>,
}

impl MiningResult {
    pub fn support_of(&self, mask: Mask64) -> Option<u64> {
        let k = mask.cardinality();
        self.frequent
            .binary_search_by(|f| (f.k, f.mask).cmp(&(k, mask)))
            .ok()
            .map(|i| self.frequent[i].support)
    }

    pub fn max_k(&self) -> u32 {
        self.frequent.last().map_or(0, |f| f.k)
    }
}
