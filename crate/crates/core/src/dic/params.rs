use std::ops::Range;

use crate::bitcore::min_support_count;
use crate::error::{Error, Result};

/// Run parameters, validated against the database size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MiningParams {
    minsup: f64,
    interval: usize,
    threads: usize,
    n: usize,
    minsup_count: u64,
    stop_max: u32,
    bound_pruning: bool,
}

impl MiningParams {
    /// `minsup` is a fraction in `(0, 1]`, `interval` is `M`, the number of
    /// transactions between two stops.
    pub fn new(minsup: f64, interval: usize, threads: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDatabase);
        }
        if !(minsup > 0.0 && minsup <= 1.0) {
            return Err(Error::InvalidParams(format!("minsup {minsup} is not in (0, 1]")));
        }
        if interval == 0 || interval > n {
            return Err(Error::InvalidParams(format!(
                "interval {interval} is not in 1..={n}"
            )));
        }
        if threads == 0 {
            return Err(Error::InvalidParams("thread count must be at least 1".into()));
        }
        let stop_max = n.div_ceil(interval);
        let stop_max = u32::try_from(stop_max)
            .map_err(|_| Error::InvalidParams(format!("{stop_max} stops do not fit in u32")))?;
        Ok(MiningParams {
            minsup,
            interval,
            threads,
            n,
            minsup_count: min_support_count(minsup, n),
            stop_max,
            bound_pruning: true,
        })
    }

    /// Uses `M = ceil(n / 2)` when no interval is given.
    pub fn with_default_interval(minsup: f64, interval: Option<usize>, threads: usize, n: usize) -> Result<Self> {
        let interval = interval.unwrap_or_else(|| crate::bench::default_interval(n));
        Self::new(minsup, interval, threads, n)
    }

    /// Toggles the highest-possible-support pruning branch.
    pub fn with_bound_pruning(mut self, enabled: bool) -> Self {
        self.bound_pruning = enabled;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::InvalidParams("thread count must be at least 1".into()));
        }
        self.threads = threads;
        Ok(self)
    }

    pub fn minsup(&self) -> f64 {
        self.minsup
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn minsup_count(&self) -> u64 {
        self.minsup_count
    }

    pub fn stop_max(&self) -> u32 {
        self.stop_max
    }

    pub fn bound_pruning(&self) -> bool {
        self.bound_pruning
    }

    /// Transactions of chunk `stop` (1-based); the last chunk may be short.
    pub fn chunk(&self, stop: u32) -> Range<usize> {
        debug_assert!(stop >= 1 && stop <= self.stop_max);
        let first = (stop as usize - 1) * self.interval;
        first..(first + self.interval).min(self.n)
    }

    /// Highest support an itemset can still reach after `stop` counted chunks.
    pub fn highest_possible_support(&self, supp: u64, stop: u32) -> u64 {
        let remaining = u64::from(self.stop_max.saturating_sub(stop));
        supp + self.interval as u64 * remaining
    }
}
