//! Brute-force frequent itemsets, for checking the engines on small inputs.
//!
//! Every nonempty combination of the items that occur in the database is
//! counted by a linear scan. Nothing here depends on the mining engines.

use crate::bitcore::{contains, min_support_count, BitDatabase, Mask64};
use crate::error::{Error, Result};

/// Largest item universe the enumeration accepts.
pub const MAX_ORACLE_ITEMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// `(mask, support)` sorted by `(k, mask)`.
    pub frequent: Vec<(Mask64, u64)>,
}

pub fn bruteforce_frequent(db: &BitDatabase, minsup: f64) -> Result<OracleResult> {
    if db.universe() > MAX_ORACLE_ITEMS {
        return Err(Error::UniverseTooLarge(db.universe()));
    }
    if !(minsup > 0.0 && minsup <= 1.0) {
        return Err(Error::InvalidParams(format!("minsup {minsup} is not in (0, 1]")));
    }
    let threshold = min_support_count(minsup, db.len());
    let occurring = db.occurring_items().0;

    let mut frequent = Vec::new();
    // walk every nonempty submask of the occurring items
    let mut sub = occurring;
    while sub != 0 {
        let candidate = Mask64(sub);
        let support = db.masks().iter().filter(|&&t| contains(candidate, t)).count() as u64;
        if support >= threshold {
            frequent.push((candidate, support));
        }
        sub = (sub - 1) & occurring;
    }
    frequent.sort_unstable_by_key(|&(m, _)| (m.cardinality(), m));
    Ok(OracleResult { frequent })
}
