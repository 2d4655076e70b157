//! Direct bit representation of transactions and itemsets.
//!
//! Every transaction and every itemset is a single 64-bit word where bit `p`
//! is set when item `p` is present. Containment is one AND and one compare.

use std::fmt;
use std::ops::{BitAnd, BitOr};

use crate::error::{Error, Result};

/// Number of items a single mask can hold.
pub const MAX_ITEMS: usize = 64;

/// Zero-based item index; doubles as the bit position inside a [`Mask64`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(u8);

impl ItemId {
    pub fn new(value: u32) -> Result<Self> {
        if (value as usize) < MAX_ITEMS {
            Ok(ItemId(value as u8))
        } else {
            Err(Error::ItemOutOfRange { item: u64::from(value), line: None })
        }
    }

    pub fn value(self) -> u32 {
        u32::from(self.0)
    }

    pub fn bit(self) -> Mask64 {
        Mask64(1u64 << self.0)
    }
}

impl TryFrom<u64> for ItemId {
    type Error = Error;

    fn try_from(value: u64) -> Result<Self> {
        if value < MAX_ITEMS as u64 {
            Ok(ItemId(value as u8))
        } else {
            Err(Error::ItemOutOfRange { item: value, line: None })
        }
    }
}

/// Bit-packed itemset or transaction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Mask64(pub u64);

impl Mask64 {
    pub const EMPTY: Mask64 = Mask64(0);

    /// `true` when every item of `self` is also in `transaction`.
    #[inline(always)]
    pub fn is_subset_of(self, transaction: Mask64) -> bool {
        self.0 & transaction.0 == self.0
    }

    #[inline(always)]
    pub fn join(self, other: Mask64) -> Mask64 {
        Mask64(self.0 | other.0)
    }

    #[inline(always)]
    pub fn cardinality(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn has_item(self, item: ItemId) -> bool {
        self.0 & item.bit().0 != 0
    }

    /// Items in ascending order.
    pub fn items(self) -> Items {
        Items(self.0)
    }

    /// Every mask obtained by clearing exactly one set bit.
    pub fn immediate_subsets(self) -> impl Iterator<Item = Mask64> {
        let full = self.0;
        Items(full).map(move |item| Mask64(full & !(1u64 << item.0)))
    }
}

impl BitOr for Mask64 {
    type Output = Mask64;

    fn bitor(self, rhs: Mask64) -> Mask64 {
        self.join(rhs)
    }
}

impl BitAnd for Mask64 {
    type Output = Mask64;

    fn bitand(self, rhs: Mask64) -> Mask64 {
        Mask64(self.0 & rhs.0)
    }
}

impl fmt::Display for Mask64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}

impl FromIterator<ItemId> for Mask64 {
    fn from_iter<I: IntoIterator<Item = ItemId>>(iter: I) -> Self {
        iter.into_iter().fold(Mask64::EMPTY, |acc, item| acc.join(item.bit()))
    }
}

/// Iterator over the set bits of a mask, lowest first.
#[derive(Debug, Clone)]
pub struct Items(u64);

impl Iterator for Items {
    type Item = ItemId;

    fn next(&mut self) -> Option<ItemId> {
        if self.0 == 0 {
            return None;
        }
        let bit = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(ItemId(bit as u8))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Items {}

/// Packs raw item ids into a mask. Duplicates collapse onto the same bit.
pub fn encode_transaction<I>(items: I) -> Result<Mask64>
where
    I: IntoIterator,
    I::Item: Into<u64>,
{
    let mut mask = 0u64;
    for raw in items {
        let item = ItemId::try_from(raw.into())?;
        mask |= 1u64 << item.0;
    }
    Ok(Mask64(mask))
}

pub fn contains(itemset: Mask64, transaction: Mask64) -> bool {
    itemset.is_subset_of(transaction)
}

pub fn join(a: Mask64, b: Mask64) -> Mask64 {
    a.join(b)
}

pub fn cardinality(mask: Mask64) -> u32 {
    mask.cardinality()
}

/// Absolute support threshold: the smallest count `c` with `c >= minsup * n`.
///
/// `minsup * n` is snapped to the nearest integer when it is within a few ulps
/// of it, so that e.g. `0.1 * 30` yields 3 and not 4.
pub fn min_support_count(minsup: f64, n: usize) -> u64 {
    let exact = minsup * n as f64;
    let nearest = exact.round();
    let count = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    (count as u64).max(1)
}

/// Read-only array of transaction masks; `m` is the size of the item universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitDatabase {
    masks: Vec<Mask64>,
    m: usize,
}

impl BitDatabase {
    /// Builds a database, inferring `m` from the highest item present.
    pub fn new(masks: Vec<Mask64>) -> Result<Self> {
        let union = masks.iter().fold(0u64, |acc, t| acc | t.0);
        let m = (MAX_ITEMS - union.leading_zeros() as usize).max(1);
        Self::with_universe(masks, m)
    }

    pub fn with_universe(masks: Vec<Mask64>, m: usize) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::InvalidUniverse(m));
        }
        if m < MAX_ITEMS {
            let outside = !((1u64 << m) - 1);
            if let Some(line) = masks.iter().position(|t| t.0 & outside != 0) {
                let item = 63 - (masks[line].0 & outside).leading_zeros();
                return Err(Error::ItemOutOfRange { item: u64::from(item), line: Some(line + 1) });
            }
        }
        Ok(BitDatabase { masks, m })
    }

    pub fn from_raw(words: Vec<u64>) -> Result<Self> {
        Self::new(words.into_iter().map(Mask64).collect())
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    /// Always `false` for a constructed database; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.m
    }

    pub fn masks(&self) -> &[Mask64] {
        &self.masks
    }

    /// Raw words, for kernels that want plain `u64` slices.
    pub fn words(&self) -> &[u64] {
        // SAFETY: Mask64 is repr(transparent) over u64.
        unsafe { std::slice::from_raw_parts(self.masks.as_ptr().cast::<u64>(), self.masks.len()) }
    }

    /// OR of every transaction: the items that occur at least once.
    pub fn occurring_items(&self) -> Mask64 {
        Mask64(self.words().iter().fold(0, |acc, &t| acc | t))
    }
}
