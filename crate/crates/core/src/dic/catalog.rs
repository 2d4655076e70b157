use std::collections::HashSet;

use super::{CountedItemset, Shape};
use crate::bitcore::Mask64;

/// The DASHED and SOLID collections plus the indexes candidate generation needs.
///
/// `known` holds every mask ever inserted so that a candidate is never created
/// twice. `boxes` holds every mask that has reached a box shape; box status is
/// never lost once gained. `fresh_boxes` lists boxes that have not yet been
/// used as a join seed.
#[derive(Debug, Clone, Default)]
pub struct ItemsetCatalog {
    dashed: Vec<CountedItemset>,
    solid: Vec<CountedItemset>,
    known: HashSet<Mask64>,
    boxes: HashSet<Mask64>,
    fresh_boxes: Vec<Mask64>,
    frequent_items: Mask64,
}

impl ItemsetCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dashed(&self) -> &[CountedItemset] {
        &self.dashed
    }

    pub fn solid(&self) -> &[CountedItemset] {
        &self.solid
    }

    pub(crate) fn dashed_mut(&mut self) -> &mut [CountedItemset] {
        &mut self.dashed
    }

    pub fn knows(&self, mask: Mask64) -> bool {
        self.known.contains(&mask)
    }

    pub fn is_box(&self, mask: Mask64) -> bool {
        self.boxes.contains(&mask)
    }

    /// OR of all frequent 1-itemsets.
    pub fn frequent_items(&self) -> Mask64 {
        self.frequent_items
    }

    #[cfg(test)]
    pub(crate) fn fresh_boxes_for_test(&mut self, mask: Mask64) {
        self.fresh_boxes.push(mask);
    }

    pub(crate) fn take_fresh_boxes(&mut self) -> Vec<Mask64> {
        std::mem::take(&mut self.fresh_boxes)
    }

    /// Appends an itemset to DASHED. Returns `false` (and does nothing) when
    /// the mask is already known.
    pub fn push_dashed(&mut self, itemset: CountedItemset) -> bool {
        assert!(itemset.shape.is_dashed(), "DASHED only holds dashed shapes");
        if !self.known.insert(itemset.mask) {
            return false;
        }
        if itemset.shape.is_box() {
            self.mark_box(itemset.mask);
        }
        self.dashed.push(itemset);
        true
    }

    /// Appends an itemset to SOLID. Returns `false` when the mask is already known.
    pub fn push_solid(&mut self, itemset: CountedItemset) -> bool {
        assert!(itemset.shape.is_solid(), "SOLID only holds solid shapes");
        if !self.known.insert(itemset.mask) {
            return false;
        }
        if itemset.shape.is_box() {
            self.mark_box(itemset.mask);
        }
        self.solid.push(itemset);
        true
    }

    /// Moves an already-known itemset that left DASHED into SOLID.
    pub(crate) fn retire(&mut self, itemset: CountedItemset) {
        debug_assert!(itemset.shape.is_solid() && self.known.contains(&itemset.mask));
        if itemset.shape.is_box() {
            self.mark_box(itemset.mask);
        }
        self.solid.push(itemset);
    }

    pub(crate) fn mark_box(&mut self, mask: Mask64) {
        if self.boxes.insert(mask) {
            self.fresh_boxes.push(mask);
            if mask.cardinality() == 1 {
                self.frequent_items = self.frequent_items.join(mask);
            }
        }
    }

    /// Drops `Nil` entries from DASHED, keeping survivors in order.
    pub(crate) fn erase_nil(&mut self) -> usize {
        let before = self.dashed.len();
        self.dashed.retain(|it| it.shape != Shape::Nil);
        before - self.dashed.len()
    }

    /// All fully counted frequent itemsets.
    pub fn solid_boxes(&self) -> impl Iterator<Item = &CountedItemset> {
        self.solid.iter().filter(|it| it.shape == Shape::SolidBox)
    }
}
