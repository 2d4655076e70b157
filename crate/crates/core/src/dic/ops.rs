//! The per-stop steps shared by both engines.

use std::collections::HashSet;
use std::ops::Range;

use rayon::prelude::*;

use super::audit::Recorder;
use super::{CountedItemset, ItemsetCatalog, MiningParams, Shape};
use crate::bitcore::{BitDatabase, ItemId, Mask64};

/// Transactions per tile when a worker counts several itemsets; keeps the
/// tile resident in L2 while every owned itemset sweeps over it.
const TILE: usize = 4096;

/// How a step runs.
///
/// `Parallel` steps use rayon and run on whatever pool is current, so the
/// caller is expected to `install` a pool sized to `threads`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    /// Single thread, classic loop order (transactions outer, itemsets inner).
    Serial,
    /// Swapped loop order with itemset-level or nested transaction-level splitting.
    Parallel { threads: usize },
}

impl Exec {
    fn filter_map_mut<R, F>(self, items: &mut [CountedItemset], f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&mut CountedItemset) -> Option<R> + Sync + Send,
    {
        match self {
            Exec::Serial => items.iter_mut().filter_map(f).collect(),
            Exec::Parallel { .. } => items.par_iter_mut().filter_map(f).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneOutcome {
    pub promoted: usize,
    pub pruned: usize,
}

type CountKernel = fn(u64, &[u64]) -> u64;

#[inline(always)]
fn count_in(mask: u64, transactions: &[u64]) -> u64 {
    transactions.iter().map(|&t| u64::from(t & mask == mask)).sum()
}

/// The containment-count loop, recompiled for the widest vector unit the CPU has.
fn count_kernel() -> CountKernel {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            return simd::count_in_avx512;
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            return simd::count_in_avx2;
        }
    }
    count_in
}

#[cfg(target_arch = "x86_64")]
mod simd {
    #[target_feature(enable = "avx512f")]
    unsafe fn avx512(mask: u64, transactions: &[u64]) -> u64 {
        super::count_in(mask, transactions)
    }

    #[target_feature(enable = "avx2")]
    unsafe fn avx2(mask: u64, transactions: &[u64]) -> u64 {
        super::count_in(mask, transactions)
    }

    pub(super) fn count_in_avx512(mask: u64, transactions: &[u64]) -> u64 {
        // SAFETY: only handed out by `count_kernel` after runtime detection.
        unsafe { avx512(mask, transactions) }
    }

    pub(super) fn count_in_avx2(mask: u64, transactions: &[u64]) -> u64 {
        // SAFETY: as above.
        unsafe { avx2(mask, transactions) }
    }
}

/// Counts every itemset of `owned` over all of `transactions`, tile by tile.
fn count_owned(owned: &mut [CountedItemset], transactions: &[u64], kernel: CountKernel) {
    for tile in transactions.chunks(TILE) {
        for it in owned.iter_mut() {
            it.supp += kernel(it.mask.0, tile);
        }
    }
    for it in owned.iter_mut() {
        it.stop += 1;
    }
}

/// Counts one chunk `[range.start, range.end)` of the database for every dashed itemset.
///
/// Each itemset's `stop` goes up by one and its `supp` by the number of
/// transactions in the chunk that contain it. The result does not depend on
/// `exec`.
pub fn count_support_interval(
    dashed: &mut [CountedItemset],
    db: &BitDatabase,
    range: Range<usize>,
    exec: Exec,
) {
    debug_assert!(dashed.iter().all(|it| it.shape.is_dashed()));
    if dashed.is_empty() {
        return;
    }
    let chunk = &db.words()[range];
    let kernel = count_kernel();
    match exec {
        Exec::Serial => {
            for &t in chunk {
                for it in dashed.iter_mut() {
                    if it.mask.0 & t == it.mask.0 {
                        it.supp += 1;
                    }
                }
            }
            for it in dashed.iter_mut() {
                it.stop += 1;
            }
        }
        Exec::Parallel { threads: 1 } => count_owned(dashed, chunk, kernel),
        Exec::Parallel { threads } if dashed.len() >= threads => {
            let per_worker = dashed.len().div_ceil(threads);
            dashed
                .par_chunks_mut(per_worker)
                .for_each(|owned| count_owned(owned, chunk, kernel));
        }
        Exec::Parallel { threads } => {
            // Fewer itemsets than workers: each itemset gets its own group of
            // workers that split the chunk and add up their partial counts.
            let group = threads.div_ceil(dashed.len());
            let piece = chunk.len().div_ceil(group).max(1);
            dashed.par_iter_mut().for_each(|it| {
                let mask = it.mask.0;
                let partial: u64 = chunk.par_chunks(piece).map(|part| kernel(mask, part)).sum();
                it.supp += partial;
                it.stop += 1;
            });
        }
    }
}

/// Full first pass: counts every 1-itemset over the whole database, files
/// them into SOLID, and seeds DASHED with the 2-itemset candidates.
pub fn first_pass(db: &BitDatabase, params: &MiningParams, exec: Exec) -> ItemsetCatalog {
    first_pass_recorded(db, params, exec, &mut Recorder::disabled())
}

pub(crate) fn first_pass_recorded(
    db: &BitDatabase,
    params: &MiningParams,
    exec: Exec,
    rec: &mut Recorder,
) -> ItemsetCatalog {
    let tally = |mut acc: [u64; 64], part: &[u64]| {
        for &t in part {
            let mut bits = t;
            while bits != 0 {
                acc[bits.trailing_zeros() as usize] += 1;
                bits &= bits - 1;
            }
        }
        acc
    };
    let counts = match exec {
        Exec::Serial | Exec::Parallel { threads: 1 } => tally([0; 64], db.words()),
        Exec::Parallel { threads } => {
            let piece = db.len().div_ceil(threads).max(1);
            db.words()
                .par_chunks(piece)
                .map(|part| tally([0; 64], part))
                .reduce(
                    || [0; 64],
                    |mut a, b| {
                        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        a
                    },
                )
        }
    };

    let mut catalog = ItemsetCatalog::new();
    for item in 0..db.universe() as u32 {
        let mask = ItemId::new(item).expect("universe is at most 64").bit();
        let supp = counts[item as usize];
        let shape = if supp >= params.minsup_count() {
            Shape::SolidBox
        } else {
            Shape::SolidCircle
        };
        rec.record(mask, None, Shape::DashedCircle);
        if shape == Shape::SolidBox {
            rec.record(mask, Some(Shape::DashedCircle), Shape::DashedBox);
            rec.record(mask, Some(Shape::DashedBox), Shape::SolidBox);
        } else {
            rec.record(mask, Some(Shape::DashedCircle), Shape::SolidCircle);
        }
        catalog.push_solid(CountedItemset::with_counts(mask, params.stop_max(), supp, shape));
    }
    make_candidates_recorded(&mut catalog, rec);
    catalog
}

/// Promotes circles that reached the threshold and drops circles that can no
/// longer reach it, together with their dashed-circle supersets.
pub fn prune(catalog: &mut ItemsetCatalog, params: &MiningParams, exec: Exec) -> PruneOutcome {
    prune_recorded(catalog, params, exec, &mut Recorder::disabled())
}

pub(crate) fn prune_recorded(
    catalog: &mut ItemsetCatalog,
    params: &MiningParams,
    exec: Exec,
    rec: &mut Recorder,
) -> PruneOutcome {
    #[derive(Clone, Copy)]
    enum Verdict {
        Promoted(Mask64),
        Pruned(Mask64),
    }

    let threshold = params.minsup_count();
    let verdicts = exec.filter_map_mut(catalog.dashed_mut(), |it| {
        if it.shape != Shape::DashedCircle {
            return None;
        }
        if it.supp >= threshold {
            it.shape = Shape::DashedBox;
            Some(Verdict::Promoted(it.mask))
        } else if params.bound_pruning()
            && params.highest_possible_support(it.supp, it.stop) < threshold
        {
            it.shape = Shape::Nil;
            Some(Verdict::Pruned(it.mask))
        } else {
            None
        }
    });

    let mut outcome = PruneOutcome::default();
    let mut roots = Vec::new();
    for v in &verdicts {
        match *v {
            Verdict::Promoted(mask) => {
                outcome.promoted += 1;
                rec.record(mask, Some(Shape::DashedCircle), Shape::DashedBox);
                catalog.mark_box(mask);
            }
            Verdict::Pruned(mask) => {
                rec.record(mask, Some(Shape::DashedCircle), Shape::Nil);
                roots.push(mask);
            }
        }
    }

    if !roots.is_empty() {
        let finder = SubsetFinder::new(&roots);
        let swept = exec.filter_map_mut(catalog.dashed_mut(), |it| {
            if it.shape == Shape::DashedCircle && finder.has_proper_subset_of(it.mask) {
                it.shape = Shape::Nil;
                Some(it.mask)
            } else {
                None
            }
        });
        for mask in swept {
            rec.record(mask, Some(Shape::DashedCircle), Shape::Nil);
        }
    }
    outcome.pruned = catalog.erase_nil();
    outcome
}

/// Answers "does any pruned mask sit strictly inside this one?".
struct SubsetFinder {
    roots: Vec<Mask64>,
    set: HashSet<Mask64>,
    min_k: u32,
}

impl SubsetFinder {
    fn new(roots: &[Mask64]) -> Self {
        SubsetFinder {
            roots: roots.to_vec(),
            set: roots.iter().copied().collect(),
            min_k: roots.iter().map(|r| r.cardinality()).min().unwrap_or(0),
        }
    }

    fn has_proper_subset_of(&self, mask: Mask64) -> bool {
        let k = mask.cardinality();
        if k <= self.min_k {
            return false;
        }
        // Enumerate submasks when that is cheaper than scanning the roots.
        if k < 63 && (1usize << k) <= self.roots.len() {
            let full = mask.0;
            let mut sub = (full - 1) & full;
            while sub != 0 {
                if self.set.contains(&Mask64(sub)) {
                    return true;
                }
                sub = (sub - 1) & full;
            }
            false
        } else {
            self.roots.iter().any(|&r| r != mask && r.is_subset_of(mask))
        }
    }
}

/// Joins every box that has not yet seeded candidates with each frequent item
/// and inserts the joins whose immediate subsets are all boxes. Returns the
/// number of candidates inserted.
///
/// A candidate becomes eligible exactly when its last immediate subset turns
/// into a box, and that subset is then a fresh box, so seeding from fresh
/// boxes finds the same candidates as joining all boxes.
pub fn make_candidates(catalog: &mut ItemsetCatalog) -> usize {
    make_candidates_recorded(catalog, &mut Recorder::disabled())
}

pub(crate) fn make_candidates_recorded(catalog: &mut ItemsetCatalog, rec: &mut Recorder) -> usize {
    let seeds = catalog.take_fresh_boxes();
    let items = catalog.frequent_items();
    let mut inserted = 0;
    for seed in seeds {
        for item in Mask64(items.0 & !seed.0).items() {
            let candidate = seed.join(item.bit());
            if catalog.knows(candidate) {
                continue;
            }
            if candidate.immediate_subsets().all(|s| catalog.is_box(s)) {
                catalog.push_dashed(CountedItemset::candidate(candidate));
                rec.record(candidate, None, Shape::DashedCircle);
                inserted += 1;
            }
        }
    }
    inserted
}

/// Retires every dashed itemset that has been counted over all `stop_max`
/// chunks into SOLID as a box or circle. Returns how many were retired.
pub fn check_full_pass(catalog: &mut ItemsetCatalog, params: &MiningParams, exec: Exec) -> usize {
    check_full_pass_recorded(catalog, params, exec, &mut Recorder::disabled())
}

pub(crate) fn check_full_pass_recorded(
    catalog: &mut ItemsetCatalog,
    params: &MiningParams,
    exec: Exec,
    rec: &mut Recorder,
) -> usize {
    let threshold = params.minsup_count();
    let stop_max = params.stop_max();
    let finished = exec.filter_map_mut(catalog.dashed_mut(), |it| {
        if it.stop != stop_max || !it.shape.is_dashed() {
            return None;
        }
        let before = it.shape;
        let mut done = it.clone();
        done.shape = if it.supp >= threshold { Shape::SolidBox } else { Shape::SolidCircle };
        it.shape = Shape::Nil;
        Some((before, done))
    });

    let retired = finished.len();
    for (before, done) in finished {
        if before == Shape::DashedCircle && done.shape == Shape::SolidBox {
            // frequent circle that skipped the promotion step
            rec.record(done.mask, Some(Shape::DashedCircle), Shape::DashedBox);
            rec.record(done.mask, Some(Shape::DashedBox), Shape::SolidBox);
        } else {
            rec.record(done.mask, Some(before), done.shape);
        }
        catalog.retire(done);
    }
    catalog.erase_nil();
    retired
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(words: &[u64]) -> BitDatabase {
        BitDatabase::from_raw(words.to_vec()).unwrap()
    }

    fn all_execs() -> Vec<Exec> {
        let mut v = vec![Exec::Serial];
        v.extend([1, 2, 3, 4, 8, 16].map(|threads| Exec::Parallel { threads }));
        v
    }

    fn brute_count(mask: u64, words: &[u64]) -> u64 {
        words.iter().filter(|&&t| t & mask == mask).count() as u64
    }

    #[test]
    fn first_pass_three_transactions() {
        let d = db(&[0x1, 0x3, 0x7]);
        let p = MiningParams::new(0.5, 1, 1, 3).unwrap();
        assert_eq!(p.minsup_count(), 2);
        for exec in all_execs() {
            let cat = first_pass(&d, &p, exec);
            let solid: Vec<_> = cat.solid().iter().map(|i| (i.mask.0, i.supp, i.shape)).collect();
            assert_eq!(
                solid,
                vec![(0x1, 3, Shape::SolidBox), (0x2, 2, Shape::SolidBox), (0x4, 1, Shape::SolidCircle)]
            );
            let dashed: Vec<_> = cat.dashed().iter().map(|i| (i.mask.0, i.stop, i.supp)).collect();
            assert_eq!(dashed, vec![(0x3, 0, 0)]);
        }
    }

    #[test]
    fn first_pass_without_frequent_items() {
        let d = db(&[0x1, 0x2]);
        let p = MiningParams::new(1.0, 1, 1, 2).unwrap();
        let cat = first_pass(&d, &p, Exec::Serial);
        assert!(cat.solid_boxes().next().is_none());
        assert!(cat.dashed().is_empty());
    }

    #[test]
    fn first_pass_single_transaction() {
        let d = db(&[0x3]);
        let p = MiningParams::new(1.0, 1, 1, 1).unwrap();
        let cat = first_pass(&d, &p, Exec::Parallel { threads: 4 });
        let boxes: Vec<_> = cat.solid_boxes().map(|i| i.mask.0).collect();
        assert_eq!(boxes, vec![0x1, 0x2]);
        assert_eq!(cat.dashed()[0].mask, Mask64(0x3));
    }

    #[test]
    fn count_interval_examples() {
        let d = db(&[0x5, 0x7, 0x6, 0x4]);
        for exec in all_execs() {
            let mut dashed = vec![CountedItemset::candidate(Mask64(0x4))];
            count_support_interval(&mut dashed, &d, 0..4, exec);
            assert_eq!((dashed[0].supp, dashed[0].stop), (4, 1), "{exec:?}");
        }
        let d = db(&[0x1, 0x2]);
        for exec in all_execs() {
            let mut dashed = vec![CountedItemset::with_counts(Mask64(0x3), 1, 2, Shape::DashedCircle)];
            count_support_interval(&mut dashed, &d, 0..2, exec);
            assert_eq!((dashed[0].supp, dashed[0].stop), (2, 2));
            let mut empty: Vec<CountedItemset> = vec![];
            count_support_interval(&mut empty, &d, 0..2, exec);
        }
    }

    #[test]
    fn count_interval_matches_brute_force_for_every_mode() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let words: Vec<u64> = (0..10_000).map(|_| rng.gen::<u64>() | rng.gen::<u64>()).collect();
        let d = db(&words);
        let masks: Vec<u64> = (0..40).map(|_| rng.gen::<u64>() & rng.gen::<u64>() & rng.gen::<u64>()).collect();
        // 40 itemsets covers the itemset-split mode, 3 itemsets the nested mode
        for take in [40usize, 3] {
            for exec in all_execs() {
                let mut dashed: Vec<_> =
                    masks[..take].iter().map(|&m| CountedItemset::candidate(Mask64(m))).collect();
                count_support_interval(&mut dashed, &d, 1234..9999, exec);
                for it in &dashed {
                    assert_eq!(it.supp, brute_count(it.mask.0, &words[1234..9999]));
                    assert_eq!(it.stop, 1);
                }
            }
        }
    }

    #[test]
    fn prune_bound_example() {
        // n = 50, M = 10, stop_max = 5, minsup_count = 40
        let p = MiningParams::new(0.8, 10, 1, 50).unwrap();
        let mut cat = ItemsetCatalog::new();
        cat.push_dashed(CountedItemset::with_counts(Mask64(0x3), 2, 3, Shape::DashedCircle));
        cat.push_dashed(CountedItemset::with_counts(Mask64(0x5), 2, 40, Shape::DashedCircle));
        cat.push_dashed(CountedItemset::with_counts(Mask64(0x6), 2, 25, Shape::DashedCircle));
        let out = prune(&mut cat, &p, Exec::Serial);
        assert_eq!(out, PruneOutcome { promoted: 1, pruned: 1 });
        let left: Vec<_> = cat.dashed().iter().map(|i| (i.mask.0, i.shape)).collect();
        assert_eq!(left, vec![(0x5, Shape::DashedBox), (0x6, Shape::DashedCircle)]);
        assert!(cat.is_box(Mask64(0x5)));
    }

    #[test]
    fn prune_takes_circle_supersets_along() {
        let p = MiningParams::new(0.8, 10, 1, 50).unwrap();
        for exec in all_execs() {
            let mut cat = ItemsetCatalog::new();
            cat.push_dashed(CountedItemset::with_counts(Mask64(0x3), 2, 3, Shape::DashedCircle));
            cat.push_dashed(CountedItemset::with_counts(Mask64(0x7), 0, 0, Shape::DashedCircle));
            cat.push_dashed(CountedItemset::with_counts(Mask64(0xb), 0, 0, Shape::DashedCircle));
            cat.push_dashed(CountedItemset::with_counts(Mask64(0xc), 0, 0, Shape::DashedCircle));
            let out = prune(&mut cat, &p, exec);
            assert_eq!(out.pruned, 3);
            let left: Vec<_> = cat.dashed().iter().map(|i| i.mask.0).collect();
            assert_eq!(left, vec![0xc]);
        }
    }

    #[test]
    fn prune_disabled_bound_only_promotes() {
        let p = MiningParams::new(0.8, 10, 1, 50).unwrap().with_bound_pruning(false);
        let mut cat = ItemsetCatalog::new();
        cat.push_dashed(CountedItemset::with_counts(Mask64(0x3), 2, 3, Shape::DashedCircle));
        assert_eq!(prune(&mut cat, &p, Exec::Serial), PruneOutcome::default());
        assert_eq!(cat.dashed().len(), 1);
    }

    #[test]
    fn subset_finder_agrees_with_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for size in [1usize, 5, 50, 600] {
            let roots: Vec<Mask64> = (0..size).map(|_| Mask64(rng.gen::<u64>() & 0x3ff)).collect();
            let finder = SubsetFinder::new(&roots);
            for _ in 0..500 {
                let m = Mask64(rng.gen::<u64>() & 0x3ff);
                let expected = roots.iter().any(|&r| r != m && r.is_subset_of(m));
                assert_eq!(finder.has_proper_subset_of(m), expected);
            }
        }
    }

    fn boxes_catalog(boxes: &[u64]) -> ItemsetCatalog {
        let mut cat = ItemsetCatalog::new();
        for &b in boxes {
            let shape = if Mask64(b).cardinality() == 1 { Shape::SolidBox } else { Shape::DashedBox };
            let it = CountedItemset::with_counts(Mask64(b), 1, 10, shape);
            if shape.is_solid() {
                cat.push_solid(it);
            } else {
                cat.push_dashed(it);
            }
        }
        cat
    }

    #[test]
    fn candidates_need_every_immediate_subset_boxed() {
        let mut cat = boxes_catalog(&[0x1, 0x2, 0x4, 0x3]);
        make_candidates(&mut cat);
        let new: Vec<_> = cat.dashed().iter().filter(|i| i.shape == Shape::DashedCircle).map(|i| i.mask.0).collect();
        // 0x5 and 0x6 appear as 2-candidates, 0x7 does not (0x5, 0x6 are not boxes)
        assert_eq!(new, vec![0x5, 0x6]);
        assert!(!cat.knows(Mask64(0x7)));
    }

    #[test]
    fn candidate_inserted_once() {
        let mut cat = boxes_catalog(&[0x1, 0x2, 0x4, 0x3, 0x5, 0x6]);
        make_candidates(&mut cat);
        let sevens = cat.dashed().iter().filter(|i| i.mask == Mask64(0x7)).count();
        assert_eq!(sevens, 1);
        let c = cat.dashed().iter().find(|i| i.mask == Mask64(0x7)).unwrap();
        assert_eq!((c.stop, c.supp, c.shape, c.k), (0, 0, Shape::DashedCircle, 3));
        assert_eq!(make_candidates(&mut cat), 0);
        // even when the boxes are offered as seeds again
        for m in [0x3u64, 0x5, 0x6] {
            cat.fresh_boxes_for_test(Mask64(m));
        }
        assert_eq!(make_candidates(&mut cat), 0);
    }

    #[test]
    fn no_boxes_no_candidates() {
        let mut cat = ItemsetCatalog::new();
        cat.push_dashed(CountedItemset::candidate(Mask64(0x3)));
        assert_eq!(make_candidates(&mut cat), 0);
        assert_eq!(cat.dashed().len(), 1);
    }

    #[test]
    fn full_pass_retirement() {
        // n = 4, M = 2 -> stop_max = 2, minsup_count = 2
        let p = MiningParams::new(0.5, 2, 1, 4).unwrap();
        for exec in all_execs() {
            let mut cat = ItemsetCatalog::new();
            cat.push_dashed(CountedItemset::with_counts(Mask64(0x3), 2, 3, Shape::DashedBox));
            cat.push_dashed(CountedItemset::with_counts(Mask64(0x5), 2, 1, Shape::DashedCircle));
            cat.push_dashed(CountedItemset::with_counts(Mask64(0x6), 1, 1, Shape::DashedCircle));
            assert_eq!(check_full_pass(&mut cat, &p, exec), 2);
            let solid: Vec<_> = cat.solid().iter().map(|i| (i.mask.0, i.shape)).collect();
            assert_eq!(solid, vec![(0x3, Shape::SolidBox), (0x5, Shape::SolidCircle)]);
            let dashed: Vec<_> = cat.dashed().iter().map(|i| (i.mask.0, i.stop)).collect();
            assert_eq!(dashed, vec![(0x6, 1)]);
        }
    }
}
