use std::time::Instant;

use super::audit::Recorder;
use super::ops::{
    check_full_pass_recorded, count_support_interval, first_pass_recorded,
    make_candidates_recorded, prune_recorded, Exec,
};
use super::{FrequentItemset, MiningParams, MiningResult, MiningStats};
use crate::bitcore::BitDatabase;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    Serial,
    #[default]
    Parallel,
}

/// Runs one mining job. `audit` records every shape transition in the result.
#[derive(Debug, Clone, Copy, Default)]
pub struct Miner {
    engine: Engine,
    audit: bool,
}

impl Miner {
    pub fn new(engine: Engine) -> Self {
        Miner { engine, audit: false }
    }

    pub fn audited(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn run(&self, db: &BitDatabase, params: &MiningParams) -> Result<MiningResult> {
        if params.n() != db.len() {
            return Err(Error::InvalidParams(format!(
                "parameters were built for {} transactions, database has {}",
                params.n(),
                db.len()
            )));
        }
        match self.engine {
            Engine::Serial => Ok(drive(db, params, Exec::Serial, self.audit)),
            Engine::Parallel => {
                let threads = params.threads();
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .thread_name(|i| format!("dic-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidParams(format!("cannot start {threads} workers: {e}")))?;
                Ok(pool.install(|| drive(db, params, Exec::Parallel { threads }, self.audit)))
            }
        }
    }
}

/// Serial DIC: transactions in the outer counting loop, no worker threads.
pub fn mine_serial(db: &BitDatabase, params: &MiningParams) -> Result<MiningResult> {
    Miner::new(Engine::Serial).run(db, params)
}

/// Parallel DIC on `params.threads()` workers. Output is identical to [`mine_serial`].
pub fn mine_parallel(db: &BitDatabase, params: &MiningParams) -> Result<MiningResult> {
    Miner::new(Engine::Parallel).run(db, params)
}

fn drive(db: &BitDatabase, params: &MiningParams, exec: Exec, audit: bool) -> MiningResult {
    let started = Instant::now();
    let mut rec = Recorder::new(audit);
    let mut stats = MiningStats { stop_max: params.stop_max(), ..MiningStats::default() };

    let mut catalog = first_pass_recorded(db, params, exec, &mut rec);
    stats.candidates_generated = catalog.dashed().len() as u64;

    let stop_max = params.stop_max();
    let mut stop = 0;
    while !catalog.dashed().is_empty() {
        // wrapping past the last chunk rewinds to the start of the database
        stop = if stop >= stop_max { 1 } else { stop + 1 };

        stats.peak_dashed = stats.peak_dashed.max(catalog.dashed().len());
        stats.itemset_chunks_counted += catalog.dashed().len() as u64;
        count_support_interval(catalog.dashed_mut(), db, params.chunk(stop), exec);
        stats.chunks_scanned += 1;

        let pruned = prune_recorded(&mut catalog, params, exec, &mut rec);
        stats.candidates_pruned += pruned.pruned as u64;
        stats.candidates_generated += make_candidates_recorded(&mut catalog, &mut rec) as u64;
        check_full_pass_recorded(&mut catalog, params, exec, &mut rec);
    }

    let mut frequent: Vec<FrequentItemset> = catalog
        .solid_boxes()
        .map(|it| FrequentItemset { k: it.k, mask: it.mask, support: it.supp })
        .collect();
    frequent.sort_unstable();
    stats.wall_time = started.elapsed();

    MiningResult { frequent, stats, transitions: rec.into_log() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcore::Mask64;

    fn pairs(r: &MiningResult) -> Vec<(u64, u64)> {
        r.frequent.iter().map(|f| (f.mask.0, f.support)).collect()
    }

    #[test]
    fn three_transaction_example() {
        let db = BitDatabase::from_raw(vec![0x3, 0x3, 0x1]).unwrap();
        let params = MiningParams::new(0.5, 2, 1, 3).unwrap();
        let serial = mine_serial(&db, &params).unwrap();
        assert_eq!(pairs(&serial), vec![(0x1, 3), (0x2, 2), (0x3, 2)]);
        for threads in [1, 2, 4, 8] {
            let p = params.clone().with_threads(threads).unwrap();
            assert_eq!(mine_parallel(&db, &p).unwrap().frequent, serial.frequent);
        }
    }

    #[test]
    fn single_transaction_single_item() {
        let db = BitDatabase::from_raw(vec![0x1]).unwrap();
        let params = MiningParams::new(1.0, 1, 1, 1).unwrap();
        assert_eq!(pairs(&mine_serial(&db, &params).unwrap()), vec![(0x1, 1)]);
    }

    #[test]
    fn nested_mode_two_candidates() {
        // items 0,1,2 frequent; pair {0,1} is the only frequent 2-itemset
        let mut words = vec![0x3u64; 40];
        words.extend([0x4u64; 30]);
        words.extend([0x5u64; 5]);
        words.extend([0x6u64; 5]);
        let db = BitDatabase::from_raw(words).unwrap();
        let params = MiningParams::new(0.3, 20, 8, db.len()).unwrap();
        let serial = mine_serial(&db, &params).unwrap();
        let parallel = mine_parallel(&db, &params).unwrap();
        assert_eq!(parallel.frequent, serial.frequent);
        assert_eq!(serial.support_of(Mask64(0x3)), Some(40));
        assert_eq!(serial.support_of(Mask64(0x5)), None);
    }

    #[test]
    fn rejects_mismatched_params() {
        let db = BitDatabase::from_raw(vec![0x1, 0x1]).unwrap();
        let params = MiningParams::new(0.5, 1, 1, 3).unwrap();
        assert!(mine_serial(&db, &params).is_err());
    }

    #[test]
    fn audited_run_logs_only_legal_transitions() {
        let db = BitDatabase::from_raw(vec![0x7, 0x3, 0x5, 0x6, 0x7, 0x1]).unwrap();
        let params = MiningParams::new(0.3, 2, 3, 6).unwrap();
        let r = Miner::new(Engine::Parallel).audited(true).run(&db, &params).unwrap();
        let log = r.transitions.unwrap();
        assert!(!log.is_empty());
        assert_eq!(log.illegal().count(), 0);
    }
}
