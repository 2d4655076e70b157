//! Speedup and parallel efficiency of the parallel engine.
//!
//! For `k` workers, `s(k) = t_1 / t_k` and `e(k) = s(k) / k`, where `t_k` is
//! the best wall time over the repetitions.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::bitcore::BitDatabase;
use crate::dic::{mine_parallel, FrequentItemset, MiningParams};
use crate::error::{Error, Result};

pub const DEFAULT_REPETITIONS: usize = 3;

/// `ceil(n / 2)`; `n` itself when `n < 2`.
pub fn default_interval(n: usize) -> usize {
    if n < 2 {
        n
    } else {
        n.div_ceil(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub threads: usize,
    pub time_s: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingMeta {
    pub dataset: String,
    pub n: usize,
    pub m: usize,
    pub minsup: f64,
    #[serde(rename = "M")]
    pub interval: usize,
    pub repetitions: usize,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub meta: ScalingMeta,
    pub rows: Vec<ScalingRow>,
    /// Number of frequent itemsets every run agreed on.
    pub frequent_itemsets: usize,
}

impl ScalingReport {
    /// Builds rows from `(threads, t_k)` pairs; one pair must be for one thread.
    pub fn from_timings(meta: ScalingMeta, timings: &[(usize, f64)]) -> Result<Self> {
        let t1 = timings
            .iter()
            .find(|&&(k, _)| k == 1)
            .map(|&(_, t)| t)
            .ok_or_else(|| Error::Precondition("thread counts must include 1".into()))?;
        let rows = timings
            .iter()
            .map(|&(threads, time_s)| {
                let speedup = t1 / time_s;
                ScalingRow { threads, time_s, speedup, efficiency: speedup / threads as f64 }
            })
            .collect();
        Ok(ScalingReport { meta, rows, frequent_itemsets: 0 })
    }

    pub fn row(&self, threads: usize) -> Option<&ScalingRow> {
        self.rows.iter().find(|r| r.threads == threads)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::io("<csv>", e.into());
        for row in &self.rows {
            w.serialize(row).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn meta_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("metadata is plain data")
    }

    /// Writes `path` as CSV and `<path>.json` as the metadata sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })?;
        let sidecar = sidecar_path(path);
        std::fs::write(&sidecar, self.meta_json()).map_err(|e| Error::io(&sidecar, e))
    }
}

pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".json");
    name.into()
}

/// Times the parallel engine at each thread count.
///
/// Every run must return the same frequent itemsets; a disagreement aborts
/// with [`Error::CorrectnessFailure`] since its timing would be meaningless.
pub fn run_scaling(
    db: &BitDatabase,
    dataset: &str,
    minsup: f64,
    interval: usize,
    thread_counts: &[usize],
    repetitions: usize,
) -> Result<ScalingReport> {
    if repetitions == 0 {
        return Err(Error::Precondition("at least one repetition is required".into()));
    }
    if !thread_counts.contains(&1) {
        return Err(Error::Precondition("thread counts must include 1".into()));
    }
    let base = MiningParams::new(minsup, interval, 1, db.len())?;

    let mut reference: Option<Vec<FrequentItemset>> = None;
    let mut timings = Vec::with_capacity(thread_counts.len());
    for &threads in thread_counts {
        let params = base.clone().with_threads(threads)?;
        let mut best = f64::INFINITY;
        for rep in 0..repetitions {
            let started = Instant::now();
            let result = mine_parallel(db, &params)?;
            best = best.min(started.elapsed().as_secs_f64());
            match &reference {
                None => reference = Some(result.frequent),
                Some(expected) if *expected != result.frequent => {
                    return Err(Error::CorrectnessFailure(format!(
                        "{threads} threads, repetition {rep}: {} itemsets vs {} expected",
                        result.frequent.len(),
                        expected.len()
                    )));
                }
                Some(_) => {}
            }
        }
        timings.push((threads, best));
    }

    let meta = ScalingMeta {
        dataset: dataset.to_string(),
        n: db.len(),
        m: db.universe(),
        minsup,
        interval,
        repetitions,
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let mut report = ScalingReport::from_timings(meta, &timings)?;
    report.frequent_itemsets = reference.map_or(0, |r| r.len());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ScalingMeta {
        ScalingMeta {
            dataset: "t".into(),
            n: 10,
            m: 4,
            minsup: 0.1,
            interval: 5,
            repetitions: 1,
            timestamp: String::new(),
        }
    }

    #[test]
    fn default_interval_examples() {
        assert_eq!(default_interval(20_000_000), 10_000_000);
        assert_eq!(default_interval(3), 2);
        assert_eq!(default_interval(2), 1);
        assert_eq!(default_interval(1), 1);
    }

    #[test]
    fn speedup_and_efficiency() {
        let r = ScalingReport::from_timings(meta(), &[(1, 10.0), (4, 2.5), (2, 10.0)]).unwrap();
        let r4 = r.row(4).unwrap();
        assert_eq!((r4.speedup, r4.efficiency), (4.0, 1.0));
        let r2 = r.row(2).unwrap();
        assert_eq!((r2.speedup, r2.efficiency), (1.0, 0.5));
        let r1 = r.row(1).unwrap();
        assert_eq!((r1.speedup, r1.efficiency), (1.0, 1.0));
    }

    #[test]
    fn needs_single_thread_baseline() {
        assert!(matches!(
            ScalingReport::from_timings(meta(), &[(2, 1.0), (4, 1.0)]),
            Err(Error::Precondition(_))
        ));
        let db = BitDatabase::from_raw(vec![1, 3]).unwrap();
        assert!(run_scaling(&db, "x", 0.5, 1, &[2, 4], 1).is_err());
        assert!(run_scaling(&db, "x", 0.5, 1, &[1], 0).is_err());
    }

    #[test]
    fn csv_and_sidecar() {
        let r = ScalingReport::from_timings(meta(), &[(1, 2.0), (2, 1.0)]).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("threads,time_s,speedup,efficiency"));
        assert_eq!(lines.next(), Some("1,2.0,1.0,1.0"));
        assert_eq!(lines.next(), Some("2,1.0,2.0,1.0"));
        let json: serde_json::Value = serde_json::from_str(&r.meta_json()).unwrap();
        for key in ["dataset", "n", "m", "minsup", "M", "repetitions", "timestamp"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
