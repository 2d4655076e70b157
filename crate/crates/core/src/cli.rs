//! The `dicmine` command line: `mine`, `generate`, `verify` and `bench`.
//!
//! Failures print exactly one line to stderr, `CODE: message`, where `CODE`
//! is [`Error::code`] (or `USAGE_ERROR` for bad arguments), and exit nonzero.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{run_scaling, DEFAULT_REPETITIONS};
use crate::bitcore::{BitDatabase, Mask64};
use crate::dataio::{self, DatasetFormat, DatasetSpec, SkewProfile};
use crate::dic::{Engine, Miner, MiningParams, MiningResult};
use crate::error::{Error, Result};
use crate::oracle::{bruteforce_frequent, MAX_ORACLE_ITEMS};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dicmine", version, about = "Parallel Dynamic Itemset Counting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine frequent itemsets and print them with their support counts.
    Mine(MineArgs),
    /// Write a synthetic database.
    Generate(GenerateArgs),
    /// Cross-check the brute-force oracle, the serial and the parallel engine.
    Verify(VerifyArgs),
    /// Time the parallel engine over several thread counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Bin,
}

impl From<FormatArg> for DatasetFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => DatasetFormat::Text,
            FormatArg::Bin => DatasetFormat::Binary,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Overrides magic-byte and extension sniffing.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct MiningArgs {
    /// Minimum support as a fraction of the transactions, in (0, 1].
    #[arg(long, default_value_t = 0.1, value_parser = parse_minsup)]
    pub minsup: f64,
    /// Transactions between two stops [default: ceil(n / 2)].
    #[arg(long, value_name = "M", value_parser = clap::value_parser!(u64).range(1..))]
    pub interval: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    /// Write the itemsets here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Worker threads [default: logical cores].
    #[arg(long, env = "DICMINE_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[arg(long, value_enum, default_value_t = EngineArg::Parallel)]
    pub engine: EngineArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 40.0)]
    pub avg_len: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Item `p` is drawn with weight `ratio^p`; uniform when omitted.
    #[arg(long)]
    pub skew_ratio: Option<f64>,
}

impl SynthArgs {
    fn spec(&self) -> DatasetSpec {
        let skew = match self.skew_ratio {
            Some(ratio) => SkewProfile::Geometric { ratio },
            None => SkewProfile::Uniform,
        };
        DatasetSpec::new(self.n, self.m, self.avg_len, self.seed).with_skew(skew)
    }

    fn label(&self) -> String {
        let mut label = format!("synthetic-n{}-m{}-avg{}-seed{}", self.n, self.m, self.avg_len, self.seed);
        if let Some(r) = self.skew_ratio {
            label.push_str(&format!("-skew{r}"));
        }
        label
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    /// Output format [default: from the extension, else text].
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    #[arg(long, env = "DICMINE_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Also compare against a saved `mine` output.
    #[arg(long, value_name = "PATH")]
    pub expected: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset to time; a synthetic one is generated when omitted.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[command(flatten)]
    pub synth: SynthArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    /// Comma-separated thread counts; must include 1 [default: 1 and powers
    /// of two up to the logical cores].
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pub threads_list: Option<Vec<u64>>,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// CSV path; metadata goes to `<PATH>.json`.
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
}

fn parse_minsup(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1]"))
    }
}

fn logical_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn to_usize(v: u64) -> usize {
    usize::try_from(v).unwrap_or(usize::MAX)
}

/// Runs the binary: parses `std::env::args`, returns the exit status.
pub fn main() -> i32 {
    main_from(std::env::args_os())
}

pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => return usage_failure(e),
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn usage_failure(e: clap::Error) -> i32 {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            0
        }
        ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand | ErrorKind::MissingSubcommand => {
            eprintln!("USAGE_ERROR: a subcommand is required: mine, generate, verify or bench (see --help)");
            EXIT_USAGE
        }
        _ => {
            let rendered = e.render().to_string();
            let first = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let msg = first.trim().trim_start_matches("error:").trim();
            eprintln!("USAGE_ERROR: {msg} (see --help)");
            EXIT_USAGE
        }
    }
}

/// The single `CODE: message` line printed for a failure.
pub fn error_line(e: &Error) -> String {
    let mut line = format!("{}: {e}", e.code());
    if let Error::UniverseTooLarge(_) = e {
        line.push_str(&format!(
            "; verify needs item ids below {MAX_ORACLE_ITEMS}, use `mine --engine serial` and `--engine parallel` to cross-check larger data"
        ));
    }
    line.replace('\n', " ")
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mine(a) => cmd_mine(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn load(input: &InputArgs) -> Result<BitDatabase> {
    dataio::load_database(&input.input, input.format.map(Into::into))
}

fn params(db: &BitDatabase, mining: &MiningArgs, threads: Option<u64>) -> Result<MiningParams> {
    let threads = threads.map_or_else(logical_cores, to_usize);
    MiningParams::with_default_interval(mining.minsup, mining.interval.map(to_usize), threads, db.len())
}

fn listing(result: &MiningResult) -> impl Iterator<Item = (Mask64, u64)> + '_ {
    result.frequent.iter().map(|f| (f.mask, f.support))
}

pub fn cmd_mine(args: &MineArgs) -> Result<()> {
    let db = load(&args.input)?;
    let params = params(&db, &args.mining, args.threads)?;
    let engine = match args.engine {
        EngineArg::Serial => Engine::Serial,
        EngineArg::Parallel => Engine::Parallel,
    };
    let result = Miner::new(engine).run(&db, &params)?;
    match &args.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            dataio::write_itemsets(listing(&result), file).map_err(|e| relabel_io(e, path))?;
        }
        None => dataio::write_itemsets(listing(&result), io::stdout().lock())?,
    }

    let s = &result.stats;
    eprintln!(
        "n={} m={} minsup_count={} M={} threads={} engine={:?}",
        db.len(),
        db.universe(),
        params.minsup_count(),
        params.interval(),
        params.threads(),
        args.engine
    );
    eprintln!(
        "frequent={} max_k={} passes={:.2} candidates={} pruned={} peak_dashed={} time={:.3}s",
        result.frequent.len(),
        result.max_k(),
        s.passes(),
        s.candidates_generated,
        s.candidates_pruned,
        s.peak_dashed,
        s.wall_time.as_secs_f64()
    );
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let db = dataio::generate_synthetic(&args.synth.spec())?;
    let format = args
        .format
        .map(Into::into)
        .or_else(|| DatasetFormat::from_extension(&args.output))
        .unwrap_or(DatasetFormat::Text);
    match format {
        DatasetFormat::Text => dataio::save_transactions(&db, &args.output)?,
        DatasetFormat::Binary => dataio::save_bitdb(&db, &args.output)?,
    }

    let summary = dataio::summarize(&db);
    let mut freq = summary.item_frequency.clone();
    freq.sort_by(f64::total_cmp);
    let median = freq.get(freq.len() / 2).copied().unwrap_or(0.0);
    eprintln!(
        "wrote {} transactions over {} items to {}",
        summary.n,
        summary.m,
        args.output.display()
    );
    eprintln!(
        "mean length {:.3}, item frequency min {:.4} median {:.4} max {:.4}",
        summary.mean_len,
        freq.first().copied().unwrap_or(0.0),
        median,
        freq.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let db = load(&args.input)?;
    let params = params(&db, &args.mining, args.threads)?;
    let oracle = bruteforce_frequent(&db, params.minsup())?.frequent;
    let serial = Miner::new(Engine::Serial).run(&db, &params)?;
    let parallel = Miner::new(Engine::Parallel).run(&db, &params)?;
    let serial: Vec<_> = listing(&serial).collect();
    let parallel: Vec<_> = listing(&parallel).collect();

    let mut checks = vec![("serial", serial), ("parallel", parallel)];
    if let Some(path) = &args.expected {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut expected = dataio::parse_itemsets(BufReader::new(file))?;
        expected.sort_unstable_by_key(|&(m, _)| (m.cardinality(), m));
        checks.push(("expected", expected));
    }
    for (name, found) in &checks {
        if let Some(diff) = first_divergence(&oracle, name, found) {
            return Err(Error::CorrectnessFailure(diff));
        }
    }
    println!(
        "OK: {} frequent itemsets at minsup_count {}; oracle, {} agree",
        oracle.len(),
        params.minsup_count(),
        checks.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
    );
    Ok(())
}

/// Describes the first itemset, in `(k, mask)` order, where `found` differs
/// from the oracle. Both lists must be sorted by `(k, mask)`.
pub fn first_divergence(oracle: &[(Mask64, u64)], name: &str, found: &[(Mask64, u64)]) -> Option<String> {
    let key = |m: Mask64| (m.cardinality(), m);
    let show = |m: Mask64| {
        let ids: Vec<String> = m.items().map(|i| i.value().to_string()).collect();
        format!("{{{}}}", ids.join(" "))
    };
    let (mut i, mut j) = (0, 0);
    loop {
        match (oracle.get(i), found.get(j)) {
            (None, None) => return None,
            (Some(&(m, s)), None) => return Some(format!("{name} misses {} (oracle support {s})", show(m))),
            (None, Some(&(m, s))) => return Some(format!("{name} reports {} (support {s}) which the oracle does not", show(m))),
            (Some(&(om, os)), Some(&(fm, fs))) => {
                if om == fm {
                    if os != fs {
                        return Some(format!("{} has support {fs} in {name}, oracle says {os}", show(om)));
                    }
                    i += 1;
                    j += 1;
                } else if key(om) < key(fm) {
                    return Some(format!("{name} misses {} (oracle support {os})", show(om)));
                } else {
                    return Some(format!("{name} reports {} (support {fs}) which the oracle does not", show(fm)));
                }
            }
        }
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let thread_counts: Vec<usize> = match &args.threads_list {
        Some(list) => list.iter().copied().map(to_usize).collect(),
        None => {
            let cores = logical_cores();
            std::iter::successors(Some(1usize), |&k| k.checked_mul(2)).take_while(|&k| k <= cores).collect()
        }
    };
    if !thread_counts.contains(&1) {
        return Err(Error::Usage("--threads-list must include 1 (the baseline for speedup)".into()));
    }

    let (db, dataset) = match &args.input {
        Some(path) => (dataio::load_database(path, args.format.map(Into::into))?, dataset_label(path)),
        None => (dataio::generate_synthetic(&args.synth.spec())?, args.synth.label()),
    };
    let interval = args.mining.interval.map_or_else(|| crate::bench::default_interval(db.len()), to_usize);
    let report = run_scaling(&db, &dataset, args.mining.minsup, interval, &thread_counts, to_usize(args.reps))?;
    report.save(&args.output)?;
    report.write_csv(io::stdout().lock())?;
    eprintln!(
        "{} frequent itemsets; report in {} and {}",
        report.frequent_itemsets,
        args.output.display(),
        crate::bench::sidecar_path(&args.output).display()
    );
    io::stdout().flush().map_err(|e| Error::io("<stdout>", e))
}

fn dataset_label(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn relabel_io(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[(u64, u64)]) -> Vec<(Mask64, u64)> {
        v.iter().map(|&(m, s)| (Mask64(m), s)).collect()
    }

    #[test]
    fn divergence_is_first_in_canonical_order() {
        let oracle = rows(&[(0x1, 3), (0x2, 2), (0x3, 2)]);
        assert_eq!(first_divergence(&oracle, "x", &oracle), None);
        let d = first_divergence(&oracle, "x", &rows(&[(0x1, 3), (0x2, 1), (0x3, 2)])).unwrap();
        assert!(d.contains("{1}") && d.contains("oracle says 2"), "{d}");
        let d = first_divergence(&oracle, "x", &rows(&[(0x1, 3), (0x3, 2)])).unwrap();
        assert!(d.contains("misses {1}"), "{d}");
        let d = first_divergence(&oracle, "x", &rows(&[(0x1, 3), (0x2, 2), (0x4, 2), (0x3, 2)])).unwrap();
        assert!(d.contains("reports {2}"), "{d}");
    }

    #[test]
    fn minsup_is_checked_at_parse_time() {
        assert!(parse_minsup("0.1").is_ok());
        assert!(parse_minsup("1").is_ok());
        assert!(parse_minsup("1.5").is_err());
        assert!(parse_minsup("0").is_err());
        assert!(parse_minsup("abc").is_err());
    }

    #[test]
    fn error_lines_are_single_lines() {
        let line = error_line(&Error::UniverseTooLarge(25));
        assert!(line.starts_with("UNIVERSE_TOO_LARGE: "));
        assert!(!line.contains('\n'));
        assert!(error_line(&Error::EmptyDatabase).starts_with("EMPTY_DATABASE: "));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
