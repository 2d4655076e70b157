//! Reading and writing transaction databases, and a seeded synthetic generator.
//!
//! Text files hold one transaction per line as whitespace-separated item ids
//! in `0..64`; blank lines and lines starting with `#` are skipped. The binary
//! cache is the magic `DICBDB01`, a version byte, `n` as little-endian `u64`,
//! `m` as little-endian `u16`, then `n` little-endian `u64` masks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitcore::{BitDatabase, ItemId, Mask64, MAX_ITEMS};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"DICBDB01";
pub const BINARY_VERSION: u8 = 1;
const HEADER_LEN: usize = 8 + 1 + 8 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Text,
    Binary,
}

impl DatasetFormat {
    /// Binary when the file starts with the magic, otherwise by extension
    /// (`.bin` / `.bdb`), otherwise text.
    pub fn sniff(path: &Path) -> Result<Self> {
        let mut head = [0u8; 8];
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut filled = 0;
        while filled < head.len() {
            match file.read(&mut head[filled..]).map_err(|e| Error::io(path, e))? {
                0 => break,
                k => filled += k,
            }
        }
        if filled == head.len() && &head == BINARY_MAGIC {
            return Ok(DatasetFormat::Binary);
        }
        Ok(Self::from_extension(path).unwrap_or(DatasetFormat::Text))
    }

    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "bin" | "bdb" => Some(DatasetFormat::Binary),
            "txt" | "dat" | "fimi" => Some(DatasetFormat::Text),
            _ => None,
        }
    }
}

/// A parsed text database plus how many repeated item ids were folded away.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedText {
    pub db: BitDatabase,
    pub duplicate_items: u64,
}

pub fn load_transactions(path: impl AsRef<Path>) -> Result<LoadedText> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_transactions(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_transactions(reader: impl BufRead) -> Result<LoadedText> {
    let mut masks = Vec::new();
    let mut duplicate_items = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let line_no = idx + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut mask = 0u64;
        for token in body.split_whitespace() {
            let id: u64 = token
                .parse()
                .map_err(|_| Error::Parse { line: line_no, token: token.to_string() })?;
            let item = ItemId::try_from(id)
                .map_err(|_| Error::ItemOutOfRange { item: id, line: Some(line_no) })?;
            let bit = item.bit().0;
            if mask & bit != 0 {
                duplicate_items += 1;
            }
            mask |= bit;
        }
        masks.push(Mask64(mask));
    }
    Ok(LoadedText { db: BitDatabase::new(masks)?, duplicate_items })
}

/// Canonical text: ascending ids separated by one space, one line per transaction.
///
/// Empty transactions have no text form (blank lines are skipped on load), so
/// they are rejected.
pub fn write_transactions(db: &BitDatabase, out: impl Write) -> Result<()> {
    let mut out = BufWriter::new(out);
    let io = |e| Error::io("<output>", e);
    let mut line = String::with_capacity(3 * MAX_ITEMS);
    for (idx, mask) in db.masks().iter().enumerate() {
        if mask.is_empty() {
            return Err(Error::Precondition(format!(
                "transaction {idx} is empty and cannot be written as text"
            )));
        }
        line.clear();
        for (i, item) in mask.items().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&item.value().to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn save_transactions(db: &BitDatabase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_transactions(db, file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn encode_bitdb(db: &BitDatabase) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * db.len());
    bytes.extend_from_slice(BINARY_MAGIC);
    bytes.push(BINARY_VERSION);
    bytes.extend_from_slice(&(db.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&(db.universe() as u16).to_le_bytes());
    for &w in db.words() {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    bytes
}

pub fn decode_bitdb(bytes: &[u8]) -> Result<BitDatabase> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != BINARY_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    if bytes[8] != BINARY_VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[8])));
    }
    let n = u64::from_le_bytes(bytes[9..17].try_into().expect("8 bytes"));
    let m = u16::from_le_bytes(bytes[17..19].try_into().expect("2 bytes")) as usize;
    let body = &bytes[HEADER_LEN..];
    let expected = n.checked_mul(8).filter(|&len| len == body.len() as u64);
    if expected.is_none() {
        return Err(Error::Format(format!(
            "header announces {n} transactions but {} payload bytes follow",
            body.len()
        )));
    }
    let masks = body
        .chunks_exact(8)
        .map(|w| Mask64(u64::from_le_bytes(w.try_into().expect("8 bytes"))))
        .collect();
    BitDatabase::with_universe(masks, m).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_bitdb(db: &BitDatabase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_bitdb(db)).map_err(|e| Error::io(path, e))
}

pub fn load_bitdb(path: impl AsRef<Path>) -> Result<BitDatabase> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bitdb(&bytes)
}

/// Loads a database in either format; `format` overrides sniffing.
pub fn load_database(path: impl AsRef<Path>, format: Option<DatasetFormat>) -> Result<BitDatabase> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => DatasetFormat::sniff(path)?,
    };
    match format {
        DatasetFormat::Text => Ok(load_transactions(path)?.db),
        DatasetFormat::Binary => load_bitdb(path),
    }
}

/// Writes frequent itemsets one per line as ascending item ids followed by
/// `(support)`, e.g. `0 1 (2)`.
pub fn write_itemsets<I>(itemsets: I, out: impl Write) -> Result<()>
where
    I: IntoIterator<Item = (Mask64, u64)>,
{
    let mut out = BufWriter::new(out);
    let io = |e| Error::io("<output>", e);
    for (mask, support) in itemsets {
        let ids: Vec<String> = mask.items().map(|i| i.value().to_string()).collect();
        writeln!(out, "{} ({support})", ids.join(" ")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Inverse of [`write_itemsets`].
pub fn parse_itemsets(reader: impl BufRead) -> Result<Vec<(Mask64, u64)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let line_no = idx + 1;
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        let bad = || Error::Parse { line: line_no, token: body.to_string() };
        let (items, support) = body.rsplit_once('(').ok_or_else(bad)?;
        let support: u64 = support.strip_suffix(')').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let mut ids = Vec::new();
        for token in items.split_whitespace() {
            ids.push(token.parse::<u64>().map_err(|_| Error::Parse { line: line_no, token: token.to_string() })?);
        }
        let mask = crate::bitcore::encode_transaction(ids).map_err(|e| match e {
            Error::ItemOutOfRange { item, .. } => Error::ItemOutOfRange { item, line: Some(line_no) },
            other => other,
        })?;
        out.push((mask, support));
    }
    Ok(out)
}

/// How item popularity falls off with the item id.
///
/// Dense data (mean length a large fraction of `m`) should stay uniform: any
/// decay makes the head items near-certain and the number of frequent
/// itemsets grows like `2^head`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SkewProfile {
    /// Every item equally likely.
    #[default]
    Uniform,
    /// Item `p` has sampling weight `ratio^p`, `0 < ratio <= 1`.
    Geometric { ratio: f64 },
}

impl SkewProfile {
    /// Sampling weights scaled to integers; every item keeps weight >= 1.
    fn fixed_point_weights(&self, m: usize) -> Vec<u64> {
        const SCALE: f64 = (1u64 << 32) as f64;
        let ratio = match *self {
            SkewProfile::Uniform => 1.0,
            SkewProfile::Geometric { ratio } => ratio,
        };
        let mut w = 1.0f64;
        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            out.push(((w * SCALE) as u64).max(1));
            w *= ratio;
        }
        out
    }
}

/// Parameters of a synthetic database.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub n: usize,
    pub m: usize,
    /// Target mean number of items per transaction.
    pub avg_len: f64,
    pub seed: u64,
    pub skew: SkewProfile,
}

impl DatasetSpec {
    pub fn new(n: usize, m: usize, avg_len: f64, seed: u64) -> Self {
        DatasetSpec { n, m, avg_len, seed, skew: SkewProfile::default() }
    }

    pub fn with_skew(mut self, skew: SkewProfile) -> Self {
        self.skew = skew;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Spec("n must be at least 1".into()));
        }
        if self.m == 0 || self.m > MAX_ITEMS {
            return Err(Error::Spec(format!("m = {} is not in 1..=64", self.m)));
        }
        if !(self.avg_len >= 1.0 && self.avg_len <= self.m as f64) {
            return Err(Error::Spec(format!("avg_len = {} is not in [1, m = {}]", self.avg_len, self.m)));
        }
        if let SkewProfile::Geometric { ratio } = self.skew {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::Spec(format!("skew ratio {ratio} is not in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Generates a database with ChaCha8 seeded from `spec.seed`.
///
/// Each transaction draws its length as `floor(avg_len)` plus a Bernoulli on
/// the fractional part plus a symmetric jitter of up to `avg_len / 10` items
/// (clamped to `1..=m`), then draws that many distinct items one at a time,
/// each with probability proportional to its skew weight among the items not
/// yet taken. Weights are fixed-point integers and all draws are integer
/// ranges, so identical specs give identical databases on every platform.
pub fn generate_synthetic(spec: &DatasetSpec) -> Result<BitDatabase> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights = spec.skew.fixed_point_weights(spec.m);
    let total_weight: u64 = weights.iter().sum();
    let base = spec.avg_len.floor();
    let frac = spec.avg_len - base;
    let jitter = (spec.avg_len / 10.0).floor() as i64;

    let mut masks = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut len = base as i64 + i64::from(rng.gen_bool(frac));
        if jitter > 0 {
            len += rng.gen_range(-jitter..=jitter);
        }
        let len = len.clamp(1, spec.m as i64) as usize;

        let mut mask = 0u64;
        let mut remaining = total_weight;
        for _ in 0..len {
            let mut target = rng.gen_range(0..remaining);
            let mut picked = None;
            for (p, &w) in weights.iter().enumerate() {
                if mask >> p & 1 == 1 {
                    continue;
                }
                if target < w {
                    picked = Some(p);
                    break;
                }
                target -= w;
            }
            let p = picked.expect("target is below the remaining weight");
            mask |= 1 << p;
            remaining -= weights[p];
        }
        masks.push(Mask64(mask));
    }
    BitDatabase::with_universe(masks, spec.m)
}

/// Mean transaction length and per-item relative frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseSummary {
    pub n: usize,
    pub m: usize,
    pub mean_len: f64,
    pub item_frequency: Vec<f64>,
}

pub fn summarize(db: &BitDatabase) -> DatabaseSummary {
    let mut counts = vec![0u64; db.universe()];
    let mut total = 0u64;
    for mask in db.masks() {
        total += u64::from(mask.cardinality());
        for item in mask.items() {
            counts[item.value() as usize] += 1;
        }
    }
    let n = db.len();
    DatabaseSummary {
        n,
        m: db.universe(),
        mean_len: total as f64 / n as f64,
        item_frequency: counts.iter().map(|&c| c as f64 / n as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadedText> {
        parse_transactions(text.as_bytes())
    }

    #[test]
    fn text_examples() {
        let l = parse("0 2\n1\n").unwrap();
        assert_eq!(l.db.words(), &[0x5, 0x2]);
        let l = parse("0 0 0\n").unwrap();
        assert_eq!(l.db.words(), &[0x1]);
        assert_eq!(l.duplicate_items, 2);
        assert!(matches!(parse("0 99\n"), Err(Error::ItemOutOfRange { item: 99, line: Some(1) })));
    }

    #[test]
    fn text_comments_blanks_and_errors() {
        let l = parse("# header\n\n  3 1 \n\t\n#x 99\n63\n").unwrap();
        assert_eq!(l.db.words(), &[0xa, 1 << 63]);
        assert!(matches!(parse("1\n2 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("1\n-1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("# only a comment\n\n"), Err(Error::EmptyDatabase)));
    }

    #[test]
    fn canonical_text_is_sorted() {
        let db = BitDatabase::from_raw(vec![0x5, 0x8000_0000_0000_0002]).unwrap();
        let mut out = Vec::new();
        write_transactions(&db, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0 2\n1 63\n");
        let with_empty = BitDatabase::from_raw(vec![0x1, 0x0]).unwrap();
        assert!(write_transactions(&with_empty, Vec::new()).is_err());
    }

    #[test]
    fn itemset_listing() {
        let rows = vec![(Mask64(0x1), 3), (Mask64(0x2), 2), (Mask64(0x3), 2)];
        let mut out = Vec::new();
        write_itemsets(rows.iter().copied(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "0 (3)\n1 (2)\n0 1 (2)\n");
        assert_eq!(parse_itemsets(text.as_bytes()).unwrap(), rows);
        assert!(parse_itemsets("0 1 2\n".as_bytes()).is_err());
        assert!(parse_itemsets("0 x (2)\n".as_bytes()).is_err());
    }

    #[test]
    fn binary_layout() {
        let db = BitDatabase::with_universe(vec![Mask64(0x5), Mask64(0x2)], 3).unwrap();
        let bytes = encode_bitdb(&db);
        assert_eq!(&bytes[..8], b"DICBDB01");
        assert_eq!(bytes[8], 1);
        assert_eq!(&bytes[9..17], &2u64.to_le_bytes());
        assert_eq!(&bytes[17..19], &3u16.to_le_bytes());
        assert_eq!(&bytes[19..27], &5u64.to_le_bytes());
        assert_eq!(bytes.len(), 19 + 16);
        assert_eq!(decode_bitdb(&bytes).unwrap(), db);
    }

    #[test]
    fn binary_rejects_damage() {
        let db = BitDatabase::from_raw(vec![0x5, 0x2, 0x7]).unwrap();
        let bytes = encode_bitdb(&db);
        assert!(matches!(decode_bitdb(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(decode_bitdb(&bytes[..10]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_bitdb(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(matches!(decode_bitdb(&bad), Err(Error::Format(_))));
        let mut bad = bytes;
        bad.extend_from_slice(&[0; 8]);
        assert!(matches!(decode_bitdb(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = DatasetSpec::new(1000, 64, 40.0, 42);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(encode_bitdb(&a), encode_bitdb(&b));
        let c = generate_synthetic(&DatasetSpec::new(1000, 64, 40.0, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_hits_mean_length() {
        let db = generate_synthetic(&DatasetSpec::new(10_000, 64, 40.0, 7)).unwrap();
        let mean = summarize(&db).mean_len;
        assert!((38.0..=42.0).contains(&mean), "mean length {mean}");
        for avg in [1.0, 2.5, 10.0, 63.0, 64.0] {
            let db = generate_synthetic(&DatasetSpec::new(10_000, 64, avg, 1)).unwrap();
            let mean = summarize(&db).mean_len;
            assert!((mean - avg).abs() <= 0.05 * avg, "avg {avg}: mean {mean}");
        }
    }

    #[test]
    fn generator_rejects_bad_specs() {
        assert!(matches!(generate_synthetic(&DatasetSpec::new(10, 64, 0.0, 1)), Err(Error::Spec(_))));
        assert!(generate_synthetic(&DatasetSpec::new(0, 64, 4.0, 1)).is_err());
        assert!(generate_synthetic(&DatasetSpec::new(10, 65, 4.0, 1)).is_err());
        assert!(generate_synthetic(&DatasetSpec::new(10, 8, 9.0, 1)).is_err());
        let skewed = DatasetSpec::new(10, 8, 2.0, 1).with_skew(SkewProfile::Geometric { ratio: 1.5 });
        assert!(generate_synthetic(&skewed).is_err());
    }
}
