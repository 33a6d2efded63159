//! OEIS b-file retrieval, caching and term-by-term comparison.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::Deserialize;

use crate::counting::{
    derangements, factorial, partial_derangements, rect_derangements, rencontres, Count,
};
use crate::error::{Error, Result};

/// Environment variable naming the b-file cache directory.
pub const CACHE_ENV: &str = "MONTMORT_OEIS_CACHE";

pub const DEFAULT_BASE_URL: &str = "https://oeis.org";

pub const USER_AGENT: &str = concat!(
    "montmort/",
    env!("CARGO_PKG_VERSION"),
    " (b-file regression checks)"
);

const BUILTIN_MAPPINGS: &str = include_str!("../data/oeis/mappings.toml");

const VENDORED: &[(&str, &str)] = &[
    ("A000166", include_str!("../data/oeis/b000166.txt")),
    ("A002467", include_str!("../data/oeis/b002467.txt")),
    ("A047920", include_str!("../data/oeis/b047920.txt")),
];

/// A sequence id: `A` followed by six digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OeisId(String);

impl OeisId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `b000166.txt` for `A000166`.
    pub fn bfile_name(&self) -> String {
        format!("b{}.txt", &self.0[1..])
    }
}

impl FromStr for OeisId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ok = s.len() == 7 && s.starts_with('A') && s[1..].bytes().all(|b| b.is_ascii_digit());
        if ok {
            Ok(OeisId(s.to_string()))
        } else {
            Err(Error::InvalidId(s.to_string()))
        }
    }
}

impl fmt::Display for OeisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parses `<index> <value>` lines, skipping blanks and `#` comments.
pub fn parse_bfile(text: &str) -> Result<Vec<(i64, Count)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = || Error::MalformedLine {
            line: no + 1,
            content: raw.to_string(),
        };
        let mut parts = line.split_whitespace();
        let (Some(index), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(malformed());
        };
        let index: i64 = index.parse().map_err(|_| malformed())?;
        let value: Count = value.parse().map_err(|_| malformed())?;
        out.push((index, value));
    }
    Ok(out)
}

pub fn serialize_bfile(terms: &[(i64, Count)]) -> String {
    terms.iter().map(|(i, v)| format!("{i} {v}\n")).collect()
}

/// Where a b-file's text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    FetchedLive,
    Cached,
    Vendored,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::FetchedLive => "fetched-live",
            Source::Cached => "cached",
            Source::Vendored => "vendored",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Flag first, then [`CACHE_ENV`].
pub fn resolve_cache_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
}

pub fn vendored_bfile(id: &OeisId) -> Option<&'static str> {
    VENDORED
        .iter()
        .find(|(v, _)| *v == id.as_str())
        .map(|(_, text)| *text)
}

#[derive(Debug, Clone)]
pub struct OeisClient {
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub base_url: String,
    pub timeout: Duration,
}

impl Default for OeisClient {
    fn default() -> Self {
        OeisClient {
            cache_dir: None,
            offline: true,
            base_url: DEFAULT_BASE_URL.to_string(),
            timeout: Duration::from_secs(30),
        }
    }
}

impl OeisClient {
    pub fn offline(cache_dir: Option<PathBuf>) -> Self {
        OeisClient {
            cache_dir,
            ..Default::default()
        }
    }

    pub fn online(cache_dir: Option<PathBuf>) -> Self {
        OeisClient {
            cache_dir,
            offline: false,
            ..Default::default()
        }
    }

    fn cache_path(&self, id: &OeisId) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(id.bfile_name()))
    }

    /// Offline: cache, then vendored snapshot. Online: cache, then one HTTP
    /// GET whose body is written through to the cache.
    pub fn fetch_bfile(&self, id: &OeisId) -> Result<(String, Source)> {
        if let Some(path) = self.cache_path(id) {
            if path.is_file() {
                return Ok((fs::read_to_string(path)?, Source::Cached));
            }
        }
        if self.offline {
            return vendored_bfile(id)
                .map(|t| (t.to_string(), Source::Vendored))
                .ok_or_else(|| Error::MissingSnapshot(id.to_string()));
        }
        let text = self.download(id)?;
        if let Some(dir) = &self.cache_dir {
            write_atomic(dir, &id.bfile_name(), &text)?;
        }
        Ok((text, Source::FetchedLive))
    }

    fn download(&self, id: &OeisId) -> Result<String> {
        let url = format!(
            "{}/{}/{}",
            self.base_url.trim_end_matches('/'),
            id,
            id.bfile_name()
        );
        let net = |message: String| Error::Network {
            id: id.to_string(),
            message,
        };
        let client = reqwest::blocking::Client::builder()
            .user_agent(USER_AGENT)
            .timeout(self.timeout)
            .build()
            .map_err(|e| net(e.to_string()))?;
        let resp = client.get(&url).send().map_err(|e| net(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(net(format!("GET {url} returned {status}")));
        }
        resp.text().map_err(|e| net(e.to_string()))
    }
}

/// Writes through a temporary file in `dir` and renames it into place, so
/// readers never see a partial entry.
fn write_atomic(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.persist(dir.join(name))
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// How a linear term position becomes a library call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mapping {
    /// `!p`
    Derangements,
    /// `p!`; a deliberate wrong mapping for negative controls.
    Factorial,
    /// `p! − !p`
    AtLeastOneFixedPoint,
    /// Row `n`, column `k`: permutations with exactly `k` fixed points.
    RencontresTriangle,
    /// Row `n`, column `k`: `(n−k)!·D(k, n)`.
    FactorialDifferencesTriangle,
    /// Row `n`, column `ℓ`: fixed-point-free ℓ-matchings of `{1..n}`.
    PartialDerangementsTriangle,
    /// Row `m`, column `n`: fixed-point-free injections `{1..n} ↪ {1..m}`.
    RectDerangementsTriangle,
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mapping::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mapping `{s}`")))
    }
}

/// Row-major triangle position `p` as `(row, column)`.
fn triangle_cell(p: u64) -> (usize, usize) {
    let mut row = ((((8 * p + 1) as f64).sqrt() - 1.0) / 2.0) as u64;
    while row * (row + 1) / 2 > p {
        row -= 1;
    }
    while (row + 1) * (row + 2) / 2 <= p {
        row += 1;
    }
    (row as usize, (p - row * (row + 1) / 2) as usize)
}

impl Mapping {
    pub const ALL: [Mapping; 7] = [
        Mapping::Derangements,
        Mapping::Factorial,
        Mapping::AtLeastOneFixedPoint,
        Mapping::RencontresTriangle,
        Mapping::FactorialDifferencesTriangle,
        Mapping::PartialDerangementsTriangle,
        Mapping::RectDerangementsTriangle,
    ];

    /// The kebab-case name used in the mapping file.
    pub fn name(&self) -> &'static str {
        match self {
            Mapping::Derangements => "derangements",
            Mapping::Factorial => "factorial",
            Mapping::AtLeastOneFixedPoint => "at-least-one-fixed-point",
            Mapping::RencontresTriangle => "rencontres-triangle",
            Mapping::FactorialDifferencesTriangle => "factorial-differences-triangle",
            Mapping::PartialDerangementsTriangle => "partial-derangements-triangle",
            Mapping::RectDerangementsTriangle => "rect-derangements-triangle",
        }
    }

    pub fn evaluate(&self, position: u64) -> Result<Count> {
        let p = position as usize;
        let (row, col) = triangle_cell(position);
        match self {
            Mapping::Derangements => Ok(derangements(p)),
            Mapping::Factorial => Ok(factorial(p)),
            Mapping::AtLeastOneFixedPoint => {
                let total = factorial(p).into_biguint();
                Ok(Count::from(total - derangements(p).into_biguint()))
            }
            Mapping::RencontresTriangle => rencontres(row, col),
            Mapping::FactorialDifferencesTriangle => {
                Ok(&factorial(row - col) * &rect_derangements(col, row)?)
            }
            Mapping::PartialDerangementsTriangle => partial_derangements(row, col),
            Mapping::RectDerangementsTriangle => rect_derangements(col, row),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingStatus {
    Verified,
    OpenMismatch,
    Unverified,
}

impl MappingStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            MappingStatus::Verified => "verified",
            MappingStatus::OpenMismatch => "open-mismatch",
            MappingStatus::Unverified => "unverified",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawSpec {
    id: String,
    name: String,
    mapping: Mapping,
    offset: i64,
    status: MappingStatus,
    #[serde(default)]
    note: String,
}

#[derive(Debug, Deserialize)]
struct RawConfig {
    version: u32,
    #[serde(rename = "sequence")]
    sequences: Vec<RawSpec>,
}

/// One sequence id bound to a term mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub id: OeisId,
    pub name: String,
    pub mapping: Mapping,
    /// b-file index of the first term.
    pub offset: i64,
    pub status: MappingStatus,
    pub note: String,
}

impl SequenceSpec {
    pub fn new(id: OeisId, name: &str, mapping: Mapping, offset: i64) -> Self {
        SequenceSpec {
            id,
            name: name.to_string(),
            mapping,
            offset,
            status: MappingStatus::Unverified,
            note: String::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MappingConfig {
    pub version: u32,
    pub sequences: Vec<SequenceSpec>,
}

impl MappingConfig {
    /// The configuration shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MAPPINGS).expect("shipped mapping file is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let sequences = raw
            .sequences
            .into_iter()
            .map(|s| {
                Ok(SequenceSpec {
                    id: s.id.parse()?,
                    name: s.name,
                    mapping: s.mapping,
                    offset: s.offset,
                    status: s.status,
                    note: s.note,
                })
            })
            .collect::<Result<_>>()?;
        Ok(MappingConfig {
            version: raw.version,
            sequences,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn specs_for(&self, id: &OeisId) -> impl Iterator<Item = &SequenceSpec> {
        let id = id.clone();
        self.sequences.iter().filter(move |s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermMismatch {
    pub index: i64,
    pub expected: Count,
    pub computed: Count,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqCheckReport {
    pub id: OeisId,
    pub mapping: String,
    pub terms_checked: usize,
    pub mismatches: Vec<TermMismatch>,
    pub source: Source,
}

impl SeqCheckReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares the first `terms` entries of parsed b-file data with the mapped
/// library values. Mapping failures (a term outside the mapping's domain)
/// count as mismatches with computed value 0.
pub fn check_terms(
    spec: &SequenceSpec,
    data: &[(i64, Count)],
    terms: usize,
    source: Source,
) -> Result<SeqCheckReport> {
    if data.len() < terms {
        return Err(Error::domain(format!(
            "{} has {} terms available, {terms} requested",
            spec.id,
            data.len()
        )));
    }
    let mut mismatches = Vec::new();
    for (index, expected) in &data[..terms] {
        let position = u64::try_from(index - spec.offset).map_err(|_| {
            Error::domain(format!(
                "{} index {index} precedes offset {}",
                spec.id, spec.offset
            ))
        })?;
        let computed = spec.mapping.evaluate(position).unwrap_or_default();
        if &computed != expected {
            mismatches.push(TermMismatch {
                index: *index,
                expected: expected.clone(),
                computed,
            });
        }
    }
    Ok(SeqCheckReport {
        id: spec.id.clone(),
        mapping: spec.name.clone(),
        terms_checked: terms,
        mismatches,
        source,
    })
}

/// Fetches (or reads) the b-file for `spec.id` and checks `terms` terms.
pub fn check_sequence(
    client: &OeisClient,
    spec: &SequenceSpec,
    terms: usize,
) -> Result<SeqCheckReport> {
    if terms == 0 {
        return Ok(SeqCheckReport {
            id: spec.id.clone(),
            mapping: spec.name.clone(),
            terms_checked: 0,
            mismatches: Vec::new(),
            source: Source::Vendored,
        });
    }
    let (text, source) = client.fetch_bfile(&spec.id)?;
    let data = parse_bfile(&text)?;
    check_terms(spec, &data, terms, source)
}
