//! Article records, the canonical feature set, and class balancing.
//!
//! Raw input carries a mention count per online source plus the number of
//! policy documents citing the article. Classification uses eleven of the
//! sources in a fixed order ([`FEATURE_ORDER`]); the label is whether the
//! article was cited by at least one policy document.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const N_FEATURES: usize = 11;

/// One of the eleven attention sources used as a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    PeerReview,
    Gplus,
    Reddit,
    Video,
    Twitter,
    Weibo,
    Mendeley,
    Wikipedia,
    Blogs,
    Facebook,
    News,
}

/// Canonical feature order. Every vector, matrix, header and report uses it.
pub const FEATURE_ORDER: [Feature; N_FEATURES] = [
    Feature::PeerReview,
    Feature::Gplus,
    Feature::Reddit,
    Feature::Video,
    Feature::Twitter,
    Feature::Weibo,
    Feature::Mendeley,
    Feature::Wikipedia,
    Feature::Blogs,
    Feature::Facebook,
    Feature::News,
];

impl Feature {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        FEATURE_ORDER.get(i).copied()
    }

    /// Column / key name in input files.
    pub fn name(self) -> &'static str {
        match self {
            Feature::PeerReview => "peer_review",
            Feature::Gplus => "gplus",
            Feature::Reddit => "reddit",
            Feature::Video => "video",
            Feature::Twitter => "twitter",
            Feature::Weibo => "weibo",
            Feature::Mendeley => "mendeley",
            Feature::Wikipedia => "wikipedia",
            Feature::Blogs => "blogs",
            Feature::Facebook => "facebook",
            Feature::News => "news",
        }
    }

    /// Human-readable platform name for rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Feature::PeerReview => "peer-review",
            Feature::Gplus => "Google+",
            Feature::Reddit => "Reddit",
            Feature::Video => "video",
            Feature::Twitter => "Twitter",
            Feature::Weibo => "Weibo",
            Feature::Mendeley => "Mendeley",
            Feature::Wikipedia => "Wikipedia",
            Feature::Blogs => "blogs",
            Feature::Facebook => "Facebook",
            Feature::News => "news",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FEATURE_ORDER
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown feature `{s}`")))
    }
}

/// Every source an input file may mention. Sources outside the feature set
/// are accepted on input and dropped by [`select_features`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Feature(Feature),
    Connotea,
    Pinterest,
    Stackoverflow,
}

pub const EXCLUDED_SOURCES: [Source; 3] = [Source::Connotea, Source::Pinterest, Source::Stackoverflow];

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Feature(f) => f.name(),
            Source::Connotea => "connotea",
            Source::Pinterest => "pinterest",
            Source::Stackoverflow => "stackoverflow",
        }
    }

    pub fn from_name(name: &str) -> Option<Source> {
        match name {
            "connotea" => Some(Source::Connotea),
            "pinterest" => Some(Source::Pinterest),
            "stackoverflow" => Some(Source::Stackoverflow),
            _ => name.parse().ok().map(Source::Feature),
        }
    }

    pub fn all() -> impl Iterator<Item = Source> {
        FEATURE_ORDER
            .iter()
            .map(|&f| Source::Feature(f))
            .chain(EXCLUDED_SOURCES)
    }
}

pub const ID_COLUMN: &str = "article_id";
pub const POLICY_COLUMN: &str = "policy";

/// The full CSV header, in the order files are written.
pub fn csv_header() -> Vec<&'static str> {
    std::iter::once(ID_COLUMN)
        .chain(Source::all().map(Source::name))
        .chain(std::iter::once(POLICY_COLUMN))
        .collect()
}

/// One article as ingested: per-source mention counts and its policy citations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRecord {
    pub article_id: String,
    pub mentions: BTreeMap<Source, u64>,
    pub policy_count: u64,
}

impl ArticleRecord {
    pub fn mention(&self, source: Source) -> u64 {
        self.mentions.get(&source).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Negative, Label::Positive];

    /// Class index used by per-class arrays: negative 0, positive 1.
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// `+1.0` / `-1.0`, the SVM encoding.
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }
}

/// Positive iff the article is cited in at least one policy document.
pub fn binarize_label(policy_count: u64) -> Label {
    if policy_count >= 1 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Keeps the eleven feature sources, in canonical order.
pub fn select_features(record: &ArticleRecord) -> [u64; N_FEATURES] {
    let mut v = [0u64; N_FEATURES];
    for (slot, feature) in v.iter_mut().zip(FEATURE_ORDER) {
        *slot = record.mention(Source::Feature(feature));
    }
    v
}

/// A labeled feature vector. The article id is carried along so subsets can
/// be traced back to their input rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureVector {
    pub article_id: String,
    pub values: [u64; N_FEATURES],
    pub label: Label,
}

impl FeatureVector {
    pub fn from_record(record: &ArticleRecord) -> Self {
        FeatureVector {
            article_id: record.article_id.clone(),
            values: select_features(record),
            label: binarize_label(record.policy_count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecordSet {
    pub rows: Vec<FeatureVector>,
    pub provenance: String,
}

impl RecordSet {
    pub fn new(rows: Vec<FeatureVector>, provenance: impl Into<String>) -> Self {
        RecordSet {
            rows,
            provenance: provenance.into(),
        }
    }

    pub fn from_records(records: &[ArticleRecord], provenance: impl Into<String>) -> Self {
        RecordSet::new(records.iter().map(FeatureVector::from_record).collect(), provenance)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// `[negative, positive]` row counts.
    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(self.rows.iter().map(|r| r.label))
    }

    /// Rows at `indices`, in the order given.
    pub fn subset(&self, indices: &[usize], provenance: impl Into<String>) -> RecordSet {
        RecordSet::new(indices.iter().map(|&i| self.rows[i].clone()).collect(), provenance)
    }

    /// Fails with a fit error unless both classes are present.
    pub(crate) fn require_both_classes(&self, what: &str) -> Result<()> {
        let [neg, pos] = self.class_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::Fit(format!(
                "{what} needs both classes, got {pos} positive and {neg} negative rows"
            )));
        }
        Ok(())
    }
}

pub fn class_counts(labels: impl IntoIterator<Item = Label>) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" => Ok(InputFormat::Jsonl),
            other => Err(Error::Config(format!("unknown input format `{other}`"))),
        }
    }
}

pub fn load_records(path: &Path, format: InputFormat) -> Result<Vec<ArticleRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        InputFormat::Csv => read_csv(file),
        InputFormat::Jsonl => read_jsonl(BufReader::new(file)),
    }
}

/// Loads records and converts them to labeled feature vectors.
pub fn load_record_set(path: &Path, format: InputFormat) -> Result<RecordSet> {
    let records = load_records(path, format)?;
    Ok(RecordSet::from_records(&records, path.display().to_string()))
}

enum Column {
    Id,
    Policy,
    Source(Source),
}

fn parse_count(raw: &str, line: usize, column: &str) -> Result<u64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(0);
    }
    match raw.parse::<u64>() {
        Ok(v) => Ok(v),
        Err(_) => match raw.parse::<i64>() {
            Ok(v) if v < 0 => Err(Error::Validation {
                line,
                column: column.to_string(),
                message: format!("count {v} is negative"),
            }),
            _ => Err(Error::Parse {
                line,
                message: format!("column `{column}`: `{raw}` is not a non-negative integer"),
            }),
        },
    }
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<ArticleRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();

    let mut columns = Vec::with_capacity(headers.len());
    for name in headers.iter() {
        let col = match name {
            ID_COLUMN => Column::Id,
            POLICY_COLUMN => Column::Policy,
            other => Column::Source(
                Source::from_name(other)
                    .ok_or_else(|| Error::Schema(format!("unknown source column `{other}`")))?,
            ),
        };
        columns.push(col);
    }
    for required in [ID_COLUMN, POLICY_COLUMN] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Schema(format!("missing required column `{required}`")));
        }
    }

    let mut out = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut article_id = String::new();
        let mut policy = None;
        let mut mentions = BTreeMap::new();
        for ((col, name), raw) in columns.iter().zip(headers.iter()).zip(rec.iter()) {
            match col {
                Column::Id => article_id = raw.to_string(),
                Column::Policy => {
                    if raw.trim().is_empty() {
                        return Err(Error::Validation {
                            line,
                            column: POLICY_COLUMN.into(),
                            message: "policy count is required".into(),
                        });
                    }
                    policy = Some(parse_count(raw, line, name)?);
                }
                Column::Source(s) => {
                    let v = parse_count(raw, line, name)?;
                    if v > 0 {
                        mentions.insert(*s, v);
                    }
                }
            }
        }
        if article_id.is_empty() {
            return Err(Error::Validation {
                line,
                column: ID_COLUMN.into(),
                message: "article_id must be non-empty".into(),
            });
        }
        out.push(ArticleRecord {
            article_id,
            mentions,
            policy_count: policy.unwrap_or(0),
        });
    }
    Ok(out)
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<ArticleRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        out.push(record_from_json(obj, lineno)?);
    }
    Ok(out)
}

fn json_count(value: &serde_json::Value, line: usize, key: &str) -> Result<u64> {
    if let Some(v) = value.as_u64() {
        return Ok(v);
    }
    if value.as_i64().is_some_and(|v| v < 0) {
        return Err(Error::Validation {
            line,
            column: key.to_string(),
            message: format!("count {value} is negative"),
        });
    }
    Err(Error::Parse {
        line,
        message: format!("key `{key}`: {value} is not a non-negative integer"),
    })
}

fn record_from_json(obj: serde_json::Map<String, serde_json::Value>, line: usize) -> Result<ArticleRecord> {
    let mut article_id = None;
    let mut policy = None;
    let mut mentions = BTreeMap::new();
    for (key, value) in &obj {
        match key.as_str() {
            ID_COLUMN => match value {
                serde_json::Value::String(s) => article_id = Some(s.clone()),
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("article_id must be a string, got {other}"),
                    })
                }
            },
            POLICY_COLUMN => policy = Some(json_count(value, line, key)?),
            name => {
                let source = Source::from_name(name)
                    .ok_or_else(|| Error::Schema(format!("line {line}: unknown source key `{name}`")))?;
                let v = json_count(value, line, key)?;
                if v > 0 {
                    mentions.insert(source, v);
                }
            }
        }
    }
    let article_id =
        article_id.ok_or_else(|| Error::Schema(format!("line {line}: missing required key `{ID_COLUMN}`")))?;
    if article_id.is_empty() {
        return Err(Error::Validation {
            line,
            column: ID_COLUMN.into(),
            message: "article_id must be non-empty".into(),
        });
    }
    let policy_count =
        policy.ok_or_else(|| Error::Schema(format!("line {line}: missing required key `{POLICY_COLUMN}`")))?;
    Ok(ArticleRecord {
        article_id,
        mentions,
        policy_count,
    })
}

/// Writes records with the full CSV header.
pub fn write_records_csv<W: Write>(writer: W, records: &[ArticleRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Schema(format!("csv write failed: {e}"));
    wtr.write_record(csv_header()).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.article_id.clone()];
        row.extend(Source::all().map(|s| r.mention(s).to_string()));
        row.push(r.policy_count.to_string());
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Writes a labeled set in the input CSV schema: policy is written as 0/1 and
/// excluded sources as 0, since neither survives feature selection.
pub fn write_record_set_csv<W: Write>(writer: W, set: &RecordSet) -> Result<()> {
    let records: Vec<ArticleRecord> = set
        .rows
        .iter()
        .map(|row| ArticleRecord {
            article_id: row.article_id.clone(),
            mentions: FEATURE_ORDER
                .iter()
                .zip(row.values)
                .filter(|(_, v)| *v > 0)
                .map(|(&f, v)| (Source::Feature(f), v))
                .collect(),
            policy_count: u64::from(row.label.is_positive()),
        })
        .collect();
    write_records_csv(writer, &records)
}

pub fn save_record_set(path: &Path, set: &RecordSet) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_record_set_csv(std::io::BufWriter::new(file), set)
}

/// Indices of a class-balanced subset of `labels`: the minority class is kept
/// whole, the majority is sampled without replacement down to the same size,
/// and the result is shuffled. Deterministic in `seed`.
pub fn balance_indices(labels: &[Label], seed: u64) -> Result<Vec<usize>> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    let [neg, pos] = &by_class;
    if neg.is_empty() || pos.is_empty() {
        return Err(Error::Balance(format!(
            "both classes must be present (positive {}, negative {})",
            pos.len(),
            neg.len()
        )));
    }
    let target = neg.len().min(pos.len());
    let mut rng = rng::seeded(seed);
    let mut chosen = Vec::with_capacity(2 * target);
    for class in &by_class {
        if class.len() == target {
            chosen.extend_from_slice(class);
        } else {
            let mut picked: Vec<usize> = index::sample(&mut rng, class.len(), target)
                .into_iter()
                .map(|k| class[k])
                .collect();
            picked.sort_unstable();
            chosen.extend(picked);
        }
    }
    chosen.shuffle(&mut rng);
    Ok(chosen)
}

/// Undersamples the majority class to the minority class size.
pub fn balance(rows: &RecordSet, seed: u64) -> Result<RecordSet> {
    let idx = balance_indices(&rows.labels(), seed)?;
    Ok(rows.subset(&idx, format!("{} | balanced(seed={seed})", rows.provenance)))
}
