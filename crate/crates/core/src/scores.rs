//! Ingest, validation, and indexing of pairwise biometric match scores.
//!
//! A [`ScoreSet`] holds every pairwise comparison of the watchlist, remembers
//! the observed raw-score extrema, and normalizes scores into `[0, 1]` on
//! demand. The genuine/impostor kind and the HQ/LQ/VQ quality pairing of a
//! comparison are always derived from the record itself, never stored.
//!
//! Score CSV format (header required):
//!
//! ```text
//! subject_a,subject_b,tier_a,tier_b,score[,sample_a,sample_b]
//! ```
//!
//! with tiers spelled `high` or `low` (case-insensitive) and `score` a decimal
//! literal. Parse failures are reported with 1-based line numbers.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced while ingesting or querying score data.
#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("empty score set: no records supplied")]
    EmptySet,
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("row {row}: genuine self-pair compares a sample against itself (sample id {sample})")]
    IdenticalSamplePair { row: u64, sample: String },
    #[error("unknown subject {0}")]
    UnknownSubject(SubjectId),
    #[error("degenerate score range: norm_min == norm_max == {0}")]
    DegenerateRange(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Opaque identity token. Two records with an equal id refer to the same
/// enrolled identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubjectId(String);

impl SubjectId {
    /// Builds an id, rejecting the empty string.
    pub fn new(id: impl Into<String>) -> Result<Self, ScoreError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ScoreError::MalformedRow {
                row: 0,
                reason: "empty subject id".into(),
            });
        }
        Ok(SubjectId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sample-level acquisition tier. `High` corresponds to controlled capture,
/// `Low` to uncontrolled capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityTier {
    High,
    Low,
}

impl QualityTier {
    fn parse(label: &str) -> Option<Self> {
        match label.to_ascii_lowercase().as_str() {
            "high" => Some(QualityTier::High),
            "low" => Some(QualityTier::Low),
            _ => None,
        }
    }
}

impl fmt::Display for QualityTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QualityTier::High => "high",
            QualityTier::Low => "low",
        })
    }
}

/// Quality pairing of one comparison: both samples high (`Hq`), both low
/// (`Lq`), or mixed (`Vq`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComparisonQuality {
    #[serde(rename = "high")]
    Hq,
    #[serde(rename = "low")]
    Lq,
    #[serde(rename = "various")]
    Vq,
}

impl ComparisonQuality {
    pub const ALL: [ComparisonQuality; 3] =
        [ComparisonQuality::Hq, ComparisonQuality::Lq, ComparisonQuality::Vq];

    pub fn from_tiers(a: QualityTier, b: QualityTier) -> Self {
        match (a, b) {
            (QualityTier::High, QualityTier::High) => ComparisonQuality::Hq,
            (QualityTier::Low, QualityTier::Low) => ComparisonQuality::Lq,
            _ => ComparisonQuality::Vq,
        }
    }

    /// Index in `ALL`, handy for fixed-size per-quality tables.
    pub fn index(self) -> usize {
        match self {
            ComparisonQuality::Hq => 0,
            ComparisonQuality::Lq => 1,
            ComparisonQuality::Vq => 2,
        }
    }
}

impl fmt::Display for ComparisonQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonQuality::Hq => "high",
            ComparisonQuality::Lq => "low",
            ComparisonQuality::Vq => "various",
        })
    }
}

/// Whether a comparison involves one identity (genuine) or two (impostor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonKind {
    Genuine,
    Impostor,
}

impl ComparisonKind {
    pub const ALL: [ComparisonKind; 2] = [ComparisonKind::Genuine, ComparisonKind::Impostor];

    pub fn index(self) -> usize {
        match self {
            ComparisonKind::Genuine => 0,
            ComparisonKind::Impostor => 1,
        }
    }
}

impl fmt::Display for ComparisonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonKind::Genuine => "genuine",
            ComparisonKind::Impostor => "impostor",
        })
    }
}

/// One pairwise comparison in matcher-native score units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub subject_a: SubjectId,
    pub subject_b: SubjectId,
    pub tier_a: QualityTier,
    pub tier_b: QualityTier,
    pub raw_score: f64,
    pub sample_a: Option<String>,
    pub sample_b: Option<String>,
}

impl ScoreRecord {
    pub fn new(
        subject_a: SubjectId,
        subject_b: SubjectId,
        tier_a: QualityTier,
        tier_b: QualityTier,
        raw_score: f64,
    ) -> Result<Self, ScoreError> {
        if !raw_score.is_finite() {
            return Err(ScoreError::MalformedRow {
                row: 0,
                reason: format!("non-finite score {raw_score}"),
            });
        }
        Ok(ScoreRecord {
            subject_a,
            subject_b,
            tier_a,
            tier_b,
            raw_score,
            sample_a: None,
            sample_b: None,
        })
    }

    pub fn with_samples(mut self, sample_a: impl Into<String>, sample_b: impl Into<String>) -> Self {
        self.sample_a = Some(sample_a.into());
        self.sample_b = Some(sample_b.into());
        self
    }

    /// Genuine iff both samples belong to the same identity.
    pub fn kind(&self) -> ComparisonKind {
        if self.subject_a == self.subject_b {
            ComparisonKind::Genuine
        } else {
            ComparisonKind::Impostor
        }
    }

    pub fn quality(&self) -> ComparisonQuality {
        ComparisonQuality::from_tiers(self.tier_a, self.tier_b)
    }

    pub fn involves(&self, subject: &SubjectId) -> bool {
        &self.subject_a == subject || &self.subject_b == subject
    }
}

/// A parsed but not yet validated score row, as read from CSV or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub subject_a: String,
    pub subject_b: String,
    pub tier_a: String,
    pub tier_b: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_b: Option<String>,
}

impl ScoreRow {
    /// Validates the row into a typed record. `row` is the 1-based position
    /// used in error messages.
    pub fn to_record(&self, row: u64) -> Result<ScoreRecord, ScoreError> {
        let malformed = |reason: String| ScoreError::MalformedRow { row, reason };
        if self.subject_a.is_empty() || self.subject_b.is_empty() {
            return Err(malformed("empty subject id".into()));
        }
        let tier_a = QualityTier::parse(&self.tier_a)
            .ok_or_else(|| malformed(format!("unknown tier label {:?}", self.tier_a)))?;
        let tier_b = QualityTier::parse(&self.tier_b)
            .ok_or_else(|| malformed(format!("unknown tier label {:?}", self.tier_b)))?;
        if !self.score.is_finite() {
            return Err(malformed(format!("non-finite score {}", self.score)));
        }
        let mut record = ScoreRecord {
            subject_a: SubjectId(self.subject_a.clone()),
            subject_b: SubjectId(self.subject_b.clone()),
            tier_a,
            tier_b,
            raw_score: self.score,
            sample_a: self.sample_a.clone(),
            sample_b: self.sample_b.clone(),
        };
        if let (Some(sa), Some(sb)) = (&record.sample_a, &record.sample_b) {
            // A genuine pair must compare two distinct acquisitions.
            if record.subject_a == record.subject_b && sa == sb {
                return Err(ScoreError::IdenticalSamplePair {
                    row,
                    sample: sa.clone(),
                });
            }
        }
        if record.sample_a.is_none() && record.sample_b.is_none() {
            record.sample_a = None;
            record.sample_b = None;
        }
        Ok(record)
    }
}

/// Per-subject normalized score lists, partitioned by comparison kind and
/// quality pairing (2 x 3 slices).
#[derive(Debug, Clone, Default)]
pub struct SubjectSlices {
    slices: [[Vec<f64>; 3]; 2],
}

impl SubjectSlices {
    pub fn get(&self, kind: ComparisonKind, quality: ComparisonQuality) -> &[f64] {
        &self.slices[kind.index()][quality.index()]
    }

    pub(crate) fn push(&mut self, kind: ComparisonKind, quality: ComparisonQuality, score: f64) {
        self.slices[kind.index()][quality.index()].push(score);
    }

    /// All scores of one kind, pooled over the three quality pairings.
    pub fn kind_scores(&self, kind: ComparisonKind) -> Vec<f64> {
        let mut out = Vec::new();
        for quality in ComparisonQuality::ALL {
            out.extend_from_slice(self.get(kind, quality));
        }
        out
    }

    pub fn total_len(&self) -> usize {
        self.slices.iter().flatten().map(Vec::len).sum()
    }
}

/// Configuration for the automated quality-control gate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateConfig {
    /// An entry whose mean genuine normalized score falls below this floor is flagged.
    pub min_mean_genuine: f64,
    /// An entry with fewer genuine scores than this is flagged.
    pub min_genuine_count: usize,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            min_mean_genuine: 0.2,
            min_genuine_count: 2,
        }
    }
}

/// Statistics computed while gating one entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateStats {
    pub genuine_count: usize,
    pub mean_genuine: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum GateReason {
    InsufficientGenuine { count: usize, required: usize },
    LowMeanGenuine { mean: f64, floor: f64 },
}

impl fmt::Display for GateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateReason::InsufficientGenuine { count, required } => {
                write!(f, "insufficient genuine samples ({count} < {required})")
            }
            GateReason::LowMeanGenuine { mean, floor } => {
                write!(f, "low mean genuine score ({mean:.4} < {floor:.4})")
            }
        }
    }
}

/// Verdict of the quality gate for one watchlist entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum GateVerdict {
    Pass { stats: GateStats },
    Flag { why: GateReason, stats: GateStats },
}

impl GateVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, GateVerdict::Pass { .. })
    }
}

/// Immutable collection of score records with the observed raw-score range
/// and the set of referenced subjects.
///
/// All read operations are safe to call concurrently; mutation happens only
/// by constructing a new set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    records: Vec<ScoreRecord>,
    norm_min: f64,
    norm_max: f64,
    subjects: BTreeSet<SubjectId>,
}

impl ScoreSet {
    /// Builds a set from typed records, computing the score extrema and the
    /// subject index. Duplicate pairs are retained: multiple samples per pair
    /// are legal and stay independent scores.
    pub fn from_records(records: Vec<ScoreRecord>) -> Result<Self, ScoreError> {
        if records.is_empty() {
            return Err(ScoreError::EmptySet);
        }
        let mut norm_min = f64::INFINITY;
        let mut norm_max = f64::NEG_INFINITY;
        let mut subjects = BTreeSet::new();
        for (i, rec) in records.iter().enumerate() {
            if !rec.raw_score.is_finite() {
                return Err(ScoreError::MalformedRow {
                    row: i as u64 + 1,
                    reason: format!("non-finite score {}", rec.raw_score),
                });
            }
            if let (Some(sa), Some(sb)) = (&rec.sample_a, &rec.sample_b) {
                if rec.subject_a == rec.subject_b && sa == sb {
                    return Err(ScoreError::IdenticalSamplePair {
                        row: i as u64 + 1,
                        sample: sa.clone(),
                    });
                }
            }
            norm_min = norm_min.min(rec.raw_score);
            norm_max = norm_max.max(rec.raw_score);
            subjects.insert(rec.subject_a.clone());
            subjects.insert(rec.subject_b.clone());
        }
        Ok(ScoreSet {
            records,
            norm_min,
            norm_max,
            subjects,
        })
    }

    /// Validates raw rows into a set. Errors cite the 1-based row position.
    pub fn ingest(rows: &[ScoreRow]) -> Result<Self, ScoreError> {
        if rows.is_empty() {
            return Err(ScoreError::EmptySet);
        }
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.to_record(i as u64 + 1))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_records(records)
    }

    /// Reads the score CSV format. Errors cite the 1-based file line.
    /// Lines starting with `#` (provenance headers) are skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, ScoreError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = csv_reader.headers()?.clone();
        let expected = ["subject_a", "subject_b", "tier_a", "tier_b", "score"];
        for (i, name) in expected.iter().enumerate() {
            if headers.get(i) != Some(*name) {
                return Err(ScoreError::MalformedRow {
                    row: 1,
                    reason: format!(
                        "bad header: expected column {} to be {:?}, found {:?}",
                        i + 1,
                        name,
                        headers.get(i).unwrap_or("")
                    ),
                });
            }
        }
        let mut records = Vec::new();
        for result in csv_reader.records() {
            let record = result?;
            let line = record
                .position()
                .map(|p| p.line())
                .unwrap_or(records.len() as u64 + 2);
            let malformed = |reason: String| ScoreError::MalformedRow { row: line, reason };
            let field = |i: usize, name: &str| -> Result<String, ScoreError> {
                record
                    .get(i)
                    .map(str::to_owned)
                    .ok_or_else(|| malformed(format!("missing field {name}")))
            };
            let score_text = field(4, "score")?;
            let score: f64 = score_text
                .trim()
                .parse()
                .map_err(|_| malformed(format!("non-numeric score {score_text:?}")))?;
            let optional = |i: usize| {
                record
                    .get(i)
                    .map(str::to_owned)
                    .filter(|s| !s.is_empty())
            };
            let row = ScoreRow {
                subject_a: field(0, "subject_a")?,
                subject_b: field(1, "subject_b")?,
                tier_a: field(2, "tier_a")?,
                tier_b: field(3, "tier_b")?,
                score,
                sample_a: optional(5),
                sample_b: optional(6),
            };
            records.push(row.to_record(line)?);
        }
        if records.is_empty() {
            return Err(ScoreError::EmptySet);
        }
        Self::from_records(records)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, ScoreError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    /// Writes the set back out in the score CSV format, scores fixed to six
    /// decimals. Sample columns are emitted when any record carries them.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<(), ScoreError> {
        let with_samples = self
            .records
            .iter()
            .any(|r| r.sample_a.is_some() || r.sample_b.is_some());
        if with_samples {
            writeln!(writer, "subject_a,subject_b,tier_a,tier_b,score,sample_a,sample_b")?;
        } else {
            writeln!(writer, "subject_a,subject_b,tier_a,tier_b,score")?;
        }
        for rec in &self.records {
            write!(
                writer,
                "{},{},{},{},{:.6}",
                rec.subject_a, rec.subject_b, rec.tier_a, rec.tier_b, rec.raw_score
            )?;
            if with_samples {
                write!(
                    writer,
                    ",{},{}",
                    rec.sample_a.as_deref().unwrap_or(""),
                    rec.sample_b.as_deref().unwrap_or("")
                )?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn subjects(&self) -> &BTreeSet<SubjectId> {
        &self.subjects
    }

    pub fn contains(&self, subject: &SubjectId) -> bool {
        self.subjects.contains(subject)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn norm_min(&self) -> f64 {
        self.norm_min
    }

    pub fn norm_max(&self) -> f64 {
        self.norm_max
    }

    /// Min-max normalizes a raw score into `[0, 1]`, clamping out-of-range
    /// values. Fails on a degenerate observed range.
    pub fn normalize(&self, raw: f64) -> Result<f64, ScoreError> {
        if self.norm_min >= self.norm_max {
            return Err(ScoreError::DegenerateRange(self.norm_min));
        }
        Ok(((raw - self.norm_min) / (self.norm_max - self.norm_min)).clamp(0.0, 1.0))
    }

    /// Extracts the subject's normalized scores, partitioned into the six
    /// (kind x quality) slices. The union of the slices is exactly the
    /// multiset of the subject's scores.
    pub fn subject_slices(&self, subject: &SubjectId) -> Result<SubjectSlices, ScoreError> {
        self.subject_slices_excluding(subject, None)
    }

    /// Like [`subject_slices`](Self::subject_slices) but drops records that
    /// also involve `exclude`, mirroring landscape exclusion.
    pub fn subject_slices_excluding(
        &self,
        subject: &SubjectId,
        exclude: Option<&SubjectId>,
    ) -> Result<SubjectSlices, ScoreError> {
        if !self.subjects.contains(subject) {
            return Err(ScoreError::UnknownSubject(subject.clone()));
        }
        let mut slices = SubjectSlices::default();
        for rec in &self.records {
            if !rec.involves(subject) {
                continue;
            }
            if let Some(x) = exclude {
                if rec.involves(x) {
                    continue;
                }
            }
            slices.push(rec.kind(), rec.quality(), self.normalize(rec.raw_score)?);
        }
        Ok(slices)
    }

    /// Quality-control gate over one entry's score statistics.
    pub fn quality_gate(
        &self,
        entry: &SubjectId,
        cfg: &GateConfig,
    ) -> Result<GateVerdict, ScoreError> {
        let slices = self.subject_slices(entry)?;
        let genuine = slices.kind_scores(ComparisonKind::Genuine);
        let mean = if genuine.is_empty() {
            None
        } else {
            Some(genuine.iter().sum::<f64>() / genuine.len() as f64)
        };
        let stats = GateStats {
            genuine_count: genuine.len(),
            mean_genuine: mean,
        };
        if genuine.len() < cfg.min_genuine_count {
            return Ok(GateVerdict::Flag {
                why: GateReason::InsufficientGenuine {
                    count: genuine.len(),
                    required: cfg.min_genuine_count,
                },
                stats,
            });
        }
        let mean = mean.expect("non-empty genuine list has a mean");
        if mean < cfg.min_mean_genuine {
            return Ok(GateVerdict::Flag {
                why: GateReason::LowMeanGenuine {
                    mean,
                    floor: cfg.min_mean_genuine,
                },
                stats,
            });
        }
        Ok(GateVerdict::Pass { stats })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(s: &str) -> SubjectId {
        SubjectId::new(s).unwrap()
    }

    fn row(a: &str, b: &str, ta: &str, tb: &str, score: f64) -> ScoreRow {
        ScoreRow {
            subject_a: a.into(),
            subject_b: b.into(),
            tier_a: ta.into(),
            tier_b: tb.into(),
            score,
            sample_a: None,
            sample_b: None,
        }
    }

    #[test]
    fn ingest_three_valid_rows() {
        let set = ScoreSet::ingest(&[
            row("a", "a", "high", "high", 10.0),
            row("a", "b", "low", "low", 20.0),
            row("b", "c", "high", "low", 40.0),
        ])
        .unwrap();
        assert_eq!(set.len(), 3);
        let subjects: Vec<_> = set.subjects().iter().map(|s| s.as_str()).collect();
        assert_eq!(subjects, vec!["a", "b", "c"]);
    }

    #[test]
    fn ingest_rejects_nan_score_naming_row() {
        let err = ScoreSet::ingest(&[
            row("a", "a", "high", "high", 1.0),
            row("a", "b", "high", "high", f64::NAN),
        ])
        .unwrap_err();
        match err {
            ScoreError::MalformedRow { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_unknown_tier() {
        let err = ScoreSet::ingest(&[row("a", "b", "medium", "high", 1.0)]).unwrap_err();
        assert!(matches!(err, ScoreError::MalformedRow { row: 1, .. }));
    }

    #[test]
    fn ingest_empty_is_distinct_error() {
        assert!(matches!(ScoreSet::ingest(&[]), Err(ScoreError::EmptySet)));
    }

    #[test]
    fn extrema_are_observed_min_max() {
        let set = ScoreSet::ingest(&[
            row("a", "b", "high", "high", 10.0),
            row("a", "c", "high", "high", 20.0),
            row("b", "c", "high", "high", 40.0),
        ])
        .unwrap();
        assert_eq!(set.norm_min(), 10.0);
        assert_eq!(set.norm_max(), 40.0);
    }

    #[test]
    fn normalize_boundaries_and_midpoint() {
        let set = ScoreSet::ingest(&[
            row("a", "b", "high", "high", 10.0),
            row("a", "c", "high", "high", 40.0),
        ])
        .unwrap();
        assert_eq!(set.normalize(10.0).unwrap(), 0.0);
        assert_eq!(set.normalize(40.0).unwrap(), 1.0);
        assert_eq!(set.normalize(25.0).unwrap(), 0.5);
        // out-of-range raw values clamp
        assert_eq!(set.normalize(-5.0).unwrap(), 0.0);
        assert_eq!(set.normalize(99.0).unwrap(), 1.0);
    }

    #[test]
    fn normalize_degenerate_range_errors() {
        let set = ScoreSet::ingest(&[row("a", "b", "high", "high", 7.0)]).unwrap();
        assert!(matches!(
            set.normalize(7.0),
            Err(ScoreError::DegenerateRange(_))
        ));
    }

    #[test]
    fn classify_comparison_definitions() {
        let r = ScoreRecord::new(sid("a"), sid("a"), QualityTier::High, QualityTier::High, 1.0)
            .unwrap();
        assert_eq!(
            (r.kind(), r.quality()),
            (ComparisonKind::Genuine, ComparisonQuality::Hq)
        );
        let r = ScoreRecord::new(sid("a"), sid("b"), QualityTier::Low, QualityTier::Low, 1.0)
            .unwrap();
        assert_eq!(
            (r.kind(), r.quality()),
            (ComparisonKind::Impostor, ComparisonQuality::Lq)
        );
        let r = ScoreRecord::new(sid("a"), sid("b"), QualityTier::High, QualityTier::Low, 1.0)
            .unwrap();
        assert_eq!(
            (r.kind(), r.quality()),
            (ComparisonKind::Impostor, ComparisonQuality::Vq)
        );
        // mixed tiers in the other order are also various
        let r = ScoreRecord::new(sid("a"), sid("b"), QualityTier::Low, QualityTier::High, 1.0)
            .unwrap();
        assert_eq!(r.quality(), ComparisonQuality::Vq);
    }

    #[test]
    fn slices_partition_subject_records() {
        let set = ScoreSet::ingest(&[
            row("a", "a", "high", "high", 5.0),
            row("a", "b", "high", "low", 1.0),
            row("b", "c", "high", "high", 3.0),
        ])
        .unwrap();
        let slices = set.subject_slices(&sid("a")).unwrap();
        assert_eq!(slices.get(ComparisonKind::Genuine, ComparisonQuality::Hq).len(), 1);
        assert_eq!(slices.get(ComparisonKind::Impostor, ComparisonQuality::Vq).len(), 1);
        assert_eq!(slices.total_len(), 2);
    }

    #[test]
    fn slices_unknown_subject_errors() {
        let set = ScoreSet::ingest(&[row("a", "b", "high", "high", 1.0), row("a", "b", "high", "high", 2.0)]).unwrap();
        assert!(matches!(
            set.subject_slices(&sid("zz")),
            Err(ScoreError::UnknownSubject(_))
        ));
    }

    #[test]
    fn slice_counts_match_brute_force_scan() {
        // subject A planted in 4 genuine-HQ and 6 impostor-VQ records
        let mut rows = Vec::new();
        for i in 0..4 {
            rows.push(row("A", "A", "high", "high", 10.0 + i as f64));
        }
        for i in 0..6 {
            rows.push(row("A", "B", "high", "low", 20.0 + i as f64));
        }
        rows.push(row("B", "C", "low", "low", 0.0));
        let set = ScoreSet::ingest(&rows).unwrap();

        // independent oracle: count by scanning the raw rows
        let gen_hq = rows
            .iter()
            .filter(|r| r.subject_a == "A" && r.subject_b == "A" && r.tier_a == "high" && r.tier_b == "high")
            .count();
        let imp_vq = rows
            .iter()
            .filter(|r| {
                (r.subject_a == "A") != (r.subject_b == "A")
                    && r.tier_a != r.tier_b
            })
            .count();

        let slices = set.subject_slices(&sid("A")).unwrap();
        assert_eq!(slices.get(ComparisonKind::Genuine, ComparisonQuality::Hq).len(), gen_hq);
        assert_eq!(slices.get(ComparisonKind::Impostor, ComparisonQuality::Vq).len(), imp_vq);
        assert_eq!(gen_hq, 4);
        assert_eq!(imp_vq, 6);
        assert_eq!(slices.get(ComparisonKind::Genuine, ComparisonQuality::Lq).len(), 0);
        assert_eq!(slices.get(ComparisonKind::Impostor, ComparisonQuality::Hq).len(), 0);
    }

    #[test]
    fn slices_union_equals_subject_multiset() {
        let set = ScoreSet::ingest(&[
            row("a", "a", "high", "low", 5.0),
            row("a", "b", "high", "high", 1.0),
            row("c", "a", "low", "low", 3.0),
            row("b", "c", "high", "high", 4.0),
        ])
        .unwrap();
        let slices = set.subject_slices(&sid("a")).unwrap();
        let mut pooled: Vec<f64> = Vec::new();
        for kind in ComparisonKind::ALL {
            for quality in ComparisonQuality::ALL {
                pooled.extend_from_slice(slices.get(kind, quality));
            }
        }
        let mut expected: Vec<f64> = set
            .records()
            .iter()
            .filter(|r| r.involves(&sid("a")))
            .map(|r| set.normalize(r.raw_score).unwrap())
            .collect();
        pooled.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        assert_eq!(pooled, expected);
    }

    #[test]
    fn quality_gate_passes_above_floor() {
        let set = ScoreSet::ingest(&[
            row("a", "a", "high", "high", 0.9),
            row("a", "a", "high", "low", 0.85),
            row("a", "b", "high", "high", 0.0),
            row("b", "b", "high", "high", 1.0),
        ])
        .unwrap();
        let verdict = set.quality_gate(&sid("a"), &GateConfig::default()).unwrap();
        assert!(verdict.is_pass());
    }

    #[test]
    fn quality_gate_flags_low_mean() {
        let set = ScoreSet::ingest(&[
            row("a", "a", "high", "high", 0.05),
            row("a", "a", "high", "low", 0.1),
            row("a", "b", "high", "high", 0.0),
            row("b", "b", "high", "high", 1.0),
        ])
        .unwrap();
        match set.quality_gate(&sid("a"), &GateConfig::default()).unwrap() {
            GateVerdict::Flag {
                why: GateReason::LowMeanGenuine { .. },
                ..
            } => {}
            other => panic!("expected low-mean flag, got {other:?}"),
        }
    }

    #[test]
    fn quality_gate_flags_insufficient_samples() {
        let set = ScoreSet::ingest(&[
            row("a", "a", "high", "high", 0.9),
            row("a", "b", "high", "high", 0.0),
            row("b", "b", "high", "high", 1.0),
        ])
        .unwrap();
        match set.quality_gate(&sid("a"), &GateConfig::default()).unwrap() {
            GateVerdict::Flag {
                why: GateReason::InsufficientGenuine { count: 1, .. },
                ..
            } => {}
            other => panic!("expected insufficient flag, got {other:?}"),
        }
    }

    #[test]
    fn self_pair_with_identical_sample_id_rejected() {
        let mut r = row("a", "a", "high", "high", 1.0);
        r.sample_a = Some("s1".into());
        r.sample_b = Some("s1".into());
        let err = ScoreSet::ingest(&[r]).unwrap_err();
        assert!(matches!(err, ScoreError::IdenticalSamplePair { row: 1, .. }));

        // distinct samples of the same subject are a legal genuine pair
        let mut r = row("a", "a", "high", "high", 1.0);
        r.sample_a = Some("s1".into());
        r.sample_b = Some("s2".into());
        let mut r2 = row("a", "b", "high", "high", 2.0);
        r2.sample_a = Some("s1".into());
        r2.sample_b = Some("s1".into()); // same label, different subjects: fine
        assert!(ScoreSet::ingest(&[r, r2]).is_ok());
    }

    #[test]
    fn csv_round_trip_and_line_numbers() {
        let text = "subject_a,subject_b,tier_a,tier_b,score\na,a,high,HIGH,1.5\na,b,Low,low,2.5\n";
        let set = ScoreSet::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.records()[0].quality(), ComparisonQuality::Hq);

        let bad = "subject_a,subject_b,tier_a,tier_b,score\na,a,high,high,1.5\na,b,high,low,oops\n";
        match ScoreSet::from_csv_reader(bad.as_bytes()).unwrap_err() {
            ScoreError::MalformedRow { row, reason } => {
                assert_eq!(row, 3, "line number should be file-relative");
                assert!(reason.contains("oops"));
            }
            other => panic!("unexpected {other:?}"),
        }

        let mut out = Vec::new();
        set.write_csv(&mut out).unwrap();
        let reread = ScoreSet::from_csv_reader(out.as_slice()).unwrap();
        assert_eq!(reread.len(), set.len());
        assert_eq!(reread.norm_min(), set.norm_min());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let text = "a,b,c,d,e\n1,2,high,low,3\n";
        assert!(matches!(
            ScoreSet::from_csv_reader(text.as_bytes()),
            Err(ScoreError::MalformedRow { row: 1, .. })
        ));
    }
}
