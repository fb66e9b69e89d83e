//! Risk-category assignment and the watchlist landscape.
//!
//! Subjects are ranked by their mean normalized genuine and impostor scores.
//! The lowest-genuine tail becomes goats, the highest-impostor tail becomes
//! the merged wolf/lamb class, everyone else is a sheep. The landscape is the
//! full grid of 18 smoothed score distributions, one per
//! (category, quality pairing, comparison kind) cell, plus the category
//! population proportions.
//!
//! Landscapes and assignments are immutable snapshots. [`mutate_watchlist`]
//! is a pure function returning fresh snapshots; writers serialize
//! themselves, readers never block.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scores::{
    ComparisonKind, ComparisonQuality, ScoreError, ScoreRecord, ScoreSet, SubjectId,
};

#[derive(Debug, Error)]
pub enum LandscapeError {
    #[error("population must contain at least one rankable subject")]
    EmptyPopulation,
    #[error("percentile {0} outside the open interval (0, 0.5)")]
    PercentileOutOfRange(f64),
    #[error("bin count {0} too small (minimum 2)")]
    TooFewBins(usize),
    #[error("bandwidth {0} must be a positive finite number")]
    BadBandwidth(f64),
    #[error("score {0} outside [0, 1] or non-finite")]
    BadScore(f64),
    #[error("kernel mass underflowed to zero (bandwidth {0} too small for the bin grid)")]
    DegenerateKernel(f64),
    #[error("unknown subject {0}")]
    UnknownSubject(SubjectId),
    #[error("no category assigned for subject {0}; assignment does not match the score set")]
    MissingAssignment(SubjectId),
    #[error(transparent)]
    Scores(#[from] ScoreError),
}

/// Operational risk category. Wolves and lambs are an impostor/victim pair
/// and are merged into one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrcCategory {
    Sheep,
    Goat,
    WolfLamb,
}

impl DrcCategory {
    /// Reporting order: goat, wolf/lamb, sheep.
    pub const ALL: [DrcCategory; 3] = [DrcCategory::Goat, DrcCategory::WolfLamb, DrcCategory::Sheep];

    pub fn name(self) -> &'static str {
        match self {
            DrcCategory::Sheep => "sheep",
            DrcCategory::Goat => "goat",
            DrcCategory::WolfLamb => "wolf_lamb",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "sheep" => Some(DrcCategory::Sheep),
            "goat" => Some(DrcCategory::Goat),
            "wolf_lamb" => Some(DrcCategory::WolfLamb),
            _ => None,
        }
    }
}

impl fmt::Display for DrcCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Number of subjects flagged per tail at the given percentile:
/// `ceil(percentile * n)`, floored at 1 and capped at `n`.
///
/// Products that are integers up to floating-point noise are not pushed to
/// the next integer: `flag_count(40, 0.025)` is 1, not 2.
pub fn flag_count(n_subjects: usize, percentile: f64) -> Result<usize, LandscapeError> {
    if n_subjects == 0 {
        return Err(LandscapeError::EmptyPopulation);
    }
    if !(percentile > 0.0 && percentile < 0.5) {
        return Err(LandscapeError::PercentileOutOfRange(percentile));
    }
    let product = percentile * n_subjects as f64;
    let nearest = product.round();
    let count = if (product - nearest).abs() < 1e-9 {
        nearest
    } else {
        product.ceil()
    };
    Ok((count as usize).clamp(1, n_subjects))
}

/// Per-subject category map plus the ranking evidence that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DrcAssignment {
    categories: BTreeMap<SubjectId, DrcCategory>,
    mean_genuine: BTreeMap<SubjectId, f64>,
    mean_impostor: BTreeMap<SubjectId, f64>,
    percentile: f64,
    flagged_count: usize,
    eligible_count: usize,
    /// Subjects lacking genuine or impostor scores: excluded from ranking and
    /// defaulted to sheep.
    warnings: Vec<SubjectId>,
}

impl DrcAssignment {
    pub fn category(&self, subject: &SubjectId) -> Option<DrcCategory> {
        self.categories.get(subject).copied()
    }

    pub fn categories(&self) -> &BTreeMap<SubjectId, DrcCategory> {
        &self.categories
    }

    pub fn mean_genuine(&self, subject: &SubjectId) -> Option<f64> {
        self.mean_genuine.get(subject).copied()
    }

    pub fn mean_impostor(&self, subject: &SubjectId) -> Option<f64> {
        self.mean_impostor.get(subject).copied()
    }

    pub fn percentile(&self) -> f64 {
        self.percentile
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged_count
    }

    /// Number of subjects that took part in the ranking.
    pub fn eligible_count(&self) -> usize {
        self.eligible_count
    }

    pub fn warnings(&self) -> &[SubjectId] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn count(&self, category: DrcCategory) -> usize {
        self.categories.values().filter(|&&c| c == category).count()
    }

    /// Category population fractions over every assigned subject; sums to 1.
    pub fn proportions(&self) -> BTreeMap<DrcCategory, f64> {
        let total = self.categories.len().max(1) as f64;
        DrcCategory::ALL
            .iter()
            .map(|&cat| (cat, self.count(cat) as f64 / total))
            .collect()
    }

    /// `subject,category,mean_genuine,mean_impostor` rows, sorted by subject.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject,category,mean_genuine,mean_impostor\n");
        for (subject, category) in &self.categories {
            let fmt_mean = |m: Option<f64>| m.map(|v| format!("{v:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                subject,
                category,
                fmt_mean(self.mean_genuine(subject)),
                fmt_mean(self.mean_impostor(subject)),
            ));
        }
        out
    }
}

/// Ranks every subject of the set into a category.
///
/// Subjects need at least one genuine and one impostor score to be ranked;
/// the rest are assigned sheep and listed in
/// [`warnings`](DrcAssignment::warnings).
pub fn assign_drc(set: &ScoreSet, percentile: f64) -> Result<DrcAssignment, LandscapeError> {
    assign_drc_excluding(set, percentile, None)
}

/// [`assign_drc`] with one subject's entire contribution removed: records
/// involving `exclude` are ignored and the subject itself is absent from the
/// result. Used by fold-wise evaluation and by traveler assessment.
pub fn assign_drc_excluding(
    set: &ScoreSet,
    percentile: f64,
    exclude: Option<&SubjectId>,
) -> Result<DrcAssignment, LandscapeError> {
    if let Some(x) = exclude {
        if !set.contains(x) {
            return Err(LandscapeError::UnknownSubject(x.clone()));
        }
    }
    if !(percentile > 0.0 && percentile < 0.5) {
        return Err(LandscapeError::PercentileOutOfRange(percentile));
    }

    #[derive(Default)]
    struct Acc {
        genuine_sum: f64,
        genuine_n: usize,
        impostor_sum: f64,
        impostor_n: usize,
    }
    let mut acc: BTreeMap<&SubjectId, Acc> = BTreeMap::new();
    for subject in set.subjects() {
        if Some(subject) != exclude {
            acc.insert(subject, Acc::default());
        }
    }
    for rec in set.records() {
        if let Some(x) = exclude {
            if rec.involves(x) {
                continue;
            }
        }
        let score = set.normalize(rec.raw_score)?;
        match rec.kind() {
            ComparisonKind::Genuine => {
                let a = acc.get_mut(&rec.subject_a).expect("subject indexed");
                a.genuine_sum += score;
                a.genuine_n += 1;
            }
            ComparisonKind::Impostor => {
                for subject in [&rec.subject_a, &rec.subject_b] {
                    let a = acc.get_mut(subject).expect("subject indexed");
                    a.impostor_sum += score;
                    a.impostor_n += 1;
                }
            }
        }
    }

    let mut mean_genuine = BTreeMap::new();
    let mut mean_impostor = BTreeMap::new();
    let mut eligible: Vec<(&SubjectId, f64, f64)> = Vec::new();
    let mut warnings = Vec::new();
    for (subject, a) in &acc {
        if a.genuine_n > 0 {
            mean_genuine.insert((*subject).clone(), a.genuine_sum / a.genuine_n as f64);
        }
        if a.impostor_n > 0 {
            mean_impostor.insert((*subject).clone(), a.impostor_sum / a.impostor_n as f64);
        }
        if a.genuine_n > 0 && a.impostor_n > 0 {
            eligible.push((
                subject,
                a.genuine_sum / a.genuine_n as f64,
                a.impostor_sum / a.impostor_n as f64,
            ));
        } else {
            warnings.push((*subject).clone());
        }
    }
    if eligible.is_empty() {
        return Err(LandscapeError::EmptyPopulation);
    }

    let flagged = flag_count(eligible.len(), percentile)?;

    // Highest mean impostor first; ties broken by subject id.
    let mut by_impostor = eligible.clone();
    by_impostor.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(b.0)));
    let wolves: BTreeMap<&SubjectId, ()> = by_impostor
        .iter()
        .take(flagged)
        .map(|(s, _, _)| (*s, ()))
        .collect();

    // Lowest mean genuine first. A subject already flagged wolf/lamb keeps
    // that label (impersonation dominates) and the goat window extends to the
    // next-ranked subject so the counts stay exact.
    let mut by_genuine = eligible.clone();
    by_genuine.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let goats: Vec<&SubjectId> = by_genuine
        .iter()
        .map(|(s, _, _)| *s)
        .filter(|s| !wolves.contains_key(s))
        .take(flagged)
        .collect();

    let mut categories: BTreeMap<SubjectId, DrcCategory> = acc
        .keys()
        .map(|s| ((*s).clone(), DrcCategory::Sheep))
        .collect();
    for subject in wolves.keys() {
        categories.insert((*subject).clone(), DrcCategory::WolfLamb);
    }
    for subject in goats {
        categories.insert(subject.clone(), DrcCategory::Goat);
    }

    Ok(DrcAssignment {
        categories,
        mean_genuine,
        mean_impostor,
        percentile,
        flagged_count: flagged,
        eligible_count: eligible.len(),
        warnings,
    })
}

/// Binned, Gaussian-smoothed, normalized probability mass over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    bin_edges: Vec<f64>,
    mass: Vec<f64>,
    sample_count: usize,
    bandwidth: f64,
}

impl ScoreDistribution {
    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (self.bin_edges[i] + self.bin_edges[i + 1]) / 2.0
    }

    pub fn is_populated(&self) -> bool {
        self.sample_count > 0
    }

    /// Builds a distribution directly from a mass vector on the uniform
    /// `[0, 1]` grid. The mass must be non-negative and sum to 1 within 1e-9
    /// (it is renormalized exactly).
    pub fn from_mass(
        mass: Vec<f64>,
        sample_count: usize,
        bandwidth: f64,
    ) -> Result<Self, LandscapeError> {
        if mass.len() < 2 {
            return Err(LandscapeError::TooFewBins(mass.len()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(LandscapeError::BadBandwidth(bandwidth));
        }
        let total: f64 = mass.iter().sum();
        for &m in &mass {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(LandscapeError::BadScore(m));
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(LandscapeError::DegenerateKernel(bandwidth));
        }
        let bins = mass.len();
        let bin_edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
        let mass = mass.iter().map(|m| m / total).collect();
        Ok(ScoreDistribution {
            bin_edges,
            mass,
            sample_count,
            bandwidth,
        })
    }
}

/// Gaussian-smoothed histogram of normalized scores.
///
/// For each bin center `c`, `mass[bin]` is proportional to
/// `sum over scores s of exp(-(c - s)^2 / (2 * bandwidth^2))`, renormalized
/// to sum to 1. An empty score list yields all-zero mass with sample count 0.
pub fn build_distribution(
    scores: &[f64],
    bins: usize,
    bandwidth: f64,
) -> Result<ScoreDistribution, LandscapeError> {
    if bins < 2 {
        return Err(LandscapeError::TooFewBins(bins));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(LandscapeError::BadBandwidth(bandwidth));
    }
    for &s in scores {
        if !(s.is_finite() && (0.0..=1.0).contains(&s)) {
            return Err(LandscapeError::BadScore(s));
        }
    }
    let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut mass = vec![0.0f64; bins];
    if scores.is_empty() {
        return Ok(ScoreDistribution {
            bin_edges,
            mass,
            sample_count: 0,
            bandwidth,
        });
    }
    let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    for (i, m) in mass.iter_mut().enumerate() {
        let center = (bin_edges[i] + bin_edges[i + 1]) / 2.0;
        let mut sum = 0.0;
        for &s in scores {
            let d = center - s;
            sum += (-d * d * inv_two_h2).exp();
        }
        *m = sum;
    }
    let total: f64 = mass.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(LandscapeError::DegenerateKernel(bandwidth));
    }
    for m in &mut mass {
        *m /= total;
    }
    Ok(ScoreDistribution {
        bin_edges,
        mass,
        sample_count: scores.len(),
        bandwidth,
    })
}

/// Rule-of-thumb kernel bandwidth, `1.06 * sigma * n^(-1/5)`, floored at 0.01.
pub fn silverman_bandwidth(scores: &[f64]) -> f64 {
    const FLOOR: f64 = 0.01;
    let n = scores.len();
    if n < 2 {
        return FLOOR;
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sigma = var.sqrt();
    (1.06 * sigma * (n as f64).powf(-0.2)).max(FLOOR)
}

/// Bandwidth policy for smoothed distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", untagged)]
pub enum Bandwidth {
    /// Rule-of-thumb bandwidth per score list, floored at 0.01.
    #[serde(with = "auto_bandwidth")]
    Auto,
    Fixed(f64),
}

mod auto_bandwidth {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let text = String::deserialize(d)?;
        if text == "auto" {
            Ok(())
        } else {
            Err(serde::de::Error::custom("expected \"auto\""))
        }
    }
}

impl Bandwidth {
    pub fn resolve(&self, scores: &[f64]) -> f64 {
        match self {
            Bandwidth::Auto => silverman_bandwidth(scores),
            Bandwidth::Fixed(h) => *h,
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Auto => f.write_str("auto"),
            Bandwidth::Fixed(h) => write!(f, "{h}"),
        }
    }
}

/// One landscape cell address.
pub type CellKey = (DrcCategory, ComparisonQuality, ComparisonKind);

/// All 18 cell addresses in a fixed reporting order.
pub fn all_cell_keys() -> Vec<CellKey> {
    let mut keys = Vec::with_capacity(18);
    for category in DrcCategory::ALL {
        for quality in ComparisonQuality::ALL {
            for kind in ComparisonKind::ALL {
                keys.push((category, quality, kind));
            }
        }
    }
    keys
}

/// Pools the normalized scores for the three category cells of one
/// (quality, kind) pairing, skipping records that involve `exclude`.
///
/// Genuine comparisons are keyed by the subject's category. Impostor
/// comparisons contribute to the cell of either participant's category (once
/// per distinct category), because wolves and lambs are defined as a pair.
pub(crate) fn pool_cell_scores(
    set: &ScoreSet,
    assignment: &DrcAssignment,
    exclude: Option<&SubjectId>,
    quality: ComparisonQuality,
    kind: ComparisonKind,
) -> Result<[Vec<f64>; 3], LandscapeError> {
    let mut cells: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let slot = |cat: DrcCategory| match cat {
        DrcCategory::Goat => 0usize,
        DrcCategory::WolfLamb => 1,
        DrcCategory::Sheep => 2,
    };
    for rec in set.records() {
        if let Some(x) = exclude {
            if rec.involves(x) {
                continue;
            }
        }
        if rec.quality() != quality || rec.kind() != kind {
            continue;
        }
        let score = set.normalize(rec.raw_score)?;
        let cat_a = assignment
            .category(&rec.subject_a)
            .ok_or_else(|| LandscapeError::MissingAssignment(rec.subject_a.clone()))?;
        match kind {
            ComparisonKind::Genuine => cells[slot(cat_a)].push(score),
            ComparisonKind::Impostor => {
                let cat_b = assignment
                    .category(&rec.subject_b)
                    .ok_or_else(|| LandscapeError::MissingAssignment(rec.subject_b.clone()))?;
                cells[slot(cat_a)].push(score);
                if cat_b != cat_a {
                    cells[slot(cat_b)].push(score);
                }
            }
        }
    }
    Ok(cells)
}

/// The watchlist landscape: 18 category x quality x kind distributions plus
/// category proportions, versioned for monitoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    cells: BTreeMap<CellKey, ScoreDistribution>,
    proportions: BTreeMap<DrcCategory, f64>,
    assignment: DrcAssignment,
    version: u64,
    bins: usize,
    bandwidth: Bandwidth,
}

impl Landscape {
    pub fn cell(&self, category: DrcCategory, quality: ComparisonQuality, kind: ComparisonKind) -> &ScoreDistribution {
        &self.cells[&(category, quality, kind)]
    }

    pub fn cells(&self) -> &BTreeMap<CellKey, ScoreDistribution> {
        &self.cells
    }

    pub fn proportions(&self) -> &BTreeMap<DrcCategory, f64> {
        &self.proportions
    }

    pub fn assignment(&self) -> &DrcAssignment {
        &self.assignment
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    /// Serializable landscape document (bin edges once, mass per cell).
    pub fn to_doc(&self) -> LandscapeDoc {
        let bin_edges = (0..=self.bins).map(|i| i as f64 / self.bins as f64).collect();
        let cells = all_cell_keys()
            .into_iter()
            .map(|key| {
                let dist = &self.cells[&key];
                CellDoc {
                    category: key.0,
                    quality: key.1,
                    kind: key.2,
                    sample_count: dist.sample_count(),
                    bandwidth: dist.bandwidth(),
                    mass: dist.mass().to_vec(),
                }
            })
            .collect();
        let assignment = self
            .assignment
            .categories()
            .iter()
            .map(|(subject, category)| AssignmentRow {
                subject: subject.clone(),
                category: *category,
                mean_genuine: self.assignment.mean_genuine(subject),
                mean_impostor: self.assignment.mean_impostor(subject),
            })
            .collect();
        LandscapeDoc {
            version: self.version,
            percentile: self.assignment.percentile(),
            bins: self.bins,
            bandwidth: self.bandwidth,
            flagged_count: self.assignment.flagged_count(),
            eligible_count: self.assignment.eligible_count(),
            proportions: self
                .proportions
                .iter()
                .map(|(c, p)| (c.name().to_string(), *p))
                .collect(),
            bin_edges,
            cells,
            assignment,
            warnings: self.assignment.warnings().to_vec(),
        }
    }
}

/// Builds the 18-cell landscape for an assignment, optionally discarding one
/// subject's entire contribution.
pub fn build_landscape(
    set: &ScoreSet,
    assignment: &DrcAssignment,
    exclude: Option<&SubjectId>,
    bins: usize,
    bandwidth: Bandwidth,
) -> Result<Landscape, LandscapeError> {
    if let Some(x) = exclude {
        if !set.contains(x) {
            return Err(LandscapeError::UnknownSubject(x.clone()));
        }
    }
    if bins < 2 {
        return Err(LandscapeError::TooFewBins(bins));
    }
    let mut cells = BTreeMap::new();
    for quality in ComparisonQuality::ALL {
        for kind in ComparisonKind::ALL {
            let pooled = pool_cell_scores(set, assignment, exclude, quality, kind)?;
            for (category, scores) in [DrcCategory::Goat, DrcCategory::WolfLamb, DrcCategory::Sheep]
                .into_iter()
                .zip(pooled)
            {
                let h = bandwidth.resolve(&scores);
                let dist = build_distribution(&scores, bins, h)?;
                cells.insert((category, quality, kind), dist);
            }
        }
    }
    Ok(Landscape {
        cells,
        proportions: assignment.proportions(),
        assignment: assignment.clone(),
        version: 1,
        bins,
        bandwidth,
    })
}

/// A watchlist mutation: add records, replace one subject's records, or
/// remove a subject entirely.
#[derive(Debug, Clone)]
pub enum WatchlistOp {
    Add(Vec<ScoreRecord>),
    Replace(SubjectId, Vec<ScoreRecord>),
    Remove(SubjectId),
}

/// Applies one mutation and fully recomputes assignment and landscape. The
/// inputs are untouched; the new landscape's version is the old one plus 1.
pub fn mutate_watchlist(
    landscape: &Landscape,
    set: &ScoreSet,
    op: &WatchlistOp,
) -> Result<(ScoreSet, Landscape), LandscapeError> {
    let records: Vec<ScoreRecord> = match op {
        WatchlistOp::Add(added) => set.records().iter().cloned().chain(added.iter().cloned()).collect(),
        WatchlistOp::Replace(subject, replacement) => {
            if !set.contains(subject) {
                return Err(LandscapeError::UnknownSubject(subject.clone()));
            }
            set.records()
                .iter()
                .filter(|r| !r.involves(subject))
                .cloned()
                .chain(replacement.iter().cloned())
                .collect()
        }
        WatchlistOp::Remove(subject) => {
            if !set.contains(subject) {
                return Err(LandscapeError::UnknownSubject(subject.clone()));
            }
            set.records()
                .iter()
                .filter(|r| !r.involves(subject))
                .cloned()
                .collect()
        }
    };
    let new_set = ScoreSet::from_records(records)?;
    let assignment = assign_drc(&new_set, landscape.assignment.percentile())?;
    let mut new_landscape = build_landscape(
        &new_set,
        &assignment,
        None,
        landscape.bins,
        landscape.bandwidth,
    )?;
    new_landscape.version = landscape.version + 1;
    Ok((new_set, new_landscape))
}

// ---------------------------------------------------------------------------
// Serializable landscape document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellDoc {
    pub category: DrcCategory,
    pub quality: ComparisonQuality,
    pub kind: ComparisonKind,
    pub sample_count: usize,
    pub bandwidth: f64,
    pub mass: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub subject: SubjectId,
    pub category: DrcCategory,
    pub mean_genuine: Option<f64>,
    pub mean_impostor: Option<f64>,
}

/// JSON export of a landscape: version, percentile, proportions, bin edges
/// once, and mass arrays with sample counts per cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapeDoc {
    pub version: u64,
    pub percentile: f64,
    pub bins: usize,
    pub bandwidth: Bandwidth,
    pub flagged_count: usize,
    pub eligible_count: usize,
    pub proportions: BTreeMap<String, f64>,
    pub bin_edges: Vec<f64>,
    pub cells: Vec<CellDoc>,
    pub assignment: Vec<AssignmentRow>,
    pub warnings: Vec<SubjectId>,
}
