//! Cost-weighted risk values and discrete risk levels.
//!
//! Risk is an expected loss over the three categories: with cost profile
//! `lambda` and dissimilarity vector `d`, the classifier-free value is
//! `R = 1 - sum(lambda(j) * d(j))`. When a classifier has already picked a
//! category, the risk is that category's cost directly. Values map onto
//! Low / Medium / High levels at thresholds anchored to the default costs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    min_rule, predict_margin, train_margin, Classifier, ClassifyError, FeatureVector, MarginHyper,
};
use crate::landscape::{build_distribution, DrcCategory, Landscape, LandscapeError};
use crate::metrics::{dissimilarity_vector, DissimilarityVector, MetricError, MetricId};
use crate::scores::{ComparisonKind, ComparisonQuality, ScoreError, ScoreSet, SubjectId};

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("cost profile must name all three categories")]
    IncompleteProfile,
    #[error("cost {0} must be a finite non-negative number")]
    BadCost(f64),
    #[error("risk value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("risk thresholds must satisfy 0 <= medium < high <= 1, got {medium} / {high}")]
    BadThresholds { medium: f64, high: f64 },
    #[error("unknown subject {0}")]
    UnknownSubject(SubjectId),
    #[error("landscape still contains subject {0}; assess against a landscape built with the subject excluded")]
    LandscapeIncludesSubject(SubjectId),
    #[error("no (quality, kind) cell could be assessed: {0}")]
    AllCellsEmpty(String),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Scores(#[from] ScoreError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Loss values per category. The defaults (sheep 0.1, goat 0.3,
/// wolf/lamb 0.6) sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub name: String,
    lambda: BTreeMap<DrcCategory, f64>,
}

impl CostProfile {
    pub fn new(
        name: impl Into<String>,
        sheep: f64,
        goat: f64,
        wolf_lamb: f64,
    ) -> Result<Self, RiskError> {
        for cost in [sheep, goat, wolf_lamb] {
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(RiskError::BadCost(cost));
            }
        }
        let lambda = [
            (DrcCategory::Sheep, sheep),
            (DrcCategory::Goat, goat),
            (DrcCategory::WolfLamb, wolf_lamb),
        ]
        .into_iter()
        .collect();
        Ok(CostProfile {
            name: name.into(),
            lambda,
        })
    }

    pub fn cost(&self, category: DrcCategory) -> f64 {
        self.lambda[&category]
    }

    pub fn to_json(&self) -> String {
        let doc = CostProfileDoc {
            name: self.name.clone(),
            lambda: LambdaDoc {
                sheep: self.cost(DrcCategory::Sheep),
                goat: self.cost(DrcCategory::Goat),
                wolf_lamb: self.cost(DrcCategory::WolfLamb),
            },
        };
        serde_json::to_string_pretty(&doc).expect("profile serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RiskError> {
        let doc: CostProfileDoc =
            serde_json::from_str(text).map_err(|_| RiskError::IncompleteProfile)?;
        CostProfile::new(doc.name, doc.lambda.sheep, doc.lambda.goat, doc.lambda.wolf_lamb)
    }
}

impl Default for CostProfile {
    fn default() -> Self {
        CostProfile::new("default", 0.1, 0.3, 0.6).expect("default profile is valid")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LambdaDoc {
    sheep: f64,
    goat: f64,
    wolf_lamb: f64,
}

/// On-disk cost profile: `{"name": ..., "lambda": {"sheep": ..., ...}}`.
#[derive(Debug, Serialize, Deserialize)]
struct CostProfileDoc {
    name: String,
    lambda: LambdaDoc,
}

/// Discrete traveler risk level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskLevel::Low => "low",
            RiskLevel::Medium => "medium",
            RiskLevel::High => "high",
        })
    }
}

/// Level boundaries, anchored by default to the goat and wolf/lamb costs so
/// classified risks land on their own category's semantics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskThresholds {
    /// Values at or above this are at least Medium.
    pub medium: f64,
    /// Values at or above this are High.
    pub high: f64,
}

impl Default for RiskThresholds {
    fn default() -> Self {
        RiskThresholds {
            medium: 0.3,
            high: 0.6,
        }
    }
}

impl RiskThresholds {
    pub fn validate(&self) -> Result<(), RiskError> {
        let ok = self.medium.is_finite()
            && self.high.is_finite()
            && (0.0..=1.0).contains(&self.medium)
            && (0.0..=1.0).contains(&self.high)
            && self.medium < self.high;
        if ok {
            Ok(())
        } else {
            Err(RiskError::BadThresholds {
                medium: self.medium,
                high: self.high,
            })
        }
    }
}

/// Classifier-free risk: `1 - sum(lambda(j) * d(j))`, clamped to `[0, 1]`
/// for cost profiles that do not sum to one.
pub fn risk_r1(costs: &CostProfile, d: &DissimilarityVector) -> f64 {
    let weighted: f64 = DrcCategory::ALL
        .iter()
        .map(|&cat| costs.cost(cat) * d.get(cat))
        .sum();
    (1.0 - weighted).clamp(0.0, 1.0)
}

/// Risk of an already-classified traveler: the predicted category's cost.
pub fn risk_classified(costs: &CostProfile, predicted: DrcCategory) -> f64 {
    costs.cost(predicted)
}

/// Maps a risk value in `[0, 1]` onto a discrete level.
pub fn risk_level(value: f64, thresholds: &RiskThresholds) -> Result<RiskLevel, RiskError> {
    thresholds.validate()?;
    if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
        return Err(RiskError::ValueOutOfRange(value));
    }
    Ok(if value < thresholds.medium {
        RiskLevel::Low
    } else if value < thresholds.high {
        RiskLevel::Medium
    } else {
        RiskLevel::High
    })
}

/// Which classifiers a risk assessment should run besides the
/// classifier-free value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierSet {
    pub min_rule: bool,
    pub margin: bool,
}

impl Default for ClassifierSet {
    fn default() -> Self {
        ClassifierSet {
            min_rule: true,
            margin: false,
        }
    }
}

impl ClassifierSet {
    pub fn from_classifiers(classifiers: &[Classifier]) -> Self {
        ClassifierSet {
            min_rule: classifiers.contains(&Classifier::MinRule),
            margin: classifiers.contains(&Classifier::Margin),
        }
    }

    /// Stable label like `r1`, `r1+r2`, `r1+r2+r3`.
    pub fn variant_label(&self) -> String {
        let mut label = String::from("r1");
        if self.min_rule {
            label.push_str("+r2");
        }
        if self.margin {
            label.push_str("+r3");
        }
        label
    }
}

/// Assessment knobs.
#[derive(Debug, Clone, Default)]
pub struct AssessConfig {
    pub classifiers: ClassifierSet,
    pub thresholds: RiskThresholds,
    pub hyper: MarginHyper,
}

/// Risk numbers for one populated (quality, kind) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRisk {
    pub quality: ComparisonQuality,
    pub kind: ComparisonKind,
    pub dissimilarity: DissimilarityVector,
    /// Classifier-free expected-loss value.
    pub r1: f64,
    /// Minimum-dissimilarity prediction and its cost.
    pub predicted_min: Option<DrcCategory>,
    pub r2: Option<f64>,
    /// Margin prediction and its cost.
    pub predicted_margin: Option<DrcCategory>,
    pub r3: Option<f64>,
    pub margin_note: Option<String>,
}

/// Full traveler risk report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub subject: SubjectId,
    pub metric: MetricId,
    pub cost_profile: String,
    pub landscape_version: u64,
    pub cells: Vec<CellRisk>,
    /// Cells with traveler scores that could not be measured, with reasons.
    pub skipped_cells: Vec<String>,
    pub avg_r1: f64,
    pub avg_r2: Option<f64>,
    pub avg_r3: Option<f64>,
    /// Mean over every populated risk value of every requested variant.
    pub average_risk: f64,
    pub level: RiskLevel,
}

impl RiskReport {
    /// One-line CSV summary: `subject,avg_risk,level,variant_set,landscape_version`.
    pub fn summary_line(&self, variants: &ClassifierSet) -> String {
        format!(
            "{},{:.6},{},{},{}",
            self.subject,
            self.average_risk,
            self.level,
            variants.variant_label(),
            self.landscape_version
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Assesses one traveler against a landscape that excludes their own
/// contribution (build it with the subject excluded first).
///
/// Every (quality, kind) pairing where the traveler has scores and all three
/// landscape cells are populated yields a classifier-free risk value, plus
/// per-classifier values when requested. The margin model for a cell is
/// trained on the remaining subjects' features against the same landscape.
pub fn assess_traveler(
    subject: &SubjectId,
    set: &ScoreSet,
    landscape: &Landscape,
    metric: MetricId,
    costs: &CostProfile,
    cfg: &AssessConfig,
) -> Result<RiskReport, RiskError> {
    cfg.thresholds.validate()?;
    if !set.contains(subject) {
        return Err(RiskError::UnknownSubject(subject.clone()));
    }
    if landscape.assignment().category(subject).is_some() {
        return Err(RiskError::LandscapeIncludesSubject(subject.clone()));
    }
    let slices = set.subject_slices(subject)?;
    let bins = landscape.bins();
    let bandwidth = landscape.bandwidth();

    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    let mut r_values: Vec<f64> = Vec::new();
    let mut r1_values = Vec::new();
    let mut r2_values = Vec::new();
    let mut r3_values = Vec::new();

    for quality in ComparisonQuality::ALL {
        for kind in ComparisonKind::ALL {
            let traveler_scores = slices.get(kind, quality);
            if traveler_scores.is_empty() {
                continue;
            }
            let h = bandwidth.resolve(traveler_scores);
            let traveler = build_distribution(traveler_scores, bins, h)?;
            let vector = match dissimilarity_vector(metric, &traveler, landscape, quality, kind) {
                Ok(v) => v,
                Err(MetricError::EmptyCell { category, .. }) => {
                    skipped.push(format!(
                        "({quality}, {kind}): empty landscape cell for {category}"
                    ));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };

            let r1 = risk_r1(costs, &vector);
            r1_values.push(r1);
            r_values.push(r1);

            let (predicted_min, r2) = if cfg.classifiers.min_rule {
                let predicted = min_rule(&vector);
                let value = risk_classified(costs, predicted);
                r2_values.push(value);
                r_values.push(value);
                (Some(predicted), Some(value))
            } else {
                (None, None)
            };

            let (predicted_margin, r3, margin_note) = if cfg.classifiers.margin {
                match margin_prediction(subject, set, landscape, metric, quality, kind, cfg) {
                    Ok(predicted) => {
                        let value = risk_classified(costs, predicted);
                        r3_values.push(value);
                        r_values.push(value);
                        (Some(predicted), Some(value), None)
                    }
                    Err(note) => (None, None, Some(note)),
                }
            } else {
                (None, None, None)
            };

            cells.push(CellRisk {
                quality,
                kind,
                dissimilarity: vector,
                r1,
                predicted_min,
                r2,
                predicted_margin,
                r3,
                margin_note,
            });
        }
    }

    if cells.is_empty() {
        return Err(RiskError::AllCellsEmpty(if skipped.is_empty() {
            "subject has no scores in any cell".into()
        } else {
            skipped.join("; ")
        }));
    }

    let mean = |values: &[f64]| values.iter().sum::<f64>() / values.len() as f64;
    let avg_r1 = mean(&r1_values);
    let avg_r2 = (!r2_values.is_empty()).then(|| mean(&r2_values));
    let avg_r3 = (!r3_values.is_empty()).then(|| mean(&r3_values));
    let average_risk = mean(&r_values);
    let level = risk_level(average_risk, &cfg.thresholds)?;

    Ok(RiskReport {
        subject: subject.clone(),
        metric,
        cost_profile: costs.name.clone(),
        landscape_version: landscape.version(),
        cells,
        skipped_cells: skipped,
        avg_r1,
        avg_r2,
        avg_r3,
        average_risk,
        level,
    })
}

/// Trains a margin model for one cell on every other subject of the
/// landscape and predicts the assessed traveler. Errors come back as notes,
/// not hard failures: a cell can be assessable for R1/R2 but not R3.
fn margin_prediction(
    subject: &SubjectId,
    set: &ScoreSet,
    landscape: &Landscape,
    metric: MetricId,
    quality: ComparisonQuality,
    kind: ComparisonKind,
    cfg: &AssessConfig,
) -> Result<DrcCategory, String> {
    let bins = landscape.bins();
    let bandwidth = landscape.bandwidth();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (other, &category) in landscape.assignment().categories() {
        let slices = set
            .subject_slices_excluding(other, Some(subject))
            .map_err(|e| e.to_string())?;
        let scores = slices.get(kind, quality);
        if scores.is_empty() {
            continue;
        }
        let h = bandwidth.resolve(scores);
        let dist = build_distribution(scores, bins, h).map_err(|e| e.to_string())?;
        let vector = dissimilarity_vector(metric, &dist, landscape, quality, kind)
            .map_err(|e| e.to_string())?;
        features.push(FeatureVector::from_vector(&vector));
        labels.push(category);
    }
    let model = train_margin(&features, &labels, &cfg.hyper).map_err(|e| e.to_string())?;

    let slices = set.subject_slices(subject).map_err(|e| e.to_string())?;
    let scores = slices.get(kind, quality);
    let h = bandwidth.resolve(scores);
    let traveler = build_distribution(scores, bins, h).map_err(|e| e.to_string())?;
    let vector = dissimilarity_vector(metric, &traveler, landscape, quality, kind)
        .map_err(|e| e.to_string())?;
    predict_margin(&model, &FeatureVector::from_vector(&vector)).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{assign_drc_excluding, build_landscape, Bandwidth};
    use crate::scores::ScoreRow;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn vector(goat: f64, wolf: f64, sheep: f64) -> DissimilarityVector {
        DissimilarityVector::new(
            MetricId::Euclidean,
            ComparisonQuality::Hq,
            ComparisonKind::Genuine,
            goat,
            wolf,
            sheep,
        )
        .unwrap()
    }

    #[test]
    fn r1_matches_worked_golden_values() {
        let costs = CostProfile::default();
        let genuine_hq = risk_r1(&costs, &vector(0.18, 0.78, 0.61));
        assert!((genuine_hq - 0.42).abs() < 0.005, "got {genuine_hq}");
        let impostor_hq = risk_r1(&costs, &vector(0.48, 0.16, 0.86));
        assert!((impostor_hq - 0.67).abs() < 0.005, "got {impostor_hq}");
    }

    #[test]
    fn r1_extremes_for_unit_sum_profile() {
        let costs = CostProfile::default();
        assert!(risk_r1(&costs, &vector(1.0, 1.0, 1.0)).abs() < 1e-12);
        assert_eq!(risk_r1(&costs, &vector(0.0, 0.0, 0.0)), 1.0);
    }

    #[test]
    fn r1_stays_in_unit_interval_without_clamping_for_unit_sum() {
        let costs = CostProfile::default();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..2000 {
            let v = vector(rng.gen(), rng.gen(), rng.gen());
            let weighted: f64 = DrcCategory::ALL.iter().map(|&c| costs.cost(c) * v.get(c)).sum();
            let raw = 1.0 - weighted;
            assert!((0.0..=1.0).contains(&raw), "clamp engaged for {v:?}");
            assert_eq!(risk_r1(&costs, &v), raw);
        }
    }

    #[test]
    fn r1_is_monotone_decreasing_in_each_component() {
        let costs = CostProfile::default();
        let base = vector(0.5, 0.5, 0.5);
        let r = risk_r1(&costs, &base);
        for category in DrcCategory::ALL {
            let mut bumped = base;
            match category {
                DrcCategory::Goat => bumped.goat += 0.2,
                DrcCategory::WolfLamb => bumped.wolf_lamb += 0.2,
                DrcCategory::Sheep => bumped.sheep += 0.2,
            }
            assert!(risk_r1(&costs, &bumped) < r);
        }
    }

    #[test]
    fn classified_risk_returns_exact_costs() {
        let costs = CostProfile::default();
        assert_eq!(risk_classified(&costs, DrcCategory::Goat), 0.30);
        assert_eq!(risk_classified(&costs, DrcCategory::Sheep), 0.10);
        assert_eq!(risk_classified(&costs, DrcCategory::WolfLamb), 0.60);
    }

    #[test]
    fn levels_map_at_default_thresholds() {
        let t = RiskThresholds::default();
        assert_eq!(risk_level(0.10, &t).unwrap(), RiskLevel::Low);
        assert_eq!(risk_level(0.485, &t).unwrap(), RiskLevel::Medium);
        assert_eq!(risk_level(0.67, &t).unwrap(), RiskLevel::High);
        // boundary values belong to the upper level
        assert_eq!(risk_level(0.3, &t).unwrap(), RiskLevel::Medium);
        assert_eq!(risk_level(0.6, &t).unwrap(), RiskLevel::High);
        assert!(risk_level(1.2, &t).is_err());
        assert!(risk_level(-0.1, &t).is_err());
    }

    #[test]
    fn bad_thresholds_are_rejected() {
        let t = RiskThresholds {
            medium: 0.7,
            high: 0.3,
        };
        assert!(matches!(
            risk_level(0.5, &t),
            Err(RiskError::BadThresholds { .. })
        ));
    }

    #[test]
    fn classified_risk_inherits_argmin_invariance() {
        let costs = CostProfile::default();
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..200 {
            let v = vector(rng.gen(), rng.gen(), rng.gen());
            let squash = |x: f64| (x * x * 0.5 + 0.1 * x) / 0.6;
            let t = vector(squash(v.goat), squash(v.wolf_lamb), squash(v.sheep));
            assert_eq!(
                risk_classified(&costs, min_rule(&v)),
                risk_classified(&costs, min_rule(&t))
            );
        }
    }

    #[test]
    fn cost_profile_json_round_trip() {
        let costs = CostProfile::default();
        let back = CostProfile::from_json(&costs.to_json()).unwrap();
        assert_eq!(costs, back);
        assert!(CostProfile::new("bad", -0.1, 0.3, 0.6).is_err());
    }

    fn planted_set(n: usize) -> ScoreSet {
        let name = |i: usize| format!("p{i:03}");
        let row = |a: &str, b: &str, ta: &str, tb: &str, s: f64| ScoreRow {
            subject_a: a.into(),
            subject_b: b.into(),
            tier_a: ta.into(),
            tier_b: tb.into(),
            score: s,
            sample_a: None,
            sample_b: None,
        };
        let mut rows = Vec::new();
        let mut noise = 0usize;
        let mut jitter = move || {
            noise = (noise * 31 + 17) % 97;
            noise as f64 / 97.0 * 0.04
        };
        for i in 0..n {
            let g = if i == 0 { 0.08 } else { 0.82 } + jitter();
            rows.push(row(&name(i), &name(i), "high", "high", g));
            rows.push(row(&name(i), &name(i), "high", "high", g - 0.02));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let s = if i == 1 || j == 1 { 0.62 } else { 0.12 } + jitter();
                rows.push(row(&name(i), &name(j), "high", "high", s));
            }
        }
        rows.push(row("p000", "p002", "high", "high", 0.0));
        rows.push(row("p000", "p002", "high", "high", 1.0));
        ScoreSet::ingest(&rows).unwrap()
    }

    #[test]
    fn assess_planted_sheep_reports_low_cost_in_genuine_cells() {
        let set = planted_set(12);
        let subject = SubjectId::new("p005").unwrap();
        let assignment = assign_drc_excluding(&set, 0.025, Some(&subject)).unwrap();
        let landscape =
            build_landscape(&set, &assignment, Some(&subject), 50, Bandwidth::Auto).unwrap();
        let report = assess_traveler(
            &subject,
            &set,
            &landscape,
            MetricId::Euclidean,
            &CostProfile::default(),
            &AssessConfig::default(),
        )
        .unwrap();
        // HQ cells only in this construction
        assert!(!report.cells.is_empty());
        for cell in &report.cells {
            assert_eq!(cell.quality, ComparisonQuality::Hq);
            if cell.kind == ComparisonKind::Genuine {
                assert_eq!(cell.predicted_min, Some(DrcCategory::Sheep));
                assert_eq!(cell.r2, Some(0.10));
            }
        }
        // determinism: same inputs, identical report
        let again = assess_traveler(
            &subject,
            &set,
            &landscape,
            MetricId::Euclidean,
            &CostProfile::default(),
            &AssessConfig::default(),
        )
        .unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn assess_requires_excluded_landscape_and_known_subject() {
        let set = planted_set(8);
        let subject = SubjectId::new("p003").unwrap();
        let assignment = assign_drc_excluding(&set, 0.025, None).unwrap();
        let landscape = build_landscape(&set, &assignment, None, 50, Bandwidth::Auto).unwrap();
        assert!(matches!(
            assess_traveler(
                &subject,
                &set,
                &landscape,
                MetricId::Euclidean,
                &CostProfile::default(),
                &AssessConfig::default(),
            ),
            Err(RiskError::LandscapeIncludesSubject(_))
        ));
        let ghost = SubjectId::new("nope").unwrap();
        assert!(matches!(
            assess_traveler(
                &ghost,
                &set,
                &landscape,
                MetricId::Euclidean,
                &CostProfile::default(),
                &AssessConfig::default(),
            ),
            Err(RiskError::UnknownSubject(_))
        ));
    }

    #[test]
    fn assess_with_margin_produces_r3() {
        let set = planted_set(10);
        let subject = SubjectId::new("p004").unwrap();
        let assignment = assign_drc_excluding(&set, 0.025, Some(&subject)).unwrap();
        let landscape =
            build_landscape(&set, &assignment, Some(&subject), 40, Bandwidth::Auto).unwrap();
        let cfg = AssessConfig {
            classifiers: ClassifierSet {
                min_rule: true,
                margin: true,
            },
            ..AssessConfig::default()
        };
        let report = assess_traveler(
            &subject,
            &set,
            &landscape,
            MetricId::Euclidean,
            &CostProfile::default(),
            &cfg,
        )
        .unwrap();
        assert!(report.cells.iter().any(|c| c.r3.is_some()));
        assert!(report.avg_r3.is_some());
        let line = report.summary_line(&cfg.classifiers);
        assert!(line.starts_with("p004,"));
        assert!(line.contains("r1+r2+r3"));
    }
}
