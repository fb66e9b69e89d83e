//! Synthetic score sets with planted risk categories.
//!
//! The generator plants a known category per subject and draws every
//! pairwise comparison score from truncated Gaussians whose means encode the
//! category semantics: sheep match themselves well, goats match themselves
//! poorly, wolves/lambs are involved in elevated impostor scores (and carry
//! high genuine scores of their own). Low-tier acquisitions depress genuine
//! means and widen spreads; a mixed-tier comparison gets half the effect.
//!
//! Generation is a pure function of the config, seed included: equal configs
//! produce bit-identical score sets. The planted truth is the ground-truth
//! oracle for recovery and classification experiments.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{DrcAssignment, DrcCategory};
use crate::scores::{QualityTier, ScoreError, ScoreRecord, ScoreSet, SubjectId};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("assignment universe does not match the planted truth ({truth} planted vs {assigned} assigned subjects)")]
    UniverseMismatch { truth: usize, assigned: usize },
    #[error(transparent)]
    Scores(#[from] ScoreError),
}

/// Mean and spread of one score population, in normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    pub mean: f64,
    pub stddev: f64,
}

impl ScoreModel {
    fn validate(&self, what: &str) -> Result<(), SynthError> {
        if !(self.mean.is_finite() && (0.0..=1.0).contains(&self.mean)) {
            return Err(SynthError::InvalidConfig(format!(
                "{what} mean {} outside [0, 1]",
                self.mean
            )));
        }
        if !(self.stddev.is_finite() && self.stddev > 0.0) {
            return Err(SynthError::InvalidConfig(format!(
                "{what} stddev {} must be positive",
                self.stddev
            )));
        }
        Ok(())
    }
}

/// Generator configuration. Defaults model a 200-subject watchlist with
/// 2.5% planted goats and wolves/lambs and three samples per tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub goat_frac: f64,
    pub wolf_frac: f64,
    /// Samples per subject per tier (each subject carries this many high
    /// and this many low acquisitions).
    pub samples_per_tier: usize,
    pub sheep_genuine: ScoreModel,
    pub goat_genuine: ScoreModel,
    pub wolf_lamb_genuine: ScoreModel,
    pub baseline_impostor: ScoreModel,
    pub wolf_lamb_impostor: ScoreModel,
    /// Genuine mean shift subtracted for a low-tier pair (half for mixed).
    pub low_genuine_shift: f64,
    /// Genuine stddev multiplier for a low-tier pair (half-way for mixed).
    pub low_stddev_inflation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 200,
            goat_frac: 0.025,
            wolf_frac: 0.025,
            samples_per_tier: 3,
            sheep_genuine: ScoreModel { mean: 0.80, stddev: 0.08 },
            goat_genuine: ScoreModel { mean: 0.35, stddev: 0.10 },
            wolf_lamb_genuine: ScoreModel { mean: 0.95, stddev: 0.05 },
            baseline_impostor: ScoreModel { mean: 0.15, stddev: 0.08 },
            wolf_lamb_impostor: ScoreModel { mean: 0.55, stddev: 0.10 },
            low_genuine_shift: 0.15,
            low_stddev_inflation: 1.5,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_subjects < 4 {
            return Err(SynthError::InvalidConfig(format!(
                "n_subjects {} below the minimum of 4",
                self.n_subjects
            )));
        }
        if !(self.goat_frac >= 0.0 && self.wolf_frac >= 0.0) {
            return Err(SynthError::InvalidConfig("negative planted fraction".into()));
        }
        if self.goat_frac + self.wolf_frac >= 0.5 {
            return Err(SynthError::InvalidConfig(format!(
                "goat_frac + wolf_frac = {} must stay below 0.5",
                self.goat_frac + self.wolf_frac
            )));
        }
        if self.samples_per_tier < 2 {
            return Err(SynthError::InvalidConfig(format!(
                "samples_per_tier {} below the minimum of 2",
                self.samples_per_tier
            )));
        }
        self.sheep_genuine.validate("sheep_genuine")?;
        self.goat_genuine.validate("goat_genuine")?;
        self.wolf_lamb_genuine.validate("wolf_lamb_genuine")?;
        self.baseline_impostor.validate("baseline_impostor")?;
        self.wolf_lamb_impostor.validate("wolf_lamb_impostor")?;
        if !(self.low_genuine_shift >= 0.0 && self.low_genuine_shift.is_finite()) {
            return Err(SynthError::InvalidConfig("low_genuine_shift must be >= 0".into()));
        }
        if !(self.low_stddev_inflation >= 1.0 && self.low_stddev_inflation.is_finite()) {
            return Err(SynthError::InvalidConfig("low_stddev_inflation must be >= 1".into()));
        }
        Ok(())
    }

    pub fn planted_goats(&self) -> usize {
        (self.goat_frac * self.n_subjects as f64).round() as usize
    }

    pub fn planted_wolves(&self) -> usize {
        (self.wolf_frac * self.n_subjects as f64).round() as usize
    }
}

/// Planted category per subject plus an echo of the generating config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    planted: BTreeMap<SubjectId, DrcCategory>,
    pub config: SynthConfig,
}

impl SynthTruth {
    pub fn planted(&self) -> &BTreeMap<SubjectId, DrcCategory> {
        &self.planted
    }

    pub fn category(&self, subject: &SubjectId) -> Option<DrcCategory> {
        self.planted.get(subject).copied()
    }

    pub fn count(&self, category: DrcCategory) -> usize {
        self.planted.values().filter(|&&c| c == category).count()
    }

    /// Truth sidecar: a plain subject-to-category JSON map.
    pub fn to_sidecar_json(&self) -> String {
        let map: BTreeMap<&str, &str> = self
            .planted
            .iter()
            .map(|(s, c)| (s.as_str(), c.name()))
            .collect();
        serde_json::to_string_pretty(&map).expect("sidecar serializes")
    }
}

struct Sample {
    subject: usize,
    tier: QualityTier,
    label: String,
}

/// Generates the full pairwise score set and its planted truth.
///
/// Every pair of samples is compared once, so the HQ/LQ/VQ pairings all
/// appear. Scores are clamped to `[0, 1]` and quantized to six decimals, the
/// precision of the CSV format, so a written set re-ingests losslessly.
pub fn generate(cfg: &SynthConfig) -> Result<(ScoreSet, SynthTruth), SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let subjects: Vec<SubjectId> = (0..cfg.n_subjects)
        .map(|i| SubjectId::new(format!("s{i:04}")).expect("generated ids are non-empty"))
        .collect();

    // plant categories on a shuffled index so ids carry no category signal
    let mut order: Vec<usize> = (0..cfg.n_subjects).collect();
    order.shuffle(&mut rng);
    let goats = cfg.planted_goats();
    let wolves = cfg.planted_wolves();
    let mut planted: BTreeMap<SubjectId, DrcCategory> = subjects
        .iter()
        .map(|s| (s.clone(), DrcCategory::Sheep))
        .collect();
    let mut category_of = vec![DrcCategory::Sheep; cfg.n_subjects];
    for &i in order.iter().take(goats) {
        planted.insert(subjects[i].clone(), DrcCategory::Goat);
        category_of[i] = DrcCategory::Goat;
    }
    for &i in order.iter().skip(goats).take(wolves) {
        planted.insert(subjects[i].clone(), DrcCategory::WolfLamb);
        category_of[i] = DrcCategory::WolfLamb;
    }

    let mut samples = Vec::with_capacity(cfg.n_subjects * cfg.samples_per_tier * 2);
    for subject in 0..cfg.n_subjects {
        for k in 0..cfg.samples_per_tier {
            samples.push(Sample {
                subject,
                tier: QualityTier::High,
                label: format!("h{k}"),
            });
        }
        for k in 0..cfg.samples_per_tier {
            samples.push(Sample {
                subject,
                tier: QualityTier::Low,
                label: format!("l{k}"),
            });
        }
    }

    let low_count = |a: QualityTier, b: QualityTier| {
        [a, b].iter().filter(|&&t| t == QualityTier::Low).count() as f64
    };
    let mut records = Vec::with_capacity(samples.len() * (samples.len() - 1) / 2);
    for i in 0..samples.len() {
        for j in (i + 1)..samples.len() {
            let (sa, sb) = (&samples[i], &samples[j]);
            let model = if sa.subject == sb.subject {
                let base = match category_of[sa.subject] {
                    DrcCategory::Sheep => cfg.sheep_genuine,
                    DrcCategory::Goat => cfg.goat_genuine,
                    DrcCategory::WolfLamb => cfg.wolf_lamb_genuine,
                };
                // low-tier effect scales with how many low samples the pair has
                let fraction = low_count(sa.tier, sb.tier) / 2.0;
                ScoreModel {
                    mean: base.mean - cfg.low_genuine_shift * fraction,
                    stddev: base.stddev * (1.0 + (cfg.low_stddev_inflation - 1.0) * fraction),
                }
            } else if category_of[sa.subject] == DrcCategory::WolfLamb
                || category_of[sb.subject] == DrcCategory::WolfLamb
            {
                cfg.wolf_lamb_impostor
            } else {
                cfg.baseline_impostor
            };
            let normal = Normal::new(model.mean, model.stddev)
                .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
            let drawn: f64 = normal.sample(&mut rng);
            let score = (drawn.clamp(0.0, 1.0) * 1e6).round() / 1e6;
            records.push(
                ScoreRecord::new(
                    subjects[sa.subject].clone(),
                    subjects[sb.subject].clone(),
                    sa.tier,
                    sb.tier,
                    score,
                )?
                .with_samples(sa.label.clone(), sb.label.clone()),
            );
        }
    }

    let set = ScoreSet::from_records(records)?;
    let truth = SynthTruth {
        planted,
        config: cfg.clone(),
    };
    Ok((set, truth))
}

/// Recovery of one planted category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryRecovery {
    pub planted: usize,
    pub recovered: usize,
    /// recovered / planted; absent when nothing was planted.
    pub sensitivity: Option<f64>,
}

/// How well an assignment recovered the planted truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub per_category: BTreeMap<DrcCategory, CategoryRecovery>,
    pub accuracy: f64,
    pub total: usize,
}

/// Compares an assignment against the planted truth over the same universe.
pub fn oracle_check(truth: &SynthTruth, assignment: &DrcAssignment) -> Result<RecoveryReport, SynthError> {
    if truth.planted.len() != assignment.len()
        || truth
            .planted
            .keys()
            .any(|s| assignment.category(s).is_none())
    {
        return Err(SynthError::UniverseMismatch {
            truth: truth.planted.len(),
            assigned: assignment.len(),
        });
    }
    let mut per_category = BTreeMap::new();
    let mut correct_total = 0usize;
    for category in DrcCategory::ALL {
        let planted: Vec<&SubjectId> = truth
            .planted
            .iter()
            .filter(|(_, c)| **c == category)
            .map(|(s, _)| s)
            .collect();
        let recovered = planted
            .iter()
            .filter(|s| assignment.category(s) == Some(category))
            .count();
        correct_total += recovered;
        per_category.insert(
            category,
            CategoryRecovery {
                planted: planted.len(),
                recovered,
                sensitivity: (!planted.is_empty())
                    .then(|| recovered as f64 / planted.len() as f64),
            },
        );
    }
    Ok(RecoveryReport {
        per_category,
        accuracy: correct_total as f64 / truth.planted.len() as f64,
        total: truth.planted.len(),
    })
}
