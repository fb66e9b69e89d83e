//! Category prediction from dissimilarity features.
//!
//! Two classifiers are provided: the training-free minimum-dissimilarity
//! rule ([`min_rule`]) and a linear one-vs-rest max-margin model trained by
//! deterministic subgradient descent on the hinge loss ([`train_margin`]).
//! Both are evaluated by leave-one-out cross validation: every fold fully
//! recomputes the category assignment and the landscape cells with the
//! held-out subject's contribution discarded, then predicts that subject
//! from its own score distribution.
//!
//! Ties in either classifier break toward the higher-cost category
//! (wolf/lamb over goat over sheep).
//!
//! Fold computations are independent and the sensitivity reduction is pure
//! counting, so parallel evaluation could not change results; the default
//! implementation stays single-threaded for bit-for-bit reproducibility.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{
    assign_drc, build_distribution, Bandwidth, DrcCategory, LandscapeError, ScoreDistribution,
};
use crate::metrics::{dissimilarity, DissimilarityVector, MetricError, MetricId};
use crate::scores::{ComparisonKind, ComparisonQuality, ScoreError, ScoreSet, SubjectId};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training requires at least two distinct classes")]
    SingleClass,
    #[error("feature vectors have inconsistent lengths ({0} vs {1})")]
    InconsistentFeatures(usize, usize),
    #[error("feature length {found} does not match the model ({expected})")]
    FeatureLengthMismatch { expected: usize, found: usize },
    #[error("feature vector must hold 3 or 6 values in [0, 1], got {0:?}")]
    BadFeature(Vec<f64>),
    #[error("features and labels differ in length ({0} vs {1})")]
    MismatchedLabels(usize, usize),
    #[error("need at least {required} subjects with scores for ({quality}, {kind}), found {found}")]
    InsufficientSubjects {
        required: usize,
        found: usize,
        quality: ComparisonQuality,
        kind: ComparisonKind,
    },
    #[error("no fold could be evaluated: {0}")]
    NoEvaluableFolds(String),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Scores(#[from] ScoreError),
}

/// Picks the category with the smallest dissimilarity; exact ties go to the
/// higher-cost category.
pub fn min_rule(v: &DissimilarityVector) -> DrcCategory {
    let mut best = DrcCategory::WolfLamb;
    let mut best_value = v.wolf_lamb;
    for candidate in [DrcCategory::Goat, DrcCategory::Sheep] {
        let value = v.get(candidate);
        if value < best_value {
            best = candidate;
            best_value = value;
        }
    }
    best
}

/// Dissimilarity features for one subject: the goat/wolf-lamb/sheep triple of
/// one comparison kind, or the genuine and impostor triples concatenated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub metric: MetricId,
    pub quality: ComparisonQuality,
}

impl FeatureVector {
    pub fn new(
        values: Vec<f64>,
        metric: MetricId,
        quality: ComparisonQuality,
    ) -> Result<Self, ClassifyError> {
        let ok = matches!(values.len(), 3 | 6)
            && values.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v));
        if !ok {
            return Err(ClassifyError::BadFeature(values));
        }
        Ok(FeatureVector {
            values,
            metric,
            quality,
        })
    }

    /// The per-kind triple, in goat / wolf-lamb / sheep order.
    pub fn from_vector(v: &DissimilarityVector) -> Self {
        FeatureVector {
            values: v.values().to_vec(),
            metric: v.metric,
            quality: v.quality,
        }
    }

    /// Genuine triple followed by the impostor triple.
    pub fn from_pair(genuine: &DissimilarityVector, impostor: &DissimilarityVector) -> Self {
        let mut values = genuine.values().to_vec();
        values.extend_from_slice(&impostor.values());
        FeatureVector {
            values,
            metric: genuine.metric,
            quality: genuine.quality,
        }
    }
}

/// Feature layout used by the margin classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// One kind at a time, three dissimilarities.
    PerKind,
    /// Genuine and impostor triples concatenated, six dissimilarities.
    Combined,
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::PerKind => "per-kind-3",
            FeatureMode::Combined => "combined-6",
        })
    }
}

impl FeatureMode {
    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "per-kind-3" => Some(FeatureMode::PerKind),
            "combined-6" => Some(FeatureMode::Combined),
            _ => None,
        }
    }
}

/// Hyperparameters of the margin trainer. Everything that moves is seeded,
/// so equal inputs always produce equal weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginHyper {
    pub reg: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MarginHyper {
    fn default() -> Self {
        MarginHyper {
            reg: 1e-3,
            epochs: 200,
            learning_rate: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ClassModel {
    category: DrcCategory,
    weights: Vec<f64>,
    bias: f64,
}

/// Linear one-vs-rest margin model over dissimilarity features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginModel {
    feature_len: usize,
    hyper: MarginHyper,
    classes: Vec<ClassModel>,
    /// Combined hinge objective per epoch, summed over the three
    /// one-vs-rest problems. The stored weights are the best epoch's.
    pub loss_history: Vec<f64>,
}

impl MarginModel {
    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn hyper(&self) -> &MarginHyper {
        &self.hyper
    }

    pub fn weights(&self, category: DrcCategory) -> (&[f64], f64) {
        let class = self
            .classes
            .iter()
            .find(|c| c.category == category)
            .expect("every category has a one-vs-rest model");
        (&class.weights, class.bias)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn hinge_objective(values: &[Vec<f64>], targets: &[f64], w: &[f64], b: f64, reg: f64) -> f64 {
    let l2: f64 = w.iter().map(|x| x * x).sum();
    let hinge: f64 = values
        .iter()
        .zip(targets)
        .map(|(x, &y)| {
            let score: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            (1.0 - y * score).max(0.0)
        })
        .sum();
    0.5 * reg * l2 + hinge / values.len() as f64
}

fn train_one_vs_rest(
    values: &[Vec<f64>],
    targets: &[f64],
    hyper: &MarginHyper,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64, Vec<f64>) {
    let dim = values[0].len();
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut best_w = w.clone();
    let mut best_b = b;
    let mut best_loss = hinge_objective(values, targets, &w, b, hyper.reg);
    let mut history = Vec::with_capacity(hyper.epochs);
    let mut order: Vec<usize> = (0..values.len()).collect();
    for epoch in 0..hyper.epochs {
        let eta = hyper.learning_rate / (1.0 + epoch as f64);
        order.shuffle(rng);
        for &i in &order {
            let x = &values[i];
            let y = targets[i];
            let score: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            let shrink = 1.0 - eta * hyper.reg;
            for wi in w.iter_mut() {
                *wi *= shrink;
            }
            if y * score < 1.0 {
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi += eta * y * xi;
                }
                b += eta * y;
            }
        }
        let loss = hinge_objective(values, targets, &w, b, hyper.reg);
        history.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best_w.copy_from_slice(&w);
            best_b = b;
        }
    }
    (best_w, best_b, history)
}

/// Trains the linear one-vs-rest margin model. Requires at least two distinct
/// classes and consistent feature lengths.
pub fn train_margin(
    features: &[FeatureVector],
    labels: &[DrcCategory],
    hyper: &MarginHyper,
) -> Result<MarginModel, ClassifyError> {
    if features.len() != labels.len() {
        return Err(ClassifyError::MismatchedLabels(features.len(), labels.len()));
    }
    if features.is_empty() {
        return Err(ClassifyError::SingleClass);
    }
    let dim = features[0].values.len();
    for f in features {
        if f.values.len() != dim {
            return Err(ClassifyError::InconsistentFeatures(dim, f.values.len()));
        }
    }
    let distinct: std::collections::BTreeSet<_> = labels.iter().collect();
    if distinct.len() < 2 {
        return Err(ClassifyError::SingleClass);
    }
    let values: Vec<Vec<f64>> = features.iter().map(|f| f.values.clone()).collect();
    let mut classes = Vec::with_capacity(3);
    let mut loss_history = vec![0.0f64; hyper.epochs];
    for (idx, category) in DrcCategory::ALL.into_iter().enumerate() {
        let targets: Vec<f64> = labels
            .iter()
            .map(|&l| if l == category { 1.0 } else { -1.0 })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(idx as u64));
        let (weights, bias, history) = train_one_vs_rest(&values, &targets, hyper, &mut rng);
        for (total, h) in loss_history.iter_mut().zip(history) {
            *total += h;
        }
        classes.push(ClassModel {
            category,
            weights,
            bias,
        });
    }
    Ok(MarginModel {
        feature_len: dim,
        hyper: *hyper,
        classes,
        loss_history,
    })
}

fn predict_values(model: &MarginModel, values: &[f64]) -> DrcCategory {
    // ties break toward the higher-cost category
    let mut best = DrcCategory::WolfLamb;
    let mut best_score = f64::NEG_INFINITY;
    for candidate in [DrcCategory::WolfLamb, DrcCategory::Goat, DrcCategory::Sheep] {
        let (w, b) = model.weights(candidate);
        let score: f64 = w.iter().zip(values).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
        if score > best_score {
            best = candidate;
            best_score = score;
        }
    }
    best
}

/// Scores the feature vector under every one-vs-rest model and returns the
/// arg-max category; ties break toward the higher-cost category.
pub fn predict_margin(model: &MarginModel, f: &FeatureVector) -> Result<DrcCategory, ClassifyError> {
    if f.values.len() != model.feature_len {
        return Err(ClassifyError::FeatureLengthMismatch {
            expected: model.feature_len,
            found: f.values.len(),
        });
    }
    Ok(predict_values(model, &f.values))
}

/// Classifier selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    /// Training-free minimum-dissimilarity rule.
    MinRule,
    /// Trained linear margin model.
    Margin,
}

impl Classifier {
    pub const ALL: [Classifier; 2] = [Classifier::Margin, Classifier::MinRule];

    pub fn name(self) -> &'static str {
        match self {
            Classifier::MinRule => "min",
            Classifier::Margin => "margin",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "min" => Some(Classifier::MinRule),
            "margin" => Some(Classifier::Margin),
            _ => None,
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Leave-one-out cross validation
// ---------------------------------------------------------------------------

/// Knobs shared by every fold of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvConfig {
    pub percentile: f64,
    pub bins: usize,
    pub bandwidth: Bandwidth,
    pub feature_mode: FeatureMode,
    pub hyper: MarginHyper,
}

impl Default for LoocvConfig {
    fn default() -> Self {
        LoocvConfig {
            percentile: 0.025,
            bins: 100,
            bandwidth: Bandwidth::Auto,
            feature_mode: FeatureMode::PerKind,
            hyper: MarginHyper::default(),
        }
    }
}

/// One evaluated (or skipped) fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldOutcome {
    pub subject: SubjectId,
    pub truth: DrcCategory,
    pub predicted: Option<DrcCategory>,
    pub skip_reason: Option<String>,
}

/// Result of one leave-one-out run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoocvResult {
    /// correct / evaluated.
    pub sensitivity: f64,
    pub evaluated: usize,
    pub correct: usize,
    pub skipped: usize,
    pub outcomes: Vec<FoldOutcome>,
}

/// Precomputed per-fold state: the held-out subject's distribution and the
/// three category cells for one (quality, kind) pairing. Distributions are
/// metric-independent, so one preparation serves the whole metric grid.
struct FoldCell {
    cells: [ScoreDistribution; 3],
    traveler: ScoreDistribution,
}

struct Fold {
    subject: SubjectId,
    truth: DrcCategory,
    cells: BTreeMap<(ComparisonQuality, ComparisonKind), Result<FoldCell, String>>,
}

struct FoldPrep {
    folds: Vec<Fold>,
}

/// Subject-interned view of a score set. Fold loops scan every record once
/// per fold; doing that over integer ids instead of string keys keeps
/// leave-one-out runs fast. The arithmetic mirrors [`assign_drc_excluding`]
/// and [`pool_cell_scores`] operation for operation (same record order, same
/// accumulation order, same tie-breaks), so results are bit-identical —
/// pinned by `compiled_view_matches_public_path` below.
struct CompiledRecord {
    a: u32,
    b: u32,
    genuine: bool,
    quality: usize,
    score: f64,
}

struct CompiledSet<'a> {
    subjects: Vec<&'a SubjectId>,
    records: Vec<CompiledRecord>,
    slices: Vec<crate::scores::SubjectSlices>,
}

impl<'a> CompiledSet<'a> {
    fn compile(set: &'a ScoreSet) -> Result<Self, ClassifyError> {
        let subjects: Vec<&SubjectId> = set.subjects().iter().collect();
        let index: BTreeMap<&SubjectId, u32> = subjects
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, i as u32))
            .collect();
        let mut records = Vec::with_capacity(set.len());
        let mut slices = vec![crate::scores::SubjectSlices::default(); subjects.len()];
        for rec in set.records() {
            let a = index[&rec.subject_a];
            let b = index[&rec.subject_b];
            let kind = rec.kind();
            let quality = rec.quality();
            let score = set.normalize(rec.raw_score)?;
            slices[a as usize].push(kind, quality, score);
            if a != b {
                slices[b as usize].push(kind, quality, score);
            }
            records.push(CompiledRecord {
                a,
                b,
                genuine: kind == ComparisonKind::Genuine,
                quality: quality.index(),
                score,
            });
        }
        Ok(CompiledSet {
            subjects,
            records,
            slices,
        })
    }

    /// Index-space mirror of [`assign_drc_excluding`]: categories by subject
    /// index (the excluded index keeps a meaningless sheep placeholder).
    fn rank_excluding(&self, exclude: usize, percentile: f64) -> Result<Vec<DrcCategory>, LandscapeError> {
        let n = self.subjects.len();
        let mut genuine_sum = vec![0.0f64; n];
        let mut genuine_n = vec![0usize; n];
        let mut impostor_sum = vec![0.0f64; n];
        let mut impostor_n = vec![0usize; n];
        let x = exclude as u32;
        for rec in &self.records {
            if rec.a == x || rec.b == x {
                continue;
            }
            if rec.genuine {
                genuine_sum[rec.a as usize] += rec.score;
                genuine_n[rec.a as usize] += 1;
            } else {
                for idx in [rec.a as usize, rec.b as usize] {
                    impostor_sum[idx] += rec.score;
                    impostor_n[idx] += 1;
                }
            }
        }
        // subject indices ascend in id order, so index ties equal id ties
        let mut eligible: Vec<(usize, f64, f64)> = Vec::new();
        for i in 0..n {
            if i == exclude {
                continue;
            }
            if genuine_n[i] > 0 && impostor_n[i] > 0 {
                eligible.push((
                    i,
                    genuine_sum[i] / genuine_n[i] as f64,
                    impostor_sum[i] / impostor_n[i] as f64,
                ));
            }
        }
        if eligible.is_empty() {
            return Err(LandscapeError::EmptyPopulation);
        }
        let flagged = crate::landscape::flag_count(eligible.len(), percentile)?;
        let mut by_impostor = eligible.clone();
        by_impostor.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        let mut is_wolf = vec![false; n];
        for (i, _, _) in by_impostor.iter().take(flagged) {
            is_wolf[*i] = true;
        }
        let mut by_genuine = eligible;
        by_genuine.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let mut categories = vec![DrcCategory::Sheep; n];
        for i in 0..n {
            if is_wolf[i] {
                categories[i] = DrcCategory::WolfLamb;
            }
        }
        for (i, _, _) in by_genuine
            .iter()
            .filter(|(i, _, _)| !is_wolf[*i])
            .take(flagged)
        {
            categories[*i] = DrcCategory::Goat;
        }
        Ok(categories)
    }

    /// Index-space mirror of [`pool_cell_scores`].
    fn pool_excluding(
        &self,
        categories: &[DrcCategory],
        exclude: usize,
        quality: ComparisonQuality,
        kind: ComparisonKind,
    ) -> [Vec<f64>; 3] {
        let slot = |cat: DrcCategory| match cat {
            DrcCategory::Goat => 0usize,
            DrcCategory::WolfLamb => 1,
            DrcCategory::Sheep => 2,
        };
        let want_genuine = kind == ComparisonKind::Genuine;
        let quality = quality.index();
        let x = exclude as u32;
        let mut cells: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for rec in &self.records {
            if rec.a == x || rec.b == x || rec.quality != quality || rec.genuine != want_genuine {
                continue;
            }
            let cat_a = categories[rec.a as usize];
            if rec.genuine {
                cells[slot(cat_a)].push(rec.score);
            } else {
                let cat_b = categories[rec.b as usize];
                cells[slot(cat_a)].push(rec.score);
                if cat_b != cat_a {
                    cells[slot(cat_b)].push(rec.score);
                }
            }
        }
        cells
    }
}

fn prepare_folds(
    set: &ScoreSet,
    cfg: &LoocvConfig,
    combos: &[(ComparisonQuality, ComparisonKind)],
) -> Result<FoldPrep, ClassifyError> {
    let full = assign_drc(set, cfg.percentile)?;
    let compiled = CompiledSet::compile(set)?;
    let mut folds = Vec::new();
    for (xi, subject) in compiled.subjects.iter().enumerate() {
        let truth = full
            .category(subject)
            .expect("full assignment covers every subject");
        let mut cells = BTreeMap::new();
        let fold_categories = compiled.rank_excluding(xi, cfg.percentile);
        for &(quality, kind) in combos {
            let entry = match &fold_categories {
                Err(e) => Err(format!("fold assignment failed: {e}")),
                Ok(categories) => {
                    let traveler_scores = compiled.slices[xi].get(kind, quality);
                    if traveler_scores.is_empty() {
                        Err(format!("subject has no ({quality}, {kind}) scores"))
                    } else {
                        build_fold_cell(&compiled, categories, xi, quality, kind, traveler_scores, cfg)
                    }
                }
            };
            cells.insert((quality, kind), entry);
        }
        folds.push(Fold {
            subject: (*subject).clone(),
            truth,
            cells,
        });
    }
    Ok(FoldPrep { folds })
}

fn build_fold_cell(
    compiled: &CompiledSet<'_>,
    categories: &[DrcCategory],
    exclude: usize,
    quality: ComparisonQuality,
    kind: ComparisonKind,
    traveler_scores: &[f64],
    cfg: &LoocvConfig,
) -> Result<FoldCell, String> {
    let pooled = compiled.pool_excluding(categories, exclude, quality, kind);
    for (scores, category) in pooled.iter().zip(DrcCategory::ALL) {
        if scores.is_empty() {
            return Err(format!("empty landscape cell ({category}, {quality}, {kind})"));
        }
    }
    let build = |scores: &[f64]| {
        let h = cfg.bandwidth.resolve(scores);
        build_distribution(scores, cfg.bins, h).map_err(|e| e.to_string())
    };
    let [goat, wolf, sheep] = pooled;
    Ok(FoldCell {
        cells: [build(&goat)?, build(&wolf)?, build(&sheep)?],
        traveler: build(traveler_scores)?,
    })
}

fn fold_vector(
    fold_cell: &FoldCell,
    metric: MetricId,
    quality: ComparisonQuality,
    kind: ComparisonKind,
) -> Result<DissimilarityVector, MetricError> {
    let mut values = [0.0f64; 3];
    for (v, cell) in values.iter_mut().zip(&fold_cell.cells) {
        *v = dissimilarity(metric, &fold_cell.traveler, cell)?;
    }
    DissimilarityVector::new(metric, quality, kind, values[0], values[1], values[2])
}

/// Fold-out predictions over a precomputed feature table: fold `i` trains on
/// every row except `i` (margin) or needs no training at all (min rule).
fn fold_predictions(
    values: &[Vec<f64>],
    labels: &[DrcCategory],
    classifier: Classifier,
    hyper: &MarginHyper,
) -> Vec<Result<DrcCategory, String>> {
    match classifier {
        Classifier::MinRule => values
            .iter()
            .map(|v| {
                if v.len() != 3 {
                    return Err("min rule needs the three per-kind dissimilarities".into());
                }
                // argmin with ties toward the higher-cost category
                let mut best = DrcCategory::WolfLamb;
                let mut best_value = v[1];
                if v[0] < best_value {
                    best = DrcCategory::Goat;
                    best_value = v[0];
                }
                if v[2] < best_value {
                    best = DrcCategory::Sheep;
                }
                Ok(best)
            })
            .collect(),
        Classifier::Margin => (0..values.len())
            .map(|held_out| {
                let mut train_values = Vec::with_capacity(values.len() - 1);
                let mut train_labels = Vec::with_capacity(values.len() - 1);
                for (j, (v, &l)) in values.iter().zip(labels).enumerate() {
                    if j != held_out {
                        train_values.push(v.clone());
                        train_labels.push(l);
                    }
                }
                let distinct: std::collections::BTreeSet<_> = train_labels.iter().collect();
                if distinct.len() < 2 {
                    return Err("training fold has a single class".into());
                }
                let mut classes = Vec::with_capacity(3);
                for (idx, category) in DrcCategory::ALL.into_iter().enumerate() {
                    let targets: Vec<f64> = train_labels
                        .iter()
                        .map(|&l| if l == category { 1.0 } else { -1.0 })
                        .collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(idx as u64));
                    let (weights, bias, _) =
                        train_one_vs_rest(&train_values, &targets, hyper, &mut rng);
                    classes.push(ClassModel {
                        category,
                        weights,
                        bias,
                    });
                }
                let model = MarginModel {
                    feature_len: values[held_out].len(),
                    hyper: *hyper,
                    classes,
                    loss_history: Vec::new(),
                };
                Ok(predict_values(&model, &values[held_out]))
            })
            .collect(),
    }
}

/// Leave-one-out predictions over an externally computed feature table.
/// Folds that cannot be evaluated (for the margin, a single-class training
/// set) come back as `None`.
pub fn loocv_over_features(
    features: &[FeatureVector],
    labels: &[DrcCategory],
    classifier: Classifier,
    hyper: &MarginHyper,
) -> Result<Vec<Option<DrcCategory>>, ClassifyError> {
    if features.len() != labels.len() {
        return Err(ClassifyError::MismatchedLabels(features.len(), labels.len()));
    }
    let values: Vec<Vec<f64>> = features.iter().map(|f| f.values.clone()).collect();
    Ok(fold_predictions(&values, labels, classifier, hyper)
        .into_iter()
        .map(Result::ok)
        .collect())
}

fn eval_prepared(
    prep: &FoldPrep,
    metric: MetricId,
    quality: ComparisonQuality,
    kind: ComparisonKind,
    classifier: Classifier,
    cfg: &LoocvConfig,
) -> Result<LoocvResult, ClassifyError> {
    // gather per-fold feature rows; folds without usable cells are skipped
    let mut usable: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut skip: BTreeMap<usize, String> = BTreeMap::new();
    for (i, fold) in prep.folds.iter().enumerate() {
        let row = match (cfg.feature_mode, classifier) {
            // the min rule always reads the requested kind's triple
            (_, Classifier::MinRule) | (FeatureMode::PerKind, _) => fold.cells
                [&(quality, kind)]
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|cell| {
                    fold_vector(cell, metric, quality, kind)
                        .map(|v| v.values().to_vec())
                        .map_err(|e| e.to_string())
                }),
            (FeatureMode::Combined, Classifier::Margin) => {
                let kind_vector = |k: ComparisonKind| {
                    fold.cells[&(quality, k)]
                        .as_ref()
                        .map_err(Clone::clone)
                        .and_then(|cell| {
                            fold_vector(cell, metric, quality, k).map_err(|e| e.to_string())
                        })
                };
                kind_vector(ComparisonKind::Genuine).and_then(|g| {
                    kind_vector(ComparisonKind::Impostor).map(|imp| {
                        let mut values = g.values().to_vec();
                        values.extend_from_slice(&imp.values());
                        values
                    })
                })
            }
        };
        match row {
            Ok(values) => usable.push((i, values)),
            Err(reason) => {
                skip.insert(i, reason);
            }
        }
    }
    if usable.len() < 3 {
        return Err(ClassifyError::InsufficientSubjects {
            required: 3,
            found: usable.len(),
            quality,
            kind,
        });
    }

    let values: Vec<Vec<f64>> = usable.iter().map(|(_, v)| v.clone()).collect();
    let labels: Vec<DrcCategory> = usable.iter().map(|(i, _)| prep.folds[*i].truth).collect();
    let predictions = fold_predictions(&values, &labels, classifier, &cfg.hyper);

    let by_index: BTreeMap<usize, Result<DrcCategory, String>> = usable
        .iter()
        .map(|(i, _)| *i)
        .zip(predictions)
        .collect();
    let mut outcomes = Vec::with_capacity(prep.folds.len());
    let mut correct = 0usize;
    let mut evaluated = 0usize;
    for (i, fold) in prep.folds.iter().enumerate() {
        let outcome = match by_index.get(&i) {
            Some(Ok(predicted)) => {
                evaluated += 1;
                if *predicted == fold.truth {
                    correct += 1;
                }
                FoldOutcome {
                    subject: fold.subject.clone(),
                    truth: fold.truth,
                    predicted: Some(*predicted),
                    skip_reason: None,
                }
            }
            Some(Err(reason)) => FoldOutcome {
                subject: fold.subject.clone(),
                truth: fold.truth,
                predicted: None,
                skip_reason: Some(reason.clone()),
            },
            None => FoldOutcome {
                subject: fold.subject.clone(),
                truth: fold.truth,
                predicted: None,
                skip_reason: Some(skip.get(&i).cloned().unwrap_or_else(|| "unusable".into())),
            },
        };
        outcomes.push(outcome);
    }
    if evaluated == 0 {
        return Err(ClassifyError::NoEvaluableFolds(
            "every usable fold was skipped".into(),
        ));
    }
    Ok(LoocvResult {
        sensitivity: correct as f64 / evaluated as f64,
        evaluated,
        correct,
        skipped: outcomes.len() - evaluated,
        outcomes,
    })
}

/// Leave-one-out sensitivity of one classifier on one (quality, kind) cell.
///
/// Every fold re-ranks the population and rebuilds the needed landscape cells
/// without the held-out subject, then compares the prediction against the
/// subject's full-data category.
pub fn loocv(
    set: &ScoreSet,
    metric: MetricId,
    quality: ComparisonQuality,
    kind: ComparisonKind,
    classifier: Classifier,
    cfg: &LoocvConfig,
) -> Result<LoocvResult, ClassifyError> {
    let combos: Vec<(ComparisonQuality, ComparisonKind)> = match (cfg.feature_mode, classifier) {
        (FeatureMode::Combined, Classifier::Margin) => ComparisonKind::ALL
            .into_iter()
            .map(|k| (quality, k))
            .collect(),
        _ => vec![(quality, kind)],
    };
    let prep = prepare_folds(set, cfg, &combos)?;
    eval_prepared(&prep, metric, quality, kind, classifier, cfg)
}

// ---------------------------------------------------------------------------
// Sensitivity table
// ---------------------------------------------------------------------------

/// One cell of the sensitivity grid; `sensitivity` is absent when the cell
/// could not be evaluated, with the reason kept alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCell {
    pub metric: MetricId,
    pub classifier: Classifier,
    pub kind: ComparisonKind,
    pub quality: ComparisonQuality,
    pub sensitivity: Option<f64>,
    pub evaluated: usize,
    pub reason: Option<String>,
}

/// Full metrics x classifiers x kinds x qualities sensitivity grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTable {
    pub metrics: Vec<MetricId>,
    pub classifiers: Vec<Classifier>,
    pub cells: Vec<SensitivityCell>,
}

impl SensitivityTable {
    pub fn get(
        &self,
        metric: MetricId,
        classifier: Classifier,
        kind: ComparisonKind,
        quality: ComparisonQuality,
    ) -> Option<&SensitivityCell> {
        self.cells.iter().find(|c| {
            c.metric == metric && c.classifier == classifier && c.kind == kind && c.quality == quality
        })
    }

    /// CSV layout mirroring the classic report: one metric per row, a
    /// classifier x kind x quality column grid, two-decimal values, blank
    /// cells where evaluation was impossible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for classifier in &self.classifiers {
            for kind in ComparisonKind::ALL {
                for quality in ComparisonQuality::ALL {
                    out.push_str(&format!(",{classifier}_{kind}_{quality}"));
                }
            }
        }
        out.push('\n');
        for &metric in &self.metrics {
            out.push_str(metric.name());
            for &classifier in &self.classifiers {
                for kind in ComparisonKind::ALL {
                    for quality in ComparisonQuality::ALL {
                        match self
                            .get(metric, classifier, kind, quality)
                            .and_then(|c| c.sensitivity)
                        {
                            Some(v) => out.push_str(&format!(",{v:.2}")),
                            None => out.push(','),
                        }
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Configuration of a full sensitivity-table run.
#[derive(Debug, Clone)]
pub struct TableConfig {
    pub loocv: LoocvConfig,
    pub metrics: Vec<MetricId>,
    pub classifiers: Vec<Classifier>,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            loocv: LoocvConfig::default(),
            metrics: MetricId::ALL.to_vec(),
            classifiers: Classifier::ALL.to_vec(),
        }
    }
}

/// Evaluates the whole sensitivity grid. The expensive fold preparation (one
/// re-ranking and cell rebuild per subject) is shared across every metric and
/// classifier; cells that cannot be evaluated are emitted empty with the
/// reason attached.
pub fn sensitivity_table(
    set: &ScoreSet,
    cfg: &TableConfig,
) -> Result<SensitivityTable, ClassifyError> {
    let combos: Vec<(ComparisonQuality, ComparisonKind)> = ComparisonQuality::ALL
        .iter()
        .flat_map(|&q| ComparisonKind::ALL.into_iter().map(move |k| (q, k)))
        .collect();
    let prep = prepare_folds(set, &cfg.loocv, &combos)?;
    let mut cells = Vec::new();
    for &metric in &cfg.metrics {
        for &classifier in &cfg.classifiers {
            for kind in ComparisonKind::ALL {
                for quality in ComparisonQuality::ALL {
                    match eval_prepared(&prep, metric, quality, kind, classifier, &cfg.loocv) {
                        Ok(result) => cells.push(SensitivityCell {
                            metric,
                            classifier,
                            kind,
                            quality,
                            sensitivity: Some(result.sensitivity),
                            evaluated: result.evaluated,
                            reason: None,
                        }),
                        Err(e) => cells.push(SensitivityCell {
                            metric,
                            classifier,
                            kind,
                            quality,
                            sensitivity: None,
                            evaluated: 0,
                            reason: Some(e.to_string()),
                        }),
                    }
                }
            }
        }
    }
    Ok(SensitivityTable {
        metrics: cfg.metrics.clone(),
        classifiers: cfg.classifiers.clone(),
        cells,
    })
}
