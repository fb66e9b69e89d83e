//! Watchlist risk analytics over biometric match scores.
//!
//! The crate turns a flat file of pairwise match scores into a risk picture
//! of the enrolled population:
//!
//! - [`scores`] ingests and normalizes raw match scores and derives the
//!   genuine/impostor partition and quality pairing of every comparison.
//! - [`landscape`] ranks subjects into the menagerie risk categories
//!   (sheep / goats / wolves-lambs), builds the smoothed per-category score
//!   distributions, and recomputes everything on watchlist mutation.
//! - [`metrics`] measures the distance between two score distributions under
//!   21 classical metrics, mapped onto a common dissimilarity scale.
//! - [`classify`] predicts a traveler's category from dissimilarity features
//!   (minimum-dissimilarity rule or a linear margin model) and evaluates both
//!   by leave-one-out cross validation.
//! - [`risk`] converts dissimilarities and predictions into cost-weighted
//!   risk values and discrete levels.
//! - [`synth`] generates score sets with planted categories, used as ground
//!   truth for end-to-end validation.
//!
//! All value types are immutable snapshots; every operation is a pure
//! function of its inputs, so concurrent readers never need locking.

pub mod classify;
pub mod landscape;
pub mod metrics;
pub mod risk;
pub mod scores;
pub mod synth;

pub use classify::{Classifier, FeatureMode, LoocvResult, MarginHyper, MarginModel};
pub use landscape::{Bandwidth, DrcAssignment, DrcCategory, Landscape, ScoreDistribution};
pub use metrics::{DissimilarityVector, MetricId, MetricKind};
pub use risk::{CostProfile, RiskLevel, RiskReport};
pub use scores::{
    ComparisonKind, ComparisonQuality, QualityTier, ScoreRecord, ScoreRow, ScoreSet, SubjectId,
};
pub use synth::{SynthConfig, SynthTruth};
