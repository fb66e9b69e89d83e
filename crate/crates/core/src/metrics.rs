//! Distance and similarity measures between two binned score distributions.
//!
//! All 21 measures operate bin-wise on the mass vectors `p`, `q`:
//!
//! | metric             | definition |
//! |--------------------|------------|
//! | euclidean          | sqrt(sum (p-q)^2) |
//! | city_block         | sum \|p-q\| |
//! | chebyshev          | max \|p-q\| |
//! | sorensen           | sum \|p-q\| / sum (p+q) |
//! | canberra           | sum \|p-q\| / (p+q) |
//! | lorentzian         | sum ln(1 + \|p-q\|) |
//! | wave_hedges        | sum \|p-q\| / max(p,q) |
//! | czekanowski        | 1 - 2 sum min(p,q) / sum (p+q) |
//! | kulczynski_s       | (similarity) sum min(p,q) / sum \|p-q\| |
//! | harmonic_mean      | (similarity) 2 sum p*q/(p+q) |
//! | kumar_hassebrook   | (similarity) sum p*q / (sum p^2 + sum q^2 - sum p*q) |
//! | jaccard            | sum (p-q)^2 / (sum p^2 + sum q^2 - sum p*q) |
//! | hellinger          | sqrt(2 sum (sqrt p - sqrt q)^2) |
//! | matusita           | sqrt(sum (sqrt p - sqrt q)^2) |
//! | squared_chord      | sum (sqrt p - sqrt q)^2 |
//! | squared_euclidean  | sum (p-q)^2 |
//! | squared_chi_square | sum (p-q)^2 / (p+q) |
//! | clark              | sqrt(sum (\|p-q\|/(p+q))^2) |
//! | kullback_leibler   | sum p ln(p/q) |
//! | k_divergence       | sum p ln(2p/(p+q)) |
//! | jensen_shannon     | (sum p ln(2p/(p+q)) + sum q ln(2q/(p+q))) / 2 |
//!
//! Measures with a per-bin denominator or a logarithm are evaluated after
//! epsilon smoothing (1e-12 added to every bin, renormalized), so empty bins
//! never produce NaN or infinities. 0/0 terms contribute zero.
//!
//! [`dissimilarity`] maps every measure onto a shared `[0, 1]` scale where 0
//! means identical: distances are divided by their theoretical maximum for
//! unit-mass inputs, unbounded measures go through `x / (1 + x)`, and
//! similarities are flipped to `1 - s`.
//!
//! Everything here is a pure function over immutable inputs, safe for
//! unlimited parallel evaluation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{DrcCategory, Landscape, ScoreDistribution};
use crate::scores::{ComparisonKind, ComparisonQuality};

const SMOOTH_EPS: f64 = 1e-12;
const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("distributions use different bin grids ({0} vs {1} bins)")]
    MismatchedGrids(usize, usize),
    #[error("empty distribution (sample count 0)")]
    EmptyDistribution,
    #[error("empty landscape cell ({category}, {quality}, {kind})")]
    EmptyCell {
        category: DrcCategory,
        quality: ComparisonQuality,
        kind: ComparisonKind,
    },
    #[error("dissimilarity value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

/// Whether a measure grows with difference (distance) or with agreement
/// (similarity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Distance,
    Similarity,
}

/// The 21 supported measures, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Euclidean,
    CityBlock,
    Chebyshev,
    Sorensen,
    Canberra,
    Lorentzian,
    WaveHedges,
    Czekanowski,
    KulczynskiS,
    HarmonicMean,
    KumarHassebrook,
    Jaccard,
    Hellinger,
    Matusita,
    SquaredChord,
    SquaredEuclidean,
    SquaredChiSquare,
    Clark,
    KullbackLeibler,
    KDivergence,
    JensenShannon,
}

impl MetricId {
    pub const ALL: [MetricId; 21] = [
        MetricId::Euclidean,
        MetricId::CityBlock,
        MetricId::Chebyshev,
        MetricId::Sorensen,
        MetricId::Canberra,
        MetricId::Lorentzian,
        MetricId::WaveHedges,
        MetricId::Czekanowski,
        MetricId::KulczynskiS,
        MetricId::HarmonicMean,
        MetricId::KumarHassebrook,
        MetricId::Jaccard,
        MetricId::Hellinger,
        MetricId::Matusita,
        MetricId::SquaredChord,
        MetricId::SquaredEuclidean,
        MetricId::SquaredChiSquare,
        MetricId::Clark,
        MetricId::KullbackLeibler,
        MetricId::KDivergence,
        MetricId::JensenShannon,
    ];

    /// Stable snake_case identifier used in every export format.
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Euclidean => "euclidean",
            MetricId::CityBlock => "city_block",
            MetricId::Chebyshev => "chebyshev",
            MetricId::Sorensen => "sorensen",
            MetricId::Canberra => "canberra",
            MetricId::Lorentzian => "lorentzian",
            MetricId::WaveHedges => "wave_hedges",
            MetricId::Czekanowski => "czekanowski",
            MetricId::KulczynskiS => "kulczynski_s",
            MetricId::HarmonicMean => "harmonic_mean",
            MetricId::KumarHassebrook => "kumar_hassebrook",
            MetricId::Jaccard => "jaccard",
            MetricId::Hellinger => "hellinger",
            MetricId::Matusita => "matusita",
            MetricId::SquaredChord => "squared_chord",
            MetricId::SquaredEuclidean => "squared_euclidean",
            MetricId::SquaredChiSquare => "squared_chi_square",
            MetricId::Clark => "clark",
            MetricId::KullbackLeibler => "kullback_leibler",
            MetricId::KDivergence => "k_divergence",
            MetricId::JensenShannon => "jensen_shannon",
        }
    }

    pub fn parse(name: &str) -> Result<Self, MetricError> {
        MetricId::ALL
            .iter()
            .copied()
            .find(|m| m.name() == name)
            .ok_or_else(|| MetricError::UnknownMetric(name.to_string()))
    }

    pub fn kind(self) -> MetricKind {
        match self {
            MetricId::KulczynskiS | MetricId::HarmonicMean | MetricId::KumarHassebrook => {
                MetricKind::Similarity
            }
            _ => MetricKind::Distance,
        }
    }

    /// Symmetric in its two arguments? Only the directed divergences are not.
    pub fn is_symmetric(self) -> bool {
        !matches!(self, MetricId::KullbackLeibler | MetricId::KDivergence)
    }

    /// Measures whose formula divides by or takes the log of individual bins;
    /// these are evaluated on epsilon-smoothed mass vectors.
    fn needs_smoothing(self) -> bool {
        matches!(
            self,
            MetricId::Canberra
                | MetricId::WaveHedges
                | MetricId::HarmonicMean
                | MetricId::SquaredChiSquare
                | MetricId::Clark
                | MetricId::KullbackLeibler
                | MetricId::KDivergence
                | MetricId::JensenShannon
        )
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn smooth(mass: &[f64]) -> Vec<f64> {
    let denom = 1.0 + mass.len() as f64 * SMOOTH_EPS;
    mass.iter().map(|&m| (m + SMOOTH_EPS) / denom).collect()
}

fn kd_sum(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi <= 0.0 {
                0.0
            } else {
                pi * (2.0 * pi / (pi + qi)).ln()
            }
        })
        .sum()
}

fn evaluate(metric: MetricId, p: &[f64], q: &[f64]) -> f64 {
    let zip = || p.iter().zip(q.iter()).map(|(&a, &b)| (a, b));
    match metric {
        MetricId::Euclidean => zip().map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        MetricId::CityBlock => zip().map(|(a, b)| (a - b).abs()).sum(),
        MetricId::Chebyshev => zip().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        MetricId::Sorensen => {
            let num: f64 = zip().map(|(a, b)| (a - b).abs()).sum();
            let den: f64 = zip().map(|(a, b)| a + b).sum();
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        }
        MetricId::Canberra => zip()
            .map(|(a, b)| {
                let den = a + b;
                if den == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / den
                }
            })
            .sum(),
        MetricId::Lorentzian => zip().map(|(a, b)| (1.0 + (a - b).abs()).ln()).sum(),
        MetricId::WaveHedges => zip()
            .map(|(a, b)| {
                let den = a.max(b);
                if den == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / den
                }
            })
            .sum(),
        MetricId::Czekanowski => {
            let num: f64 = zip().map(|(a, b)| a.min(b)).sum();
            let den: f64 = zip().map(|(a, b)| a + b).sum();
            if den == 0.0 {
                0.0
            } else {
                1.0 - 2.0 * num / den
            }
        }
        MetricId::KulczynskiS => {
            let num: f64 = zip().map(|(a, b)| a.min(b)).sum();
            let den: f64 = zip().map(|(a, b)| (a - b).abs()).sum();
            // identical inputs have a zero denominator; keep the value finite
            num / den.max(SMOOTH_EPS)
        }
        MetricId::HarmonicMean => zip()
            .map(|(a, b)| {
                let den = a + b;
                if den == 0.0 {
                    0.0
                } else {
                    2.0 * a * b / den
                }
            })
            .sum(),
        MetricId::KumarHassebrook => {
            let pq: f64 = zip().map(|(a, b)| a * b).sum();
            let den: f64 = zip().map(|(a, b)| a * a + b * b).sum::<f64>() - pq;
            if den == 0.0 {
                0.0
            } else {
                pq / den
            }
        }
        MetricId::Jaccard => {
            let num: f64 = zip().map(|(a, b)| (a - b) * (a - b)).sum();
            let pq: f64 = zip().map(|(a, b)| a * b).sum();
            let den: f64 = zip().map(|(a, b)| a * a + b * b).sum::<f64>() - pq;
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        }
        MetricId::Hellinger => {
            let s: f64 = zip().map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
            (2.0 * s).sqrt()
        }
        MetricId::Matusita => zip()
            .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
            .sum::<f64>()
            .sqrt(),
        MetricId::SquaredChord => zip().map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum(),
        MetricId::SquaredEuclidean => zip().map(|(a, b)| (a - b) * (a - b)).sum(),
        MetricId::SquaredChiSquare => zip()
            .map(|(a, b)| {
                let den = a + b;
                if den == 0.0 {
                    0.0
                } else {
                    (a - b) * (a - b) / den
                }
            })
            .sum(),
        MetricId::Clark => zip()
            .map(|(a, b)| {
                let den = a + b;
                if den == 0.0 {
                    0.0
                } else {
                    ((a - b).abs() / den).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt(),
        MetricId::KullbackLeibler => zip()
            .map(|(a, b)| if a <= 0.0 { 0.0 } else { a * (a / b).ln() })
            .sum::<f64>()
            .max(0.0),
        MetricId::KDivergence => kd_sum(p, q).max(0.0),
        MetricId::JensenShannon => (0.5 * (kd_sum(p, q) + kd_sum(q, p))).max(0.0),
    }
}

fn check_pair(p: &ScoreDistribution, q: &ScoreDistribution) -> Result<(), MetricError> {
    if p.bins() != q.bins() || p.bin_edges() != q.bin_edges() {
        return Err(MetricError::MismatchedGrids(p.bins(), q.bins()));
    }
    if !p.is_populated() || !q.is_populated() {
        return Err(MetricError::EmptyDistribution);
    }
    Ok(())
}

/// Raw measure value (distance or similarity, per [`MetricId::kind`]).
pub fn raw_measure(
    metric: MetricId,
    p: &ScoreDistribution,
    q: &ScoreDistribution,
) -> Result<f64, MetricError> {
    check_pair(p, q)?;
    if metric.needs_smoothing() {
        Ok(evaluate(metric, &smooth(p.mass()), &smooth(q.mass())))
    } else {
        Ok(evaluate(metric, p.mass(), q.mass()))
    }
}

/// Maps a raw measure onto the shared `[0, 1]` dissimilarity scale
/// (0 = identical distributions).
///
/// Bounded distances divide by their theoretical maximum on unit-mass
/// vectors, so values are comparable across runs. Kullback-Leibler (unbounded)
/// goes through `x / (1 + x)`. Similarities are flipped to `1 - s` after
/// normalizing: the unbounded Kulczynski similarity is first squashed by
/// `s / (1 + s)`. The result is clamped to `[0, 1]`.
pub fn dissimilarity(
    metric: MetricId,
    p: &ScoreDistribution,
    q: &ScoreDistribution,
) -> Result<f64, MetricError> {
    let raw = raw_measure(metric, p, q)?;
    let bins = p.bins() as f64;
    let value = match metric {
        MetricId::Euclidean => raw / std::f64::consts::SQRT_2,
        MetricId::CityBlock => raw / 2.0,
        MetricId::Chebyshev => raw,
        MetricId::Sorensen => raw,
        MetricId::Czekanowski => raw,
        MetricId::WaveHedges => raw / bins,
        MetricId::Canberra => raw / bins,
        MetricId::Clark => raw / bins.sqrt(),
        MetricId::Lorentzian => raw / (2.0 * LN_2),
        MetricId::Jaccard => raw,
        MetricId::Hellinger => raw / 2.0,
        MetricId::Matusita => raw / std::f64::consts::SQRT_2,
        MetricId::SquaredChord => raw / 2.0,
        MetricId::SquaredEuclidean => raw / 2.0,
        MetricId::SquaredChiSquare => raw / 2.0,
        MetricId::JensenShannon => raw / LN_2,
        MetricId::KDivergence => raw / LN_2,
        MetricId::KullbackLeibler => raw / (1.0 + raw),
        MetricId::KulczynskiS => 1.0 - raw / (1.0 + raw),
        MetricId::HarmonicMean | MetricId::KumarHassebrook => 1.0 - raw.clamp(0.0, 1.0),
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Dissimilarities of one traveler distribution to the three category cells
/// of a (quality, kind) landscape slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityVector {
    pub metric: MetricId,
    pub quality: ComparisonQuality,
    pub kind: ComparisonKind,
    pub goat: f64,
    pub wolf_lamb: f64,
    pub sheep: f64,
}

impl DissimilarityVector {
    pub fn new(
        metric: MetricId,
        quality: ComparisonQuality,
        kind: ComparisonKind,
        goat: f64,
        wolf_lamb: f64,
        sheep: f64,
    ) -> Result<Self, MetricError> {
        for v in [goat, wolf_lamb, sheep] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(MetricError::OutOfRange(v));
            }
        }
        Ok(DissimilarityVector {
            metric,
            quality,
            kind,
            goat,
            wolf_lamb,
            sheep,
        })
    }

    pub fn get(&self, category: DrcCategory) -> f64 {
        match category {
            DrcCategory::Goat => self.goat,
            DrcCategory::WolfLamb => self.wolf_lamb,
            DrcCategory::Sheep => self.sheep,
        }
    }

    /// Values in the reporting order goat, wolf/lamb, sheep.
    pub fn values(&self) -> [f64; 3] {
        [self.goat, self.wolf_lamb, self.sheep]
    }
}

/// Measures a traveler distribution against the three category cells of the
/// landscape for one (quality, kind) pairing.
pub fn dissimilarity_vector(
    metric: MetricId,
    traveler: &ScoreDistribution,
    landscape: &Landscape,
    quality: ComparisonQuality,
    kind: ComparisonKind,
) -> Result<DissimilarityVector, MetricError> {
    if !traveler.is_populated() {
        return Err(MetricError::EmptyDistribution);
    }
    let mut values = [0.0f64; 3];
    for (v, category) in values.iter_mut().zip(DrcCategory::ALL) {
        let cell = landscape.cell(category, quality, kind);
        if !cell.is_populated() {
            return Err(MetricError::EmptyCell {
                category,
                quality,
                kind,
            });
        }
        *v = dissimilarity(metric, traveler, cell)?;
    }
    DissimilarityVector::new(metric, quality, kind, values[0], values[1], values[2])
}
