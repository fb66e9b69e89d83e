//! Property tests for the invariants that span modules.

use proptest::prelude::*;

use drcwatch_core::landscape::{assign_drc, build_distribution, DrcCategory, ScoreDistribution};
use drcwatch_core::metrics::{dissimilarity, MetricId};
use drcwatch_core::scores::{ComparisonKind, ScoreRecord, ScoreSet, SubjectId};
use drcwatch_core::synth::{generate, SynthConfig};

fn mass_strategy(bins: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, bins).prop_map(|mut mass| {
        // sparsify some bins so zero handling is exercised
        for (i, m) in mass.iter_mut().enumerate() {
            if i % 3 == 0 {
                *m = 0.0;
            }
        }
        let total: f64 = mass.iter().sum();
        if total == 0.0 {
            mass[0] = 1.0;
        } else {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        mass
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dissimilarity_bounded_for_all_metrics(
        p in mass_strategy(32),
        q in mass_strategy(32),
    ) {
        let p = ScoreDistribution::from_mass(p, 1, 0.02).unwrap();
        let q = ScoreDistribution::from_mass(q, 1, 0.02).unwrap();
        for metric in MetricId::ALL {
            let d = dissimilarity(metric, &p, &q).unwrap();
            prop_assert!((0.0..=1.0).contains(&d), "{metric} gave {d}");
        }
    }

    #[test]
    fn distribution_mass_sums_to_one_and_ignores_score_order(
        scores in proptest::collection::vec(0.0f64..=1.0, 1..40),
        bandwidth in 0.01f64..0.2,
    ) {
        let d = build_distribution(&scores, 50, bandwidth).unwrap();
        let total: f64 = d.mass().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);

        let mut reversed = scores.clone();
        reversed.reverse();
        let r = build_distribution(&reversed, 50, bandwidth).unwrap();
        for (a, b) in d.mass().iter().zip(r.mass()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_is_monotone(
        raws in proptest::collection::vec(-50.0f64..150.0, 2..30),
        a in -10.0f64..110.0,
        b in -10.0f64..110.0,
    ) {
        let records: Vec<ScoreRecord> = raws
            .iter()
            .enumerate()
            .map(|(i, &raw)| {
                ScoreRecord::new(
                    SubjectId::new(format!("n{i}")).unwrap(),
                    SubjectId::new(format!("n{}", i + 1)).unwrap(),
                    drcwatch_core::scores::QualityTier::High,
                    drcwatch_core::scores::QualityTier::High,
                    raw,
                )
                .unwrap()
            })
            .collect();
        let set = ScoreSet::from_records(records).unwrap();
        if set.norm_min() < set.norm_max() {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let na = set.normalize(lo).unwrap();
            let nb = set.normalize(hi).unwrap();
            prop_assert!(na <= nb);
            prop_assert_eq!(set.normalize(set.norm_min()).unwrap(), 0.0);
            prop_assert_eq!(set.normalize(set.norm_max()).unwrap(), 1.0);
        }
    }
}

#[test]
fn assignment_is_invariant_under_subject_relabeling() {
    for seed in [1u64, 9, 23] {
        let cfg = SynthConfig {
            n_subjects: 24,
            seed,
            ..SynthConfig::default()
        };
        let (set, _) = generate(&cfg).unwrap();
        let assignment = assign_drc(&set, 0.025).unwrap();

        // relabel every id so the lexicographic order reverses
        let relabel = |s: &SubjectId| {
            let n: usize = s.as_str()[1..].parse().unwrap();
            SubjectId::new(format!("z{:04}", 9999 - n)).unwrap()
        };
        let renamed: Vec<ScoreRecord> = set
            .records()
            .iter()
            .map(|r| {
                let mut rec = r.clone();
                rec.subject_a = relabel(&r.subject_a);
                rec.subject_b = relabel(&r.subject_b);
                rec
            })
            .collect();
        let renamed_set = ScoreSet::from_records(renamed).unwrap();
        let renamed_assignment = assign_drc(&renamed_set, 0.025).unwrap();

        for category in DrcCategory::ALL {
            assert_eq!(
                assignment.count(category),
                renamed_assignment.count(category),
                "seed {seed}: category multiset changed under relabeling"
            );
        }
        // and the same physical subjects keep their categories
        for (subject, &category) in assignment.categories() {
            assert_eq!(
                renamed_assignment.category(&relabel(subject)),
                Some(category),
                "seed {seed}: {subject} moved category after relabeling"
            );
        }
    }
}

#[test]
fn lowering_a_goats_genuine_scores_keeps_it_a_goat() {
    let cfg = SynthConfig {
        n_subjects: 24,
        seed: 5,
        ..SynthConfig::default()
    };
    let (set, _) = generate(&cfg).unwrap();
    let assignment = assign_drc(&set, 0.025).unwrap();
    let goat = assignment
        .categories()
        .iter()
        .find(|(_, c)| **c == DrcCategory::Goat)
        .map(|(s, _)| s.clone())
        .expect("one goat is planted");

    for factor in [0.9, 0.5, 0.1] {
        let lowered: Vec<ScoreRecord> = set
            .records()
            .iter()
            .map(|r| {
                let mut rec = r.clone();
                if rec.kind() == ComparisonKind::Genuine && rec.subject_a == goat {
                    rec.raw_score *= factor;
                }
                rec
            })
            .collect();
        let lowered_set = ScoreSet::from_records(lowered).unwrap();
        let lowered_assignment = assign_drc(&lowered_set, 0.025).unwrap();
        assert_eq!(
            lowered_assignment.category(&goat),
            Some(DrcCategory::Goat),
            "goat lost its category after lowering genuine scores by {factor}"
        );
    }
}
