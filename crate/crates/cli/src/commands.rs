//! The six subcommands: landscape, assess, evaluate, synth, monitor,
//! plotdata. Every command is deterministic given (inputs, config, seed),
//! never mutates its inputs, and exits nonzero unless all requested outputs
//! were produced.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use drcwatch_core::classify::{sensitivity_table, SensitivityTable, TableConfig};
use drcwatch_core::landscape::{
    assign_drc, assign_drc_excluding, build_distribution, build_landscape, mutate_watchlist,
    DrcCategory, Landscape, LandscapeDoc, WatchlistOp,
};
use drcwatch_core::metrics::dissimilarity_vector;
use drcwatch_core::risk::{assess_traveler, AssessConfig, ClassifierSet, RiskReport};
use drcwatch_core::scores::{
    ComparisonKind, ComparisonQuality, GateVerdict, ScoreRow, ScoreSet, SubjectId,
};
use drcwatch_core::synth::{generate, SynthConfig};

use crate::config::{Provenance, RunConfig};

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating output directory {}", cfg.out.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_scores(path: &Path) -> Result<ScoreSet> {
    ScoreSet::from_csv_path(path).with_context(|| format!("ingesting {}", path.display()))
}

#[derive(Serialize)]
struct ProvenancedLandscape {
    provenance: Provenance,
    #[serde(flatten)]
    doc: LandscapeDoc,
}

/// Builds the landscape and writes `landscape.json` plus `assignment.csv`,
/// printing the category proportions.
pub fn cmd_landscape(scores_path: &Path, cfg: &RunConfig) -> Result<()> {
    let set = load_scores(scores_path)?;
    let assignment = assign_drc(&set, cfg.percentile)?;
    let landscape = build_landscape(&set, &assignment, None, cfg.bins, cfg.bandwidth)?;
    ensure_out_dir(cfg)?;
    let provenance = Provenance::new(cfg);

    let doc = ProvenancedLandscape {
        provenance: provenance.clone(),
        doc: landscape.to_doc(),
    };
    write_text(
        &cfg.out.join("landscape.json"),
        &serde_json::to_string_pretty(&doc)?,
    )?;
    write_text(
        &cfg.out.join("assignment.csv"),
        &format!("{}{}", provenance.csv_header(), assignment.to_csv()),
    )?;

    println!("subjects: {} ({} rankable)", assignment.len(), assignment.eligible_count());
    println!(
        "flagged per tail: {} at percentile {}",
        assignment.flagged_count(),
        cfg.percentile
    );
    println!("category,proportion");
    for category in DrcCategory::ALL {
        println!("{category},{:.4}", landscape.proportions()[&category]);
    }
    if !assignment.warnings().is_empty() {
        println!(
            "warning: {} subjects lack genuine or impostor scores and default to sheep",
            assignment.warnings().len()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ProvenancedReport {
    provenance: Provenance,
    #[serde(flatten)]
    report: RiskReport,
}

/// Assesses one traveler against the landscape built without them, writing
/// the risk report and the per-metric dissimilarity grid.
pub fn cmd_assess(scores_path: &Path, subject: &str, cfg: &RunConfig) -> Result<()> {
    let set = load_scores(scores_path)?;
    let subject = SubjectId::new(subject)?;
    if !set.contains(&subject) {
        bail!("unknown subject {subject}");
    }
    let assignment = assign_drc_excluding(&set, cfg.percentile, Some(&subject))?;
    let landscape = build_landscape(&set, &assignment, Some(&subject), cfg.bins, cfg.bandwidth)?;

    let assess_cfg = AssessConfig {
        classifiers: ClassifierSet::from_classifiers(&cfg.classifiers),
        thresholds: cfg.thresholds,
        hyper: cfg.hyper(),
    };
    let report = assess_traveler(
        &subject,
        &set,
        &landscape,
        cfg.report_metric(),
        &cfg.costs,
        &assess_cfg,
    )?;

    ensure_out_dir(cfg)?;
    let provenance = Provenance::new(cfg);
    write_text(
        &cfg.out.join(format!("risk_{subject}.json")),
        &serde_json::to_string_pretty(&ProvenancedReport {
            provenance: provenance.clone(),
            report: report.clone(),
        })?,
    )?;
    write_text(
        &cfg.out.join(format!("metric_grid_{subject}.csv")),
        &metric_grid_csv(&subject, &set, &landscape, cfg, &provenance)?,
    )?;

    println!("subject,avg_risk,level,variant_set,landscape_version");
    println!("{}", report.summary_line(&assess_cfg.classifiers));
    Ok(())
}

/// Dissimilarity grid for the assessed traveler:
/// `metric,quality,kind,goat,wolf_lamb,sheep` over every populated cell.
fn metric_grid_csv(
    subject: &SubjectId,
    set: &ScoreSet,
    landscape: &Landscape,
    cfg: &RunConfig,
    provenance: &Provenance,
) -> Result<String> {
    let slices = set.subject_slices(subject)?;
    let mut out = provenance.csv_header();
    out.push_str("metric,quality,kind,goat,wolf_lamb,sheep\n");
    for &metric in &cfg.metrics {
        for quality in ComparisonQuality::ALL {
            for kind in ComparisonKind::ALL {
                let scores = slices.get(kind, quality);
                if scores.is_empty() {
                    continue;
                }
                let populated = DrcCategory::ALL
                    .iter()
                    .all(|&c| landscape.cell(c, quality, kind).is_populated());
                if !populated {
                    continue;
                }
                let h = cfg.bandwidth.resolve(scores);
                let traveler = build_distribution(scores, cfg.bins, h)?;
                let v = dissimilarity_vector(metric, &traveler, landscape, quality, kind)?;
                out.push_str(&format!(
                    "{metric},{quality},{kind},{:.6},{:.6},{:.6}\n",
                    v.goat, v.wolf_lamb, v.sheep
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ProvenancedTable {
    provenance: Provenance,
    #[serde(flatten)]
    table: SensitivityTable,
}

/// Runs the leave-one-out sensitivity grid and writes it as CSV and JSON.
pub fn cmd_evaluate(scores_path: &Path, cfg: &RunConfig) -> Result<()> {
    let set = load_scores(scores_path)?;
    let table_cfg = TableConfig {
        loocv: cfg.loocv(),
        metrics: cfg.metrics.clone(),
        classifiers: cfg.classifiers.clone(),
    };
    let table = sensitivity_table(&set, &table_cfg)?;
    ensure_out_dir(cfg)?;
    let provenance = Provenance::new(cfg);
    write_text(
        &cfg.out.join("sensitivity.csv"),
        &format!("{}{}", provenance.csv_header(), table.to_csv()),
    )?;
    write_text(
        &cfg.out.join("sensitivity.json"),
        &serde_json::to_string_pretty(&ProvenancedTable {
            provenance,
            table: table.clone(),
        })?,
    )?;

    let filled = table.cells.iter().filter(|c| c.sensitivity.is_some()).count();
    println!(
        "sensitivity grid: {} cells, {} evaluated, {} empty",
        table.cells.len(),
        filled,
        table.cells.len() - filled
    );
    Ok(())
}

/// Synthesis knobs not shared with the common config.
#[derive(Debug, Clone, clap::Args)]
pub struct SynthArgs {
    /// Number of enrolled subjects
    #[arg(long, default_value_t = 200)]
    pub n_subjects: usize,
    /// Fraction of planted goats
    #[arg(long, default_value_t = 0.025)]
    pub goat_frac: f64,
    /// Fraction of planted wolves/lambs
    #[arg(long, default_value_t = 0.025)]
    pub wolf_frac: f64,
    /// Samples per subject per acquisition tier
    #[arg(long, default_value_t = 3)]
    pub samples_per_tier: usize,
}

/// Generates a synthetic score set with planted categories, writing
/// `scores.csv` and the `truth.json` sidecar.
pub fn cmd_synth(args: &SynthArgs, cfg: &RunConfig) -> Result<()> {
    let synth_cfg = SynthConfig {
        n_subjects: args.n_subjects,
        goat_frac: args.goat_frac,
        wolf_frac: args.wolf_frac,
        samples_per_tier: args.samples_per_tier,
        seed: cfg.seed,
        ..SynthConfig::default()
    };
    let (set, truth) = generate(&synth_cfg)?;
    ensure_out_dir(cfg)?;
    let provenance = Provenance::new(cfg);

    let mut csv = Vec::new();
    set.write_csv(&mut csv)?;
    let mut text = provenance.csv_header();
    text.push_str(std::str::from_utf8(&csv).expect("csv output is utf-8"));
    write_text(&cfg.out.join("scores.csv"), &text)?;
    write_text(&cfg.out.join("truth.json"), &truth.to_sidecar_json())?;

    println!(
        "generated {} subjects, {} records (seed {})",
        args.n_subjects,
        set.len(),
        cfg.seed
    );
    for category in DrcCategory::ALL {
        println!("planted {category}: {}", truth.count(category));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum MutationOp {
    Add { records: Vec<ScoreRow> },
    Replace { subject: String, records: Vec<ScoreRow> },
    Remove { subject: String },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MutationSpec {
    Wrapped { ops: Vec<MutationOp> },
    Bare(Vec<MutationOp>),
}

impl MutationOp {
    fn to_watchlist_op(&self) -> Result<WatchlistOp> {
        let convert = |rows: &[ScoreRow]| {
            rows.iter()
                .enumerate()
                .map(|(i, row)| row.to_record(i as u64 + 1).map_err(Into::into))
                .collect::<Result<Vec<_>>>()
        };
        Ok(match self {
            MutationOp::Add { records } => WatchlistOp::Add(convert(records)?),
            MutationOp::Replace { subject, records } => {
                WatchlistOp::Replace(SubjectId::new(subject.clone())?, convert(records)?)
            }
            MutationOp::Remove { subject } => WatchlistOp::Remove(SubjectId::new(subject.clone())?),
        })
    }
}

#[derive(Serialize)]
struct CellDelta {
    category: DrcCategory,
    quality: ComparisonQuality,
    kind: ComparisonKind,
    l1_delta: f64,
    sample_count_before: usize,
    sample_count_after: usize,
}

#[derive(Serialize)]
struct CategoryChange {
    subject: SubjectId,
    before: Option<DrcCategory>,
    after: Option<DrcCategory>,
}

#[derive(Serialize)]
struct GateFlag {
    subject: SubjectId,
    reason: String,
    genuine_count: usize,
    mean_genuine: Option<f64>,
}

#[derive(Serialize)]
struct MonitorReport {
    provenance: Provenance,
    before_version: u64,
    after_version: u64,
    subjects_before: usize,
    subjects_after: usize,
    flagged_before: usize,
    flagged_after: usize,
    cell_deltas: Vec<CellDelta>,
    category_changes: Vec<CategoryChange>,
    gate_flags: Vec<GateFlag>,
}

/// Applies a mutation spec, fully recomputes the landscape, and reports the
/// per-cell drift, category changes, and post-update quality-gate flags.
pub fn cmd_monitor(scores_path: &Path, mutation_path: &Path, cfg: &RunConfig) -> Result<()> {
    let set = load_scores(scores_path)?;
    let assignment = assign_drc(&set, cfg.percentile)?;
    let before = build_landscape(&set, &assignment, None, cfg.bins, cfg.bandwidth)?;

    let spec_text = fs::read_to_string(mutation_path)
        .with_context(|| format!("reading mutation spec {}", mutation_path.display()))?;
    let spec: MutationSpec = serde_json::from_str(&spec_text)
        .with_context(|| format!("parsing mutation spec {}", mutation_path.display()))?;
    let ops = match spec {
        MutationSpec::Wrapped { ops } => ops,
        MutationSpec::Bare(ops) => ops,
    };
    if ops.is_empty() {
        bail!("mutation spec contains no operations");
    }

    let mut current_set = set;
    let mut current = before.clone();
    for op in &ops {
        let (next_set, next) = mutate_watchlist(&current, &current_set, &op.to_watchlist_op()?)?;
        current_set = next_set;
        current = next;
    }

    let mut cell_deltas = Vec::new();
    for (key, cell) in before.cells() {
        let after_cell = &current.cells()[key];
        let l1: f64 = cell
            .mass()
            .iter()
            .zip(after_cell.mass())
            .map(|(a, b)| (a - b).abs())
            .sum();
        cell_deltas.push(CellDelta {
            category: key.0,
            quality: key.1,
            kind: key.2,
            l1_delta: l1,
            sample_count_before: cell.sample_count(),
            sample_count_after: after_cell.sample_count(),
        });
    }

    let mut category_changes = Vec::new();
    let mut subjects: BTreeMap<&SubjectId, ()> = BTreeMap::new();
    for s in before.assignment().categories().keys() {
        subjects.insert(s, ());
    }
    for s in current.assignment().categories().keys() {
        subjects.insert(s, ());
    }
    for subject in subjects.keys() {
        let was = before.assignment().category(subject);
        let now = current.assignment().category(subject);
        if was != now {
            category_changes.push(CategoryChange {
                subject: (*subject).clone(),
                before: was,
                after: now,
            });
        }
    }

    // post-update quality-control pass over every remaining entry
    let mut gate_flags = Vec::new();
    for subject in current_set.subjects() {
        if let GateVerdict::Flag { why, stats } = current_set.quality_gate(subject, &cfg.gate)? {
            gate_flags.push(GateFlag {
                subject: subject.clone(),
                reason: why.to_string(),
                genuine_count: stats.genuine_count,
                mean_genuine: stats.mean_genuine,
            });
        }
    }

    ensure_out_dir(cfg)?;
    let report = MonitorReport {
        provenance: Provenance::new(cfg),
        before_version: before.version(),
        after_version: current.version(),
        subjects_before: before.assignment().len(),
        subjects_after: current.assignment().len(),
        flagged_before: before.assignment().flagged_count(),
        flagged_after: current.assignment().flagged_count(),
        cell_deltas,
        category_changes,
        gate_flags,
    };
    write_text(
        &cfg.out.join("monitor.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;

    println!(
        "landscape version {} -> {} ({} ops)",
        report.before_version,
        report.after_version,
        ops.len()
    );
    println!(
        "subjects {} -> {}, flagged per tail {} -> {}",
        report.subjects_before, report.subjects_after, report.flagged_before, report.flagged_after
    );
    let max_delta = report
        .cell_deltas
        .iter()
        .map(|d| d.l1_delta)
        .fold(0.0_f64, f64::max);
    println!(
        "category changes: {}, max cell L1 delta: {max_delta:.6}",
        report.category_changes.len()
    );
    println!("quality gate flags: {}", report.gate_flags.len());
    Ok(())
}

/// Flattens a landscape JSON into plot-ready rows:
/// `category,quality,kind,bin_center,mass`.
pub fn cmd_plotdata(landscape_path: &Path, cfg: &RunConfig) -> Result<()> {
    let text = fs::read_to_string(landscape_path)
        .with_context(|| format!("reading landscape {}", landscape_path.display()))?;
    let doc: LandscapeDoc = serde_json::from_str(&text)
        .with_context(|| format!("parsing landscape {}", landscape_path.display()))?;
    if doc.bin_edges.len() != doc.bins + 1 {
        bail!(
            "malformed landscape: {} bin edges for {} bins",
            doc.bin_edges.len(),
            doc.bins
        );
    }

    ensure_out_dir(cfg)?;
    let provenance = Provenance::new(cfg);
    let mut out = provenance.csv_header();
    out.push_str(&format!("# landscape version {}\n", doc.version));
    out.push_str("category,quality,kind,bin_center,mass\n");
    let mut rows = 0usize;
    for cell in &doc.cells {
        if cell.sample_count == 0 {
            out.push_str(&format!(
                "# empty cell: {},{},{}\n",
                cell.category, cell.quality, cell.kind
            ));
            continue;
        }
        for (i, mass) in cell.mass.iter().enumerate() {
            let center = (doc.bin_edges[i] + doc.bin_edges[i + 1]) / 2.0;
            out.push_str(&format!(
                "{},{},{},{center:.6},{mass:.9}\n",
                cell.category, cell.quality, cell.kind
            ));
            rows += 1;
        }
    }
    let path: PathBuf = cfg.out.join("plotdata.csv");
    write_text(&path, &out)?;
    println!("{rows} data rows written to {}", path.display());
    Ok(())
}
