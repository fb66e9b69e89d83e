//! Run configuration: defaults, JSON config file, flag overrides.
//!
//! Precedence is defaults < config file < command-line flags. Everything is
//! validated up front so a bad knob fails before any computation starts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use drcwatch_core::classify::{Classifier, FeatureMode, LoocvConfig, MarginHyper};
use drcwatch_core::landscape::Bandwidth;
use drcwatch_core::metrics::MetricId;
use drcwatch_core::risk::{CostProfile, RiskThresholds};
use drcwatch_core::scores::GateConfig;

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub percentile: f64,
    pub bins: usize,
    pub bandwidth: Bandwidth,
    pub metrics: Vec<MetricId>,
    pub costs: CostProfile,
    pub classifiers: Vec<Classifier>,
    pub features: FeatureMode,
    pub seed: u64,
    /// Where outputs go; not part of the config hash because it never
    /// affects a computed value.
    #[serde(skip)]
    pub out: PathBuf,
    pub thresholds: RiskThresholds,
    pub gate: GateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            percentile: 0.025,
            bins: 100,
            bandwidth: Bandwidth::Auto,
            metrics: MetricId::ALL.to_vec(),
            costs: CostProfile::default(),
            classifiers: Classifier::ALL.to_vec(),
            features: FeatureMode::PerKind,
            seed: 42,
            out: PathBuf::from("out"),
            thresholds: RiskThresholds::default(),
            gate: GateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile > 0.0 && self.percentile < 0.5) {
            bail!("percentile {} outside the open interval (0, 0.5)", self.percentile);
        }
        if self.bins < 2 {
            bail!("bins {} too small (minimum 2)", self.bins);
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                bail!("bandwidth {h} must be a positive finite number");
            }
        }
        if self.metrics.is_empty() {
            bail!("metric selection is empty");
        }
        if self.classifiers.is_empty() {
            bail!("classifier selection is empty");
        }
        self.thresholds.validate()?;
        if !(self.gate.min_mean_genuine.is_finite()
            && (0.0..=1.0).contains(&self.gate.min_mean_genuine))
        {
            bail!("gate floor {} outside [0, 1]", self.gate.min_mean_genuine);
        }
        Ok(())
    }

    pub fn hyper(&self) -> MarginHyper {
        MarginHyper {
            seed: self.seed,
            ..MarginHyper::default()
        }
    }

    pub fn loocv(&self) -> LoocvConfig {
        LoocvConfig {
            percentile: self.percentile,
            bins: self.bins,
            bandwidth: self.bandwidth,
            feature_mode: self.features,
            hyper: self.hyper(),
        }
    }

    /// The single metric a risk report is computed under: the first of the
    /// selection (the full selection still drives the metric grid export).
    pub fn report_metric(&self) -> MetricId {
        self.metrics[0]
    }

    /// Stable hash of the resolved configuration, carried in provenance
    /// headers so reruns are attributable to their exact knobs.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// On-disk config file; every field optional, flags still win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    percentile: Option<f64>,
    bins: Option<usize>,
    bandwidth: Option<Bandwidth>,
    metrics: Option<MetricsField>,
    costs: Option<String>,
    classifiers: Option<Vec<String>>,
    features: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    thresholds: Option<RiskThresholds>,
    gate: Option<GateConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MetricsField {
    Keyword(String),
    List(Vec<String>),
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricId>> {
    if text.trim() == "all" {
        return Ok(MetricId::ALL.to_vec());
    }
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| MetricId::parse(name).map_err(Into::into))
        .collect()
}

pub fn parse_classifiers(text: &str) -> Result<Vec<Classifier>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            Classifier::parse(name).with_context(|| format!("unknown classifier {name:?} (expected min or margin)"))
        })
        .collect()
}

pub fn parse_bandwidth(text: &str) -> Result<Bandwidth> {
    if text.trim() == "auto" {
        return Ok(Bandwidth::Auto);
    }
    let h: f64 = text
        .trim()
        .parse()
        .with_context(|| format!("bandwidth {text:?} is neither \"auto\" nor a number"))?;
    Ok(Bandwidth::Fixed(h))
}

pub fn parse_features(text: &str) -> Result<FeatureMode> {
    FeatureMode::parse(text.trim())
        .with_context(|| format!("unknown feature mode {text:?} (expected per-kind-3 or combined-6)"))
}

fn load_costs(spec: &str, base: Option<&Path>) -> Result<CostProfile> {
    if spec == "default" {
        return Ok(CostProfile::default());
    }
    let path = match base {
        Some(dir) if !Path::new(spec).is_absolute() => dir.join(spec),
        _ => PathBuf::from(spec),
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading cost profile {}", path.display()))?;
    CostProfile::from_json(&text).with_context(|| format!("parsing cost profile {}", path.display()))
}

/// Common command-line knobs, all optional; present values override the
/// config file which overrides the defaults.
#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON config file with the same knobs as the flags below
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Fraction flagged per tail, in (0, 0.5)
    #[arg(long)]
    pub percentile: Option<f64>,
    /// Histogram bins over the normalized score axis
    #[arg(long)]
    pub bins: Option<usize>,
    /// Kernel bandwidth: "auto" (rule of thumb) or a number
    #[arg(long)]
    pub bandwidth: Option<String>,
    /// Metric selection: "all" or a comma-separated list of metric names
    #[arg(long)]
    pub metrics: Option<String>,
    /// Cost profile: "default" or a path to a profile JSON
    #[arg(long)]
    pub costs: Option<String>,
    /// Classifier selection: comma-separated subset of min,margin
    #[arg(long)]
    pub classifiers: Option<String>,
    /// Feature layout: per-kind-3 or combined-6
    #[arg(long)]
    pub features: Option<String>,
    /// Seed for everything stochastic (training, synthesis)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    /// defaults < config file < flags, then validation.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();

        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let file: ConfigFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            let base = path.parent();
            if let Some(v) = file.percentile {
                cfg.percentile = v;
            }
            if let Some(v) = file.bins {
                cfg.bins = v;
            }
            if let Some(v) = file.bandwidth {
                cfg.bandwidth = v;
            }
            match file.metrics {
                Some(MetricsField::Keyword(word)) => cfg.metrics = parse_metrics(&word)?,
                Some(MetricsField::List(names)) => {
                    cfg.metrics = parse_metrics(&names.join(","))?;
                }
                None => {}
            }
            if let Some(spec) = file.costs {
                cfg.costs = load_costs(&spec, base)?;
            }
            if let Some(names) = file.classifiers {
                cfg.classifiers = parse_classifiers(&names.join(","))?;
            }
            if let Some(text) = file.features {
                cfg.features = parse_features(&text)?;
            }
            if let Some(v) = file.seed {
                cfg.seed = v;
            }
            if let Some(v) = file.out {
                cfg.out = v;
            }
            if let Some(v) = file.thresholds {
                cfg.thresholds = v;
            }
            if let Some(v) = file.gate {
                cfg.gate = v;
            }
        }

        if let Some(v) = self.percentile {
            cfg.percentile = v;
        }
        if let Some(v) = self.bins {
            cfg.bins = v;
        }
        if let Some(text) = &self.bandwidth {
            cfg.bandwidth = parse_bandwidth(text)?;
        }
        if let Some(text) = &self.metrics {
            cfg.metrics = parse_metrics(text)?;
        }
        if let Some(spec) = &self.costs {
            cfg.costs = load_costs(spec, None)?;
        }
        if let Some(text) = &self.classifiers {
            cfg.classifiers = parse_classifiers(text)?;
        }
        if let Some(text) = &self.features {
            cfg.features = parse_features(text)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }

        cfg.validate()?;
        Ok(cfg)
    }
}

/// Tool identity stamped into every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(cfg: &RunConfig) -> Self {
        Provenance {
            tool: "drcwatch".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
        }
    }

    /// Comment line placed at the top of CSV outputs.
    pub fn csv_header(&self) -> String {
        format!("# {} v{} config={}\n", self.tool, self.version, self.config_hash)
    }
}
