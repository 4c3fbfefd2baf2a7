//! End-to-end processing: windows, features, qualification, inference,
//! fusion, alerting and snapshots.

pub mod config;
mod decide;
pub mod generator;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use config::{AlertPolicy, FusionConfig, PipelineConfig};
pub use decide::{decide, AlertTracker};
pub use generator::{generate_scenario, Regime, ScenarioSpec, Segment, SpecError};

use crate::features::{eye_features, extract_features, FeatureVector};
use crate::kstore::{Fact, FactBase, KStoreError, KnowledgeSnapshot, Taxonomy};
use crate::ontology::fatigue_taxonomy;
use crate::qualify::{qualify_value, QualificationScheme, QualifiedFact, SchemeError};
use crate::rules::{
    fuse, infer, parse_rules, read_fatigue, table1, FatigueLevel, FatigueSource, FiredRule, FusionCutoffs,
    FusionWeights, Levels, RuleError, RulePack,
};
use crate::signal::{make_windows, SignalFrame, TraceError, Window};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("config: {0}")]
    Config(String),
    #[error("qualification scheme: {0}")]
    Scheme(#[from] SchemeError),
    #[error("rule pack: {0}")]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("ontology: {0}")]
    Ontology(KStoreError),
    #[error("window {index} at t={start}: {message}")]
    Window { index: usize, start: f64, message: String },
}

impl PipelineError {
    /// Whether the error stems from user-supplied input rather than a fault.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, PipelineError::Ontology(_) | PipelineError::Window { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowBounds {
    pub index: usize,
    pub start: f64,
    pub end: f64,
}

/// One record per window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatigueReport {
    pub window: WindowBounds,
    pub features: FeatureVector,
    pub facts: Vec<QualifiedFact>,
    pub fired_rules: Vec<FiredRule>,
    pub levels: Levels,
    pub overall: Option<FatigueLevel>,
    pub alert: bool,
    /// Some feature, fact or readout failed; the rest of the record stands.
    pub degraded: bool,
    pub issues: Vec<String>,
}

/// A configured pipeline with its scheme, taxonomy and rule pack loaded.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    scheme: QualificationScheme,
    taxonomy: Arc<Taxonomy>,
    pack: RulePack,
    weights: FusionWeights<f64>,
    cutoffs: FusionCutoffs<f64>,
}

fn read_file(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|e| PipelineError::Io { path: path.to_path_buf(), message: e.to_string() })
}

impl Pipeline {
    /// Loads the scheme and rule pack named by `cfg`, falling back to the
    /// built-in ones.
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        let scheme = match &cfg.scheme_path {
            Some(p) => QualificationScheme::load(&read_file(p)?)?,
            None => QualificationScheme::default(),
        };
        let pack_text = match &cfg.rule_pack_path {
            Some(p) => read_file(p)?,
            None if cfg.verbatim_table1 => table1::VERBATIM.as_bytes().to_vec(),
            None => table1::CORRECTED.as_bytes().to_vec(),
        };
        Self::from_parts(cfg, scheme, &pack_text)
    }

    pub fn from_parts(cfg: PipelineConfig, scheme: QualificationScheme, pack_text: &[u8]) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let taxonomy = Arc::new(fatigue_taxonomy(&scheme).map_err(PipelineError::Ontology)?);
        let pack = parse_rules(pack_text, &taxonomy)?;
        let weights = cfg.fusion.weights()?;
        let cutoffs = cfg.fusion.cutoffs()?;
        Ok(Self { cfg, scheme, taxonomy, pack, weights, cutoffs })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn taxonomy(&self) -> &Arc<Taxonomy> {
        &self.taxonomy
    }

    pub fn pack(&self) -> &RulePack {
        &self.pack
    }

    /// Processes `frames` window by window, handing each report and, on the
    /// snapshot cadence, the window's knowledge snapshot to `emit`.
    pub fn process<F>(&self, frames: &[SignalFrame], trace_id: &str, mut emit: F) -> Result<usize, PipelineError>
    where
        F: FnMut(FatigueReport, Option<KnowledgeSnapshot>) -> Result<(), PipelineError>,
    {
        let windows = make_windows(frames, self.cfg.window_length, self.cfg.stride)?;
        let mut tracker = AlertTracker::new(self.cfg.alert);
        for (index, w) in windows.iter().enumerate() {
            let (mut report, fb) = self.reason(index, w, frames)?;
            report.alert = tracker.push(report.overall);
            let snapshot = (index % self.cfg.snapshot_cadence == 0)
                .then(|| KnowledgeSnapshot::new(fb, trace_id, Some((w.start_t, w.end_t))));
            emit(report, snapshot)?;
        }
        Ok(windows.len())
    }

    /// Runs the whole trace, writing snapshots to the configured directory.
    pub fn run(&self, frames: &[SignalFrame], trace_id: &str) -> Result<Vec<FatigueReport>, PipelineError> {
        let dir = self.cfg.snapshot_dir.clone();
        let mut reports = Vec::new();
        self.process(frames, trace_id, |report, snapshot| {
            if let (Some(dir), Some(s)) = (&dir, snapshot) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| PipelineError::Io { path: dir.clone(), message: e.to_string() })?;
                let path = dir.join(snapshot_file_name(report.window.index));
                std::fs::write(&path, s.save()).map_err(|e| PipelineError::Io { path, message: e.to_string() })?;
            }
            reports.push(report);
            Ok(())
        })?;
        Ok(reports)
    }

    fn perclos(&self, w: &Window, frames: &[SignalFrame]) -> Option<f64> {
        let start = (w.end_t - self.cfg.perclos_window).max(0.0);
        let lo = frames.partition_point(|f| f.t < start);
        let hi = frames.partition_point(|f| f.t < w.end_t);
        let long = Window::new(start, w.end_t, frames[lo..hi].to_vec()).ok()?;
        eye_features(&long, &self.cfg.features).ok()?.features.perclos80
    }

    fn reason(&self, index: usize, w: &Window, frames: &[SignalFrame]) -> Result<(FatigueReport, FactBase), PipelineError> {
        let internal = |message: String| PipelineError::Window { index, start: w.start_t, message };
        let extracted = extract_features(w, &self.cfg.features);
        let mut features = extracted.features;
        let mut issues: Vec<String> = extracted.issues.iter().map(ToString::to_string).collect();
        if features.perclos80.is_some() {
            features.perclos80 = self.perclos(w, frames);
        }

        let mut facts = Vec::new();
        for (feature, value) in features.present() {
            match qualify_value(feature, value, (w.start_t, w.end_t), &self.scheme, &self.cfg.profile) {
                Ok(f) => facts.push(f),
                Err(e) => issues.push(e.to_string()),
            }
        }

        let mut fb = FactBase::new(self.taxonomy.clone(), w.end_t);
        for src in FatigueSource::SUB_SOURCES {
            fb.insert(&Fact::member(src.anchor_individual(w.start_t), src.anchor_class()))
                .map_err(|e| internal(e.to_string()))?;
        }
        for q in &facts {
            for fact in Fact::from_qualified(q) {
                fb.insert(&fact).map_err(|e| internal(e.to_string()))?;
            }
        }

        let inference = infer(&fb, &self.pack).map_err(|e| internal(e.to_string()))?;
        let levels = read_fatigue(&inference.factbase).unwrap_or_else(|e| {
            issues.push(e.to_string());
            Levels::new()
        });
        let overall = if levels.is_empty() {
            None
        } else {
            match fuse(&levels, &self.weights, &self.cutoffs) {
                Ok((level, _)) => Some(level),
                Err(e) => {
                    issues.push(e.to_string());
                    None
                }
            }
        };

        let report = FatigueReport {
            window: WindowBounds { index, start: w.start_t, end: w.end_t },
            features,
            facts,
            fired_rules: inference.fired,
            levels,
            overall,
            alert: false,
            degraded: !issues.is_empty(),
            issues,
        };
        Ok((report, inference.factbase))
    }
}

/// Snapshot file name for window `index`.
pub fn snapshot_file_name(index: usize) -> String {
    format!("window_{index:05}.snapshot.json")
}

/// Runs `frames` under `cfg`.
pub fn run(frames: &[SignalFrame], cfg: PipelineConfig) -> Result<Vec<FatigueReport>, PipelineError> {
    Pipeline::new(cfg)?.run(frames, "trace")
}

/// One JSON object per line.
pub fn report_line(r: &FatigueReport) -> String {
    let mut s = serde_json::to_string(r).expect("report serializes");
    s.push('\n');
    s
}

pub fn reports_jsonl(reports: &[FatigueReport]) -> String {
    reports.iter().map(report_line).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Channel;

    fn pipeline() -> Pipeline {
        Pipeline::new(PipelineConfig::default()).unwrap()
    }

    #[test]
    fn empty_trace_empty_report() {
        let mut calls = 0;
        let n = pipeline().process(&[], "t", |_, _| {
            calls += 1;
            Ok(())
        });
        assert_eq!(n.unwrap(), 0);
        assert_eq!(calls, 0);
    }

    #[test]
    fn alert_minute_is_low() {
        let frames = generate_scenario(&ScenarioSpec::single(Regime::Alert, 60.0, 1)).unwrap();
        let reports = pipeline().run(&frames, "t").unwrap();
        assert_eq!(reports.len(), 6);
        let first = &reports[0];
        assert_eq!(first.levels, Levels::from([(FatigueSource::SteeringWheel, FatigueLevel::Low), (FatigueSource::YawAngle, FatigueLevel::Low)]));
        assert_eq!(first.overall, Some(FatigueLevel::Low));
        assert!(!first.degraded, "{:?}", first.issues);
        assert!(reports.iter().all(|r| !r.alert));
    }

    #[test]
    fn missing_channel_degrades() {
        let mut frames = generate_scenario(&ScenarioSpec::single(Regime::Alert, 60.0, 1)).unwrap();
        for f in &mut frames {
            *f.slot(Channel::Swa) = None;
        }
        let reports = pipeline().run(&frames, "t").unwrap();
        let r = &reports[0];
        assert!(r.degraded);
        assert!(r.features.mean_swa_abs.is_none());
        assert!(!r.levels.contains_key(&FatigueSource::SteeringWheel));
        assert_eq!(r.overall, Some(FatigueLevel::Low));
    }

    #[test]
    fn report_keys() {
        let frames = generate_scenario(&ScenarioSpec::single(Regime::Alert, 20.0, 1)).unwrap();
        let reports = pipeline().run(&frames, "t").unwrap();
        let v: serde_json::Value = serde_json::from_str(&report_line(&reports[0])).unwrap();
        for key in ["window", "features", "facts", "fired_rules", "levels", "overall", "alert"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn snapshot_cadence() {
        let frames = generate_scenario(&ScenarioSpec::single(Regime::Alert, 60.0, 1)).unwrap();
        let cfg = PipelineConfig { snapshot_cadence: 4, ..PipelineConfig::default() };
        let mut with = Vec::new();
        Pipeline::new(cfg)
            .unwrap()
            .process(&frames, "t", |r, s| {
                if let Some(s) = s {
                    assert_eq!(s.meta.window_start, Some(r.window.start));
                    with.push(r.window.index);
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(with, vec![0, 4]);
    }
}
