//! Driver-fatigue inference over driving and physiology traces.
//!
//! Traces are cut into sliding windows, reduced to features, qualified into
//! ontology classes by threshold bands, and classified by forward-chaining
//! rules into per-source fatigue levels that are then fused.

pub mod features;
pub mod kstore;
pub mod num;
pub mod ontology;
pub mod pipeline;
pub mod qualify;
pub mod rules;
pub mod signal;

pub use features::{extract_features, Feature, FeatureParams, FeatureVector};
pub use kstore::{Fact, FactBase, KnowledgeSnapshot, Taxonomy};
pub use qualify::{qualify, QualificationScheme, QualifiedFact};
pub use rules::{fuse, infer, parse_rules, read_fatigue, FatigueLevel, FatigueSource, RulePack};
pub use signal::{make_windows, parse_trace, SignalFrame, Window};

pub type ApEnParams64 = features::ApEnParams<f64>;
pub type Band64 = qualify::Band<f64>;
pub type BandSet64 = qualify::BandSet<f64>;
pub type FusionWeights64 = rules::FusionWeights<f64>;
pub type FusionCutoffs64 = rules::FusionCutoffs<f64>;
