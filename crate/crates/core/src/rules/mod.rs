//! Rule language, forward-chaining inference, fatigue readout and fusion.

mod engine;
mod fusion;
mod parser;
pub mod table1;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kstore::Taxonomy;

pub use engine::{infer, infer_with, read_fatigue, AmbiguityError, EvalOrder, FiredRule, Inference};
pub use fusion::{fuse, FusionCutoffs, FusionError, FusionWeights};
pub use parser::parse_pack;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("line {line}, column {col}: expected {expected}, found {found}")]
    Syntax { line: usize, col: usize, expected: String, found: String },
    #[error("line {line}, column {col}: rule `{rule}` names unknown class `{class}`")]
    UnknownClass { rule: String, class: String, line: usize, col: usize },
    #[error("line {line}, column {col}: duplicate rule name `{name}`")]
    DuplicateRuleName { name: String, line: usize, col: usize },
    #[error("line {line}, column {col}: rule `{rule}`: {message}")]
    Anchor { rule: String, line: usize, col: usize, message: String },
    #[error("rule text is not UTF-8 (byte {offset})")]
    Encoding { offset: usize },
}

/// `rule NAME: when instance(?x, A), exists(B).. then classify(?x, C)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub anchor_var: String,
    pub anchor_class: String,
    /// Classes that must each be inhabited by some individual.
    pub requires: Vec<String>,
    pub conclusion: String,
    /// Position of the rule name.
    pub line: usize,
    pub col: usize,
    /// Every class reference with its position, in source order.
    pub class_refs: Vec<(String, usize, usize)>,
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        anchor_class: impl Into<String>,
        requires: impl IntoIterator<Item = impl Into<String>>,
        conclusion: impl Into<String>,
    ) -> Self {
        let anchor_class = anchor_class.into();
        let requires: Vec<String> = requires.into_iter().map(Into::into).collect();
        let conclusion = conclusion.into();
        let class_refs = std::iter::once(&anchor_class)
            .chain(&requires)
            .chain(std::iter::once(&conclusion))
            .map(|c| (c.clone(), 0, 0))
            .collect();
        Rule {
            name: name.into(),
            anchor_var: "x".into(),
            anchor_class,
            requires,
            conclusion,
            line: 0,
            col: 0,
            class_refs,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}:\n  when instance(?{}, {})", self.name, self.anchor_var, self.anchor_class)?;
        for c in &self.requires {
            write!(f, ",\n       exists({c})")?;
        }
        write!(f, "\n  then classify(?{}, {})", self.anchor_var, self.conclusion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RulePack {
    rules: Vec<Rule>,
}

impl RulePack {
    /// Builds a pack from rules, rejecting duplicate names.
    pub fn new(rules: Vec<Rule>) -> Result<Self, RuleError> {
        let mut seen = BTreeMap::new();
        for r in &rules {
            if seen.insert(r.name.as_str(), ()).is_some() {
                return Err(RuleError::DuplicateRuleName { name: r.name.clone(), line: r.line, col: r.col });
            }
        }
        Ok(RulePack { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Checks that every class a rule names is declared.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), RuleError> {
        for r in &self.rules {
            if let Some((class, line, col)) = r.class_refs.iter().find(|(c, _, _)| !taxonomy.contains(c)) {
                return Err(RuleError::UnknownClass {
                    rule: r.name.clone(),
                    class: class.clone(),
                    line: *line,
                    col: *col,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for RulePack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Parses UTF-8 rule text and validates it against `taxonomy`.
pub fn parse_rules(text: &[u8], taxonomy: &Taxonomy) -> Result<RulePack, RuleError> {
    let text = std::str::from_utf8(text).map_err(|e| RuleError::Encoding { offset: e.valid_up_to() })?;
    let pack = parse_pack(text)?;
    pack.validate(taxonomy)?;
    Ok(pack)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FatigueLevel {
    Low = 0,
    Medium = 1,
    High = 2,
}

impl FatigueLevel {
    pub const ALL: [FatigueLevel; 3] = [FatigueLevel::Low, FatigueLevel::Medium, FatigueLevel::High];

    pub fn encode(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            FatigueLevel::Low => "Low",
            FatigueLevel::Medium => "Medium",
            FatigueLevel::High => "High",
        }
    }
}

impl fmt::Display for FatigueLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FatigueLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        FatigueLevel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown fatigue level `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FatigueSource {
    SteeringWheel,
    YawAngle,
    Overall,
}

impl FatigueSource {
    /// Sources that rules classify directly.
    pub const SUB_SOURCES: [FatigueSource; 2] = [FatigueSource::SteeringWheel, FatigueSource::YawAngle];

    pub fn name(self) -> &'static str {
        match self {
            FatigueSource::SteeringWheel => "steering_wheel",
            FatigueSource::YawAngle => "yaw_angle",
            FatigueSource::Overall => "overall",
        }
    }

    /// Class of the individual a source's rules classify.
    pub fn anchor_class(self) -> &'static str {
        match self {
            FatigueSource::SteeringWheel => "SteeringWheelMeasurementFatigue",
            FatigueSource::YawAngle => "YawAngleMeasurementFatigue",
            FatigueSource::Overall => "OverallFatigue",
        }
    }

    /// Level class, spelled as in the rule table.
    pub fn level_class(self, level: FatigueLevel) -> String {
        let stem = match self {
            FatigueSource::SteeringWheel => "SteeringWheelMeasurmentFatigue",
            FatigueSource::YawAngle => "YawAngleMeasurmentFatigue",
            FatigueSource::Overall => "OverallFatigue",
        };
        format!("{stem}_{level}")
    }

    /// Anchor individual for a window starting at `window_start`.
    pub fn anchor_individual(self, window_start: f64) -> String {
        let short = match self {
            FatigueSource::SteeringWheel => "steering",
            FatigueSource::YawAngle => "yaw",
            FatigueSource::Overall => "overall",
        };
        format!("{short}@{window_start}")
    }
}

impl fmt::Display for FatigueSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-source fatigue levels.
pub type Levels = BTreeMap<FatigueSource, FatigueLevel>;

#[cfg(test)]
mod tests {
    use super::*;

    fn tax(classes: &[&str]) -> Taxonomy {
        Taxonomy::new(classes.iter().copied(), Vec::new()).unwrap()
    }

    #[test]
    fn validate_reports_first_unknown() {
        let text = "rule r1: when instance(?f, A), exists(B) then classify(?f, C)";
        assert_eq!(parse_rules(text.as_bytes(), &tax(&["A", "B", "C"])).unwrap().len(), 1);
        assert_eq!(
            parse_rules(text.as_bytes(), &tax(&["A", "C"])).unwrap_err(),
            RuleError::UnknownClass { rule: "r1".into(), class: "B".into(), line: 1, col: 39 }
        );
    }

    #[test]
    fn non_utf8() {
        assert_eq!(parse_rules(b"rule \xff", &tax(&[])).unwrap_err(), RuleError::Encoding { offset: 5 });
    }

    #[test]
    fn display_round_trips() {
        let pack = parse_pack(table1::CORRECTED).unwrap();
        let again = parse_pack(&pack.to_string()).unwrap();
        let strip = |p: &RulePack| -> Vec<_> {
            p.rules().iter().map(|r| (r.name.clone(), r.anchor_class.clone(), r.requires.clone(), r.conclusion.clone())).collect()
        };
        assert_eq!(strip(&pack), strip(&again));
    }

    #[test]
    fn level_encoding() {
        assert!(FatigueLevel::Low < FatigueLevel::Medium && FatigueLevel::Medium < FatigueLevel::High);
        assert_eq!(FatigueLevel::ALL.map(FatigueLevel::encode), [0, 1, 2]);
        assert_eq!("medium".parse::<FatigueLevel>().unwrap(), FatigueLevel::Medium);
        assert_eq!(
            FatigueSource::YawAngle.level_class(FatigueLevel::High),
            "YawAngleMeasurmentFatigue_High"
        );
    }

    #[test]
    fn pack_new_rejects_duplicates() {
        let r = Rule::new("a", "A", ["B"], "C");
        assert!(matches!(RulePack::new(vec![r.clone(), r]), Err(RuleError::DuplicateRuleName { .. })));
    }
}
