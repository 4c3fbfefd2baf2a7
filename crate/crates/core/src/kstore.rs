//! Knowledge store: a class taxonomy (subclass DAG), membership and
//! data-property assertions about individuals, and JSON snapshots.
//!
//! Membership is closed upward only: an individual asserted in `C` is entailed
//! in every ancestor of `C`, never in `C`'s subclasses.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qualify::QualifiedFact;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KStoreError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("subclass cycle through `{0}`")]
    Cycle(String),
    #[error("`{individual}` already has {property} = {existing}, refusing {value}")]
    ConflictingValue { individual: String, property: String, existing: f64, value: f64 },
    #[error("non-finite value for {property} on `{individual}`")]
    NonFinite { individual: String, property: String },
    #[error("snapshot decode error at line {line}, column {column}: {message}")]
    Decode { line: usize, column: usize, message: String },
}

/// Class labels plus an acyclic child → parents relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    classes: BTreeSet<String>,
    parents: BTreeMap<String, BTreeSet<String>>,
    /// Reflexive-transitive closure of `parents`.
    ancestors: BTreeMap<String, BTreeSet<String>>,
}

impl Taxonomy {
    /// Builds a taxonomy from declared classes and `(child, parent)` edges.
    pub fn new<C, E>(classes: C, edges: E) -> Result<Self, KStoreError>
    where
        C: IntoIterator,
        C::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let classes: BTreeSet<String> = classes.into_iter().map(Into::into).collect();
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (child, parent) in edges {
            for c in [&child, &parent] {
                if !classes.contains(c) {
                    return Err(KStoreError::UnknownClass(c.clone()));
                }
            }
            parents.entry(child).or_default().insert(parent);
        }

        // depth-first closure with grey/black marking for cycle detection
        let mut ancestors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut in_progress = BTreeSet::new();
        fn visit(
            c: &str,
            parents: &BTreeMap<String, BTreeSet<String>>,
            ancestors: &mut BTreeMap<String, BTreeSet<String>>,
            in_progress: &mut BTreeSet<String>,
        ) -> Result<(), KStoreError> {
            if ancestors.contains_key(c) {
                return Ok(());
            }
            if !in_progress.insert(c.to_string()) {
                return Err(KStoreError::Cycle(c.to_string()));
            }
            let mut set = BTreeSet::from([c.to_string()]);
            if let Some(ps) = parents.get(c) {
                for p in ps {
                    visit(p, parents, ancestors, in_progress)?;
                    set.extend(ancestors[p.as_str()].iter().cloned());
                }
            }
            in_progress.remove(c);
            ancestors.insert(c.to_string(), set);
            Ok(())
        }
        for c in &classes {
            visit(c, &parents, &mut ancestors, &mut in_progress)?;
        }
        Ok(Self { classes, parents, ancestors })
    }

    pub fn contains(&self, class: &str) -> bool {
        self.classes.contains(class)
    }

    pub fn classes(&self) -> &BTreeSet<String> {
        &self.classes
    }

    /// All `(child, parent)` edges, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parents
            .iter()
            .flat_map(|(c, ps)| ps.iter().map(move |p| (c.as_str(), p.as_str())))
    }

    pub fn parents(&self, class: &str) -> impl Iterator<Item = &str> {
        self.parents.get(class).into_iter().flatten().map(String::as_str)
    }

    /// `class` and every class above it.
    pub fn ancestors(&self, class: &str) -> Option<&BTreeSet<String>> {
        self.ancestors.get(class)
    }

    /// True when `sub` equals `sup` or reaches it through subclass edges.
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        self.ancestors.get(sub).is_some_and(|a| a.contains(sup))
    }

    /// `class` and every class below it.
    pub fn descendants(&self, class: &str) -> BTreeSet<&str> {
        self.ancestors
            .iter()
            .filter(|(_, a)| a.contains(class))
            .map(|(c, _)| c.as_str())
            .collect()
    }

    fn require(&self, class: &str) -> Result<(), KStoreError> {
        if self.contains(class) {
            Ok(())
        } else {
            Err(KStoreError::UnknownClass(class.to_string()))
        }
    }
}

/// Something that can be asserted into a [`FactBase`].
#[derive(Debug, Clone, PartialEq)]
pub enum Fact {
    Membership { individual: String, class: String },
    DataProperty { individual: String, property: String, value: f64 },
}

impl Fact {
    pub fn member(individual: impl Into<String>, class: impl Into<String>) -> Self {
        Fact::Membership { individual: individual.into(), class: class.into() }
    }

    pub fn property(individual: impl Into<String>, property: impl Into<String>, value: f64) -> Self {
        Fact::DataProperty { individual: individual.into(), property: property.into(), value }
    }

    /// The membership and the measured-value property carried by a qualified fact.
    pub fn from_qualified(q: &QualifiedFact) -> [Fact; 2] {
        [
            Fact::member(&q.individual, &q.class_label),
            Fact::property(&q.individual, q.source_feature.property(), q.value),
        ]
    }
}

/// Assertions about individuals at one instant. Cloning is cheap for the
/// shared taxonomy; [`FactBase::assert_fact`] returns a new value and leaves
/// the receiver untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct FactBase {
    taxonomy: Arc<Taxonomy>,
    memberships: BTreeSet<(String, String)>,
    data_properties: BTreeMap<(String, String), f64>,
    pub timestamp: f64,
}

impl FactBase {
    pub fn new(taxonomy: Arc<Taxonomy>, timestamp: f64) -> Self {
        Self { taxonomy, memberships: BTreeSet::new(), data_properties: BTreeMap::new(), timestamp }
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn taxonomy_arc(&self) -> &Arc<Taxonomy> {
        &self.taxonomy
    }

    /// Persistent update: a copy with `fact` added.
    pub fn assert_fact(&self, fact: &Fact) -> Result<FactBase, KStoreError> {
        let mut next = self.clone();
        next.insert(fact)?;
        Ok(next)
    }

    /// In-place update; returns whether anything changed.
    pub fn insert(&mut self, fact: &Fact) -> Result<bool, KStoreError> {
        match fact {
            Fact::Membership { individual, class } => {
                self.taxonomy.require(class)?;
                Ok(self.memberships.insert((individual.clone(), class.clone())))
            }
            Fact::DataProperty { individual, property, value } => {
                if !value.is_finite() {
                    return Err(KStoreError::NonFinite { individual: individual.clone(), property: property.clone() });
                }
                let key = (individual.clone(), property.clone());
                match self.data_properties.get(&key) {
                    Some(existing) if existing == value => Ok(false),
                    Some(existing) => Err(KStoreError::ConflictingValue {
                        individual: individual.clone(),
                        property: property.clone(),
                        existing: *existing,
                        value: *value,
                    }),
                    None => {
                        self.data_properties.insert(key, *value);
                        Ok(true)
                    }
                }
            }
        }
    }

    pub fn get_value(&self, individual: &str, property: &str) -> Option<f64> {
        self.data_properties.get(&(individual.to_string(), property.to_string())).copied()
    }

    /// Classes `individual` was asserted in (not closed).
    pub fn asserted_classes<'a>(&'a self, individual: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.memberships
            .range((individual.to_string(), String::new())..)
            .take_while(move |(i, _)| i == individual)
            .map(|(_, c)| c.as_str())
    }

    pub fn entails(&self, individual: &str, class: &str) -> Result<bool, KStoreError> {
        self.taxonomy.require(class)?;
        Ok(self.asserted_classes(individual).any(|c| self.taxonomy.is_subclass(c, class)))
    }

    /// Individuals entailed in `class`.
    pub fn query_class(&self, class: &str) -> Result<BTreeSet<String>, KStoreError> {
        self.taxonomy.require(class)?;
        Ok(self
            .memberships
            .iter()
            .filter(|(_, c)| self.taxonomy.is_subclass(c, class))
            .map(|(i, _)| i.clone())
            .collect())
    }

    /// Whether any individual is entailed in `class`.
    pub fn is_inhabited(&self, class: &str) -> Result<bool, KStoreError> {
        self.taxonomy.require(class)?;
        Ok(self.memberships.iter().any(|(_, c)| self.taxonomy.is_subclass(c, class)))
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        self.memberships
            .iter()
            .map(|(i, _)| i.clone())
            .chain(self.data_properties.keys().map(|(i, _)| i.clone()))
            .collect()
    }

    pub fn memberships(&self) -> &BTreeSet<(String, String)> {
        &self.memberships
    }

    pub fn data_properties(&self) -> &BTreeMap<(String, String), f64> {
        &self.data_properties
    }

    pub fn len(&self) -> usize {
        self.memberships.len() + self.data_properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub trace_id: String,
    pub window_start: Option<f64>,
    pub window_end: Option<f64>,
    pub engine_version: String,
    /// Instant the fact base describes.
    pub timestamp: f64,
}

/// Self-contained saved state: taxonomy, assertions and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeSnapshot {
    pub factbase: FactBase,
    pub meta: SnapshotMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Edge {
    child: String,
    parent: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyDoc {
    classes: Vec<String>,
    subclass_of: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MembershipDoc {
    individual: String,
    class: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropertyDoc {
    individual: String,
    property: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotDoc {
    taxonomy: TaxonomyDoc,
    memberships: Vec<MembershipDoc>,
    data_properties: Vec<PropertyDoc>,
    meta: SnapshotMeta,
}

impl KnowledgeSnapshot {
    pub fn new(factbase: FactBase, trace_id: impl Into<String>, window: Option<(f64, f64)>) -> Self {
        let meta = SnapshotMeta {
            trace_id: trace_id.into(),
            window_start: window.map(|w| w.0),
            window_end: window.map(|w| w.1),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: factbase.timestamp,
        };
        Self { factbase, meta }
    }

    /// Canonical JSON: object keys and every array sorted, trailing newline.
    pub fn save(&self) -> Vec<u8> {
        let fb = &self.factbase;
        let doc = SnapshotDoc {
            taxonomy: TaxonomyDoc {
                classes: fb.taxonomy.classes.iter().cloned().collect(),
                subclass_of: fb
                    .taxonomy
                    .edges()
                    .map(|(c, p)| Edge { child: c.into(), parent: p.into() })
                    .collect(),
            },
            memberships: fb
                .memberships
                .iter()
                .map(|(i, c)| MembershipDoc { individual: i.clone(), class: c.clone() })
                .collect(),
            data_properties: fb
                .data_properties
                .iter()
                .map(|((i, p), v)| PropertyDoc { individual: i.clone(), property: p.clone(), value: *v })
                .collect(),
            meta: SnapshotMeta { timestamp: fb.timestamp, ..self.meta.clone() },
        };
        // round-trip through Value so object keys come out sorted
        let value = serde_json::to_value(&doc).expect("snapshot serializes");
        let mut out = serde_json::to_vec_pretty(&value).expect("snapshot serializes");
        out.push(b'\n');
        out
    }

    pub fn load(bytes: &[u8]) -> Result<Self, KStoreError> {
        let doc: SnapshotDoc = serde_json::from_slice(bytes).map_err(|e| KStoreError::Decode {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let taxonomy = Taxonomy::new(
            doc.taxonomy.classes,
            doc.taxonomy.subclass_of.into_iter().map(|e| (e.child, e.parent)),
        )?;
        let mut fb = FactBase::new(Arc::new(taxonomy), doc.meta.timestamp);
        for m in doc.memberships {
            fb.insert(&Fact::Membership { individual: m.individual, class: m.class })?;
        }
        for p in doc.data_properties {
            fb.insert(&Fact::DataProperty { individual: p.individual, property: p.property, value: p.value })?;
        }
        Ok(Self { factbase: fb, meta: doc.meta })
    }
}

pub fn save_snapshot(s: &KnowledgeSnapshot) -> Vec<u8> {
    s.save()
}

pub fn load_snapshot(bytes: &[u8]) -> Result<KnowledgeSnapshot, KStoreError> {
    KnowledgeSnapshot::load(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(c: &str, p: &str) -> (String, String) {
        (c.to_string(), p.to_string())
    }

    fn swa_taxonomy() -> Arc<Taxonomy> {
        Arc::new(
            Taxonomy::new(
                ["Vehicle_Measure", "SWA_measure", "SWA_Extreme", "SWA_Small", "Other"],
                [
                    edge("SWA_measure", "Vehicle_Measure"),
                    edge("SWA_Extreme", "SWA_measure"),
                    edge("SWA_Small", "SWA_measure"),
                ],
            )
            .unwrap(),
        )
    }

    #[test]
    fn idempotent_assert() {
        let fb = FactBase::new(swa_taxonomy(), 0.0);
        let f = Fact::member("swa@0", "SWA_Extreme");
        let once = fb.assert_fact(&f).unwrap();
        let twice = once.assert_fact(&f).unwrap();
        assert_eq!(once.len(), 1);
        assert_eq!(once, twice);
        assert!(fb.is_empty(), "original value unchanged");
    }

    #[test]
    fn unknown_class_rejected() {
        let fb = FactBase::new(swa_taxonomy(), 0.0);
        assert_eq!(
            fb.assert_fact(&Fact::member("swa@0", "SWA_Gigantic")).unwrap_err(),
            KStoreError::UnknownClass("SWA_Gigantic".into())
        );
        assert!(fb.entails("x", "SWA_Gigantic").is_err());
        assert!(fb.query_class("SWA_Gigantic").is_err());
    }

    #[test]
    fn data_property_lookup() {
        let fb = FactBase::new(swa_taxonomy(), 0.0)
            .assert_fact(&Fact::property("swa@0", "hasSWAMeasured", 12.0))
            .unwrap();
        assert_eq!(fb.get_value("swa@0", "hasSWAMeasured"), Some(12.0));
        assert!(fb.assert_fact(&Fact::property("swa@0", "hasSWAMeasured", 12.0)).is_ok());
        assert!(matches!(
            fb.assert_fact(&Fact::property("swa@0", "hasSWAMeasured", 3.0)),
            Err(KStoreError::ConflictingValue { .. })
        ));
        assert!(fb.assert_fact(&Fact::property("swa@0", "p", f64::NAN)).is_err());
    }

    #[test]
    fn upward_entailment_only() {
        let fb = FactBase::new(swa_taxonomy(), 0.0)
            .assert_fact(&Fact::member("x", "SWA_Extreme"))
            .unwrap()
            .assert_fact(&Fact::member("y", "SWA_Small"))
            .unwrap()
            .assert_fact(&Fact::member("z", "SWA_measure"))
            .unwrap();
        assert!(fb.entails("x", "SWA_measure").unwrap());
        assert!(fb.entails("x", "Vehicle_Measure").unwrap());
        assert!(!fb.entails("x", "Other").unwrap());
        assert_eq!(
            fb.query_class("SWA_measure").unwrap(),
            BTreeSet::from(["x".to_string(), "y".into(), "z".into()])
        );
        assert!(!fb.query_class("SWA_Small").unwrap().contains("z"));
        let empty = FactBase::new(swa_taxonomy(), 0.0);
        assert!(empty.query_class("SWA_measure").unwrap().is_empty());
    }

    #[test]
    fn three_edge_chain() {
        let tax = Taxonomy::new(["A", "B", "C", "D"], [edge("A", "B"), edge("B", "C"), edge("C", "D")]).unwrap();
        let fb = FactBase::new(Arc::new(tax), 0.0).assert_fact(&Fact::member("i", "A")).unwrap();
        for class in ["A", "B", "C", "D"] {
            assert!(fb.entails("i", class).unwrap(), "{class}");
        }
        let fb = FactBase::new(fb.taxonomy_arc().clone(), 0.0).assert_fact(&Fact::member("j", "C")).unwrap();
        assert!(!fb.entails("j", "B").unwrap());
    }

    #[test]
    fn multiple_parents() {
        let tax = Taxonomy::new(["A", "B", "C"], [edge("A", "B"), edge("A", "C")]).unwrap();
        assert!(tax.is_subclass("A", "B") && tax.is_subclass("A", "C"));
        assert_eq!(tax.descendants("C"), BTreeSet::from(["A", "C"]));
    }

    #[test]
    fn cycles_and_undeclared_parents() {
        assert!(matches!(
            Taxonomy::new(["A", "B"], [edge("A", "B"), edge("B", "A")]),
            Err(KStoreError::Cycle(_))
        ));
        assert!(matches!(Taxonomy::new(["A"], [edge("A", "A")]), Err(KStoreError::Cycle(_))));
        assert_eq!(Taxonomy::new(["A"], [edge("A", "Z")]).unwrap_err(), KStoreError::UnknownClass("Z".into()));
    }

    fn sample_snapshot() -> KnowledgeSnapshot {
        let mut fb = FactBase::new(swa_taxonomy(), 42.5);
        for i in 0..10 {
            let class = if i % 2 == 0 { "SWA_Extreme" } else { "SWA_Small" };
            fb.insert(&Fact::member(format!("swa@{i}"), class)).unwrap();
            fb.insert(&Fact::property(format!("swa@{i}"), "hasSWAMeasured", i as f64 * 1.1)).unwrap();
        }
        KnowledgeSnapshot::new(fb, "trace-1", Some((0.0, 60.0)))
    }

    #[test]
    fn snapshot_round_trip_and_canonical() {
        let s = sample_snapshot();
        let bytes = s.save();
        assert_eq!(bytes, s.save());
        let back = load_snapshot(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(save_snapshot(&back), bytes);
        let text = String::from_utf8(bytes).unwrap();
        let keys: Vec<usize> = ["\"data_properties\"", "\"memberships\"", "\"meta\"", "\"taxonomy\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn truncated_snapshot() {
        let bytes = sample_snapshot().save();
        let err = load_snapshot(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(matches!(err, KStoreError::Decode { line, .. } if line > 0), "{err:?}");
    }

    #[test]
    fn snapshot_with_undeclared_membership() {
        let text = r#"{"taxonomy":{"classes":["A"],"subclass_of":[]},
            "memberships":[{"individual":"x","class":"B"}],"data_properties":[],
            "meta":{"trace_id":"t","window_start":null,"window_end":null,"engine_version":"0","timestamp":0.0}}"#;
        assert_eq!(load_snapshot(text.as_bytes()).unwrap_err(), KStoreError::UnknownClass("B".into()));
    }
}
