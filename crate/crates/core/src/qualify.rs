//! Threshold bands that turn numeric features into qualitative classes.
//!
//! Bands are lower-inclusive and upper-exclusive. Within one feature the
//! bands must tile `[0, +inf)` without gaps or overlaps (a band may also reach
//! down to `-inf`). A label may appear in more than one band.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::features::{Feature, FeatureVector};
use crate::num::Scalar;
use crate::signal::{DriverProfile, Sex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("{feature}: bands overlap on [{lower}, {upper})")]
    Overlap { feature: String, lower: f64, upper: f64 },
    #[error("{feature}: no band covers [{lower}, {upper})")]
    Gap { feature: String, lower: f64, upper: f64 },
    #[error("{feature}: band `{label}` is empty or malformed ([{lower}, {upper}))")]
    EmptyBand { feature: String, label: String, lower: f64, upper: f64 },
    #[error("{feature}: invalid class label `{label}`")]
    InvalidLabel { feature: String, label: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("scheme config: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualifyError {
    #[error("feature {0} has no band set")]
    UnboundFeature(Feature),
    #[error("feature {feature} value {value} falls outside every band")]
    Uncovered { feature: Feature, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Band<T = f64> {
    pub label: String,
    /// Inclusive; may be `-inf`.
    pub lower: T,
    /// Exclusive; may be `+inf`.
    pub upper: T,
}

impl<T: Scalar> Band<T> {
    pub fn new(label: impl Into<String>, lower: T, upper: T) -> Self {
        Self { label: label.into(), lower, upper }
    }

    pub fn contains(&self, v: T) -> bool {
        v >= self.lower && v < self.upper
    }
}

/// Ordered, validated bands for one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet<T = f64> {
    bands: Vec<Band<T>>,
}

pub(crate) fn valid_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl<T: Scalar> BandSet<T> {
    /// Sorts and validates `bands`; `feature` only labels errors.
    pub fn new(feature: &str, mut bands: Vec<Band<T>>) -> Result<Self, SchemeError> {
        let f64_of = |x: T| x.to_f64().unwrap_or(f64::NAN);
        let name = || feature.to_string();
        for b in &bands {
            if !valid_label(&b.label) {
                return Err(SchemeError::InvalidLabel { feature: name(), label: b.label.clone() });
            }
            if b.lower.is_nan() || b.upper.is_nan() || b.lower >= b.upper {
                return Err(SchemeError::EmptyBand {
                    feature: name(),
                    label: b.label.clone(),
                    lower: f64_of(b.lower),
                    upper: f64_of(b.upper),
                });
            }
        }
        if bands.is_empty() {
            return Err(SchemeError::Gap { feature: name(), lower: 0.0, upper: f64::INFINITY });
        }
        bands.sort_by(|a, b| a.lower.partial_cmp(&b.lower).expect("not NaN"));
        if bands[0].lower > T::zero() {
            return Err(SchemeError::Gap { feature: name(), lower: 0.0, upper: f64_of(bands[0].lower) });
        }
        for pair in bands.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.lower > a.upper {
                return Err(SchemeError::Gap { feature: name(), lower: f64_of(a.upper), upper: f64_of(b.lower) });
            }
            if b.lower < a.upper {
                return Err(SchemeError::Overlap {
                    feature: name(),
                    lower: f64_of(b.lower),
                    upper: f64_of(a.upper.min(b.upper)),
                });
            }
        }
        let last = &bands[bands.len() - 1];
        if last.upper != T::infinity() {
            return Err(SchemeError::Gap { feature: name(), lower: f64_of(last.upper), upper: f64::INFINITY });
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[Band<T>] {
        &self.bands
    }

    /// The unique band containing `v`.
    pub fn classify(&self, v: T) -> Option<&Band<T>> {
        let idx = self.bands.partition_point(|b| b.lower <= v);
        idx.checked_sub(1).map(|i| &self.bands[i]).filter(|b| b.contains(v))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.bands.iter().map(|b| b.label.as_str())
    }
}

/// A class-membership assertion derived from one feature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualifiedFact {
    pub individual: String,
    pub class_label: String,
    pub value: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub source_feature: Feature,
}

/// Band sets for every feature, with optional per-sex overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct QualificationScheme {
    sets: BTreeMap<Feature, BandSet>,
    by_sex: BTreeMap<Sex, BTreeMap<Feature, BandSet>>,
}

fn bands(feature: Feature, spec: &[(&str, f64, f64)]) -> BandSet {
    BandSet::new(
        feature.name(),
        spec.iter().map(|&(l, lo, hi)| Band::new(l, lo, hi)).collect(),
    )
    .expect("built-in bands are valid")
}

const INF: f64 = f64::INFINITY;

fn three(prefix: &str, names: [&str; 3], a: f64, b: f64) -> Vec<(String, f64, f64)> {
    vec![
        (format!("{prefix}_{}", names[0]), 0.0, a),
        (format!("{prefix}_{}", names[1]), a, b),
        (format!("{prefix}_{}", names[2]), b, INF),
    ]
}

fn bpm_bands(drowsy: f64, intermediate: f64, normal: f64, atypical: f64) -> BandSet {
    bands(
        Feature::MeanBpm,
        &[
            ("BPM_Atypical", 0.0, drowsy),
            ("BPM_Drowsy", drowsy, intermediate),
            ("BPM_Intermediate", intermediate, normal),
            ("BPM_Normal", normal, atypical),
            ("BPM_Atypical", atypical, INF),
        ],
    )
}

impl Default for QualificationScheme {
    fn default() -> Self {
        use Feature::*;
        let owned = |f: Feature, v: Vec<(String, f64, f64)>| {
            let refs: Vec<(&str, f64, f64)> = v.iter().map(|(l, a, b)| (l.as_str(), *a, *b)).collect();
            (f, bands(f, &refs))
        };
        let sml = ["Small", "Large", "Extreme"];
        let lmh = ["Low", "Medium", "High"];
        let mut sets: BTreeMap<Feature, BandSet> = [
            owned(MeanSwaAbs, three("MeanSWA", sml, 6.0, 10.0)),
            owned(MaxSwaAbs, three("SWA", sml, 6.0, 10.0)),
            (SwaAngularVelocityMax, bands(SwaAngularVelocityMax, &[("AngularVelocity_Normal", 0.0, 6.0), ("AngularVelocity_High", 6.0, INF)])),
            owned(SwaCorrectionFreq, three("FrequencyCorrection", ["Low", "Normal", "High"], 2.0, 12.0)),
            owned(MeanYawAbs, three("MeanYaw", sml, 1.0, 2.5)),
            owned(MaxYawAbs, three("Yaw", sml, 1.0, 2.5)),
            owned(VarYaw, three("VarYaw", sml, 0.25, 1.0)),
            owned(YawAccelMax, three("AccelerationYawRate", lmh, 1.0, 2.5)),
            (LatAccelRange, bands(LatAccelRange, &[("LateralAcceleration_Normal", 0.0, 2.0), ("LateralAcceleration_High", 2.0, INF)])),
            owned(LaneStd, three("LaneDeviation", sml, 0.3, 0.6)),
            owned(LaneCrossings, three("LaneCrossing", ["None", "Few", "Many"], 1.0, 3.0)),
            owned(Perclos80, three("PERCLOS", ["Normal", "Elevated", "Critical"], 0.15, 0.4)),
            (BlinkFreq, bands(BlinkFreq, &[("BlinkFrequency_Normal", 0.0, 20.0), ("BlinkFrequency_High", 20.0, INF)])),
            (BlinkDurMean, bands(BlinkDurMean, &[("BlinkDuration_Normal", 0.0, 0.3), ("BlinkDuration_Long", 0.3, INF)])),
            (MicrosleepCount, bands(MicrosleepCount, &[("MicroSleep_None", 0.0, 1.0), ("MicroSleep_Present", 1.0, INF)])),
            (YawnCount, bands(YawnCount, &[("Yawn_None", 0.0, 1.0), ("Yawn_Present", 1.0, INF)])),
            (YawnFreq, bands(YawnFreq, &[("YawnFrequency_Low", 0.0, 0.5), ("YawnFrequency_High", 0.5, INF)])),
            (HeadEwma, bands(HeadEwma, &[("HeadPitch_Normal", -INF, 15.0), ("HeadPitch_Drooping", 15.0, INF)])),
            (HeadEwvar, bands(HeadEwvar, &[("HeadPitchVariance_Low", 0.0, 4.0), ("HeadPitchVariance_High", 4.0, INF)])),
            (GazePersac, bands(GazePersac, &[("PERSAC_Low", 0.0, 0.05), ("PERSAC_Normal", 0.05, INF)])),
        ]
        .into_iter()
        .collect();
        for (f, prefix) in [(SwaApen, "ApproximateEntropySWA"), (YawApen, "ApproximateEntropyYaw")] {
            let mut v = three(prefix, lmh, 0.3, 0.7);
            // rounding can push ApEn of a near-regular series a hair below zero
            v[0].1 = -INF;
            sets.insert(f, owned(f, v).1);
        }
        let by_sex = [
            (Sex::Male, [(MeanBpm, bpm_bands(50.0, 65.0, 75.0, 100.0))].into_iter().collect()),
            (Sex::Female, [(MeanBpm, bpm_bands(45.0, 63.0, 70.0, 95.0))].into_iter().collect()),
        ]
        .into_iter()
        .collect();
        Self { sets, by_sex }
    }
}

fn sex_key(s: Sex) -> &'static str {
    match s {
        Sex::Male => "male",
        Sex::Female => "female",
        Sex::Unspecified => "unspecified",
    }
}

fn parse_band_list(feature: &str, v: &Value) -> Result<BandSet, SchemeError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawBand {
        label: String,
        lower: Option<f64>,
        upper: Option<f64>,
    }
    let raw: Vec<RawBand> = serde_json::from_value(v.clone())
        .map_err(|e| SchemeError::Parse(format!("{feature}: {e}")))?;
    let bands = raw
        .into_iter()
        .map(|b| Band::new(b.label, b.lower.unwrap_or(f64::NEG_INFINITY), b.upper.unwrap_or(f64::INFINITY)))
        .collect();
    BandSet::new(feature, bands)
}

fn parse_feature_map(obj: &Map<String, Value>) -> Result<BTreeMap<Feature, BandSet>, SchemeError> {
    obj.iter()
        .map(|(k, v)| {
            let f: Feature = k.parse().map_err(|_| SchemeError::UnknownFeature(k.clone()))?;
            Ok((f, parse_band_list(k, v)?))
        })
        .collect()
}

fn bound_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn set_json(set: &BandSet) -> Value {
    Value::Array(
        set.bands()
            .iter()
            .map(|b| json!({"label": b.label, "lower": bound_json(b.lower), "upper": bound_json(b.upper)}))
            .collect(),
    )
}

impl QualificationScheme {
    /// Parses a scheme config. Features the config omits keep their default bands.
    pub fn load(config: &[u8]) -> Result<Self, SchemeError> {
        let text = std::str::from_utf8(config).map_err(|e| SchemeError::Parse(e.to_string()))?;
        let mut scheme = Self::default();
        if text.trim().is_empty() {
            return Ok(scheme);
        }
        let root: Map<String, Value> = serde_json::from_str(text).map_err(|e| SchemeError::Parse(e.to_string()))?;
        for (key, value) in &root {
            if key == "by_sex" {
                let by_sex = value
                    .as_object()
                    .ok_or_else(|| SchemeError::Parse("`by_sex` must be an object".into()))?;
                for (sex, sets) in by_sex {
                    let sex: Sex = serde_json::from_value(Value::String(sex.clone()))
                        .map_err(|_| SchemeError::Parse(format!("unknown sex `{sex}`")))?;
                    let sets = sets
                        .as_object()
                        .ok_or_else(|| SchemeError::Parse("`by_sex` entries must be objects".into()))?;
                    scheme.by_sex.entry(sex).or_default().extend(parse_feature_map(sets)?);
                }
            } else {
                let f: Feature = key.parse().map_err(|_| SchemeError::UnknownFeature(key.clone()))?;
                scheme.sets.insert(f, parse_band_list(key, value)?);
            }
        }
        Ok(scheme)
    }

    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        for (f, set) in &self.sets {
            root.insert(f.name().into(), set_json(set));
        }
        let mut by_sex = Map::new();
        for (sex, sets) in &self.by_sex {
            let inner: Map<String, Value> = sets.iter().map(|(f, s)| (f.name().to_string(), set_json(s))).collect();
            by_sex.insert(sex_key(*sex).into(), Value::Object(inner));
        }
        root.insert("by_sex".into(), Value::Object(by_sex));
        Value::Object(root)
    }

    /// Band set applying to `feature` for a driver of `sex`. Sex-specific sets
    /// win; an unspecified sex falls back to the male set.
    pub fn band_set(&self, feature: Feature, sex: Sex) -> Option<&BandSet> {
        self.by_sex
            .get(&sex)
            .and_then(|m| m.get(&feature))
            .or_else(|| self.sets.get(&feature))
            .or_else(|| match sex {
                Sex::Unspecified => self.by_sex.get(&Sex::Male).and_then(|m| m.get(&feature)),
                _ => None,
            })
    }

    /// Every `(feature, label)` the scheme can emit.
    pub fn labels(&self) -> Vec<(Feature, String)> {
        let mut out: Vec<(Feature, String)> = self
            .sets
            .iter()
            .chain(self.by_sex.values().flatten())
            .flat_map(|(f, s)| s.labels().map(move |l| (*f, l.to_string())))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Shorthand for [`QualificationScheme::load`].
pub fn load_scheme(config: &[u8]) -> Result<QualificationScheme, SchemeError> {
    QualificationScheme::load(config)
}

/// Individual name minted for a feature value in the window starting at `start`.
pub fn individual_name(feature: Feature, window_start: f64) -> String {
    format!("{}@{}", feature.name(), window_start)
}

/// One fact per present feature, in feature order.
pub fn qualify(
    fv: &FeatureVector,
    scheme: &QualificationScheme,
    profile: &DriverProfile,
) -> Result<Vec<QualifiedFact>, QualifyError> {
    fv.present()
        .map(|(feature, value)| qualify_value(feature, value, (fv.window_start, fv.window_end), scheme, profile))
        .collect()
}

/// The fact for one feature value in the window `(start, end)`.
pub fn qualify_value(
    feature: Feature,
    value: f64,
    window: (f64, f64),
    scheme: &QualificationScheme,
    profile: &DriverProfile,
) -> Result<QualifiedFact, QualifyError> {
    let set = scheme.band_set(feature, profile.sex).ok_or(QualifyError::UnboundFeature(feature))?;
    let band = set.classify(value).ok_or(QualifyError::Uncovered { feature, value })?;
    Ok(QualifiedFact {
        individual: individual_name(feature, window.0),
        class_label: band.label.clone(),
        value,
        window_start: window.0,
        window_end: window.1,
        source_feature: feature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Sex;

    fn label(f: Feature, v: f64, sex: Sex) -> String {
        let mut fv = FeatureVector { window_start: 0.0, window_end: 60.0, ..Default::default() };
        fv.set(f, Some(v));
        let p = DriverProfile::new("d", sex).unwrap();
        let facts = qualify(&fv, &QualificationScheme::default(), &p).unwrap();
        assert_eq!(facts.len(), 1);
        assert_eq!(facts[0].individual, format!("{}@0", f.name()));
        facts[0].class_label.clone()
    }

    #[test]
    fn anchored_examples() {
        assert_eq!(label(Feature::MaxSwaAbs, 12.0, Sex::Male), "SWA_Extreme");
        assert_eq!(label(Feature::MaxSwaAbs, 3.0, Sex::Male), "SWA_Small");
        assert_eq!(label(Feature::MeanYawAbs, 0.5, Sex::Male), "MeanYaw_Small");
        assert_eq!(label(Feature::MeanBpm, 58.0, Sex::Male), "BPM_Drowsy");
        assert_eq!(label(Feature::SwaAngularVelocityMax, 7.0, Sex::Male), "AngularVelocity_High");
    }

    #[test]
    fn bpm_by_sex() {
        assert_eq!(label(Feature::MeanBpm, 64.0, Sex::Female), "BPM_Intermediate");
        assert_eq!(label(Feature::MeanBpm, 64.0, Sex::Male), "BPM_Drowsy");
        assert_eq!(label(Feature::MeanBpm, 64.0, Sex::Unspecified), "BPM_Drowsy");
        assert_eq!(label(Feature::MeanBpm, 40.0, Sex::Female), "BPM_Atypical");
        assert_eq!(label(Feature::MeanBpm, 120.0, Sex::Male), "BPM_Atypical");
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(load_scheme(b"").unwrap(), QualificationScheme::default());
        assert_eq!(load_scheme(b"{}").unwrap(), QualificationScheme::default());
    }

    #[test]
    fn overlap_reported() {
        let cfg = br#"{"max_swa_abs": [{"label":"A","lower":0,"upper":6},{"label":"B","lower":5,"upper":10}]}"#;
        assert_eq!(
            load_scheme(cfg).unwrap_err(),
            SchemeError::Overlap { feature: "max_swa_abs".into(), lower: 5.0, upper: 6.0 }
        );
    }

    #[test]
    fn gap_reported() {
        let cfg = br#"{"max_swa_abs": [{"label":"A","lower":0,"upper":6},{"label":"B","lower":7,"upper":null}]}"#;
        assert_eq!(
            load_scheme(cfg).unwrap_err(),
            SchemeError::Gap { feature: "max_swa_abs".into(), lower: 6.0, upper: 7.0 }
        );
        let open_top = br#"{"var_yaw": [{"label":"A","lower":null,"upper":6}]}"#;
        assert!(matches!(load_scheme(open_top), Err(SchemeError::Gap { lower, .. }) if lower == 6.0));
        let late_start = br#"{"var_yaw": [{"label":"A","lower":1,"upper":null}]}"#;
        assert!(matches!(load_scheme(late_start), Err(SchemeError::Gap { lower, upper, .. }) if lower == 0.0 && upper == 1.0));
    }

    #[test]
    fn config_errors() {
        assert!(matches!(load_scheme(br#"{"nope": []}"#), Err(SchemeError::UnknownFeature(_))));
        assert!(matches!(load_scheme(b"{"), Err(SchemeError::Parse(_))));
        let bad_label = br#"{"var_yaw": [{"label":"a b","lower":0,"upper":null}]}"#;
        assert!(matches!(load_scheme(bad_label), Err(SchemeError::InvalidLabel { .. })));
    }

    #[test]
    fn override_merges_with_defaults() {
        let cfg = br#"{"var_yaw": [{"label":"VarYaw_Any","lower":0,"upper":null}],
                       "by_sex": {"female": {"mean_bpm": [{"label":"BPM_Normal","lower":0,"upper":null}]}}}"#;
        let s = load_scheme(cfg).unwrap();
        assert_eq!(s.band_set(Feature::VarYaw, Sex::Male).unwrap().bands().len(), 1);
        assert_eq!(s.band_set(Feature::MeanBpm, Sex::Female).unwrap().bands().len(), 1);
        assert_eq!(s.band_set(Feature::MeanBpm, Sex::Male).unwrap().bands().len(), 5);
        assert_eq!(s.band_set(Feature::MaxSwaAbs, Sex::Male), QualificationScheme::default().band_set(Feature::MaxSwaAbs, Sex::Male));
    }

    #[test]
    fn json_round_trip() {
        let s = QualificationScheme::default();
        let text = serde_json::to_string(&s.to_json()).unwrap();
        assert_eq!(load_scheme(text.as_bytes()).unwrap(), s);
    }

    #[test]
    fn every_feature_is_bound() {
        let s = QualificationScheme::default();
        for sex in [Sex::Male, Sex::Female, Sex::Unspecified] {
            for &f in Feature::ALL {
                assert!(s.band_set(f, sex).is_some(), "{f} / {sex:?}");
            }
        }
    }

    #[test]
    fn generic_band_set_f32() {
        let set = BandSet::new("x", vec![Band::new("Lo", 0.0f32, 1.0), Band::new("Hi", 1.0, f32::INFINITY)]).unwrap();
        assert_eq!(set.classify(1.0).unwrap().label, "Hi");
        assert_eq!(set.classify(0.999).unwrap().label, "Lo");
        assert!(set.classify(-0.5).is_none());
    }
}
