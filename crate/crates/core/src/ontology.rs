//! The driver-fatigue class hierarchy.

use crate::features::Feature;
use crate::kstore::{KStoreError, Taxonomy};
use crate::qualify::QualificationScheme;
use crate::rules::{FatigueLevel, FatigueSource};

pub const VEHICLE: &str = "Vehicle_Measure";
pub const PHYSICAL: &str = "Physical_measure";
pub const PHYSIOLOGICAL: &str = "Physiological_measure";
pub const VEHICLE_FATIGUE: &str = "VehicleBasedMeasurementFatigue";

/// Measurement-group edges, child first.
const HIERARCHY: &[(&str, &str)] = &[
    ("SteeringWheelAngleMeasurement", VEHICLE),
    ("YawAngle_Measure", VEHICLE),
    ("SpeedAcceleration_Measure", VEHICLE),
    ("LanePosition_Measure", VEHICLE),
    (VEHICLE_FATIGUE, VEHICLE),
    ("MeanSWA", "SteeringWheelAngleMeasurement"),
    ("FrequencySWA", "SteeringWheelAngleMeasurement"),
    ("SWA_measure", "SteeringWheelAngleMeasurement"),
    ("ApproximateEntropySWA", "SteeringWheelAngleMeasurement"),
    ("AngularVelocity", "SteeringWheelAngleMeasurement"),
    ("MeanYaw", "YawAngle_Measure"),
    ("VarYaw", "YawAngle_Measure"),
    ("Yaw_measure", "YawAngle_Measure"),
    ("ApproximateEntropyYaw", "YawAngle_Measure"),
    ("AccelerationYawRate", "YawAngle_Measure"),
    ("LateralAcceleration", "SpeedAcceleration_Measure"),
    ("LaneDeviation", "LanePosition_Measure"),
    ("LaneCrossing", "LanePosition_Measure"),
    ("Facial_measure", PHYSICAL),
    ("Eye_measure", "Facial_measure"),
    ("Mouth_measure", "Facial_measure"),
    ("Head_measure", "Facial_measure"),
    ("EyeClosure_measure", "Eye_measure"),
    ("Blink_measure", "Eye_measure"),
    ("Gaze_measure", "Eye_measure"),
    ("PERCLOS", "EyeClosure_measure"),
    ("MicroSleep", "EyeClosure_measure"),
    ("BlinkFrequency", "Blink_measure"),
    ("BlinkDuration", "Blink_measure"),
    ("PERSAC", "Gaze_measure"),
    ("Yawn", "Mouth_measure"),
    ("YawnFrequency", "Mouth_measure"),
    ("HeadPitch", "Head_measure"),
    ("HeadPitchVariance", "Head_measure"),
    ("HeartRate_measure", PHYSIOLOGICAL),
    ("BPM", "HeartRate_measure"),
];

/// Every `(child, parent)` edge of the fatigue ontology for `scheme`:
/// measurement groups, one qualified class per band label under its
/// feature's measure class, and the fatigue-level classes under their anchors.
pub fn fatigue_edges(scheme: &QualificationScheme) -> Vec<(String, String)> {
    let mut edges: Vec<(String, String)> =
        HIERARCHY.iter().map(|&(c, p)| (c.to_string(), p.to_string())).collect();
    for src in FatigueSource::SUB_SOURCES {
        edges.push((src.anchor_class().to_string(), VEHICLE_FATIGUE.to_string()));
        for level in FatigueLevel::ALL {
            edges.push((src.level_class(level), src.anchor_class().to_string()));
        }
    }
    for (feature, label) in scheme.labels() {
        edges.push((label, feature.measure_class().to_string()));
    }
    debug_assert!(Feature::ALL.iter().all(|f| HIERARCHY.iter().any(|(c, _)| *c == f.measure_class())));
    edges
}

/// Builds the taxonomy of the fatigue ontology.
pub fn fatigue_taxonomy(scheme: &QualificationScheme) -> Result<Taxonomy, KStoreError> {
    let edges = fatigue_edges(scheme);
    let mut classes: Vec<String> = edges.iter().flat_map(|(c, p)| [c.clone(), p.clone()]).collect();
    classes.sort();
    classes.dedup();
    Taxonomy::new(classes, edges)
}
