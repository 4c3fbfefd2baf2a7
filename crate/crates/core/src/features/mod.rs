//! Windowed feature extraction.
//!
//! Each group function (`swa_features`, `yaw_features`, ...) fills only its own
//! fields of a [`FeatureVector`]. A group whose required channel is missing
//! fails on its own; [`extract_features`] collects those failures as issues and
//! keeps whatever the other groups produced.

mod apen;
mod driver;
mod vehicle;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num;
use crate::signal::{interpolate_series, Channel, Window};

pub use apen::{approximate_entropy, ApEnParams, Tolerance};
pub use driver::{
    closed_intervals, ewma_ewvar, eye_features, gaze_features, head_features, mouth_features,
    physiology_features, reaction_times, ReactionTimes,
};
pub use vehicle::{kinematics_features, swa_features, upcrossings, yaw_features};

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum FeatureError {
    #[error("missing channel {0}")]
    MissingChannel(Channel),
    #[error("insufficient data for {what}: need {needed} samples, have {have}")]
    InsufficientData { what: String, needed: usize, have: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("ordering violated: {0}")]
    Ordering(String),
}

macro_rules! feature_table {
    ($( $variant:ident => $field:ident, $class:literal, $property:literal; )*) => {
        /// Every numeric feature a window can produce.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum Feature {
            $($variant,)*
        }

        impl Feature {
            pub const ALL: &'static [Feature] = &[$(Feature::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Feature::$variant => stringify!($field),)*
                }
            }

            /// Measure class whose qualified subclasses this feature populates.
            pub fn measure_class(self) -> &'static str {
                match self {
                    $(Feature::$variant => $class,)*
                }
            }

            /// Data property linking an individual to the measured value.
            pub fn property(self) -> &'static str {
                match self {
                    $(Feature::$variant => $property,)*
                }
            }
        }

        /// Numeric features of one analysis window. Absent fields are omitted
        /// from the JSON form.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        pub struct FeatureVector {
            pub window_start: f64,
            pub window_end: f64,
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<f64>,
            )*
        }

        impl FeatureVector {
            pub fn get(&self, f: Feature) -> Option<f64> {
                match f {
                    $(Feature::$variant => self.$field,)*
                }
            }

            pub fn set(&mut self, f: Feature, v: Option<f64>) {
                match f {
                    $(Feature::$variant => self.$field = v,)*
                }
            }
        }
    };
}

feature_table! {
    MeanSwaAbs => mean_swa_abs, "MeanSWA", "hasMeanSWAMeasured";
    MaxSwaAbs => max_swa_abs, "SWA_measure", "hasSWAMeasured";
    SwaCorrectionFreq => swa_correction_freq, "FrequencySWA", "hasFrequencySWAMeasured";
    SwaAngularVelocityMax => swa_angular_velocity_max, "AngularVelocity", "hasAngularVelocityMeasured";
    SwaApen => swa_apen, "ApproximateEntropySWA", "hasApproximateEntropySWAMeasured";
    MeanYawAbs => mean_yaw_abs, "MeanYaw", "hasMeanYawMeasured";
    MaxYawAbs => max_yaw_abs, "Yaw_measure", "hasYawAngleMeasured";
    VarYaw => var_yaw, "VarYaw", "hasVarYawMeasured";
    YawApen => yaw_apen, "ApproximateEntropyYaw", "hasApproximateEntropyYawMeasured";
    YawAccelMax => yaw_accel_max, "AccelerationYawRate", "hasAccelerationYawRateMeasured";
    LatAccelRange => lat_accel_range, "LateralAcceleration", "hasLateralAccelerationMeasured";
    LaneStd => lane_std, "LaneDeviation", "hasLaneDeviationMeasured";
    LaneCrossings => lane_crossings, "LaneCrossing", "hasLaneCrossingMeasured";
    Perclos80 => perclos80, "PERCLOS", "hasPERCLOSMeasured";
    BlinkFreq => blink_freq, "BlinkFrequency", "hasBlinkFrequencyMeasured";
    BlinkDurMean => blink_dur_mean, "BlinkDuration", "hasBlinkDurationMeasured";
    MicrosleepCount => microsleep_count, "MicroSleep", "hasMicroSleepMeasured";
    YawnCount => yawn_count, "Yawn", "hasYawnMeasured";
    YawnFreq => yawn_freq, "YawnFrequency", "hasYawnFrequencyMeasured";
    HeadEwma => head_ewma, "HeadPitch", "hasHeadPitchMeasured";
    HeadEwvar => head_ewvar, "HeadPitchVariance", "hasHeadPitchVarianceMeasured";
    MeanBpm => mean_bpm, "BPM", "hasBPMMeasured";
    GazePersac => gaze_persac, "PERSAC", "hasPERSACMeasured";
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

impl FeatureVector {
    pub fn for_window(w: &Window) -> Self {
        Self { window_start: w.start_t, window_end: w.end_t, ..Self::default() }
    }

    /// Present fields in declaration order.
    pub fn present(&self) -> impl Iterator<Item = (Feature, f64)> + '_ {
        Feature::ALL.iter().filter_map(move |&f| self.get(f).map(|v| (f, v)))
    }

    /// Copies every present field of `other` into `self`.
    pub fn merge(&mut self, other: &FeatureVector) {
        for (f, v) in other.present() {
            self.set(f, Some(v));
        }
    }

    pub fn as_map(&self) -> BTreeMap<Feature, f64> {
        self.present().collect()
    }
}

/// Output of one feature group: the fields it set plus non-fatal issues.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extracted {
    pub features: FeatureVector,
    pub issues: Vec<FeatureError>,
}

/// Tunables for feature extraction; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    pub apen_m: usize,
    pub apen_r: Tolerance,
    /// |swa| threshold for a significant correction, degrees.
    pub correction_threshold: f64,
    /// A correction re-arms once |swa| falls below threshold minus this.
    pub correction_hysteresis: f64,
    pub half_lane_width: f64,
    /// eye_closure at or above this counts as closed.
    pub closed_threshold: f64,
    pub blink_min: f64,
    /// Closed intervals at least this long are micro-sleeps.
    pub microsleep_min: f64,
    pub yawn_ratio: f64,
    pub yawn_min_dur: f64,
    pub head_alpha: f64,
    /// Gaze angular speed above which a sample pair is saccadic, degrees/s.
    pub saccade_speed: f64,
    /// Grid step for resampled series; `None` uses the median frame spacing.
    pub resample_dt: Option<f64>,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            apen_m: 2,
            apen_r: Tolerance::StdFraction(0.2),
            correction_threshold: 6.0,
            correction_hysteresis: 0.5,
            half_lane_width: 1.75,
            closed_threshold: 0.8,
            blink_min: 0.2,
            microsleep_min: 0.5,
            yawn_ratio: 0.6,
            yawn_min_dur: 3.0,
            head_alpha: 0.2,
            saccade_speed: 30.0,
            resample_dt: None,
        }
    }
}

/// Runs every feature group over `w`. Group failures become issues.
pub fn extract_features(w: &Window, p: &FeatureParams) -> Extracted {
    let mut out = Extracted { features: FeatureVector::for_window(w), issues: Vec::new() };
    let groups: [Result<Extracted, FeatureError>; 8] = [
        swa_features(w, p),
        yaw_features(w, p),
        Ok(kinematics_features(w, p)),
        eye_features(w, p),
        mouth_features(w, p.yawn_ratio, p.yawn_min_dur),
        head_features(w, p.head_alpha),
        physiology_features(w),
        gaze_features(w, p.saccade_speed),
    ];
    for g in groups {
        match g {
            Ok(e) => {
                out.features.merge(&e.features);
                out.issues.extend(e.issues);
            }
            Err(e) => out.issues.push(e),
        }
    }
    out
}

/// Samples of `ch` resampled onto a uniform grid spanning their own extent.
/// Returns the values and the grid step.
pub(crate) fn uniform_series(w: &Window, ch: Channel, dt: Option<f64>) -> Option<(Vec<f64>, f64)> {
    let samples = w.samples(ch);
    if samples.len() < 2 {
        return None;
    }
    let dt = match dt {
        Some(d) => d,
        None => {
            let gaps: Vec<f64> = samples.windows(2).map(|p| p[1].0 - p[0].0).collect();
            num::median(&gaps)?
        }
    };
    let t0 = samples[0].0;
    let n = crate::signal::grid_len(t0, samples[samples.len() - 1].0, dt);
    let values = interpolate_series(&samples, t0, dt, n).into_iter().flatten().collect();
    Some((values, dt))
}

/// `(t, v)` samples of a required channel, or the matching error.
pub(crate) fn require(w: &Window, ch: Channel, needed: usize) -> Result<Vec<(f64, f64)>, FeatureError> {
    let s = w.samples(ch);
    if s.is_empty() {
        return Err(FeatureError::MissingChannel(ch));
    }
    if s.len() < needed {
        return Err(FeatureError::InsufficientData { what: ch.name().into(), needed, have: s.len() });
    }
    Ok(s)
}
