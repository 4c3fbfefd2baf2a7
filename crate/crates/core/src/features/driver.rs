//! Physical and physiological driver features: eyes, mouth, head, gaze,
//! heart rate and reaction times.

use serde::{Deserialize, Serialize};

use super::{require, Extracted, FeatureError, FeatureParams, FeatureVector};
use crate::num::{self, Scalar};
use crate::signal::{Channel, ObstacleEvent, Window};

/// Slack for comparing accumulated interval durations against thresholds.
const DURATION_EPS: f64 = 1e-9;

/// Sample-and-hold duration of each sample. The last sample holds until the
/// window end, capped at the median sample spacing.
fn hold_durations(samples: &[(f64, f64)], end_t: f64) -> Vec<f64> {
    match samples {
        [] => Vec::new(),
        [(t, _)] => vec![(end_t - t).max(0.0)],
        _ => {
            let mut d: Vec<f64> = samples.windows(2).map(|p| p[1].0 - p[0].0).collect();
            let typical = num::median(&d).unwrap_or(0.0);
            let last = samples[samples.len() - 1].0;
            d.push((end_t - last).min(typical).max(0.0));
            d
        }
    }
}

/// Durations of the maximal runs where `values >= threshold`.
pub fn closed_intervals<T: Scalar>(durations: &[T], values: &[T], threshold: T) -> Vec<T> {
    let mut runs = Vec::new();
    let mut current: Option<T> = None;
    for (&d, &v) in durations.iter().zip(values) {
        if v >= threshold {
            current = Some(current.unwrap_or_else(T::zero) + d);
        } else if let Some(run) = current.take() {
            runs.push(run);
        }
    }
    runs.extend(current);
    runs
}

/// PERCLOS, blink rate and duration, and micro-sleep count.
pub fn eye_features(w: &Window, p: &FeatureParams) -> Result<Extracted, FeatureError> {
    if !(p.closed_threshold > 0.0 && p.closed_threshold < 1.0) {
        return Err(FeatureError::Argument(format!(
            "closed threshold must lie in (0, 1), got {}",
            p.closed_threshold
        )));
    }
    let samples = require(w, Channel::EyeClosure, 2)?;
    let durations = hold_durations(&samples, w.end_t);
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let total: f64 = durations.iter().sum();
    let closed: f64 = durations
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v >= p.closed_threshold)
        .map(|(d, _)| d)
        .sum();

    let mut blinks = Vec::new();
    let mut microsleeps = 0usize;
    for run in closed_intervals(&durations, &values, p.closed_threshold) {
        if run >= p.microsleep_min - DURATION_EPS {
            microsleeps += 1;
        } else if run >= p.blink_min - DURATION_EPS {
            blinks.push(run);
        }
    }

    let mut fv = FeatureVector::for_window(w);
    fv.perclos80 = Some(if total > 0.0 { (closed / total).clamp(0.0, 1.0) } else { 0.0 });
    fv.blink_freq = Some(blinks.len() as f64 * 60.0 / w.length());
    fv.blink_dur_mean = num::mean(&blinks);
    fv.microsleep_count = Some(microsleeps as f64);
    Ok(Extracted { features: fv, issues: Vec::new() })
}

/// Yawn count and rate: maximal intervals with `mouth_open >= yawn_ratio`
/// lasting at least `yawn_min_dur` seconds.
pub fn mouth_features(w: &Window, yawn_ratio: f64, yawn_min_dur: f64) -> Result<Extracted, FeatureError> {
    let samples = require(w, Channel::MouthOpen, 1)?;
    let durations = hold_durations(&samples, w.end_t);
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let yawns = closed_intervals(&durations, &values, yawn_ratio)
        .into_iter()
        .filter(|&d| d >= yawn_min_dur - DURATION_EPS)
        .count();
    let mut fv = FeatureVector::for_window(w);
    fv.yawn_count = Some(yawns as f64);
    fv.yawn_freq = Some(yawns as f64 * 60.0 / w.length());
    Ok(Extracted { features: fv, issues: Vec::new() })
}

/// Exponentially weighted mean and variance, seeded with the first sample
/// and zero variance. Returns the final pair.
pub fn ewma_ewvar<T: Scalar>(xs: &[T], alpha: T) -> Option<(T, T)> {
    let (&first, rest) = xs.split_first()?;
    let one = T::one();
    let mut mean = first;
    let mut var = T::zero();
    for &x in rest {
        let diff = x - mean;
        var = (one - alpha) * (var + alpha * diff * diff);
        mean = alpha * x + (one - alpha) * mean;
    }
    Some((mean, var))
}

pub fn head_features(w: &Window, alpha: f64) -> Result<Extracted, FeatureError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(FeatureError::Argument(format!("smoothing factor must lie in (0, 1], got {alpha}")));
    }
    let values: Vec<f64> = require(w, Channel::HeadPitch, 1)?.into_iter().map(|s| s.1).collect();
    let (mean, var) = ewma_ewvar(&values, alpha).expect("non-empty");
    let mut fv = FeatureVector::for_window(w);
    fv.head_ewma = Some(mean);
    fv.head_ewvar = Some(var);
    Ok(Extracted { features: fv, issues: Vec::new() })
}

pub fn physiology_features(w: &Window) -> Result<Extracted, FeatureError> {
    let values: Vec<f64> = require(w, Channel::HeartBpm, 1)?.into_iter().map(|s| s.1).collect();
    let mut fv = FeatureVector::for_window(w);
    fv.mean_bpm = num::mean(&values);
    Ok(Extracted { features: fv, issues: Vec::new() })
}

/// PERSAC: fraction of consecutive gaze samples moving faster than `saccade_speed`.
pub fn gaze_features(w: &Window, saccade_speed: f64) -> Result<Extracted, FeatureError> {
    let samples = require(w, Channel::GazeOffset, 2)?;
    let pairs = samples.len() - 1;
    let saccadic = samples
        .windows(2)
        .filter(|p| ((p[1].1 - p[0].1) / (p[1].0 - p[0].0)).abs() > saccade_speed)
        .count();
    let mut fv = FeatureVector::for_window(w);
    fv.gaze_persac = Some(saccadic as f64 / pairs as f64);
    Ok(Extracted { features: fv, issues: Vec::new() })
}

/// Intervals between the reaction milestones of an [`ObstacleEvent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionTimes {
    /// obstacle visible → physical reaction
    pub physical: f64,
    /// physical reaction → movement
    pub movement: f64,
    /// movement → vehicle response
    pub vehicle_response: f64,
    /// obstacle visible → vehicle response
    pub total: f64,
}

pub fn reaction_times(e: &ObstacleEvent) -> Result<ReactionTimes, FeatureError> {
    let ts = [e.t_visible, e.t_physical_reaction, e.t_movement, e.t_vehicle_response];
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(FeatureError::Argument("reaction timestamps must be finite".into()));
    }
    const NAMES: [&str; 4] = ["t_visible", "t_physical_reaction", "t_movement", "t_vehicle_response"];
    for i in 1..4 {
        if ts[i] < ts[i - 1] {
            return Err(FeatureError::Ordering(format!("{} precedes {}", NAMES[i], NAMES[i - 1])));
        }
    }
    Ok(ReactionTimes {
        physical: ts[1] - ts[0],
        movement: ts[2] - ts[1],
        vehicle_response: ts[3] - ts[2],
        total: ts[3] - ts[0],
    })
}
