//! Steering, yaw and vehicle-kinematics features.

use super::{approximate_entropy, require, uniform_series, ApEnParams, Extracted, FeatureError, FeatureParams, FeatureVector};
use crate::num::{self, Scalar};
use crate::signal::{Channel, Window};

/// Counts rises of `xs` above `threshold`. After a rise the detector re-arms
/// only once the signal drops below `threshold - hysteresis`; a series that
/// starts above the threshold does not count as a rise.
pub fn upcrossings<T: Scalar>(xs: &[T], threshold: T, hysteresis: T) -> usize {
    let rearm = threshold - hysteresis;
    let mut armed = true;
    let mut count = 0;
    for (i, &x) in xs.iter().enumerate() {
        if armed && x > threshold {
            if i > 0 {
                count += 1;
            }
            armed = false;
        } else if !armed && x < rearm {
            armed = true;
        }
    }
    count
}

fn apen_of(series: &[f64], p: &FeatureParams, what: &str) -> Result<f64, FeatureError> {
    if series.len() < p.apen_m + 2 {
        return Err(FeatureError::InsufficientData {
            what: format!("{what} approximate entropy"),
            needed: p.apen_m + 2,
            have: series.len(),
        });
    }
    match p.apen_r.resolve(series) {
        Some(r) => approximate_entropy(series, &ApEnParams::new(p.apen_m, r)?),
        // zero spread: every template matches every other
        None => Ok(0.0),
    }
}

fn max_abs_rate(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|p| ((p[1].1 - p[0].1) / (p[1].0 - p[0].0)).abs())
        .fold(0.0, f64::max)
}

/// Mean/max |swa|, 6° correction rate, peak angular velocity and ApEn.
pub fn swa_features(w: &Window, p: &FeatureParams) -> Result<Extracted, FeatureError> {
    let samples = require(w, Channel::Swa, 2)?;
    let abs: Vec<f64> = samples.iter().map(|s| s.1.abs()).collect();
    let mut fv = FeatureVector::for_window(w);
    fv.mean_swa_abs = num::mean(&abs);
    fv.max_swa_abs = num::max(&abs);
    let corrections = upcrossings(&abs, p.correction_threshold, p.correction_hysteresis);
    fv.swa_correction_freq = Some(corrections as f64 * 60.0 / w.length());
    fv.swa_angular_velocity_max = Some(max_abs_rate(&samples));

    let mut issues = Vec::new();
    if let Some((series, _)) = uniform_series(w, Channel::Swa, p.resample_dt) {
        match apen_of(&series, p, "swa") {
            Ok(v) => fv.swa_apen = Some(v),
            Err(e) => issues.push(e),
        }
    }
    Ok(Extracted { features: fv, issues })
}

/// Yaw mean/max magnitude, variance, ApEn and peak angular acceleration.
pub fn yaw_features(w: &Window, p: &FeatureParams) -> Result<Extracted, FeatureError> {
    let samples = require(w, Channel::Yaw, 3)?;
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut fv = FeatureVector::for_window(w);
    fv.mean_yaw_abs = num::mean(&abs);
    fv.max_yaw_abs = num::max(&abs);
    fv.var_yaw = num::variance(&values);

    let mut issues = Vec::new();
    if let Some((series, dt)) = uniform_series(w, Channel::Yaw, p.resample_dt) {
        if series.len() >= 3 {
            let accel = series
                .windows(3)
                .map(|s| ((s[2] - 2.0 * s[1] + s[0]) / (dt * dt)).abs())
                .fold(0.0, f64::max);
            fv.yaw_accel_max = Some(accel);
        } else {
            issues.push(FeatureError::InsufficientData {
                what: "yaw acceleration".into(),
                needed: 3,
                have: series.len(),
            });
        }
        match apen_of(&series, p, "yaw") {
            Ok(v) => fv.yaw_apen = Some(v),
            Err(e) => issues.push(e),
        }
    }
    Ok(Extracted { features: fv, issues })
}

/// Counts transitions of `|x|` from below `limit` to above it.
fn outward_crossings(xs: &[f64], limit: f64) -> usize {
    let mut last_sign = 0i8;
    let mut count = 0;
    for &x in xs {
        let g = x.abs() - limit;
        let sign = if g > 0.0 {
            1
        } else if g < 0.0 {
            -1
        } else {
            continue;
        };
        if last_sign == -1 && sign == 1 {
            count += 1;
        }
        last_sign = sign;
    }
    count
}

/// Lateral-acceleration range and lane-keeping statistics. Each output needs
/// only its own channel; a missing one becomes an issue.
pub fn kinematics_features(w: &Window, p: &FeatureParams) -> Extracted {
    let mut fv = FeatureVector::for_window(w);
    let mut issues = Vec::new();
    match require(w, Channel::LatAccel, 2) {
        Ok(s) => {
            let v: Vec<f64> = s.iter().map(|s| s.1).collect();
            fv.lat_accel_range = Some(num::max(&v).unwrap_or(0.0) - num::min(&v).unwrap_or(0.0));
        }
        Err(e) => issues.push(e),
    }
    match require(w, Channel::LaneOffset, 2) {
        Ok(s) => {
            let v: Vec<f64> = s.iter().map(|s| s.1).collect();
            fv.lane_std = num::std_dev(&v);
            fv.lane_crossings = Some(outward_crossings(&v, p.half_lane_width) as f64);
        }
        Err(e) => issues.push(e),
    }
    Extracted { features: fv, issues }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SignalFrame;

    fn window(len: f64, frames: Vec<SignalFrame>) -> Window {
        Window::new(0.0, len, frames).unwrap()
    }

    fn series(ch: Channel, dt: f64, values: &[f64]) -> Vec<SignalFrame> {
        values.iter().enumerate().map(|(i, &v)| SignalFrame::at(i as f64 * dt).with(ch, v)).collect()
    }

    #[test]
    fn constant_swa() {
        let w = window(60.0, series(Channel::Swa, 0.1, &[3.0; 600]));
        let e = swa_features(&w, &FeatureParams::default()).unwrap();
        let f = e.features;
        assert_eq!(f.mean_swa_abs, Some(3.0));
        assert_eq!(f.max_swa_abs, Some(3.0));
        assert_eq!(f.swa_correction_freq, Some(0.0));
        assert_eq!(f.swa_angular_velocity_max, Some(0.0));
        assert_eq!(f.swa_apen, Some(0.0));
        assert!(e.issues.is_empty());
    }

    #[test]
    fn alternating_swa_counts_every_rise() {
        // 0,8,0,8,... at 1 Hz over 60 s: 30 rises through 6°.
        let vals: Vec<f64> = (0..60).map(|i| if i % 2 == 0 { 0.0 } else { 8.0 }).collect();
        let w = window(60.0, series(Channel::Swa, 1.0, &vals));
        let f = swa_features(&w, &FeatureParams::default()).unwrap().features;
        assert_eq!(f.swa_correction_freq, Some(30.0));
        assert_eq!(f.max_swa_abs, Some(8.0));
        assert_eq!(f.swa_angular_velocity_max, Some(8.0));
    }

    #[test]
    fn sawtooth_below_threshold_has_no_corrections() {
        let vals: Vec<f64> = (0..600).map(|i| 5.0 * ((i % 50) as f64 / 49.0)).collect();
        let w = window(60.0, series(Channel::Swa, 0.1, &vals));
        let f = swa_features(&w, &FeatureParams::default()).unwrap().features;
        assert_eq!(f.swa_correction_freq, Some(0.0));
    }

    #[test]
    fn hysteresis_suppresses_chatter() {
        assert_eq!(upcrossings(&[0.0, 6.2, 5.8, 6.3, 5.9, 6.1], 6.0, 0.5), 1);
        assert_eq!(upcrossings(&[0.0, 6.2, 5.4, 6.3], 6.0, 0.5), 2);
        assert_eq!(upcrossings(&[7.0, 8.0, 0.0], 6.0, 0.5), 0);
        assert_eq!(upcrossings(&[0.0f32, 7.0, 0.0, 7.0], 6.0, 0.5), 2);
    }

    #[test]
    fn swa_missing_or_short() {
        let w = window(10.0, series(Channel::Yaw, 1.0, &[0.0, 1.0]));
        assert_eq!(swa_features(&w, &FeatureParams::default()).unwrap_err(), FeatureError::MissingChannel(Channel::Swa));
        let w = window(10.0, series(Channel::Swa, 1.0, &[1.0, 2.0, 3.0]));
        let e = swa_features(&w, &FeatureParams::default()).unwrap();
        assert_eq!(e.features.swa_apen, None);
        assert!(matches!(e.issues[0], FeatureError::InsufficientData { needed: 4, have: 3, .. }));
        assert_eq!(e.features.mean_swa_abs, Some(2.0));
    }

    #[test]
    fn constant_yaw() {
        let w = window(60.0, series(Channel::Yaw, 0.1, &[0.5; 600]));
        let f = yaw_features(&w, &FeatureParams::default()).unwrap().features;
        assert_eq!(f.mean_yaw_abs, Some(0.5));
        assert_eq!(f.var_yaw, Some(0.0));
        assert_eq!(f.yaw_accel_max, Some(0.0));
        assert_eq!(f.yaw_apen, Some(0.0));
    }

    #[test]
    fn linear_yaw_has_no_acceleration() {
        let vals: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let w = window(10.0, series(Channel::Yaw, 0.1, &vals));
        let f = yaw_features(&w, &FeatureParams::default()).unwrap().features;
        assert!(f.yaw_accel_max.unwrap() < 1e-9);
    }

    #[test]
    fn yaw_hand_example() {
        // second differences of 0,0,1,3 are 1 and 1; population variance of {0,0,1,3} is 1.5.
        let w = window(4.0, series(Channel::Yaw, 1.0, &[0.0, 0.0, 1.0, 3.0]));
        let f = yaw_features(&w, &FeatureParams::default()).unwrap().features;
        assert_eq!(f.yaw_accel_max, Some(1.0));
        assert_eq!(f.var_yaw, Some(1.5));
        assert_eq!(f.max_yaw_abs, Some(3.0));
        let short = window(4.0, series(Channel::Yaw, 1.0, &[0.0, 1.0]));
        assert!(matches!(yaw_features(&short, &FeatureParams::default()), Err(FeatureError::InsufficientData { .. })));
    }

    #[test]
    fn kinematics() {
        let frames: Vec<SignalFrame> = (0..10)
            .map(|i| {
                SignalFrame::at(i as f64)
                    .with(Channel::LatAccel, if i % 2 == 0 { -1.2 } else { 0.8 })
                    .with(Channel::LaneOffset, 0.0)
            })
            .collect();
        let e = kinematics_features(&window(10.0, frames), &FeatureParams::default());
        assert!((e.features.lat_accel_range.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(e.features.lane_std, Some(0.0));
        assert_eq!(e.features.lane_crossings, Some(0.0));
    }

    #[test]
    fn lane_excursions() {
        // four excursions to ±2.0 m separated by returns to center
        let vals = [0.0, 2.0, 0.0, -2.0, 0.0, 2.0, 0.0, -2.0, 0.0];
        let e = kinematics_features(&window(9.0, series(Channel::LaneOffset, 1.0, &vals)), &FeatureParams::default());
        assert_eq!(e.features.lane_crossings, Some(4.0));
        assert_eq!(e.issues, vec![FeatureError::MissingChannel(Channel::LatAccel)]);
        // direct sign change across the lane without returning inside does not count
        assert_eq!(outward_crossings(&[2.0, -2.0, 2.0], 1.75), 0);
    }
}
