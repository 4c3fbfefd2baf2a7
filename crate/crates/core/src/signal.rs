//! Trace data model: frames, channels, windows and trace file I/O.
//!
//! A trace is an ordered sequence of [`SignalFrame`]s, strictly increasing in
//! time. Every channel except `t` is optional per frame; feature extraction
//! declares which channels it needs and skips what is missing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("decode error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Decode { row: Option<usize>, message: String },
    #[error("time not strictly increasing at row {row}: t={t} after t={previous}")]
    Monotonicity { row: usize, t: f64, previous: f64 },
    #[error("channel {channel} out of range at row {row}: {value}")]
    Range { channel: String, row: usize, value: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Optional measurement channels carried by a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Swa,
    Yaw,
    Speed,
    LatAccel,
    LonAccel,
    LaneOffset,
    EyeClosure,
    MouthOpen,
    HeadPitch,
    HeartBpm,
    GazeOffset,
}

impl Channel {
    pub const ALL: [Channel; 11] = [
        Channel::Swa,
        Channel::Yaw,
        Channel::Speed,
        Channel::LatAccel,
        Channel::LonAccel,
        Channel::LaneOffset,
        Channel::EyeClosure,
        Channel::MouthOpen,
        Channel::HeadPitch,
        Channel::HeartBpm,
        Channel::GazeOffset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Swa => "swa",
            Channel::Yaw => "yaw",
            Channel::Speed => "speed",
            Channel::LatAccel => "lat_accel",
            Channel::LonAccel => "lon_accel",
            Channel::LaneOffset => "lane_offset",
            Channel::EyeClosure => "eye_closure",
            Channel::MouthOpen => "mouth_open",
            Channel::HeadPitch => "head_pitch",
            Channel::HeartBpm => "heart_bpm",
            Channel::GazeOffset => "gaze_offset",
        }
    }

    /// Checks the per-channel value invariant.
    pub fn admits(self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        match self {
            Channel::EyeClosure => (0.0..=1.0).contains(&v),
            Channel::HeartBpm => v > 0.0 && v < 300.0,
            Channel::MouthOpen => v >= 0.0,
            _ => true,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown channel `{s}`"))
    }
}

/// One time-stamped multi-channel sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalFrame {
    /// Seconds since trace start.
    pub t: f64,
    /// Steering-wheel angle, degrees.
    pub swa: Option<f64>,
    /// Yaw angle, degrees.
    pub yaw: Option<f64>,
    /// m/s
    pub speed: Option<f64>,
    /// m/s²
    pub lat_accel: Option<f64>,
    /// m/s²
    pub lon_accel: Option<f64>,
    /// Meters from lane center, signed.
    pub lane_offset: Option<f64>,
    /// Fraction closed, 1 = fully closed.
    pub eye_closure: Option<f64>,
    /// Mouth aspect ratio.
    pub mouth_open: Option<f64>,
    /// Degrees; positive is the head dropping forward.
    pub head_pitch: Option<f64>,
    pub heart_bpm: Option<f64>,
    /// Degrees.
    pub gaze_offset: Option<f64>,
}

impl SignalFrame {
    pub fn at(t: f64) -> Self {
        Self { t, ..Self::default() }
    }

    pub fn get(&self, ch: Channel) -> Option<f64> {
        match ch {
            Channel::Swa => self.swa,
            Channel::Yaw => self.yaw,
            Channel::Speed => self.speed,
            Channel::LatAccel => self.lat_accel,
            Channel::LonAccel => self.lon_accel,
            Channel::LaneOffset => self.lane_offset,
            Channel::EyeClosure => self.eye_closure,
            Channel::MouthOpen => self.mouth_open,
            Channel::HeadPitch => self.head_pitch,
            Channel::HeartBpm => self.heart_bpm,
            Channel::GazeOffset => self.gaze_offset,
        }
    }

    pub fn slot(&mut self, ch: Channel) -> &mut Option<f64> {
        match ch {
            Channel::Swa => &mut self.swa,
            Channel::Yaw => &mut self.yaw,
            Channel::Speed => &mut self.speed,
            Channel::LatAccel => &mut self.lat_accel,
            Channel::LonAccel => &mut self.lon_accel,
            Channel::LaneOffset => &mut self.lane_offset,
            Channel::EyeClosure => &mut self.eye_closure,
            Channel::MouthOpen => &mut self.mouth_open,
            Channel::HeadPitch => &mut self.head_pitch,
            Channel::HeartBpm => &mut self.heart_bpm,
            Channel::GazeOffset => &mut self.gaze_offset,
        }
    }

    pub fn with(mut self, ch: Channel, v: f64) -> Self {
        *self.slot(ch) = Some(v);
        self
    }

    fn validate(&self, row: usize) -> Result<(), TraceError> {
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(TraceError::Range { channel: "t".into(), row, value: self.t });
        }
        for ch in Channel::ALL {
            if let Some(v) = self.get(ch) {
                if !ch.admits(v) {
                    return Err(TraceError::Range { channel: ch.name().into(), row, value: v });
                }
            }
        }
        Ok(())
    }
}

/// Checks frame invariants and strict time ordering. Rows are 1-based.
pub fn validate_frames(frames: &[SignalFrame]) -> Result<(), TraceError> {
    let mut previous: Option<f64> = None;
    for (i, f) in frames.iter().enumerate() {
        let row = i + 1;
        f.validate(row)?;
        if let Some(p) = previous {
            if f.t <= p {
                return Err(TraceError::Monotonicity { row, t: f.t, previous: p });
            }
        }
        previous = Some(f.t);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// `.jsonl` / `.ndjson` select JSONL; anything else is CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => TraceFormat::Jsonl,
            _ => TraceFormat::Csv,
        }
    }
}

/// Decodes a trace file.
pub fn parse_trace(bytes: &[u8], format: TraceFormat) -> Result<Vec<SignalFrame>, TraceError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TraceError::Decode {
        row: None,
        message: format!("invalid UTF-8: {e}"),
    })?;
    let frames = match format {
        TraceFormat::Csv => parse_csv(text)?,
        TraceFormat::Jsonl => parse_jsonl(text)?,
    };
    validate_frames(&frames)?;
    Ok(frames)
}

enum Column {
    Time,
    Chan(Channel),
}

fn parse_csv(text: &str) -> Result<Vec<SignalFrame>, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| TraceError::Decode { row: None, message: e.to_string() })?
        .clone();
    let mut columns = Vec::with_capacity(headers.len());
    let mut seen = std::collections::BTreeSet::new();
    for name in headers.iter() {
        if !seen.insert(name.to_string()) {
            return Err(TraceError::Decode { row: None, message: format!("duplicate column `{name}`") });
        }
        if name == "t" {
            columns.push(Column::Time);
        } else {
            let ch = name
                .parse::<Channel>()
                .map_err(|message| TraceError::Decode { row: None, message })?;
            columns.push(Column::Chan(ch));
        }
    }
    if !seen.contains("t") {
        return Err(TraceError::Decode { row: None, message: "missing `t` column".into() });
    }

    let mut frames = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| TraceError::Decode { row: Some(row), message: e.to_string() })?;
        let mut frame = SignalFrame::default();
        let mut has_t = false;
        for (cell, col) in record.iter().zip(&columns) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| TraceError::Decode {
                row: Some(row),
                message: format!("not a number: `{cell}`"),
            })?;
            match col {
                Column::Time => {
                    frame.t = v;
                    has_t = true;
                }
                Column::Chan(ch) => *frame.slot(*ch) = Some(v),
            }
        }
        if !has_t {
            return Err(TraceError::Decode { row: Some(row), message: "empty `t` cell".into() });
        }
        frames.push(frame);
    }
    Ok(frames)
}

fn parse_jsonl(text: &str) -> Result<Vec<SignalFrame>, TraceError> {
    let mut frames = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row = frames.len() + 1;
        let obj: Map<String, Value> = serde_json::from_str(line)
            .map_err(|e| TraceError::Decode { row: Some(row), message: e.to_string() })?;
        let mut frame = SignalFrame::default();
        let mut has_t = false;
        for (key, value) in &obj {
            let v = match value {
                Value::Null => continue,
                Value::Number(n) => n.as_f64().ok_or_else(|| TraceError::Decode {
                    row: Some(row),
                    message: format!("`{key}` is not representable as f64"),
                })?,
                other => {
                    return Err(TraceError::Decode {
                        row: Some(row),
                        message: format!("`{key}` must be a number, got {other}"),
                    })
                }
            };
            if key == "t" {
                frame.t = v;
                has_t = true;
            } else {
                let ch = key
                    .parse::<Channel>()
                    .map_err(|message| TraceError::Decode { row: Some(row), message })?;
                *frame.slot(ch) = Some(v);
            }
        }
        if !has_t {
            return Err(TraceError::Decode { row: Some(row), message: "missing `t`".into() });
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Encodes frames in the given format. Only channels present in at least
/// one frame get a CSV column.
pub fn write_trace(frames: &[SignalFrame], format: TraceFormat) -> String {
    match format {
        TraceFormat::Csv => {
            let used: Vec<Channel> = Channel::ALL
                .into_iter()
                .filter(|&ch| frames.iter().any(|f| f.get(ch).is_some()))
                .collect();
            let mut out = String::from("t");
            for ch in &used {
                out.push(',');
                out.push_str(ch.name());
            }
            out.push('\n');
            for f in frames {
                out.push_str(&f.t.to_string());
                for &ch in &used {
                    out.push(',');
                    if let Some(v) = f.get(ch) {
                        out.push_str(&v.to_string());
                    }
                }
                out.push('\n');
            }
            out
        }
        TraceFormat::Jsonl => {
            let mut out = String::new();
            for f in frames {
                let mut obj = Map::new();
                obj.insert("t".into(), Value::from(f.t));
                for ch in Channel::ALL {
                    if let Some(v) = f.get(ch) {
                        obj.insert(ch.name().into(), Value::from(v));
                    }
                }
                out.push_str(&Value::Object(obj).to_string());
                out.push('\n');
            }
            out
        }
    }
}

/// A contiguous analysis window over a trace. Frames satisfy `start_t <= t < end_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_t: f64,
    pub end_t: f64,
    pub frames: Vec<SignalFrame>,
}

impl Window {
    pub fn new(start_t: f64, end_t: f64, frames: Vec<SignalFrame>) -> Result<Self, TraceError> {
        if !(start_t.is_finite() && end_t.is_finite() && end_t > start_t) {
            return Err(TraceError::Argument(format!("window bounds [{start_t}, {end_t}) are empty")));
        }
        validate_frames(&frames)?;
        if let Some(f) = frames.iter().find(|f| f.t < start_t || f.t >= end_t) {
            return Err(TraceError::Argument(format!(
                "frame at t={} outside window [{start_t}, {end_t})",
                f.t
            )));
        }
        Ok(Self { start_t, end_t, frames })
    }

    pub fn length(&self) -> f64 {
        self.end_t - self.start_t
    }

    /// `(t, value)` pairs for the frames carrying `ch`.
    pub fn samples(&self, ch: Channel) -> Vec<(f64, f64)> {
        self.frames.iter().filter_map(|f| f.get(ch).map(|v| (f.t, v))).collect()
    }

    pub fn values(&self, ch: Channel) -> Vec<f64> {
        self.frames.iter().filter_map(|f| f.get(ch)).collect()
    }
}

/// Splits a trace into windows starting at `k * stride`. Windows holding fewer
/// than two frames are skipped.
pub fn make_windows(frames: &[SignalFrame], length: f64, stride: f64) -> Result<Vec<Window>, TraceError> {
    if !(length.is_finite() && length > 0.0) {
        return Err(TraceError::Argument(format!("window length must be positive, got {length}")));
    }
    if !(stride.is_finite() && stride > 0.0) {
        return Err(TraceError::Argument(format!("window stride must be positive, got {stride}")));
    }
    let Some(last) = frames.last() else {
        return Ok(Vec::new());
    };
    let mut windows = Vec::new();
    let mut k = 0usize;
    loop {
        let start = k as f64 * stride;
        if start > last.t {
            break;
        }
        let end = start + length;
        let lo = frames.partition_point(|f| f.t < start);
        let hi = frames.partition_point(|f| f.t < end);
        if hi - lo >= 2 {
            windows.push(Window { start_t: start, end_t: end, frames: frames[lo..hi].to_vec() });
        }
        k += 1;
    }
    Ok(windows)
}

/// Linear interpolation of `(t, v)` samples onto `t0 + k*dt` for `k < n`.
/// Points outside the sample span are `None`; no extrapolation.
pub fn interpolate_series<T: Scalar>(samples: &[(T, T)], t0: T, dt: T, n: usize) -> Vec<Option<T>> {
    let mut out = Vec::with_capacity(n);
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return vec![None; n];
    };
    let eps = T::lit(1e-9);
    let mut j = 0usize;
    for k in 0..n {
        let tau = t0 + T::from_count(k) * dt;
        let tol = eps * tau.abs().max(T::one());
        if tau < first.0 - tol || tau > last.0 + tol {
            out.push(None);
            continue;
        }
        while j + 1 < samples.len() && samples[j + 1].0 <= tau + tol {
            j += 1;
        }
        let (ta, va) = samples[j];
        if (tau - ta).abs() <= tol || j + 1 == samples.len() {
            out.push(Some(va));
            continue;
        }
        let (tb, vb) = samples[j + 1];
        let w = (tau - ta) / (tb - ta);
        out.push(Some(va + (vb - va) * w));
    }
    out
}

/// Number of grid points `t0, t0+dt, ...` not exceeding `t_last`.
pub fn grid_len(t0: f64, t_last: f64, dt: f64) -> usize {
    ((t_last - t0) / dt + 1e-9).floor() as usize + 1
}

/// Resamples every channel onto a uniform grid starting at the first frame.
pub fn resample_uniform(frames: &[SignalFrame], dt: f64) -> Result<Vec<SignalFrame>, TraceError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(TraceError::Argument(format!("dt must be positive, got {dt}")));
    }
    if frames.len() < 2 {
        return Err(TraceError::Argument(format!("need at least 2 frames, got {}", frames.len())));
    }
    let t0 = frames[0].t;
    let n = grid_len(t0, frames[frames.len() - 1].t, dt);
    let mut out: Vec<SignalFrame> = (0..n).map(|k| SignalFrame::at(t0 + k as f64 * dt)).collect();
    for ch in Channel::ALL {
        let samples: Vec<(f64, f64)> = frames.iter().filter_map(|f| f.get(ch).map(|v| (f.t, v))).collect();
        if samples.is_empty() {
            continue;
        }
        for (frame, v) in out.iter_mut().zip(interpolate_series(&samples, t0, dt, n)) {
            *frame.slot(ch) = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
    #[default]
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverProfile {
    pub id: String,
    #[serde(default)]
    pub sex: Sex,
}

impl DriverProfile {
    pub fn new(id: impl Into<String>, sex: Sex) -> Result<Self, TraceError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TraceError::Argument("driver profile id must be non-empty".into()));
        }
        Ok(Self { id, sex })
    }
}

/// Timestamps of the four reaction milestones after an obstacle appears.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleEvent {
    pub t_visible: f64,
    pub t_physical_reaction: f64,
    pub t_movement: f64,
    pub t_vehicle_response: f64,
}
