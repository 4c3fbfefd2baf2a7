//! Synthetic traces for alert and drowsy driving.
//!
//! Each segment is synthesized from its own seed; time not covered by any
//! segment is filled with the alert regime under seed 0. Every channel draws
//! from its own ChaCha stream, so adding a channel never perturbs another.

use std::f64::consts::TAU;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{Channel, Sex, SignalFrame};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("duration must be positive and finite, got {0}")]
    Duration(f64),
    #[error("sample rate must be positive and finite, got {0}")]
    SampleRate(f64),
    #[error("segment {index} [{start}, {end}) is empty or outside [0, duration]")]
    SegmentRange { index: usize, start: f64, end: f64 },
    #[error("segments {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("scenario spec: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Alert,
    Drowsy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub regime: Regime,
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Seconds.
    pub duration: f64,
    /// Hz.
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
    pub segments: Vec<Segment>,
    /// Selects the heart-rate bands the regimes aim for.
    #[serde(default)]
    pub sex: Sex,
}

impl ScenarioSpec {
    /// One segment of `regime` spanning `duration` at 10 Hz.
    pub fn single(regime: Regime, duration: f64, seed: u64) -> Self {
        Self {
            duration,
            sample_rate: default_rate(),
            segments: vec![Segment { start: 0.0, end: duration, regime, seed }],
            sex: Sex::Unspecified,
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, SpecError> {
        let spec: ScenarioSpec = serde_json::from_slice(bytes).map_err(|e| SpecError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(SpecError::Duration(self.duration));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(SpecError::SampleRate(self.sample_rate));
        }
        for (index, s) in self.segments.iter().enumerate() {
            if !(s.start >= 0.0 && s.start < s.end && s.end <= self.duration) {
                return Err(SpecError::SegmentRange { index, start: s.start, end: s.end });
            }
        }
        let mut order: Vec<usize> = (0..self.segments.len()).collect();
        order.sort_by(|&a, &b| self.segments[a].start.total_cmp(&self.segments[b].start));
        for pair in order.windows(2) {
            let (a, b) = (&self.segments[pair[0]], &self.segments[pair[1]]);
            if b.start < a.end {
                return Err(SpecError::Overlap { first: pair[0].min(pair[1]), second: pair[0].max(pair[1]) });
            }
        }
        Ok(())
    }

    /// Segments in time order with gaps filled by the alert regime, seed 0.
    fn pieces(&self) -> Vec<Segment> {
        let mut segs = self.segments.clone();
        segs.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut out = Vec::new();
        let mut at = 0.0;
        for s in segs {
            if s.start > at {
                out.push(Segment { start: at, end: s.start, regime: Regime::Alert, seed: 0 });
            }
            at = s.end;
            out.push(s);
        }
        if at < self.duration {
            out.push(Segment { start: at, end: self.duration, regime: Regime::Alert, seed: 0 });
        }
        out
    }
}

/// A raised-cosine pulse: zero at both ends, `amp` at the midpoint.
#[derive(Debug, Clone, Copy)]
struct Pulse {
    t0: f64,
    width: f64,
    amp: f64,
}

impl Pulse {
    fn at(&self, t: f64) -> f64 {
        let u = t - self.t0;
        if (0.0..self.width).contains(&u) {
            self.amp * (1.0 - (TAU * u / self.width).cos()) / 2.0
        } else {
            0.0
        }
    }
}

/// Pulses placed back to back over `[0, span)`, each ending inside the span.
fn pulse_train(
    rng: &mut ChaCha8Rng,
    span: f64,
    first: Range<f64>,
    gap: Range<f64>,
    mut make: impl FnMut(&mut ChaCha8Rng, usize) -> (f64, f64),
) -> Vec<Pulse> {
    let mut out = Vec::new();
    let mut t0 = rng.random_range(first);
    loop {
        let (width, amp) = make(rng, out.len());
        if t0 + width > span {
            break;
        }
        out.push(Pulse { t0, width, amp });
        t0 += rng.random_range(gap.clone());
    }
    out
}

fn sum_at(pulses: &[Pulse], t: f64) -> f64 {
    pulses.iter().map(|p| p.at(t)).sum()
}

/// Rectangular episodes `(start, end)` over `[0, span)`.
fn episodes(rng: &mut ChaCha8Rng, span: f64, first: Range<f64>, gap: Range<f64>, len: Range<f64>) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut t0 = rng.random_range(first);
    while t0 < span {
        let l = rng.random_range(len.clone());
        out.push((t0, (t0 + l).min(span)));
        t0 += rng.random_range(gap.clone());
    }
    out
}

fn inside(eps: &[(f64, f64)], t: f64) -> bool {
    eps.iter().any(|&(a, b)| t >= a && t < b)
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

fn phase(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.0..TAU)
}

fn stream(seed: u64, ch: Channel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ch as u64);
    rng
}

/// Writes every channel of one piece into `frames`, whose `t` are set.
fn synthesize(piece: &Segment, sex: Sex, frames: &mut [SignalFrame]) {
    let span = piece.end - piece.start;
    let drowsy = piece.regime == Regime::Drowsy;
    let rng = |ch| stream(piece.seed, ch);
    let fill = |frames: &mut [SignalFrame], ch: Channel, f: &dyn Fn(f64) -> f64| {
        for fr in frames.iter_mut() {
            *fr.slot(ch) = Some(f(fr.t - piece.start));
        }
    };

    let mut r = rng(Channel::Swa);
    let swa = if drowsy {
        // sparse, large, fast corrections
        pulse_train(&mut r, span, 2.0..6.0, 30.0..34.0, |r, _| {
            (r.random_range(2.5..3.5), sign(r) * r.random_range(10.0..15.0))
        })
    } else {
        // frequent micro-corrections below the 6 degree line
        pulse_train(&mut r, span, 0.0..1.0, 4.2..5.0, |r, _| (4.0, sign(r) * r.random_range(1.0..6.0)))
    };
    fill(frames, Channel::Swa, &|t| sum_at(&swa, t));

    let mut r = rng(Channel::Yaw);
    if drowsy {
        let first_sign = sign(&mut r);
        let excursions = pulse_train(&mut r, span, 1.0..3.0, 14.0..16.0, |r, i| {
            let s = if i % 2 == 0 { first_sign } else { -first_sign };
            (r.random_range(3.0..3.4), s * r.random_range(5.0..6.0))
        });
        let ph = phase(&mut r);
        fill(frames, Channel::Yaw, &|t| sum_at(&excursions, t) + 0.1 * (TAU * t / 40.0 + ph).sin());
    } else {
        let (p1, p2) = (r.random_range(20.0..40.0), r.random_range(40.0..60.0));
        let (f1, f2) = (phase(&mut r), phase(&mut r));
        fill(frames, Channel::Yaw, &|t| 0.5 + 0.25 * (TAU * t / p1 + f1).sin() + 0.2 * (TAU * t / p2 + f2).sin());
    }

    let mut r = rng(Channel::Speed);
    let ph = phase(&mut r);
    let (base, amp, period) = if drowsy { (22.0, 3.0, 60.0) } else { (25.0, 1.5, 90.0) };
    fill(frames, Channel::Speed, &|t| base + amp * (TAU * t / period + ph).sin());
    fill(frames, Channel::LonAccel, &|t| amp * TAU / period * (TAU * t / period + ph).cos());

    let mut r = rng(Channel::LatAccel);
    let ph = phase(&mut r);
    let (amp, period) = if drowsy { (2.0, 6.0) } else { (0.4, r.random_range(8.0..12.0)) };
    fill(frames, Channel::LatAccel, &|t| amp * (TAU * t / period + ph).sin());

    let mut r = rng(Channel::LaneOffset);
    let ph = phase(&mut r);
    if drowsy {
        let period = r.random_range(20.0..30.0);
        fill(frames, Channel::LaneOffset, &|t| 1.9 * (TAU * t / period + ph).sin());
    } else {
        fill(frames, Channel::LaneOffset, &|t| 0.2 * (TAU * t / 25.0 + ph).sin() + 0.05 * (TAU * t / 7.0).sin());
    }

    let mut r = rng(Channel::EyeClosure);
    let closed = if drowsy {
        // long closures filling just under half of each 4 to 6 s cycle
        let mut out = Vec::new();
        let mut t0 = r.random_range(0.0..1.0);
        while t0 < span {
            let cycle = r.random_range(4.0..6.0);
            let frac = r.random_range(0.45..0.5);
            out.push((t0, (t0 + cycle * frac).min(span)));
            t0 += cycle;
        }
        out
    } else {
        episodes(&mut r, span, 0.5..3.0, 3.0..5.0, 0.25..0.35)
    };
    let open = if drowsy { 0.15 } else { 0.1 };
    fill(frames, Channel::EyeClosure, &|t| if inside(&closed, t) { 0.95 } else { open });

    let mut r = rng(Channel::MouthOpen);
    if drowsy {
        let yawns = episodes(&mut r, span, 5.0..15.0, 40.0..60.0, 4.0..6.0);
        fill(frames, Channel::MouthOpen, &|t| if inside(&yawns, t) { 0.75 } else { 0.2 });
    } else {
        let ph = phase(&mut r);
        fill(frames, Channel::MouthOpen, &|t| 0.15 + 0.05 * (TAU * t / 11.0 + ph).sin());
    }

    let mut r = rng(Channel::HeadPitch);
    if drowsy {
        let nods = pulse_train(&mut r, span, 1.0..4.0, 6.0..10.0, |r, _| (2.0, r.random_range(12.0..18.0)));
        fill(frames, Channel::HeadPitch, &|t| 10.0 + sum_at(&nods, t));
    } else {
        let ph = phase(&mut r);
        fill(frames, Channel::HeadPitch, &|t| 2.0 + 1.5 * (TAU * t / 15.0 + ph).sin());
    }

    let mut r = rng(Channel::HeartBpm);
    let ph = phase(&mut r);
    let centre = match (drowsy, sex) {
        (true, Sex::Female) => 54.0,
        (true, _) => 57.0,
        (false, Sex::Female) => 80.0,
        (false, _) => 82.0,
    };
    fill(frames, Channel::HeartBpm, &|t| centre + 2.0 * (TAU * t / 30.0 + ph).sin());

    let mut r = rng(Channel::GazeOffset);
    let (gap, size) = if drowsy { (3.0..6.0, 3.0..8.0) } else { (0.5..1.5, 5.0..15.0) };
    let mut fixations = vec![(0.0, 0.0)];
    let mut t0 = r.random_range(gap.clone());
    while t0 < span {
        let target: f64 = sign(&mut r) * r.random_range(size.clone());
        fixations.push((t0, target.clamp(-20.0, 20.0)));
        t0 += r.random_range(gap.clone());
    }
    fill(frames, Channel::GazeOffset, &|t| {
        let i = fixations.partition_point(|&(s, _)| s <= t);
        fixations[i.saturating_sub(1)].1
    });
}

/// Deterministic frames for `spec`, sampled at `k / sample_rate` for every
/// `k` with a timestamp below the duration.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Vec<SignalFrame>, SpecError> {
    spec.validate()?;
    let n = (spec.duration * spec.sample_rate - 1e-9).ceil().max(0.0) as usize;
    let mut frames: Vec<SignalFrame> = (0..n).map(|k| SignalFrame::at(k as f64 / spec.sample_rate)).collect();
    for piece in spec.pieces() {
        let lo = frames.partition_point(|f| f.t < piece.start);
        let hi = frames.partition_point(|f| f.t < piece.end);
        synthesize(&piece, spec.sex, &mut frames[lo..hi]);
    }
    Ok(frames)
}
