use std::collections::BTreeSet;

use fatigue_core::pipeline::{
    decide, generate_scenario, reports_jsonl, AlertPolicy, Pipeline, PipelineConfig, Regime, ScenarioSpec, Segment,
};
use fatigue_core::rules::FatigueLevel;
use fatigue_core::signal::{make_windows, Channel, Sex, SignalFrame};

fn scenario(regime: Regime, seconds: f64, seed: u64) -> Vec<SignalFrame> {
    generate_scenario(&ScenarioSpec::single(regime, seconds, seed)).unwrap()
}

fn snapshot_files(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn runs_are_byte_identical() {
    let frames = scenario(Regime::Drowsy, 300.0, 11);
    assert_eq!(frames, scenario(Regime::Drowsy, 300.0, 11));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut outputs = Vec::new();
    for dir in [&a, &b] {
        let cfg = PipelineConfig { snapshot_dir: Some(dir.path().to_path_buf()), ..Default::default() };
        outputs.push(reports_jsonl(&Pipeline::new(cfg).unwrap().run(&frames, "drowsy").unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let (sa, sb) = (snapshot_files(a.path()), snapshot_files(b.path()));
    assert_eq!(sa.len(), 5);
    assert_eq!(sa, sb);
}

#[test]
fn one_report_per_window_on_irregular_trace() {
    let mut frames = scenario(Regime::Alert, 400.0, 3);
    // drop a 90 s stretch and thin out another
    frames.retain(|f| !(100.0..190.0).contains(&f.t));
    let mut i = 0;
    frames.retain(|f| {
        i += 1;
        !(250.0..320.0).contains(&f.t) || i % 7 == 0
    });
    let cfg = PipelineConfig { stride: 15.0, window_length: 45.0, ..Default::default() };
    let windows = make_windows(&frames, cfg.window_length, cfg.stride).unwrap();
    let pipeline = Pipeline::new(cfg).unwrap();
    let mut seen = Vec::new();
    let n = pipeline
        .process(&frames, "t", |r, _| {
            seen.push(r);
            Ok(())
        })
        .unwrap();
    assert_eq!(n, windows.len());
    assert_eq!(seen.len(), windows.len());
    for (i, (r, w)) in seen.iter().zip(&windows).enumerate() {
        assert_eq!(r.window.index, i);
        assert_eq!((r.window.start, r.window.end), (w.start_t, w.end_t));
    }
    let starts: BTreeSet<u64> = seen.iter().map(|r| r.window.start as u64).collect();
    assert!(!starts.contains(&105) && starts.contains(&90) && starts.contains(&195));
}

#[test]
fn each_missing_channel_degrades_gracefully() {
    let frames = scenario(Regime::Drowsy, 240.0, 5);
    let pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
    let full = pipeline.run(&frames, "full").unwrap();
    for ch in Channel::ALL {
        let stripped: Vec<SignalFrame> = frames
            .iter()
            .map(|f| {
                let mut f = f.clone();
                *f.slot(ch) = None;
                f
            })
            .collect();
        let partial = pipeline.run(&stripped, "partial").unwrap();
        assert_eq!(partial.len(), full.len(), "{ch}");
        for (p, f) in partial.iter().zip(&full) {
            let facts: BTreeSet<String> = f.facts.iter().map(|q| format!("{q:?}")).collect();
            for q in &p.facts {
                assert!(facts.contains(&format!("{q:?}")), "{ch}: {q:?} not in the full run");
            }
            assert!(p.facts.len() <= f.facts.len());
        }
    }

    let bare: Vec<SignalFrame> = frames.iter().map(|f| SignalFrame::at(f.t)).collect();
    for r in pipeline.run(&bare, "bare").unwrap() {
        assert!(r.facts.is_empty() && r.levels.is_empty());
        assert_eq!(r.overall, None);
        assert!(!r.alert);
    }
}

#[test]
fn alerts_follow_overall_levels() {
    let spec = ScenarioSpec {
        duration: 720.0,
        sample_rate: 10.0,
        segments: vec![
            Segment { start: 0.0, end: 240.0, regime: Regime::Alert, seed: 1 },
            Segment { start: 240.0, end: 480.0, regime: Regime::Drowsy, seed: 2 },
            Segment { start: 480.0, end: 720.0, regime: Regime::Alert, seed: 3 },
        ],
        sex: Sex::Unspecified,
    };
    let frames = generate_scenario(&spec).unwrap();
    let policy = AlertPolicy { threshold: FatigueLevel::Medium, consecutive: 3 };
    let cfg = PipelineConfig { alert: policy, ..Default::default() };
    let reports = Pipeline::new(cfg).unwrap().run(&frames, "mixed").unwrap();
    // a window without a level counts as below threshold, like Low
    let levels: Vec<FatigueLevel> = reports.iter().map(|r| r.overall.unwrap_or(FatigueLevel::Low)).collect();
    let alerts: Vec<usize> = reports.iter().filter(|r| r.alert).map(|r| r.window.index).collect();
    assert_eq!(alerts, decide(&levels, &policy));
    assert!(!alerts.is_empty());
    assert!(alerts.iter().all(|&i| reports[i].window.end > 240.0));
    assert!(reports[..18].iter().all(|r| r.overall == Some(FatigueLevel::Low)));
}
