use std::path::PathBuf;

use fields_core::engagement::Directionality;
use fields_core::patterns::PatternConfig;
use fields_core::scenarios::{Prototype, ALL, EMAIL, ENTERTAINMENT, RECIPE, SCROLL_BY_VOICE};
use fields_core::simulator::{check_crossings, run_scenario, EventTrace};

fn golden_path(p: &Prototype) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{}.jsonl", p.id))
}

fn run(p: &Prototype, tick_rate: Option<f64>) -> EventTrace {
    let mut config = p.config().unwrap();
    if let Some(rate) = tick_rate {
        config.tick_rate = rate;
    }
    run_scenario(&config).unwrap()
}

#[test]
fn prototypes_encode_their_parameter_table() {
    // (device radius, k, thresholds, directionality)
    let table = [
        (ENTERTAINMENT, 3.0, 0.25, vec![0.14], Directionality::Directional),
        (EMAIL, 4.0, 0.25, vec![0.04, 0.08], Directionality::Directional),
        (SCROLL_BY_VOICE, 1.0, 0.5, vec![0.6], Directionality::NonDirectional),
        (RECIPE, 1.0, 0.5, vec![0.6], Directionality::NonDirectional),
    ];
    for (p, radius, k, thresholds, directionality) in table {
        let c = p.config().unwrap();
        assert_eq!(c.actors.len(), 1, "{}", p.id);
        assert_eq!(c.actors[0].params.rest_radius, 1.2, "{}", p.id);
        assert_eq!(c.actors[0].params.k, k, "{}", p.id);
        assert_eq!(c.devices[0].radius, radius, "{}", p.id);
        assert_eq!(c.devices[0].directionality, directionality, "{}", p.id);
        assert_eq!(c.bindings[0].pattern.thresholds()[..thresholds.len()], thresholds[..], "{}", p.id);
        assert!(!c.noise.enabled, "{}", p.id);
        if let PatternConfig::Greeting(g) = &c.bindings[0].pattern {
            assert!((g.t2 - 0.4).abs() < 1e-12);
        }
    }
}

#[test]
fn prototypes_produce_expected_events() {
    for p in ALL {
        let trace = run(&p, None);
        assert_eq!(trace.event_kinds(), p.expected, "{}", p.id);
        check_crossings(&trace).unwrap_or_else(|e| panic!("{}: {e}", p.id));
    }
}

#[test]
fn doubling_tick_rate_preserves_sequences() {
    for p in ALL {
        let base = run(&p, None).events();
        let fast = run(&p, Some(40.0));
        check_crossings(&fast).unwrap_or_else(|e| panic!("{}: {e}", p.id));
        let fast = fast.events();
        assert_eq!(fast.len(), base.len(), "{}", p.id);
        for (a, b) in base.iter().zip(&fast) {
            assert_eq!(a.event.kind, b.event.kind, "{}", p.id);
            assert!((a.event.t - b.event.t).abs() <= 0.05 + 1e-9, "{}: {} vs {}", p.id, a.event.t, b.event.t);
        }
    }
}

#[test]
fn runs_are_byte_identical() {
    for p in ALL {
        assert_eq!(run(&p, None).to_jsonl(), run(&p, None).to_jsonl(), "{}", p.id);
    }
}

/// Set `UPDATE_GOLDEN=1` to rewrite the committed traces.
#[test]
fn traces_match_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for p in ALL {
        let text = run(&p, None).to_jsonl();
        let path = golden_path(&p);
        if update {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let golden = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1 to create)", path.display()));
        assert!(golden == text, "{} differs from a fresh run", path.display());
        let parsed = EventTrace::from_jsonl(&golden).unwrap();
        assert_eq!(parsed.event_kinds(), p.expected, "{}", p.id);
    }
}
