//! Strategies and property checks shared by the property tests and the
//! acceptance runner.
#![allow(dead_code)]

use fields_core::patterns::{
    EventKind, GreetingConfig, PatternConfig, PatternEvent, Phase, RevealingConfig, TurnTakingConfig,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const PROPERTY_CASES: u32 = 10_000;

/// Cumulative sample times from a list of gaps.
pub fn times_from(gaps: &[f64]) -> Vec<f64> {
    let mut t = 0.0;
    gaps.iter()
        .map(|dt| {
            t += dt;
            t
        })
        .collect()
}

pub fn run(cfg: &PatternConfig, times: &[f64], pis: &[f64]) -> (Vec<Phase>, Vec<PatternEvent>) {
    let mut state = cfg.reset();
    let mut phases = Vec::with_capacity(pis.len());
    let mut events = Vec::new();
    for (&t, &pi) in times.iter().zip(pis) {
        let (next, ev) = cfg.step(&state, pi, t).expect("valid step");
        state = next;
        phases.push(state.phase);
        events.extend(ev);
    }
    (phases, events)
}

fn dwell_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.0..0.5f64]
}

fn gaps(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..0.1f64, len)
}

#[derive(Debug, Clone)]
pub struct HysteresisCase {
    pub cfg: GreetingConfig,
    pub wake_first: bool,
    pub gaps: Vec<f64>,
    pub fractions: Vec<f64>,
}

pub fn hysteresis_case() -> impl Strategy<Value = HysteresisCase> {
    (0.05..=1.0f64, 0.0..0.95f64, dwell_strategy(), any::<bool>(), 1..120usize)
        .prop_flat_map(|(t1, ratio, dwell, wake_first, n)| {
            (gaps(n..n + 1), prop::collection::vec(0.0..1.0f64, n)).prop_map(move |(gaps, fractions)| HysteresisCase {
                cfg: GreetingConfig {
                    t1,
                    t2: t1 * ratio,
                    dwell,
                },
                wake_first,
                gaps,
                fractions,
            })
        })
}

/// No event while `pi` stays inside `[t2, t1)`, from either starting phase.
pub fn check_hysteresis(case: &HysteresisCase) -> Result<(), TestCaseError> {
    let GreetingConfig { t1, t2, dwell } = case.cfg;
    let cfg = PatternConfig::Greeting(case.cfg);
    let mut times = Vec::new();
    let mut pis = Vec::new();
    if case.wake_first {
        // Hold pi = 1 long enough to commit the wake-up.
        let steps = (dwell / 0.05).ceil() as usize + 2;
        for i in 0..steps {
            times.push(i as f64 * 0.05);
            pis.push(1.0);
        }
    }
    let prefix = times.len();
    let offset = times.last().copied().unwrap_or(0.0);
    for (t, f) in times_from(&case.gaps).into_iter().zip(&case.fractions) {
        times.push(offset + t);
        let pi = t2 + f * (t1 - t2);
        pis.push(if pi < t1 { pi } else { t2 });
    }
    let (phases, events) = run(&cfg, &times, &pis);
    let prefix_end = times.get(prefix.saturating_sub(1)).copied().unwrap_or(f64::NEG_INFINITY);
    let band_events: Vec<_> = events.iter().filter(|e| prefix == 0 || e.t > prefix_end).collect();
    prop_assert!(band_events.is_empty(), "events inside the band: {band_events:?}");
    let expected = if case.wake_first { Phase::Active } else { Phase::Sleep };
    prop_assert!(phases[prefix..].iter().all(|&p| p == expected));
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SeriesCase {
    pub cfg: PatternConfig,
    pub gaps: Vec<f64>,
    pub pis: Vec<f64>,
}

pub fn turn_taking_case() -> impl Strategy<Value = SeriesCase> {
    (0.05..0.95f64, dwell_strategy(), 1..200usize).prop_flat_map(|(t1, dwell, n)| {
        let near = (t1 - 0.1).max(0.0)..=(t1 + 0.1).min(1.0);
        let pi = prop_oneof![Just(t1), near, 0.0..=1.0f64];
        (gaps(n..n + 1), prop::collection::vec(pi, n)).prop_map(move |(gaps, pis)| SeriesCase {
            cfg: PatternConfig::TurnTaking(TurnTakingConfig { t1, dwell }),
            gaps,
            pis,
        })
    })
}

/// Events strictly alternate Pause, Resume, Pause, ... and agree with the
/// side of `t1` the triggering sample is on.
pub fn check_alternation(case: &SeriesCase) -> Result<(), TestCaseError> {
    let PatternConfig::TurnTaking(TurnTakingConfig { t1, dwell }) = case.cfg else {
        unreachable!()
    };
    let times = times_from(&case.gaps);
    let (phases, events) = run(&case.cfg, &times, &case.pis);
    for (i, e) in events.iter().enumerate() {
        let expected = if i % 2 == 0 { EventKind::Pause } else { EventKind::Resume };
        prop_assert_eq!(e.kind, expected);
    }
    for (i, (&pi, &phase)) in case.pis.iter().zip(&phases).enumerate() {
        let fired: Vec<_> = events.iter().filter(|e| e.t == times[i]).collect();
        for e in fired {
            match e.kind {
                EventKind::Pause => prop_assert!(pi < t1),
                EventKind::Resume => prop_assert!(pi >= t1),
                _ => prop_assert!(false, "unexpected {:?}", e.kind),
            }
        }
        if dwell == 0.0 {
            prop_assert_eq!(phase, if pi >= t1 { Phase::Playing } else { Phase::Paused });
        }
    }
    Ok(())
}

pub fn revealing_case() -> impl Strategy<Value = SeriesCase> {
    (prop::collection::vec(0.01..=1.0f64, 1..6), dwell_strategy(), 1..200usize).prop_flat_map(
        |(mut raw, dwell, n)| {
            raw.sort_by(f64::total_cmp);
            raw.dedup_by(|a, b| *a - *b < 1e-6);
            let thresholds = raw;
            (gaps(n..n + 1), prop::collection::vec(0.0..=1.0f64, n)).prop_map(move |(gaps, pis)| SeriesCase {
                cfg: PatternConfig::Revealing(RevealingConfig {
                    thresholds: thresholds.clone(),
                    dwell,
                }),
                gaps,
                pis,
            })
        },
    )
}

/// The level is a monotone function of `pi` (exact with zero dwell) and the
/// emitted `LevelChanged` deltas telescope to the final level.
pub fn check_revealing(case: &SeriesCase) -> Result<(), TestCaseError> {
    let PatternConfig::Revealing(cfg) = &case.cfg else { unreachable!() };
    let times = times_from(&case.gaps);
    let (phases, events) = run(&case.cfg, &times, &case.pis);
    let levels: Vec<usize> = phases
        .iter()
        .map(|p| match p {
            Phase::Level(l) => *l,
            other => panic!("unexpected phase {other:?}"),
        })
        .collect();
    let mut current = 0usize;
    let mut sum = 0i64;
    for e in &events {
        let EventKind::LevelChanged { from, to } = e.kind else {
            return Err(TestCaseError::fail(format!("unexpected {:?}", e.kind)));
        };
        prop_assert_eq!(from, current);
        prop_assert_ne!(from, to);
        sum += to as i64 - from as i64;
        current = to;
    }
    let last = levels.last().copied().unwrap_or(0);
    prop_assert_eq!(current, last);
    prop_assert_eq!(sum, last as i64);
    prop_assert!(levels.iter().all(|&l| l <= cfg.thresholds.len()));
    for (i, w) in [0.0, 0.25, 0.5, 0.75, 1.0].windows(2).enumerate() {
        prop_assert!(cfg.target_level(w[0]) <= cfg.target_level(w[1]), "grid step {i}");
    }
    if cfg.dwell == 0.0 {
        for (&pi, &level) in case.pis.iter().zip(&levels) {
            prop_assert_eq!(level, cfg.target_level(pi));
        }
        let mut order: Vec<usize> = (0..levels.len()).collect();
        order.sort_by(|&a, &b| case.pis[a].total_cmp(&case.pis[b]));
        prop_assert!(order.windows(2).all(|w| levels[w[0]] <= levels[w[1]]));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PulseCase {
    pub cfg: PatternConfig,
    /// `(t, pi)` samples.
    pub samples: Vec<(f64, f64)>,
}

/// A resting baseline interrupted by excursions across the threshold that
/// each last less than the dwell time.
pub fn pulse_case() -> impl Strategy<Value = PulseCase> {
    let pulses = prop::collection::vec((0.0..0.95f64, 1..6usize, 0.0..=1.0f64, 0.0..=1.0f64), 1..20);
    (0..3usize, 0.05..0.95f64, 0.1..0.5f64, 0.005..0.05f64, pulses).prop_map(|(kind, t1, dwell, dt, pulses)| {
        let (cfg, base_lo, base_hi, pulse_lo, pulse_hi) = match kind {
            0 => (
                PatternConfig::Greeting(GreetingConfig { t1, t2: t1 * 0.5, dwell }),
                0.0,
                t1,
                t1,
                1.0,
            ),
            1 => (PatternConfig::TurnTaking(TurnTakingConfig { t1, dwell }), t1, 1.0, 0.0, t1),
            _ => (
                PatternConfig::Revealing(RevealingConfig {
                    thresholds: vec![t1, (t1 + 1.0) / 2.0],
                    dwell,
                }),
                0.0,
                t1,
                t1,
                1.0,
            ),
        };
        let lerp = |lo: f64, hi: f64, u: f64| {
            let v = lo + u * (hi - lo);
            if v < hi || hi == 1.0 {
                v
            } else {
                lo
            }
        };
        let mut samples = Vec::new();
        let mut t = 0.0;
        for (span, gap, u_pulse, u_base) in pulses {
            for _ in 0..gap {
                samples.push((t, lerp(base_lo, base_hi, u_base)));
                t += dt;
            }
            let start = t;
            while t - start <= span * dwell {
                samples.push((t, lerp(pulse_lo, pulse_hi, u_pulse)));
                t += dt;
            }
        }
        samples.push((t, lerp(base_lo, base_hi, 0.5)));
        PulseCase { cfg, samples }
    })
}

pub fn check_dwell_suppression(case: &PulseCase) -> Result<(), TestCaseError> {
    let (times, pis): (Vec<f64>, Vec<f64>) = case.samples.iter().copied().unzip();
    let (_, events) = run(&case.cfg, &times, &pis);
    prop_assert!(events.is_empty(), "sub-dwell pulses produced {events:?}");
    Ok(())
}

/// Identical input gives identical phases and events.
pub fn check_determinism(case: &SeriesCase) -> Result<(), TestCaseError> {
    let times = times_from(&case.gaps);
    let a = run(&case.cfg, &times, &case.pis);
    let b = run(&case.cfg, &times, &case.pis);
    prop_assert_eq!(a, b);
    Ok(())
}
