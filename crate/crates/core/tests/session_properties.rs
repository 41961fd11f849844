use fields_core::geometry::{polygon_iou, ConvexPolygon, Vec2};
use fields_core::patterns::{EventKind, PatternConfig};
use fields_core::service::{ClientEnvelope, ClientMessage, ServerMessage, Session, Snapshot};
use fields_core::simulator::load_scenario_value;
use proptest::prelude::*;
use serde_json::{json, Value};

fn document() -> Value {
    json!({
        "version": "fields-scenario/1",
        "duration": 10.0,
        "polygon_n": 32,
        "devices": [
            {"name": "speaker", "position": [2.5, 2.5], "radius": 1.0, "directionality": "non_directional"},
            {"name": "tv", "position": [2.5, 0.0], "facing": std::f64::consts::FRAC_PI_2, "radius": 3.0,
             "directionality": "directional"}
        ],
        "actors": [
            {"name": "user", "trajectory": [
                {"t": 0.0, "position": [0.5, 0.5]}, {"t": 4.0, "position": [2.5, 2.5]},
                {"t": 8.0, "position": [4.5, 1.0]}]},
            {"name": "guest", "params": {"k": 0.5}, "trajectory": [{"t": 0.0, "position": [2.5, 1.5]}]}
        ],
        "bindings": [
            {"actor": "user", "device": "speaker", "pattern": {"kind": "greeting", "t1": 0.6, "dwell": 0.1}},
            {"actor": "user", "device": "tv", "pattern": {"kind": "turn_taking", "t1": 0.14, "dwell": 0.0}},
            {"actor": "guest", "device": "tv", "pattern": {"kind": "revealing", "thresholds": [0.1, 0.2, 0.3]}}
        ]
    })
}

#[derive(Debug, Clone)]
enum Op {
    Tick(usize),
    Move { actor: &'static str, x: f64, y: f64 },
    Set { path: &'static str, value: Value },
    PauseResume,
    Reset,
}

fn set_param() -> impl Strategy<Value = Op> {
    let ratio = || -0.2..1.2f64;
    prop_oneof![
        (0.0..1.5f64).prop_map(|v| ("actors[0].k", json!(v))),
        (0.3..2.5f64).prop_map(|v| ("actors[guest].rest_radius", json!(v))),
        (0.2..4.0f64).prop_map(|v| ("devices[0].radius", json!(v))),
        (-4.0..4.0f64).prop_map(|v| ("devices[tv].facing", json!(v))),
        ratio().prop_map(|v| ("bindings[0].greeting.t1", json!(v))),
        ratio().prop_map(|v| ("bindings[0].greeting.t2", json!(v))),
        ratio().prop_map(|v| ("bindings[1].turn_taking.t1", json!(v))),
        (-0.1..0.5f64).prop_map(|v| ("bindings[1].turn_taking.dwell", json!(v))),
        prop::collection::vec(0.0..1.0f64, 0..5).prop_map(|v| ("bindings[2].revealing.thresholds", json!(v))),
        Just(("bindings[2].revealing.thresholds", json!([0.05]))),
        (0.0..0.5f64).prop_map(|v| ("bindings[2].revealing.dwell", json!(v))),
        prop_oneof![Just(16), Just(64), Just(3)].prop_map(|v| ("polygon_n", json!(v))),
        Just(("tick_rate", json!(40.0))),
        Just(("bindings[0].revealing.t1", json!(0.5))),
        Just(("actors[7].k", json!(0.5))),
        Just(("actors[0].k", json!("fast"))),
    ]
    .prop_map(|(path, value)| Op::Set { path, value })
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (1..8usize).prop_map(Op::Tick),
        3 => (prop_oneof![Just("user"), Just("guest"), Just("ghost")], -0.5..5.5f64, -0.5..5.5f64)
            .prop_map(|(actor, x, y)| Op::Move { actor, x, y }),
        3 => set_param(),
        1 => Just(Op::PauseResume),
        1 => Just(Op::Reset),
    ]
}

fn polygon(vertices: &[Vec2]) -> ConvexPolygon {
    ConvexPolygon::new(vertices.to_vec()).expect("snapshot polygons are convex")
}

fn check_snapshot(session: &Session, snap: &Snapshot) -> Result<(), TestCaseError> {
    let config = session.config();
    let n = config.polygon_n;
    for a in &snap.actors {
        prop_assert_eq!(a.field.len(), n);
    }
    for d in &snap.devices {
        prop_assert_eq!(d.field.len(), n);
    }
    for (i, b) in snap.bindings.iter().enumerate() {
        let actor = config.actor_index(&b.actor).unwrap();
        let device = config.device_index(&b.device).unwrap();
        let recomputed = polygon_iou(&polygon(&snap.actors[actor].field), &polygon(&snap.devices[device].field));
        prop_assert!((recomputed - b.pi).abs() <= 1e-12, "binding {i}: {} vs {recomputed}", b.pi);
        let events: Vec<_> = snap.events.iter().filter(|e| e.actor == b.actor && e.device == b.device).collect();
        prop_assert!(events.len() <= 1);
        let pattern = &config.bindings[i].pattern;
        match pattern {
            PatternConfig::Greeting(_) => prop_assert!(b.state == "sleep" || b.state == "active"),
            PatternConfig::TurnTaking(_) => prop_assert!(b.state == "playing" || b.state == "paused"),
            PatternConfig::Revealing(c) => {
                let level: usize = b.state.strip_prefix("level:").unwrap().parse().unwrap();
                prop_assert!(level <= c.thresholds.len());
            }
        }
        for e in events {
            prop_assert_eq!(e.event.t, snap.t);
            let ok = match (pattern, e.event.kind) {
                (PatternConfig::Greeting(c), EventKind::WakeUp) => b.pi >= c.t1 && b.state == "active",
                (PatternConfig::Greeting(c), EventKind::Sleep) => b.pi < c.t2 && b.state == "sleep",
                (PatternConfig::TurnTaking(c), EventKind::Pause) => b.pi < c.t1 && b.state == "paused",
                (PatternConfig::TurnTaking(c), EventKind::Resume) => b.pi >= c.t1 && b.state == "playing",
                (PatternConfig::Revealing(c), EventKind::LevelChanged { from, to }) => {
                    from != to && c.target_level(b.pi) == to && b.state == format!("level:{to}")
                }
                _ => false,
            };
            prop_assert!(ok, "{:?} inconsistent with pi {} and state {}", e.event, b.pi, b.state);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn no_interleaving_breaks_pattern_invariants(ops in prop::collection::vec(op(), 1..60)) {
        let mut session = Session::new(load_scenario_value(document()).unwrap()).unwrap();
        let mut id = 0;
        for op in ops {
            id += 1;
            let message = match op {
                Op::Tick(count) => {
                    for _ in 0..count {
                        match session.tick_and_snapshot() {
                            Some(ServerMessage::Snapshot(snap)) => check_snapshot(&session, &snap)?,
                            Some(other) => prop_assert!(false, "tick produced {other:?}"),
                            None => prop_assert!(session.is_paused()),
                        }
                    }
                    continue;
                }
                Op::Move { actor, x, y } => ClientMessage::MoveActor { name: actor.into(), position: Vec2::new(x, y) },
                Op::Set { path, value } => ClientMessage::SetParam { path: path.into(), value },
                Op::PauseResume => ClientMessage::PauseResume,
                Op::Reset => ClientMessage::Reset,
            };
            let before = session.config().clone();
            match session.apply(&ClientEnvelope::new(id, message)) {
                ServerMessage::Ack { id: acked } => prop_assert_eq!(acked, id),
                ServerMessage::Error { id: errored, .. } => {
                    prop_assert_eq!(errored, Some(id));
                    prop_assert_eq!(session.config(), &before);
                }
                other => prop_assert!(false, "unexpected reply {other:?}"),
            }
        }
    }
}
