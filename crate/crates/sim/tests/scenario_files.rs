use admittance_core::adaptation::{AdaptationMode, DampingMode, TriggerMode};
use admittance_core::arm::{StiffeningEvent, TrackingLag, Waypoint};
use admittance_core::sim::Scenario;
use admittance_sim::corpus;
use admittance_sim::scenario_file::{
    parse_scenario, parse_scenario_str, write_scenario_string, ScenarioError,
};
use proptest::prelude::*;

#[test]
fn corpus_round_trips_through_the_writer() {
    for name in corpus::NAMES {
        let once = parse_scenario_str(corpus::source(name).unwrap()).unwrap();
        let twice = parse_scenario_str(&write_scenario_string(&once)).unwrap();
        assert_eq!(once, twice, "{name}");
    }
}

#[test]
fn file_on_disk_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "duration = 0.5\n[tank]\ninitial_energy = 3.0\n").unwrap();
    let sc = parse_scenario(&path).unwrap();
    assert_eq!(sc.duration, 0.5);
    assert_eq!(sc.tank.initial_energy, 3.0);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = parse_scenario(std::path::Path::new("/nonexistent/s.toml")).unwrap_err();
    assert!(matches!(err, ScenarioError::Io { .. }));
}

#[test]
fn syntax_error_reports_its_line() {
    let err = parse_scenario_str("name = \"a\"\nduration = \n").unwrap_err();
    assert!(matches!(err, ScenarioError::Parse { line: 2, .. }), "{err}");
}

#[test]
fn tank_outside_its_bounds_is_rejected() {
    let err = parse_scenario_str("[tank]\ninitial_energy = 7.0\n").unwrap_err();
    match err {
        ScenarioError::Validation { field, .. } => assert_eq!(field, "tank.initial_energy"),
        other => panic!("{other}"),
    }
}

#[test]
fn interval_must_be_whole_ticks() {
    let err = parse_scenario_str("[adaptation]\ninterval = 0.0025\n").unwrap_err();
    assert!(matches!(err, ScenarioError::Validation { .. }), "{err}");
}

fn arbitrary_scenario() -> impl Strategy<Value = Scenario> {
    (
        prop::collection::vec(0.1f64..20.0, 6),
        prop::collection::vec(0.1f64..80.0, 6),
        0.1f64..5.0,
        any::<u32>(),
        prop::bool::ANY,
        prop::bool::ANY,
        prop::bool::ANY,
        1usize..4,
        0.0f64..1.0,
        prop::option::of((1.0f64..50.0, 0.2f64..1.5)),
        prop::collection::vec((0.0f64..0.3, 0.0f64..0.1), 0..4),
    )
        .prop_map(
            |(m, d, duration, seed, tank, ratio, level, delay, noise, lag, points)| {
                let mut sc = Scenario {
                    duration,
                    seed: u64::from(seed),
                    ..Scenario::default()
                };
                sc.params.m = m;
                sc.params.d = d;
                sc.adaptation.mode = if tank {
                    AdaptationMode::Tank
                } else {
                    AdaptationMode::Conservative
                };
                sc.adaptation.damping_mode = if ratio {
                    DampingMode::ConstantRatio
                } else {
                    DampingMode::ConstantDamping
                };
                sc.adaptation.trigger = if level {
                    TriggerMode::Level
                } else {
                    TriggerMode::Rising
                };
                sc.arm.sensor_delay = delay;
                sc.arm.noise_std = noise;
                sc.tracking = lag.map(|(bandwidth, damping_ratio)| TrackingLag {
                    bandwidth,
                    damping_ratio,
                });
                let mut t = 0.0;
                sc.arm.waypoints = points
                    .into_iter()
                    .map(|(dt, x)| {
                        t += dt + 0.01;
                        Waypoint { t, x: vec![x; 6] }
                    })
                    .collect();
                sc.arm.events.push(StiffeningEvent {
                    t_start: 0.2,
                    t_end: 0.4,
                    k_stiff: vec![duration * 1000.0; 6],
                    onset: 0.05,
                });
                sc
            },
        )
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(sc in arbitrary_scenario()) {
        prop_assume!(sc.validate().is_ok());
        let text = write_scenario_string(&sc);
        let back = parse_scenario_str(&text).unwrap();
        prop_assert_eq!(&back, &sc);
        prop_assert_eq!(write_scenario_string(&back), text);
    }
}
