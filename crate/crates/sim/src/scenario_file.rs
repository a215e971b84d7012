//! TOML scenario files.
//!
//! Every key is optional; omitted keys take the defaults below. Unknown keys
//! are rejected. Units are SI, with rotational DOFs in rad, rad/s and N·m.
//!
//! | key | default |
//! |-----|---------|
//! | `name` | `"scenario"` |
//! | `duration` (s) | `1.0` |
//! | `dt` (s) | `0.001` |
//! | `seed` | `0` |
//! | `dofs` | three `"translation"` then three `"rotation"` |
//! | `initial_velocity` | zeros |
//! | `params.inertia` | 2 kg per translation, 0.5 kg·m² per rotation |
//! | `params.damping` | 30 N·s/m per translation, 3 N·m·s/rad per rotation |
//! | `detector.epsilon` | `10` |
//! | `detector.window` (s) | `0.030` |
//! | `detector.accel_cutoff` (Hz, `inf` disables) | `20` |
//! | `limits.velocity` | `[1.3, 1.5, 1.3, 0.9, 0.9, 0.9]` for six DOFs, else 1.3 / 0.9 per kind |
//! | `limits.delta` (J) | `0.1` |
//! | `limits.t_bar` (J) | `5` |
//! | `tank.initial_energy` (J) | `2` |
//! | `tank.split_metering` | `false` |
//! | `adaptation.enabled` | `true` |
//! | `adaptation.mode` | `"tank"` (or `"conservative"`) |
//! | `adaptation.damping_mode` | `"constant_damping"` (or `"constant_ratio"`) |
//! | `adaptation.trigger` | `"rising"` (or `"level"`) |
//! | `adaptation.interval` (s) | `0.003` |
//! | `adaptation.delta_m_cap` | 1.5 per translation, 0.15 per rotation |
//! | `adaptation.dwell` (s) | `0.2` |
//! | `arm.stiffness` | 300 per DOF |
//! | `arm.damping` | 10 per DOF |
//! | `arm.sensor_delay` (ticks) | `1` |
//! | `arm.noise_std` | `0` |
//! | `arm.waypoints` | none (hand holds the origin) |
//! | `arm.sinusoid` | none |
//! | `arm.events` | none |
//! | `tracking` | none (ideal position loop) |

use std::path::Path;

use admittance_core::adaptation::{AdaptationConfig, AdaptationMode, DampingMode, TriggerMode};
use admittance_core::admittance::IntegratorConfig;
use admittance_core::arm::{ArmModel, Sinusoid, StiffeningEvent, TrackingLag, Waypoint};
use admittance_core::detector::DetectorConfig;
use admittance_core::sim::{Scenario, TankConfig};
use admittance_core::{AdmittanceParams, CoreError, DofKind, DofLayout, SafetyLimits};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
}

impl From<CoreError> for ScenarioError {
    fn from(e: CoreError) -> Self {
        let field = match &e {
            CoreError::NonPositiveParameter { kind, index } => {
                let key = match kind {
                    admittance_core::ParamKind::Inertia => "params.inertia",
                    admittance_core::ParamKind::Damping => "params.damping",
                };
                format!("{key}[{index}]")
            }
            CoreError::DimensionMismatch { what, .. } => (*what).to_string(),
            CoreError::InvalidConfig { field, .. } => (*field).to_string(),
            other => format!("{other:?}"),
        };
        ScenarioError::Validation {
            field,
            reason: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindKey {
    Translation,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeKey {
    Conservative,
    Tank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DampingKey {
    ConstantDamping,
    ConstantRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TriggerKey {
    Rising,
    Level,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    name: Option<String>,
    duration: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
    dofs: Option<Vec<KindKey>>,
    initial_velocity: Option<Vec<f64>>,
    #[serde(default)]
    params: ParamsDoc,
    #[serde(default)]
    detector: DetectorDoc,
    #[serde(default)]
    limits: LimitsDoc,
    #[serde(default)]
    tank: TankDoc,
    #[serde(default)]
    adaptation: AdaptationDoc,
    #[serde(default)]
    arm: ArmDoc,
    tracking: Option<TrackingDoc>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    inertia: Option<Vec<f64>>,
    damping: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorDoc {
    epsilon: Option<f64>,
    window: Option<f64>,
    accel_cutoff: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsDoc {
    velocity: Option<Vec<f64>>,
    delta: Option<f64>,
    t_bar: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TankDoc {
    initial_energy: Option<f64>,
    split_metering: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdaptationDoc {
    enabled: Option<bool>,
    mode: Option<ModeKey>,
    damping_mode: Option<DampingKey>,
    trigger: Option<TriggerKey>,
    interval: Option<f64>,
    delta_m_cap: Option<Vec<f64>>,
    dwell: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmDoc {
    stiffness: Option<Vec<f64>>,
    damping: Option<Vec<f64>>,
    sensor_delay: Option<usize>,
    noise_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    waypoints: Vec<WaypointDoc>,
    sinusoid: Option<SinusoidDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    events: Vec<EventDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointDoc {
    t: f64,
    x: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SinusoidDoc {
    amplitude: Vec<f64>,
    frequency: f64,
    #[serde(default)]
    phase: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventDoc {
    t_start: f64,
    t_end: f64,
    stiffness: Vec<f64>,
    #[serde(default = "default_onset")]
    onset: f64,
}

fn default_onset() -> f64 {
    0.05
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackingDoc {
    bandwidth: f64,
    damping_ratio: f64,
}

fn per_kind(layout: &DofLayout, translation: f64, rotation: f64) -> Vec<f64> {
    layout
        .kinds()
        .iter()
        .map(|k| match k {
            DofKind::Translation => translation,
            DofKind::Rotation => rotation,
        })
        .collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a scenario document.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: FileDoc = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        reason: e.message().to_string(),
    })?;
    let scenario = from_doc(doc)?;
    scenario.validate()?;
    Ok(scenario)
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

fn from_doc(doc: FileDoc) -> Result<Scenario, ScenarioError> {
    let layout = match doc.dofs {
        None => DofLayout::cartesian6(),
        Some(kinds) => DofLayout::new(
            kinds
                .into_iter()
                .map(|k| match k {
                    KindKey::Translation => DofKind::Translation,
                    KindKey::Rotation => DofKind::Rotation,
                })
                .collect(),
        )?,
    };
    let n = layout.n();
    let six_dof_velocity = layout == DofLayout::cartesian6();
    let defaults = Scenario::default();

    let params = AdmittanceParams {
        m: doc
            .params
            .inertia
            .unwrap_or_else(|| per_kind(&layout, 2.0, 0.5)),
        d: doc
            .params
            .damping
            .unwrap_or_else(|| per_kind(&layout, 30.0, 3.0)),
    };
    let detector = DetectorConfig {
        epsilon: doc.detector.epsilon.unwrap_or(defaults.detector.epsilon),
        window: doc.detector.window.unwrap_or(defaults.detector.window),
        accel_cutoff: doc
            .detector
            .accel_cutoff
            .unwrap_or(defaults.detector.accel_cutoff),
    };
    let limits = SafetyLimits {
        v_max: doc.limits.velocity.unwrap_or_else(|| {
            if six_dof_velocity {
                defaults.limits.v_max.clone()
            } else {
                per_kind(&layout, 1.3, 0.9)
            }
        }),
        delta: doc.limits.delta.unwrap_or(defaults.limits.delta),
        t_bar: doc.limits.t_bar.unwrap_or(defaults.limits.t_bar),
    };
    let tank = TankConfig {
        initial_energy: doc
            .tank
            .initial_energy
            .unwrap_or(defaults.tank.initial_energy),
        split_metering: doc.tank.split_metering.unwrap_or(false),
    };
    let base = AdaptationConfig::for_layout(&layout);
    let adaptation = AdaptationConfig {
        enabled: doc.adaptation.enabled.unwrap_or(true),
        mode: match doc.adaptation.mode {
            Some(ModeKey::Conservative) => AdaptationMode::Conservative,
            Some(ModeKey::Tank) | None => AdaptationMode::Tank,
        },
        damping_mode: match doc.adaptation.damping_mode {
            Some(DampingKey::ConstantRatio) => DampingMode::ConstantRatio,
            Some(DampingKey::ConstantDamping) | None => DampingMode::ConstantDamping,
        },
        trigger: match doc.adaptation.trigger {
            Some(TriggerKey::Level) => TriggerMode::Level,
            Some(TriggerKey::Rising) | None => TriggerMode::Rising,
        },
        dt_adapt: doc.adaptation.interval.unwrap_or(base.dt_adapt),
        delta_m_cap: doc.adaptation.delta_m_cap.unwrap_or(base.delta_m_cap),
        dwell: doc.adaptation.dwell.unwrap_or(base.dwell),
    };
    let compliant = ArmModel::compliant(n);
    let arm = ArmModel {
        k_h: doc.arm.stiffness.unwrap_or(compliant.k_h),
        d_h: doc.arm.damping.unwrap_or(compliant.d_h),
        waypoints: doc
            .arm
            .waypoints
            .into_iter()
            .map(|w| Waypoint { t: w.t, x: w.x })
            .collect(),
        sinusoid: doc.arm.sinusoid.map(|s| Sinusoid {
            amplitude: s.amplitude,
            frequency: s.frequency,
            phase: s.phase,
        }),
        events: doc
            .arm
            .events
            .into_iter()
            .map(|e| StiffeningEvent {
                t_start: e.t_start,
                t_end: e.t_end,
                k_stiff: e.stiffness,
                onset: e.onset,
            })
            .collect(),
        sensor_delay: doc.arm.sensor_delay.unwrap_or(compliant.sensor_delay),
        noise_std: doc.arm.noise_std.unwrap_or(0.0),
    };
    Ok(Scenario {
        name: doc.name.unwrap_or_else(|| "scenario".to_string()),
        integrator: IntegratorConfig {
            dt: doc.dt.unwrap_or(defaults.integrator.dt),
        },
        params,
        detector,
        limits,
        tank,
        adaptation,
        arm,
        tracking: doc.tracking.map(|t| TrackingLag {
            bandwidth: t.bandwidth,
            damping_ratio: t.damping_ratio,
        }),
        initial_velocity: doc.initial_velocity.unwrap_or_else(|| vec![0.0; n]),
        duration: doc.duration.unwrap_or(defaults.duration),
        seed: doc.seed.unwrap_or(0),
        layout,
    })
}

fn to_doc(sc: &Scenario) -> FileDoc {
    let a = &sc.adaptation;
    FileDoc {
        name: Some(sc.name.clone()),
        duration: Some(sc.duration),
        dt: Some(sc.integrator.dt),
        seed: Some(sc.seed),
        dofs: Some(
            sc.layout
                .kinds()
                .iter()
                .map(|k| match k {
                    DofKind::Translation => KindKey::Translation,
                    DofKind::Rotation => KindKey::Rotation,
                })
                .collect(),
        ),
        initial_velocity: Some(sc.initial_velocity.clone()),
        params: ParamsDoc {
            inertia: Some(sc.params.m.clone()),
            damping: Some(sc.params.d.clone()),
        },
        detector: DetectorDoc {
            epsilon: Some(sc.detector.epsilon),
            window: Some(sc.detector.window),
            accel_cutoff: Some(sc.detector.accel_cutoff),
        },
        limits: LimitsDoc {
            velocity: Some(sc.limits.v_max.clone()),
            delta: Some(sc.limits.delta),
            t_bar: Some(sc.limits.t_bar),
        },
        tank: TankDoc {
            initial_energy: Some(sc.tank.initial_energy),
            split_metering: Some(sc.tank.split_metering),
        },
        adaptation: AdaptationDoc {
            enabled: Some(a.enabled),
            mode: Some(match a.mode {
                AdaptationMode::Conservative => ModeKey::Conservative,
                AdaptationMode::Tank => ModeKey::Tank,
            }),
            damping_mode: Some(match a.damping_mode {
                DampingMode::ConstantDamping => DampingKey::ConstantDamping,
                DampingMode::ConstantRatio => DampingKey::ConstantRatio,
            }),
            trigger: Some(match a.trigger {
                TriggerMode::Rising => TriggerKey::Rising,
                TriggerMode::Level => TriggerKey::Level,
            }),
            interval: Some(a.dt_adapt),
            delta_m_cap: Some(a.delta_m_cap.clone()),
            dwell: Some(a.dwell),
        },
        arm: ArmDoc {
            stiffness: Some(sc.arm.k_h.clone()),
            damping: Some(sc.arm.d_h.clone()),
            sensor_delay: Some(sc.arm.sensor_delay),
            noise_std: Some(sc.arm.noise_std),
            waypoints: sc
                .arm
                .waypoints
                .iter()
                .map(|w| WaypointDoc {
                    t: w.t,
                    x: w.x.clone(),
                })
                .collect(),
            sinusoid: sc.arm.sinusoid.as_ref().map(|s| SinusoidDoc {
                amplitude: s.amplitude.clone(),
                frequency: s.frequency,
                phase: s.phase,
            }),
            events: sc
                .arm
                .events
                .iter()
                .map(|e| EventDoc {
                    t_start: e.t_start,
                    t_end: e.t_end,
                    stiffness: e.k_stiff.clone(),
                    onset: e.onset,
                })
                .collect(),
        },
        tracking: sc.tracking.map(|t| TrackingDoc {
            bandwidth: t.bandwidth,
            damping_ratio: t.damping_ratio,
        }),
    }
}

/// Serializes a scenario with every key spelled out.
pub fn write_scenario_string(sc: &Scenario) -> String {
    toml::to_string(&to_doc(sc)).expect("scenario documents always serialize")
}
