//! Scenario description and the closed-loop tick loop.
//!
//! Each control tick `k` (time `t_k = k Δt`) does, in order:
//!
//! 1. read the interaction force from the arm (or a recorded force trace),
//! 2. re-estimate the acceleration from the measured velocity,
//! 3. evaluate `ψ` and update the detector,
//! 4. let the adaptation policy start or continue a ramp,
//! 5. meter the tank with the powers of this tick,
//! 6. record the tick,
//! 7. advance the admittance model and clamp the velocity,
//! 8. advance the tracked pose and feed it to the arm's delay line.
//!
//! A record holds the state at `t_k`, the force applied during the step and
//! the parameters in effect for that step. The tank level is the one at
//! `t_k`, before metering.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::adaptation::{AdaptationConfig, AdaptationPlan, AdaptationPolicy};
use crate::admittance::{step_admittance, IntegratorConfig};
use crate::arm::{arm_force, ArmModel, DelayLine, ForceNoise, TrackingLag};
use crate::detector::{compute_psi, DetectorConfig, DetectorState};
use crate::error::CoreError;
use crate::tank::{tank_powers, TankState};
use crate::types::{
    clamp_velocity_in_place, validate_params, AdmittanceParams, DofLayout, ForceSample, RobotState,
    SafetyLimits,
};

/// Longest scenario accepted, in control ticks.
pub const MAX_TICKS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankConfig {
    /// `T(0)` (J).
    pub initial_energy: f64,
    pub split_metering: bool,
}

impl Default for TankConfig {
    fn default() -> Self {
        Self {
            initial_energy: 2.0,
            split_metering: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub layout: DofLayout,
    pub integrator: IntegratorConfig,
    /// Parameters at `t = 0`.
    pub params: AdmittanceParams,
    pub detector: DetectorConfig,
    pub limits: SafetyLimits,
    pub tank: TankConfig,
    pub adaptation: AdaptationConfig,
    pub arm: ArmModel,
    /// Low-level position loop; `None` tracks the reference exactly.
    pub tracking: Option<TrackingLag>,
    pub initial_velocity: Vec<f64>,
    /// s.
    pub duration: f64,
    pub seed: u64,
}

impl Default for Scenario {
    /// Six DOFs, nominal gains, a compliant hand at rest, one second.
    fn default() -> Self {
        let layout = DofLayout::cartesian6();
        Self {
            name: String::from("default"),
            integrator: IntegratorConfig::default(),
            params: AdmittanceParams {
                m: vec![2.0, 2.0, 2.0, 0.5, 0.5, 0.5],
                d: vec![30.0, 30.0, 30.0, 3.0, 3.0, 3.0],
            },
            detector: DetectorConfig::default(),
            limits: SafetyLimits {
                v_max: vec![1.3, 1.5, 1.3, 0.9, 0.9, 0.9],
                delta: 0.1,
                t_bar: 5.0,
            },
            tank: TankConfig::default(),
            adaptation: AdaptationConfig::for_layout(&layout),
            arm: ArmModel::compliant(layout.n()),
            tracking: None,
            initial_velocity: vec![0.0; layout.n()],
            duration: 1.0,
            seed: 0,
            layout,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), CoreError> {
        let n = self.layout.n();
        self.integrator.validate()?;
        validate_params(&self.params)?;
        if self.params.n() != n {
            return Err(CoreError::DimensionMismatch {
                what: "params",
                expected: n,
                found: self.params.n(),
            });
        }
        self.detector.validate()?;
        if self.limits.v_max.len() != n {
            return Err(CoreError::DimensionMismatch {
                what: "limits.velocity",
                expected: n,
                found: self.limits.v_max.len(),
            });
        }
        self.limits.validate()?;
        TankState::new(self.tank.initial_energy, &self.limits)?;
        self.adaptation.validate(n, self.integrator.dt)?;
        self.arm.validate(n)?;
        if let Some(lag) = &self.tracking {
            lag.validate()?;
        }
        if self.initial_velocity.len() != n {
            return Err(CoreError::DimensionMismatch {
                what: "initial_velocity",
                expected: n,
                found: self.initial_velocity.len(),
            });
        }
        if self.initial_velocity.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::config(
                "initial_velocity",
                "entries must be finite",
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(CoreError::config("duration", "must be > 0"));
        }
        if self.duration / self.integrator.dt > MAX_TICKS as f64 {
            return Err(CoreError::config("duration", "too many control ticks"));
        }
        Ok(())
    }

    /// Number of control ticks, `round(duration / dt)`.
    pub fn ticks(&self) -> usize {
        (libm::round(self.duration / self.integrator.dt) as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub x: Vec<f64>,
    /// Reference velocity of the admittance model.
    pub v: Vec<f64>,
    /// Acceleration estimate used by the detector.
    pub a_est: Vec<f64>,
    pub f_ext: Vec<f64>,
    pub psi: f64,
    pub psi_avg: f64,
    pub flag: bool,
    pub m: Vec<f64>,
    pub d: Vec<f64>,
    /// Tank level at `t`, before this tick's metering.
    pub tank_t: f64,
    pub phi: bool,
    pub gamma: bool,
    pub p_d: f64,
    pub p_m: f64,
    pub adapting: bool,
}

/// An adaptation started during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEvent {
    pub t: f64,
    /// Tick at which the ramp ends (exclusive).
    pub end_tick: usize,
    pub plan: AdaptationPlan,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub dt: f64,
    pub records: Vec<TraceRecord>,
    /// Velocity after the last step; `None` for traces read back from disk.
    pub final_velocity: Option<Vec<f64>>,
    /// Ticks at which a rounding-size tank shortfall was clamped.
    pub floor_clamps: Vec<usize>,
    pub plans: Vec<PlanEvent>,
    /// Ticks at which the velocity bound was hit.
    pub velocity_clamps: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dofs(&self) -> usize {
        self.records.first().map_or(0, |r| r.x.len())
    }

    /// One column of the per-DOF velocity.
    pub fn velocity(&self, j: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.v[j]).collect()
    }

    /// Time of the first tick whose flag is up, at or after `from`.
    pub fn first_flag_after(&self, from: f64) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.t >= from - 1e-12 && r.flag)
            .map(|r| r.t)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("invalid scenario: {0}")]
    Invalid(CoreError),
    #[error("scenario aborted at t = {t} s: {cause}")]
    Aborted {
        t: f64,
        cause: CoreError,
        partial: Box<Trace>,
    },
}

// one per run, so the size difference does not matter
#[allow(clippy::large_enum_variant)]
enum ForceSource<'a> {
    Arm {
        arm: &'a ArmModel,
        delay: DelayLine,
        noise: ForceNoise,
    },
    Recorded(&'a [Vec<f64>]),
}

impl ForceSource<'_> {
    fn force(&mut self, k: usize, t: f64) -> Vec<f64> {
        match self {
            ForceSource::Arm { arm, delay, noise } => {
                let (x, v) = delay.read();
                let mut f = arm_force(arm, x, v, t).f;
                noise.apply(&mut f);
                f
            }
            ForceSource::Recorded(forces) => forces[k].clone(),
        }
    }

    fn observe(&mut self, x: &[f64], v: &[f64]) {
        if let ForceSource::Arm { delay, .. } = self {
            delay.push(x, v);
        }
    }
}

/// Runs a scenario against its arm model.
pub fn run_scenario(sc: &Scenario) -> Result<Trace, RunError> {
    sc.validate().map_err(RunError::Invalid)?;
    let source = ForceSource::Arm {
        arm: &sc.arm,
        delay: DelayLine::new(
            sc.arm.sensor_delay,
            &vec![0.0; sc.layout.n()],
            &sc.initial_velocity,
        ),
        noise: ForceNoise::new(sc.arm.noise_std, sc.seed),
    };
    run_loop(sc, source, sc.ticks())
}

/// Runs a scenario open loop, driven by a prescribed force per tick. The
/// arm model of `sc` is ignored; the run lasts `forces.len()` ticks.
pub fn run_force_driven(sc: &Scenario, forces: &[Vec<f64>]) -> Result<Trace, RunError> {
    sc.validate().map_err(RunError::Invalid)?;
    let n = sc.layout.n();
    if let Some(bad) = forces.iter().find(|f| f.len() != n) {
        return Err(RunError::Invalid(CoreError::DimensionMismatch {
            what: "force trace",
            expected: n,
            found: bad.len(),
        }));
    }
    run_loop(sc, ForceSource::Recorded(forces), forces.len())
}

fn run_loop(sc: &Scenario, mut source: ForceSource<'_>, ticks: usize) -> Result<Trace, RunError> {
    let n = sc.layout.n();
    let dt = sc.integrator.dt;
    let invalid = RunError::Invalid;

    let mut state = RobotState::at_rest(n);
    state.v.clone_from(&sc.initial_velocity);
    let (mut x_act, mut v_act) = (state.x.clone(), state.v.clone());
    let mut detector =
        DetectorState::with_initial_velocity(sc.detector, &v_act, dt).map_err(invalid)?;
    let mut tank = TankState::new(sc.tank.initial_energy, &sc.limits)
        .map_err(invalid)?
        .with_split_metering(sc.tank.split_metering);
    let mut policy = AdaptationPolicy::new(
        sc.adaptation.clone(),
        sc.layout.clone(),
        sc.limits.clone(),
        dt,
    )
    .map_err(invalid)?;
    let ramp_ticks = sc.adaptation.ramp_ticks(dt);
    let mut params = sc.params.clone();

    let mut trace = Trace {
        dt,
        records: Vec::with_capacity(ticks),
        ..Trace::default()
    };

    for k in 0..ticks {
        let t = k as f64 * dt;
        state.t = t;
        let f = source.force(k, t);
        let a_hat = detector.estimate_acceleration(&v_act, dt).to_vec();
        let psi = compute_psi(&f, &a_hat, &v_act, &params);
        let flag = detector.update(psi, t);

        let tick = policy.tick(flag, t, &mut params, &tank);
        if let Some(plan) = tick.started {
            trace.plans.push(PlanEvent {
                t,
                end_tick: k + ramp_ticks,
                plan,
            });
        }

        let pw = tank_powers(&state.v, &params, &tick.m_dot);
        let tank_t = tank.energy();
        let metered = match tank.step(&pw, dt) {
            Ok(step) => step,
            Err(cause) => {
                return Err(RunError::Aborted {
                    t,
                    cause,
                    partial: Box::new(trace),
                })
            }
        };
        if metered.floor_clamped {
            trace.floor_clamps.push(k);
        }

        trace.records.push(TraceRecord {
            t,
            x: state.x.clone(),
            v: state.v.clone(),
            a_est: a_hat,
            f_ext: f.clone(),
            psi,
            psi_avg: detector.moving_average(),
            flag,
            m: params.m.clone(),
            d: params.d.clone(),
            tank_t,
            phi: metered.phi,
            gamma: metered.gamma,
            p_d: pw.p_d,
            p_m: pw.p_m,
            adapting: tick.adapting,
        });

        let mut next = match step_admittance(&state, &params, &ForceSample { f, t }, &sc.integrator)
        {
            Ok(next) => next,
            Err(cause) => {
                return Err(RunError::Aborted {
                    t,
                    cause,
                    partial: Box::new(trace),
                })
            }
        };
        if clamp_velocity_in_place(&mut next.v, &sc.limits.v_max) {
            trace.velocity_clamps += 1;
            for j in 0..n {
                next.x[j] = state.x[j] + next.v[j] * dt;
            }
        }
        state = next;

        match &sc.tracking {
            Some(lag) => lag.step(&mut x_act, &mut v_act, &state.x, dt),
            None => {
                x_act.clone_from(&state.x);
                v_act.clone_from(&state.v);
            }
        }
        source.observe(&x_act, &v_act);
    }
    trace.final_velocity = Some(state.v);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::AdaptationMode;
    use crate::arm::{StiffeningEvent, Waypoint};

    fn quiet() -> Scenario {
        Scenario {
            arm: ArmModel::detached(6),
            ..Scenario::default()
        }
    }

    #[test]
    fn zero_force_gives_zero_trace() {
        let trace = run_scenario(&quiet()).unwrap();
        assert_eq!(trace.len(), 1000);
        for r in &trace.records {
            assert!(r.x.iter().chain(&r.v).chain(&r.f_ext).all(|x| *x == 0.0));
            assert_eq!(r.psi, 0.0);
            assert!(!r.flag);
        }
    }

    #[test]
    fn times_are_monotone_and_one_per_tick() {
        let trace = run_scenario(&Scenario::default()).unwrap();
        for (k, r) in trace.records.iter().enumerate() {
            assert_eq!(r.t, k as f64 * 0.001);
        }
    }

    #[test]
    fn default_scenario_is_valid() {
        assert_eq!(Scenario::default().validate(), Ok(()));
        let bad = Scenario {
            duration: 0.0,
            ..Scenario::default()
        };
        assert!(bad.validate().is_err());
        let bad = Scenario {
            initial_velocity: vec![0.0; 3],
            ..Scenario::default()
        };
        assert!(matches!(
            run_scenario(&bad),
            Err(RunError::Invalid(CoreError::DimensionMismatch { .. }))
        ));
    }

    #[test]
    fn compliant_guidance_never_flags() {
        let mut sc = Scenario {
            duration: 4.0,
            ..Scenario::default()
        };
        sc.arm.waypoints = vec![
            Waypoint {
                t: 0.5,
                x: vec![0.0; 6],
            },
            Waypoint {
                t: 2.0,
                x: vec![0.2, -0.1, 0.05, 0.0, 0.0, 0.1],
            },
            Waypoint {
                t: 3.5,
                x: vec![0.0; 6],
            },
        ];
        let trace = run_scenario(&sc).unwrap();
        assert!(trace.records.iter().all(|r| !r.flag));
        assert!(trace.records.iter().any(|r| r.v[0].abs() > 0.05));
    }

    fn stiff(adapt: bool) -> Scenario {
        // constant-ratio gains; 30 kN/m is above the critical stiffness of
        // about 25 kN/m for a one-tick delay
        let mut sc = Scenario {
            duration: 3.0,
            ..Scenario::default()
        };
        sc.params.d = vec![15.0, 15.0, 15.0, 2.0, 2.0, 2.0];
        sc.adaptation.enabled = adapt;
        sc.adaptation.damping_mode = crate::adaptation::DampingMode::ConstantRatio;
        sc.adaptation.delta_m_cap = vec![0.09, 0.09, 0.09, 0.012, 0.012, 0.012];
        sc.adaptation.dwell = 0.003;
        sc.adaptation.trigger = crate::adaptation::TriggerMode::Level;
        sc.arm.events.push(StiffeningEvent {
            t_start: 1.0,
            t_end: 3.0,
            k_stiff: vec![30_000.0, 300.0, 300.0, 300.0, 300.0, 300.0],
            onset: 0.1,
        });
        sc.arm.waypoints = vec![
            Waypoint {
                t: 0.0,
                x: vec![0.0; 6],
            },
            Waypoint {
                t: 3.0,
                x: vec![0.06, 0.0, 0.0, 0.0, 0.0, 0.0],
            },
        ];
        sc
    }

    #[test]
    fn stiff_grasp_without_adaptation_keeps_flagging() {
        let trace = run_scenario(&stiff(false)).unwrap();
        let onset = trace.first_flag_after(1.0).expect("flag after stiffening");
        assert!(onset > 1.0 && onset < 1.3, "{onset}");
        assert!(trace.records.iter().filter(|r| r.t < 1.0).all(|r| !r.flag));
        assert!(trace.records.last().unwrap().flag);
    }

    #[test]
    fn adaptation_stops_the_oscillation() {
        let trace = run_scenario(&stiff(true)).unwrap();
        assert!(!trace.plans.is_empty());
        assert!(trace
            .plans
            .iter()
            .all(|p| p.plan.rule == AdaptationMode::Tank));
        let last = trace.records.last().unwrap();
        assert!(!last.flag);
        assert!(last.m[0] > 2.0);
    }

    #[test]
    fn tank_level_stays_in_bounds() {
        let trace = run_scenario(&stiff(true)).unwrap();
        for r in &trace.records {
            assert!(r.tank_t >= 0.1 && r.tank_t <= 5.0);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let mut sc = stiff(true);
        sc.arm.noise_std = 0.2;
        sc.seed = 11;
        assert_eq!(run_scenario(&sc).unwrap(), run_scenario(&sc).unwrap());
    }

    #[test]
    fn force_driven_run_matches_prescribed_force() {
        let sc = quiet();
        let forces: Vec<Vec<f64>> = (0..100)
            .map(|_| vec![3.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .collect();
        let trace = run_force_driven(&sc, &forces).unwrap();
        assert_eq!(trace.len(), 100);
        assert_eq!(trace.records[1].v[0], 0.0015);
        let bad = vec![vec![0.0; 5]];
        assert!(run_force_driven(&sc, &bad).is_err());
    }

    #[test]
    fn blow_up_aborts_with_partial_trace() {
        let mut sc = quiet();
        sc.params.m = vec![1e-300; 6];
        sc.limits.v_max = vec![1e300; 6];
        sc.adaptation.enabled = false;
        let forces: Vec<Vec<f64>> = (0..10)
            .map(|k| if k < 5 { vec![0.0; 6] } else { vec![1e300; 6] })
            .collect();
        match run_force_driven(&sc, &forces) {
            Err(RunError::Aborted { partial, cause, .. }) => {
                assert_eq!(partial.len(), 6);
                assert!(matches!(cause, CoreError::NonFiniteState { .. }));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
