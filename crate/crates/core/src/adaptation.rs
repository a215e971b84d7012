//! Passive adaptation of inertia and damping.
//!
//! Two rules bound how fast the inertia may grow during an adaptation
//! interval `[t_i, t_f]`:
//!
//! - **conservative**: `ṁ_j ≤ 2 d_j` at every instant. The energy injected by
//!   the growing inertia is covered by the damper at the same instant, so no
//!   tank is needed. Integrated over the interval this gives the fixed step
//!   `Δm_j = 2 d_j (t_f − t_i)`.
//! - **tank**: the whole interval is paid for in advance. With `λ_M` the
//!   largest inertia rate over the interval and `‖ẋ_M‖` the velocity bound,
//!   the ramp is admissible when `½ λ_M ‖ẋ_M‖² (t_f − t_i) ≤ T(t_i) − δ`.
//!   The largest admissible step is `Δm = 2 (T(t_i) − δ) / ‖ẋ_M‖²`, which is
//!   then capped per DOF.
//!
//! The velocity bound norm is evaluated per DOF kind (translations and
//! rotations have separate bounds). Because both groups draw from the same
//! tank, the reserve of a plan is the sum of the group reserves; when that
//! sum exceeds the available energy all increments are scaled down together.
//!
//! Every plan is executed as a linear ramp (constant `ṁ`) over
//! `t_f − t_i`, one control tick at a time.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::tank::TankState;
use crate::types::{AdmittanceParams, DofKind, DofLayout, SafetyLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptationMode {
    Conservative,
    Tank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingMode {
    /// Damping is left untouched.
    ConstantDamping,
    /// Damping follows the inertia so that `m_j / d_j` stays constant.
    ConstantRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerMode {
    /// One plan per rising edge of the detection flag.
    Rising,
    /// A new plan whenever the flag is up and the dwell time has elapsed.
    Level,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationConfig {
    pub enabled: bool,
    pub mode: AdaptationMode,
    pub damping_mode: DampingMode,
    pub trigger: TriggerMode,
    /// Duration of one adaptation ramp, `t_f − t_i` (s).
    pub dt_adapt: f64,
    /// Per-DOF cap on one inertia step (kg, kg·m²).
    pub delta_m_cap: Vec<f64>,
    /// Minimum time between the starts of two adaptations (s).
    pub dwell: f64,
}

impl AdaptationConfig {
    /// Tank mode, constant damping, caps of 1.5 kg / 0.15 kg·m².
    pub fn for_layout(layout: &DofLayout) -> Self {
        Self {
            enabled: true,
            mode: AdaptationMode::Tank,
            damping_mode: DampingMode::ConstantDamping,
            trigger: TriggerMode::Rising,
            dt_adapt: 0.003,
            delta_m_cap: layout
                .kinds()
                .iter()
                .map(|k| match k {
                    DofKind::Translation => 1.5,
                    DofKind::Rotation => 0.15,
                })
                .collect(),
            dwell: 0.2,
        }
    }

    pub fn validate(&self, n: usize, dt: f64) -> Result<(), CoreError> {
        if !(self.dt_adapt > 0.0 && self.dt_adapt.is_finite()) {
            return Err(CoreError::config("adaptation.interval", "must be > 0"));
        }
        let ticks = self.dt_adapt / dt;
        if (ticks - libm::round(ticks)).abs() > 1e-6 * ticks.max(1.0) || libm::round(ticks) < 1.0 {
            return Err(CoreError::config(
                "adaptation.interval",
                "must be a whole number of control periods",
            ));
        }
        if self.delta_m_cap.len() != n {
            return Err(CoreError::DimensionMismatch {
                what: "adaptation.delta_m_cap",
                expected: n,
                found: self.delta_m_cap.len(),
            });
        }
        if self
            .delta_m_cap
            .iter()
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(CoreError::config(
                "adaptation.delta_m_cap",
                "entries must be finite and > 0",
            ));
        }
        if !(self.dwell >= self.dt_adapt) {
            return Err(CoreError::config(
                "adaptation.dwell",
                "must be at least the adaptation interval",
            ));
        }
        Ok(())
    }

    /// Control ticks spanned by one ramp.
    pub fn ramp_ticks(&self, dt: f64) -> usize {
        (libm::round(self.dt_adapt / dt) as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationPlan {
    /// Inertia increment at the end of the ramp.
    pub delta_m: Vec<f64>,
    /// Damping increment at the end of the ramp.
    pub delta_d: Vec<f64>,
    /// Constant inertia rate during the ramp (kg/s).
    pub rate: Vec<f64>,
    /// Tank energy reserved for the ramp (J).
    pub e_reserved: f64,
    /// Largest inertia rate of the ramp (kg/s).
    pub lambda_m: f64,
    /// Rule that produced the plan.
    pub rule: AdaptationMode,
}

impl AdaptationPlan {
    pub fn is_empty(&self) -> bool {
        self.delta_m.iter().all(|d| *d == 0.0)
    }
}

fn damping_increments(p: &AdmittanceParams, delta_m: &[f64], mode: DampingMode) -> Vec<f64> {
    match mode {
        DampingMode::ConstantDamping => vec![0.0; delta_m.len()],
        DampingMode::ConstantRatio => delta_m
            .iter()
            .zip(p.m.iter().zip(&p.d))
            .map(|(dm, (m, d))| d * dm / m)
            .collect(),
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

/// Largest step allowed by the instantaneous rule: `Δm_j = 2 d_j (t_f − t_i)`.
pub fn conservative_step(p: &AdmittanceParams, cfg: &AdaptationConfig) -> AdaptationPlan {
    let rate: Vec<f64> = p.d.iter().map(|d| 2.0 * d).collect();
    let delta_m: Vec<f64> = rate.iter().map(|r| r * cfg.dt_adapt).collect();
    AdaptationPlan {
        delta_d: damping_increments(p, &delta_m, cfg.damping_mode),
        lambda_m: max_of(rate.iter().copied()),
        delta_m,
        rate,
        e_reserved: 0.0,
        rule: AdaptationMode::Conservative,
    }
}

/// Uncapped tank step `2 (T − δ) / ‖ẋ_M‖²` for one velocity bound norm.
pub fn tank_increment_bound(energy: f64, delta: f64, speed_bound_sq: f64) -> f64 {
    (2.0 * (energy - delta) / speed_bound_sq).max(0.0)
}

/// Worst-case tank draw of a ramp: `Σ_groups ½ λ_g ‖ẋ_M,g‖² (t_f − t_i)`.
pub fn reserve_for(rate: &[f64], layout: &DofLayout, lim: &SafetyLimits, dt_adapt: f64) -> f64 {
    DofKind::ALL
        .iter()
        .map(|&kind| {
            let lambda = max_of(layout.indices(kind).map(|j| rate[j]));
            0.5 * lambda * lim.speed_bound_sq(layout, kind) * dt_adapt
        })
        .sum()
}

/// Largest capped step the tank can pay for.
pub fn tank_step(
    tank: &TankState,
    p: &AdmittanceParams,
    layout: &DofLayout,
    lim: &SafetyLimits,
    cfg: &AdaptationConfig,
) -> Result<AdaptationPlan, CoreError> {
    let available = tank.energy() - tank.delta();
    if !(available > 0.0) {
        return Err(CoreError::InsufficientEnergy {
            required: 0.0,
            available: available.max(0.0),
        });
    }
    let mut delta_m: Vec<f64> = (0..layout.n())
        .map(|j| {
            let norm = lim.speed_bound_sq(layout, layout.kind(j));
            tank_increment_bound(tank.energy(), tank.delta(), norm).min(cfg.delta_m_cap[j])
        })
        .collect();
    let rate_of = |dm: &[f64]| -> Vec<f64> { dm.iter().map(|x| x / cfg.dt_adapt).collect() };

    let mut reserve = reserve_for(&rate_of(&delta_m), layout, lim, cfg.dt_adapt);
    if reserve > available {
        // both groups share the tank
        let scale = available / reserve * (1.0 - 1e-12);
        delta_m.iter_mut().for_each(|x| *x *= scale);
        reserve = reserve_for(&rate_of(&delta_m), layout, lim, cfg.dt_adapt);
    }
    if !tank.can_extract(reserve) {
        return Err(CoreError::InsufficientEnergy {
            required: reserve,
            available,
        });
    }
    let rate = rate_of(&delta_m);
    Ok(AdaptationPlan {
        delta_d: damping_increments(p, &delta_m, cfg.damping_mode),
        lambda_m: max_of(rate.iter().copied()),
        delta_m,
        rate,
        e_reserved: reserve,
        rule: AdaptationMode::Tank,
    })
}

/// Parameters after tick `step_index` (0-based) of a ramp of `steps_total`
/// ticks starting from `start`.
pub fn apply_plan(
    start: &AdmittanceParams,
    plan: &AdaptationPlan,
    cfg: &AdaptationConfig,
    step_index: usize,
    steps_total: usize,
) -> AdmittanceParams {
    let steps_total = steps_total.max(1);
    let frac = (step_index + 1).min(steps_total) as f64 / steps_total as f64;
    let m: Vec<f64> = start
        .m
        .iter()
        .zip(&plan.delta_m)
        .map(|(m0, dm)| m0 + dm * frac)
        .collect();
    let d = match cfg.damping_mode {
        DampingMode::ConstantDamping => start.d.clone(),
        DampingMode::ConstantRatio => start
            .d
            .iter()
            .zip(m.iter().zip(&start.m))
            .map(|(d0, (m, m0))| d0 * (m / m0))
            .collect(),
    };
    AdmittanceParams { m, d }
}

/// `ṁ_j ≤ 2 d_j` for every DOF.
pub fn within_rate_bound(m_dot: &[f64], p: &AdmittanceParams) -> bool {
    m_dot.iter().zip(&p.d).all(|(md, d)| *md <= 2.0 * d)
}

/// `½ λ_g ‖ẋ_M,g‖² (t_f − t_i)` summed over groups is at most `T(t_i) − δ`.
pub fn satisfies_tank_condition(
    plan: &AdaptationPlan,
    energy_at_start: f64,
    layout: &DofLayout,
    lim: &SafetyLimits,
    cfg: &AdaptationConfig,
) -> bool {
    reserve_for(&plan.rate, layout, lim, cfg.dt_adapt) <= energy_at_start - lim.delta
}

/// `(T(t_i) − δ) − max_j d_j ‖ẋ_M‖² (t_f − t_i)`; positive when the tank
/// permits a larger step than the instantaneous rule.
pub fn tank_vs_conservative_margin(
    tank: &TankState,
    p: &AdmittanceParams,
    layout: &DofLayout,
    lim: &SafetyLimits,
    cfg: &AdaptationConfig,
) -> f64 {
    let worst = max_of(
        (0..layout.n()).map(|j| p.d[j] * lim.speed_bound_sq(layout, layout.kind(j)) * cfg.dt_adapt),
    );
    (tank.energy() - tank.delta()) - worst
}

#[derive(Debug, Clone)]
struct ActiveRamp {
    start: AdmittanceParams,
    plan: AdaptationPlan,
    next_index: usize,
}

/// Outcome of one policy tick.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTick {
    /// Inertia rate applied during this tick (kg/s).
    pub m_dot: Vec<f64>,
    pub adapting: bool,
    /// Plan started on this tick, if any.
    pub started: Option<AdaptationPlan>,
}

/// Trigger logic and ramp execution for one scenario.
#[derive(Debug, Clone)]
pub struct AdaptationPolicy {
    cfg: AdaptationConfig,
    layout: DofLayout,
    limits: SafetyLimits,
    ramp_ticks: usize,
    ramp: Option<ActiveRamp>,
    last_start: Option<f64>,
    prev_flag: bool,
    plans: usize,
    fallbacks: usize,
}

impl AdaptationPolicy {
    pub fn new(
        cfg: AdaptationConfig,
        layout: DofLayout,
        limits: SafetyLimits,
        dt: f64,
    ) -> Result<Self, CoreError> {
        cfg.validate(layout.n(), dt)?;
        Ok(Self {
            ramp_ticks: cfg.ramp_ticks(dt),
            cfg,
            layout,
            limits,
            ramp: None,
            last_start: None,
            prev_flag: false,
            plans: 0,
            fallbacks: 0,
        })
    }

    pub fn config(&self) -> &AdaptationConfig {
        &self.cfg
    }

    /// Number of plans started so far.
    pub fn plans_started(&self) -> usize {
        self.plans
    }

    /// Number of tank-mode triggers that fell back to the conservative rule.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn is_adapting(&self) -> bool {
        self.ramp.is_some()
    }

    fn triggered(&self, flag: bool, t: f64) -> bool {
        let edge = match self.cfg.trigger {
            TriggerMode::Rising => flag && !self.prev_flag,
            TriggerMode::Level => flag,
        };
        let rested = self
            .last_start
            .is_none_or(|t0| t - t0 >= self.cfg.dwell - 1e-9);
        edge && rested && self.ramp.is_none()
    }

    fn plan(&mut self, params: &AdmittanceParams, tank: &TankState) -> AdaptationPlan {
        match self.cfg.mode {
            AdaptationMode::Conservative => conservative_step(params, &self.cfg),
            AdaptationMode::Tank => {
                match tank_step(tank, params, &self.layout, &self.limits, &self.cfg) {
                    Ok(plan) => plan,
                    Err(_) => {
                        self.fallbacks += 1;
                        conservative_step(params, &self.cfg)
                    }
                }
            }
        }
    }

    /// Advances the policy by one control tick. `params` is updated in place
    /// to the values in effect for this tick.
    pub fn tick(
        &mut self,
        flag: bool,
        t: f64,
        params: &mut AdmittanceParams,
        tank: &TankState,
    ) -> PolicyTick {
        let n = params.n();
        let mut started = None;
        if self.cfg.enabled && self.triggered(flag, t) {
            let plan = self.plan(params, tank);
            debug_assert!(
                plan.rule == AdaptationMode::Conservative
                    || satisfies_tank_condition(
                        &plan,
                        tank.energy(),
                        &self.layout,
                        &self.limits,
                        &self.cfg
                    )
            );
            self.last_start = Some(t);
            self.plans += 1;
            started = Some(plan.clone());
            self.ramp = Some(ActiveRamp {
                start: params.clone(),
                plan,
                next_index: 0,
            });
        }
        self.prev_flag = flag;

        let Some(ramp) = self.ramp.as_mut() else {
            return PolicyTick {
                m_dot: vec![0.0; n],
                adapting: false,
                started,
            };
        };
        *params = apply_plan(
            &ramp.start,
            &ramp.plan,
            &self.cfg,
            ramp.next_index,
            self.ramp_ticks,
        );
        let m_dot = ramp.plan.rate.clone();
        ramp.next_index += 1;
        if ramp.next_index >= self.ramp_ticks {
            self.ramp = None;
        }
        PolicyTick {
            m_dot,
            adapting: true,
            started,
        }
    }
}
