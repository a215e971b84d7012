//! Energy tank.
//!
//! The tank stores the energy dissipated by the damper (`P_D = ẋᵀ D ẋ`) and
//! pays for the energy injected by an increasing inertia
//! (`P_M = ½ ẋᵀ Ṁ ẋ`). Its level `T` is integrated directly; the tank state
//! `z = √(2T)` is derived from it, so `z` and `T` cannot drift apart and
//! the `1/z` singularity of the state form never appears.
//!
//! Two switches keep `δ ≤ T ≤ T̄`:
//!
//! - `φ` disables storage when the step would push `T` above `T̄`;
//! - `γ` always lets an inertia increase draw from the tank, and gates
//!   energy released by an inertia decrease with `φ`.
//!
//! The floor `δ` is protected by planning: adaptation reserves the energy of
//! a whole ramp up front (see [`crate::adaptation`]). Reaching below the
//! floor during a step is reported as [`CoreError::TankUnderflow`].

use crate::error::CoreError;
use crate::types::{AdmittanceParams, SafetyLimits};

/// Shortfalls below the floor up to this size (J) are treated as rounding
/// and clamped to the floor.
pub const FLOOR_ROUNDING: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair {
    /// Power dissipated by the damper (W), never negative.
    pub p_d: f64,
    /// Power associated with the inertia variation (W).
    pub p_m: f64,
    /// Part of `p_m` coming from decreasing inertia entries (≤ 0).
    pub p_m_release: f64,
}

impl PowerPair {
    pub const ZERO: PowerPair = PowerPair {
        p_d: 0.0,
        p_m: 0.0,
        p_m_release: 0.0,
    };

    /// Part of `p_m` coming from increasing inertia entries (≥ 0).
    pub fn p_m_draw(&self) -> f64 {
        self.p_m - self.p_m_release
    }
}

/// `P_D = Σ d_j v_j²`, `P_M = ½ Σ ṁ_j v_j²`.
pub fn tank_powers(v: &[f64], p: &AdmittanceParams, m_dot: &[f64]) -> PowerPair {
    let mut p_d = 0.0;
    let mut draw = 0.0;
    let mut release = 0.0;
    for ((vj, dj), mdj) in v.iter().zip(&p.d).zip(m_dot) {
        let v2 = vj * vj;
        p_d += dj * v2;
        let pm = 0.5 * mdj * v2;
        if *mdj > 0.0 {
            draw += pm;
        } else {
            release += pm;
        }
    }
    PowerPair {
        p_d,
        p_m: draw + release,
        p_m_release: release,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TankState {
    energy: f64,
    delta: f64,
    t_bar: f64,
    phi: bool,
    gamma: bool,
    split_metering: bool,
}

/// What one [`TankState::step`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankStep {
    pub phi: bool,
    pub gamma: bool,
    /// Energy change applied (J).
    pub delta_energy: f64,
    /// True when a rounding-size shortfall was clamped to the floor.
    pub floor_clamped: bool,
}

impl TankState {
    pub fn new(initial_energy: f64, limits: &SafetyLimits) -> Result<Self, CoreError> {
        limits.validate()?;
        if !(initial_energy >= limits.delta && initial_energy <= limits.t_bar) {
            return Err(CoreError::config(
                "tank.initial_energy",
                "must lie within [delta, t_bar]",
            ));
        }
        Ok(Self {
            energy: initial_energy,
            delta: limits.delta,
            t_bar: limits.t_bar,
            phi: true,
            gamma: true,
            split_metering: false,
        })
    }

    /// Tank initialized from its state variable, `T = ½ z²`.
    pub fn from_z(z0: f64, limits: &SafetyLimits) -> Result<Self, CoreError> {
        Self::new(0.5 * z0 * z0, limits)
    }

    /// Meter increasing and decreasing inertia entries separately when the
    /// rate vector has mixed signs. Off by default.
    pub fn with_split_metering(mut self, on: bool) -> Self {
        self.split_metering = on;
        self
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn z(&self) -> f64 {
        libm::sqrt(2.0 * self.energy)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t_bar(&self) -> f64 {
        self.t_bar
    }

    pub fn phi(&self) -> bool {
        self.phi
    }

    pub fn gamma(&self) -> bool {
        self.gamma
    }

    /// Energy above the floor (J).
    pub fn available(&self) -> f64 {
        (self.energy - self.delta).max(0.0)
    }

    /// True iff `T − e_req ≥ δ`.
    pub fn can_extract(&self, e_req: f64) -> bool {
        self.energy - e_req >= self.delta
    }

    /// One Euler step of `Ṫ = φ P_D − γ P_M`.
    pub fn step(&mut self, pw: &PowerPair, dt: f64) -> Result<TankStep, CoreError> {
        let (phi, gamma, change) = if self.split_metering {
            let draw = pw.p_m_draw();
            let release = pw.p_m_release;
            let phi = self.energy + (pw.p_d - release - draw) * dt <= self.t_bar;
            let stored = if phi { pw.p_d - release } else { 0.0 };
            let gamma = if draw > 0.0 { true } else { phi };
            (phi, gamma, (stored - draw) * dt)
        } else {
            // with φ = 1 the switch γ is 1 on both branches
            let phi = self.energy + (pw.p_d - pw.p_m) * dt <= self.t_bar;
            let gamma = if pw.p_m <= 0.0 { phi } else { true };
            let stored = if phi { pw.p_d } else { 0.0 };
            let drawn = if gamma { pw.p_m } else { 0.0 };
            (phi, gamma, (stored - drawn) * dt)
        };

        let mut next = self.energy + change;
        let mut floor_clamped = false;
        if next < self.delta {
            if self.delta - next <= FLOOR_ROUNDING {
                next = self.delta;
                floor_clamped = true;
            } else {
                return Err(CoreError::TankUnderflow {
                    energy: self.energy,
                    next,
                    floor: self.delta,
                });
            }
        }
        self.energy = next;
        self.phi = phi;
        self.gamma = gamma;
        Ok(TankStep {
            phi,
            gamma,
            delta_energy: change,
            floor_clamped,
        })
    }
}
