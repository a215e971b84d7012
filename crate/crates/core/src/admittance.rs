//! Fixed-step integration of the variable admittance model
//! `M(t) ẍ + D(t) ẋ = F_ext`.
//!
//! The scheme is semi-implicit (symplectic) Euler: the acceleration is
//! evaluated at the current state, the velocity is advanced first and the
//! pose is advanced with the new velocity:
//!
//! ```text
//! a  = (F - d v) / m
//! v' = v + a Δt
//! x' = x + v' Δt
//! ```
//!
//! Every DOF is an independent scalar channel.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::types::{AdmittanceParams, ForceSample, RobotState};

/// Largest control period accepted by [`IntegratorConfig::validate`].
pub const MAX_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Control period (s).
    pub dt: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 0.001 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.dt > 0.0 && self.dt <= MAX_DT {
            Ok(())
        } else {
            Err(CoreError::config("dt", "must satisfy 0 < dt <= 0.01 s"))
        }
    }
}

/// Advances the admittance model by one control period.
///
/// Parameters are not re-validated here; callers own that invariant. This
/// keeps test-only configurations (for example zero damping) usable.
pub fn step_admittance(
    s: &RobotState,
    p: &AdmittanceParams,
    f: &ForceSample,
    cfg: &IntegratorConfig,
) -> Result<RobotState, CoreError> {
    let n = s.n();
    for (what, len) in [
        ("velocity", s.v.len()),
        ("inertia", p.m.len()),
        ("damping", p.d.len()),
        ("force", f.f.len()),
    ] {
        if len != n {
            return Err(CoreError::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }

    let dt = cfg.dt;
    let mut next = RobotState {
        x: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        a_est: Vec::with_capacity(n),
        t: s.t + dt,
    };
    for j in 0..n {
        let a = (f.f[j] - p.d[j] * s.v[j]) / p.m[j];
        let v = s.v[j] + a * dt;
        let x = s.x[j] + v * dt;
        if !(a.is_finite() && v.is_finite() && x.is_finite()) {
            return Err(CoreError::NonFiniteState {
                t: next.t,
                index: j,
            });
        }
        next.a_est.push(a);
        next.v.push(v);
        next.x.push(x);
    }
    Ok(next)
}

/// `H = ½ Σ m_j ẋ_j²` (J).
pub fn storage_energy(s: &RobotState, p: &AdmittanceParams) -> f64 {
    kinetic_energy(&s.v, &p.m)
}

pub fn kinetic_energy(v: &[f64], m: &[f64]) -> f64 {
    0.5 * v.iter().zip(m).map(|(v, m)| m * v * v).sum::<f64>()
}
