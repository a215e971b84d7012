//! Stiffness sweep.
//!
//! A probe run holds the hand still, disables adaptation, sets a constant
//! hand stiffness `k` on the first DOF and kicks that DOF with a small
//! initial velocity. The oscillation growth over one second is
//!
//! ```text
//! growth = ptp(ẋ₀ over the last 100 ms) / ptp(ẋ₀ over 100..200 ms)
//! ```
//!
//! and the loop is called unstable when `growth > 1` or when the velocity
//! bound is reached. Bisection on `k` brackets the critical stiffness.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::sim::{run_scenario, RunError, Scenario};

const PROBE_DURATION: f64 = 1.0;
const PROBE_KICK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSample {
    pub k: f64,
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Smallest stiffness found unstable.
    pub critical_k: f64,
    /// Largest stiffness found stable.
    pub stable_k: f64,
    pub samples: Vec<GrowthSample>,
}

fn peak_to_peak(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(*x), hi.max(*x))
        });
    hi - lo
}

/// The probe scenario derived from `sc` for stiffness `k`.
pub fn probe_scenario(sc: &Scenario, k: f64) -> Scenario {
    let mut probe = sc.clone();
    probe.adaptation.enabled = false;
    probe.arm.waypoints.clear();
    probe.arm.sinusoid = None;
    probe.arm.events.clear();
    probe.arm.noise_std = 0.0;
    probe.arm.k_h[0] = k;
    probe.initial_velocity.iter_mut().for_each(|v| *v = 0.0);
    probe.initial_velocity[0] = PROBE_KICK;
    probe.duration = PROBE_DURATION;
    probe
}

/// Oscillation growth of the probe run; infinite if the run blows up or
/// reaches the velocity bound.
pub fn growth_ratio(sc: &Scenario, k: f64) -> Result<f64, RunError> {
    let probe = probe_scenario(sc, k);
    let trace = match run_scenario(&probe) {
        Ok(trace) => trace,
        Err(RunError::Aborted { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    if trace.velocity_clamps > 0 {
        return Ok(f64::INFINITY);
    }
    let v = trace.velocity(0);
    let window = libm::round(0.1 / probe.integrator.dt) as usize;
    if v.len() < 3 * window {
        return Err(RunError::Invalid(CoreError::config(
            "dt",
            "probe needs at least 300 ms of samples",
        )));
    }
    let early = peak_to_peak(&v[window..2 * window]);
    let late = peak_to_peak(&v[v.len() - window..]);
    Ok(if early > 0.0 { late / early } else { 0.0 })
}

/// Bisects `[k_stable, k_unstable]` for `iterations` rounds.
pub fn calibrate_stiffness(
    sc: &Scenario,
    k_stable: f64,
    k_unstable: f64,
    iterations: usize,
) -> Result<Calibration, RunError> {
    let mut samples = Vec::with_capacity(iterations + 2);
    let mut probe = |k: f64| -> Result<bool, RunError> {
        let growth = growth_ratio(sc, k)?;
        samples.push(GrowthSample { k, growth });
        Ok(growth > 1.0)
    };
    if probe(k_stable)? || !probe(k_unstable)? {
        return Err(RunError::Invalid(CoreError::config(
            "calibration range",
            "lower bound must be stable and upper bound unstable",
        )));
    }
    let (mut lo, mut hi) = (k_stable, k_unstable);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Calibration {
        critical_k: hi,
        stable_k: lo,
        samples,
    })
}
