//! Passivity and tank-ledger audits over recorded traces.
//!
//! The passivity audit checks the port balance of the controlled robot
//! with the tank included in its storage:
//!
//! ```text
//! ∫₀ᵗ ẋᵀ F_ext dτ ≥ −W(0),    W = ½ ẋᵀ M ẋ + T
//! ```
//!
//! The integral uses the force held over each control period and the mean
//! of the velocities at both ends of the period. This matches the
//! semi-implicit integrator: for constant parameters the per-step work then
//! equals the change in kinetic energy plus a non-negative dissipation term
//! up to `O(Δt²)`.

use alloc::vec::Vec;

use crate::sim::Trace;

/// Default audit tolerance (J).
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

/// Violation times kept in a report.
const MAX_REPORTED: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct PassivityReport {
    /// Kinetic energy at `t = 0` (J).
    pub h0: f64,
    /// Tank level at `t = 0` (J).
    pub t0: f64,
    /// `W(0) = H(0) + T(0)` (J).
    pub w0: f64,
    /// Tolerance applied (J).
    pub tolerance: f64,
    /// `∫ ẋᵀ F_ext` over the whole trace (J).
    pub work: f64,
    /// Running minimum of `∫₀ᵗ ẋᵀ F_ext + W(0)` (J).
    pub min_margin: f64,
    /// True iff `min_margin < −tolerance`.
    pub violation: bool,
    /// Times at which the margin was below `−tolerance` (first ones only).
    pub violation_times: Vec<f64>,
    /// Minimum of `∫₀ᵗ ẋᵀ F_ext − (W(t) − W(0))`; close to or above zero
    /// for a passive controller, within an `O(Δt)` integration error.
    pub balance_min: f64,
}

fn kinetic(v: &[f64], m: &[f64]) -> f64 {
    0.5 * v.iter().zip(m).map(|(v, m)| m * v * v).sum::<f64>()
}

pub fn passivity_audit(trace: &Trace, tolerance: f64) -> PassivityReport {
    let Some(first) = trace.records.first() else {
        return PassivityReport {
            h0: 0.0,
            t0: 0.0,
            w0: 0.0,
            tolerance,
            work: 0.0,
            min_margin: 0.0,
            violation: false,
            violation_times: Vec::new(),
            balance_min: 0.0,
        };
    };
    let h0 = kinetic(&first.v, &first.m);
    let t0 = first.tank_t;
    let w0 = h0 + t0;
    let dt = trace.dt;

    let mut work = 0.0;
    let mut min_margin = w0;
    let mut balance_min: f64 = 0.0;
    let mut violation_times = Vec::new();
    let last = trace.records.len() - 1;
    for (k, r) in trace.records.iter().enumerate() {
        let v_next: &[f64] = match (trace.records.get(k + 1), &trace.final_velocity) {
            (Some(next), _) => &next.v,
            (None, Some(fin)) => fin,
            (None, None) => &r.v,
        };
        work += r
            .f_ext
            .iter()
            .zip(r.v.iter().zip(v_next))
            .map(|(f, (v0, v1))| f * 0.5 * (v0 + v1))
            .sum::<f64>()
            * dt;

        let t_end = r.t + dt;
        let margin = work + w0;
        if margin < min_margin {
            min_margin = margin;
        }
        if margin < -tolerance && violation_times.len() < MAX_REPORTED {
            violation_times.push(t_end);
        }

        if k < last {
            let next = &trace.records[k + 1];
            let w = kinetic(&next.v, &next.m) + next.tank_t;
            balance_min = balance_min.min(work - (w - w0));
        }
    }
    PassivityReport {
        h0,
        t0,
        w0,
        tolerance,
        work,
        min_margin,
        violation: min_margin < -tolerance,
        violation_times,
        balance_min,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerReport {
    /// Largest `|T_{k+1} − T_k − (φ P_D − γ P_M) Δt| / T_{k+1}`.
    pub max_relative_error: f64,
    pub min_energy: f64,
    pub max_energy: f64,
    /// Steps skipped because the floor was clamped.
    pub skipped: usize,
}

/// Replays the tank ledger of a trace step by step.
pub fn tank_ledger(trace: &Trace) -> LedgerReport {
    let mut report = LedgerReport {
        max_relative_error: 0.0,
        min_energy: f64::INFINITY,
        max_energy: f64::NEG_INFINITY,
        skipped: 0,
    };
    for (k, pair) in trace.records.windows(2).enumerate() {
        let (r, next) = (&pair[0], &pair[1]);
        if trace.floor_clamps.contains(&k) {
            report.skipped += 1;
            continue;
        }
        let stored = if r.phi { r.p_d } else { 0.0 };
        let drawn = if r.gamma { r.p_m } else { 0.0 };
        let predicted = r.tank_t + (stored - drawn) * trace.dt;
        let err = (next.tank_t - predicted).abs() / next.tank_t.abs().max(f64::MIN_POSITIVE);
        report.max_relative_error = report.max_relative_error.max(err);
    }
    for r in &trace.records {
        report.min_energy = report.min_energy.min(r.tank_t);
        report.max_energy = report.max_energy.max(r.tank_t);
    }
    report
}
