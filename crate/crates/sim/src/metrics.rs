//! Summary figures computed from traces: detection latency, settling after
//! adaptation and the oscillation envelope.

use admittance_core::sim::Trace;

/// Envelope windows examined after the last inertia ramp.
pub const ENVELOPE_WINDOWS: usize = 10;
/// Width of one envelope window (s).
pub const ENVELOPE_WIDTH: f64 = 0.1;

/// Delay between `onset` and the first raised flag at or after it.
pub fn detection_latency(trace: &Trace, onset: f64) -> Option<f64> {
    trace.first_flag_after(onset).map(|t| t - onset)
}

/// Times in `[from, to)` at which the flag was up.
pub fn flags_between(trace: &Trace, from: f64, to: f64) -> Vec<f64> {
    trace
        .records
        .iter()
        .filter(|r| r.flag && r.t >= from - 1e-12 && r.t < to - 1e-12)
        .map(|r| r.t)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// First flag at or after the episode start.
    pub rise: f64,
    /// Time the averaged residual dropped below the threshold for good
    /// within the episode; `None` if it was still above at the end.
    pub settled: Option<f64>,
    /// End of the last inertia ramp of the episode.
    pub last_ramp_end: Option<f64>,
    /// Peak-to-peak velocity over consecutive windows after the last ramp.
    pub envelope: Vec<f64>,
}

impl Recovery {
    pub fn settle_time(&self) -> Option<f64> {
        self.settled.map(|s| s - self.rise)
    }

    /// True if every window has a peak-to-peak no larger than the previous.
    pub fn envelope_non_increasing(&self) -> bool {
        self.envelope.windows(2).all(|w| w[1] <= w[0])
    }
}

fn peak_to_peak(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    hi - lo
}

/// Recovery from a stiffening episode spanning `[start, end)`, looking at
/// the velocity of DOF `dof`. `None` if the flag never rose.
pub fn recovery(trace: &Trace, start: f64, end: f64, dof: usize) -> Option<Recovery> {
    let rise = trace.first_flag_after(start).filter(|t| *t < end)?;
    let dt = trace.dt;
    let in_episode: Vec<_> = trace
        .records
        .iter()
        .filter(|r| r.t >= start - 1e-12 && r.t < end - 1e-12)
        .collect();
    let still_up = in_episode.last().is_some_and(|r| r.flag);
    let settled = if still_up {
        None
    } else {
        in_episode.iter().rev().find(|r| r.flag).map(|r| r.t + dt)
    };
    let last_ramp_end = trace
        .plans
        .iter()
        .rev()
        .find(|p| p.t >= start - 1e-12 && p.t < end)
        .map(|p| p.end_tick as f64 * dt);
    let envelope = match last_ramp_end {
        Some(t0) => {
            let first = (t0 / dt).round() as usize;
            let width = (ENVELOPE_WIDTH / dt).round() as usize;
            (0..ENVELOPE_WINDOWS)
                .map(|i| first + i * width)
                .take_while(|s| s + width <= trace.len())
                .map(|s| peak_to_peak(trace.records[s..s + width].iter().map(|r| r.v[dof])))
                .collect()
        }
        None => Vec::new(),
    };
    Some(Recovery {
        rise,
        settled,
        last_ramp_end,
        envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use admittance_core::sim::{run_scenario, Scenario};

    #[test]
    fn quiet_run_has_no_flags() {
        let trace = run_scenario(&Scenario::default()).unwrap();
        assert!(flags_between(&trace, 0.0, 1.0).is_empty());
        assert_eq!(detection_latency(&trace, 0.0), None);
        assert_eq!(recovery(&trace, 0.0, 1.0, 0), None);
    }

    #[test]
    fn envelope_order() {
        let r = Recovery {
            rise: 0.0,
            settled: Some(0.1),
            last_ramp_end: Some(0.1),
            envelope: vec![3.0, 2.0, 2.0, 1.0],
        };
        assert!(r.envelope_non_increasing());
        assert!((r.settle_time().unwrap() - 0.1).abs() < 1e-15);
        let r = Recovery {
            envelope: vec![3.0, 2.0, 2.5],
            ..r
        };
        assert!(!r.envelope_non_increasing());
    }
}
