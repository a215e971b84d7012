//! Synthetic human operator.
//!
//! The hand is a spring-damper attached to an intended trajectory `x_h(t)`:
//!
//! ```text
//! F_ext = k_h(t) (x_h(t) − x_delayed) − d_h ẋ_delayed
//! ```
//!
//! The robot pose and velocity reach the arm through a delay line of a few
//! control ticks. A stiff grasp combined with that delay is what drives the
//! coupled loop unstable. Stiffness changes over time follow a schedule of
//! stiffening events, each with a linear onset and release.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::CoreError;
use crate::types::ForceSample;

/// Point of the piecewise-linear intended hand trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub x: Vec<f64>,
}

/// Sinusoid added on top of the waypoint trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinusoid {
    pub amplitude: Vec<f64>,
    /// Hz.
    pub frequency: f64,
    /// rad.
    pub phase: f64,
}

/// Interval during which the operator stiffens the grasp.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffeningEvent {
    pub t_start: f64,
    pub t_end: f64,
    /// Stiffness reached after the onset, per DOF.
    pub k_stiff: Vec<f64>,
    /// Duration of the linear rise (and of the release before `t_end`).
    pub onset: f64,
}

impl StiffeningEvent {
    /// Blend factor in `[0, 1]` between the compliant and the stiff grasp.
    fn weight(&self, t: f64) -> f64 {
        if t < self.t_start || t >= self.t_end {
            return 0.0;
        }
        if self.onset <= 0.0 {
            return 1.0;
        }
        let rise = (t - self.t_start) / self.onset;
        let fall = (self.t_end - t) / self.onset;
        rise.min(fall).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    /// Compliant hand stiffness (N/m, N·m/rad).
    pub k_h: Vec<f64>,
    /// Hand damping (N·s/m, N·m·s/rad).
    pub d_h: Vec<f64>,
    pub waypoints: Vec<Waypoint>,
    pub sinusoid: Option<Sinusoid>,
    pub events: Vec<StiffeningEvent>,
    /// Delay of the pose/velocity seen by the arm, in control ticks.
    pub sensor_delay: usize,
    /// Standard deviation of white force noise (N, N·m); 0 disables it.
    pub noise_std: f64,
}

impl ArmModel {
    /// A compliant hand holding still at the origin.
    pub fn compliant(n: usize) -> Self {
        Self {
            k_h: vec![300.0; n],
            d_h: vec![10.0; n],
            waypoints: Vec::new(),
            sinusoid: None,
            events: Vec::new(),
            sensor_delay: 1,
            noise_std: 0.0,
        }
    }

    /// An arm that never pushes; useful for free-motion runs.
    pub fn detached(n: usize) -> Self {
        Self {
            k_h: vec![0.0; n],
            d_h: vec![0.0; n],
            sensor_delay: 0,
            ..Self::compliant(n)
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), CoreError> {
        let dims = [
            ("arm.stiffness", self.k_h.len()),
            ("arm.damping", self.d_h.len()),
        ]
        .into_iter()
        .chain(self.waypoints.iter().map(|w| ("arm.waypoints", w.x.len())))
        .chain(
            self.events
                .iter()
                .map(|e| ("arm.events.stiffness", e.k_stiff.len())),
        )
        .chain(
            self.sinusoid
                .iter()
                .map(|s| ("arm.sinusoid.amplitude", s.amplitude.len())),
        );
        for (what, found) in dims {
            if found != n {
                return Err(CoreError::DimensionMismatch {
                    what,
                    expected: n,
                    found,
                });
            }
        }
        let non_negative = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !non_negative(&self.k_h) || !non_negative(&self.d_h) {
            return Err(CoreError::config(
                "arm",
                "stiffness and damping must be finite and >= 0",
            ));
        }
        if self.waypoints.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(CoreError::config(
                "arm.waypoints",
                "times must be strictly increasing",
            ));
        }
        if self
            .waypoints
            .iter()
            .any(|w| !w.t.is_finite() || w.x.iter().any(|x| !x.is_finite()))
        {
            return Err(CoreError::config("arm.waypoints", "entries must be finite"));
        }
        for e in &self.events {
            if !(e.t_start >= 0.0 && e.t_end > e.t_start && e.onset >= 0.0)
                || !non_negative(&e.k_stiff)
            {
                return Err(CoreError::config(
                    "arm.events",
                    "need 0 <= t_start < t_end, onset >= 0 and stiffness >= 0",
                ));
            }
        }
        let mut sorted: Vec<&StiffeningEvent> = self.events.iter().collect();
        sorted.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        if sorted.windows(2).any(|w| w[1].t_start < w[0].t_end) {
            return Err(CoreError::config(
                "arm.events",
                "intervals must not overlap",
            ));
        }
        if let Some(s) = &self.sinusoid {
            if !(s.frequency.is_finite() && s.frequency >= 0.0 && s.phase.is_finite())
                || s.amplitude.iter().any(|a| !a.is_finite())
            {
                return Err(CoreError::config("arm.sinusoid", "entries must be finite"));
            }
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(CoreError::config(
                "arm.noise_std",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Hand stiffness at time `t`.
    pub fn stiffness_at(&self, t: f64) -> Vec<f64> {
        let mut k = self.k_h.clone();
        if let Some(e) = self.events.iter().find(|e| t >= e.t_start && t < e.t_end) {
            let w = e.weight(t);
            for (kj, ks) in k.iter_mut().zip(&e.k_stiff) {
                *kj += (ks - *kj) * w;
            }
        }
        k
    }

    /// Intended hand pose at time `t`.
    pub fn intent_at(&self, t: f64) -> Vec<f64> {
        let n = self.k_h.len();
        let mut x = match self.waypoints.as_slice() {
            [] => vec![0.0; n],
            [first, ..] if t <= first.t => first.x.clone(),
            [.., last] if t >= last.t => last.x.clone(),
            wps => {
                let i = wps.partition_point(|w| w.t <= t);
                let (a, b) = (&wps[i - 1], &wps[i]);
                let s = (t - a.t) / (b.t - a.t);
                a.x.iter()
                    .zip(&b.x)
                    .map(|(xa, xb)| xa + (xb - xa) * s)
                    .collect()
            }
        };
        if let Some(s) = &self.sinusoid {
            let phase = 2.0 * core::f64::consts::PI * s.frequency * t + s.phase;
            let sin = libm::sin(phase);
            for (xj, a) in x.iter_mut().zip(&s.amplitude) {
                *xj += a * sin;
            }
        }
        x
    }

    /// Times at which the intended velocity is discontinuous.
    pub fn intent_corners(&self) -> impl Iterator<Item = f64> + '_ {
        self.waypoints.iter().map(|w| w.t)
    }
}

/// `F_ext = k_h(t) (x_h(t) − x_delayed) − d_h ẋ_delayed`.
pub fn arm_force(arm: &ArmModel, x_delayed: &[f64], v_delayed: &[f64], t: f64) -> ForceSample {
    let k = arm.stiffness_at(t);
    let xh = arm.intent_at(t);
    let f = (0..k.len())
        .map(|j| k[j] * (xh[j] - x_delayed[j]) - arm.d_h[j] * v_delayed[j])
        .collect();
    ForceSample { f, t }
}

/// Fixed-length delay of the pose/velocity pair seen by the arm.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl DelayLine {
    /// A line whose history is filled with the initial state.
    pub fn new(delay: usize, x0: &[f64], v0: &[f64]) -> Self {
        let mut buf = VecDeque::with_capacity(delay + 1);
        for _ in 0..=delay {
            buf.push_back((x0.to_vec(), v0.to_vec()));
        }
        Self { buf }
    }

    /// State from `delay` ticks ago.
    pub fn read(&self) -> (&[f64], &[f64]) {
        let (x, v) = &self.buf[0];
        (x, v)
    }

    /// Appends the newest state and drops the oldest.
    pub fn push(&mut self, x: &[f64], v: &[f64]) {
        let mut slot = self.buf.pop_front().expect("delay line is never empty");
        slot.0.copy_from_slice(x);
        slot.1.copy_from_slice(v);
        self.buf.push_back(slot);
    }
}

/// Second-order tracking of the reference pose by the low-level position
/// loop: `ẍ_a = ω² (x_ref − x_a) − 2 ζ ω ẋ_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingLag {
    /// Natural frequency (Hz).
    pub bandwidth: f64,
    pub damping_ratio: f64,
}

impl TrackingLag {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite() && self.damping_ratio > 0.0) {
            return Err(CoreError::config(
                "tracking",
                "bandwidth and damping ratio must be > 0",
            ));
        }
        Ok(())
    }

    /// Advances the tracked pose `(x, v)` towards `x_ref` by one tick.
    pub fn step(&self, x: &mut [f64], v: &mut [f64], x_ref: &[f64], dt: f64) {
        let w = 2.0 * core::f64::consts::PI * self.bandwidth;
        for ((xj, vj), rj) in x.iter_mut().zip(v.iter_mut()).zip(x_ref) {
            let a = w * w * (rj - *xj) - 2.0 * self.damping_ratio * w * *vj;
            *vj += a * dt;
            *xj += *vj * dt;
        }
    }
}

/// Seeded white noise added to the measured force.
#[derive(Debug, Clone)]
pub struct ForceNoise {
    rng: ChaCha8Rng,
    dist: Option<Normal<f64>>,
}

impl ForceNoise {
    pub fn new(std_dev: f64, seed: u64) -> Self {
        let dist = if std_dev > 0.0 {
            Normal::new(0.0, std_dev).ok()
        } else {
            None
        };
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dist,
        }
    }

    pub fn apply(&mut self, f: &mut [f64]) {
        if let Some(dist) = &self.dist {
            for fj in f {
                *fj += dist.sample(&mut self.rng);
            }
        }
    }
}
