//! Detection of deviations from the nominal mass-damper behavior.
//!
//! The residual `ψ = ‖F_ext − M ẍ − D ẋ‖` is zero whenever the robot moves
//! exactly as the admittance model prescribes. The acceleration is not
//! measured; it is re-estimated from the measured velocity by a first-order
//! low-pass filtered finite difference, so the detector never reads the
//! model's own acceleration. `ψ` is averaged over a sliding window and the
//! flag is raised while the average exceeds `ε`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::CoreError;
use crate::types::AdmittanceParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Threshold on the averaged residual (mixed N / N·m norm).
    pub epsilon: f64,
    /// Moving-average duration (s).
    pub window: f64,
    /// Low-pass cutoff of the acceleration estimate (Hz). `f64::INFINITY`
    /// disables the filter.
    pub accel_cutoff: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            epsilon: 10.0,
            window: 0.030,
            accel_cutoff: 20.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(CoreError::config("detector.epsilon", "must be > 0"));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(CoreError::config("detector.window", "must be > 0"));
        }
        if !(self.accel_cutoff > 0.0) {
            return Err(CoreError::config("detector.accel_cutoff", "must be > 0"));
        }
        Ok(())
    }

    /// Number of samples held by the moving average, `ceil(window / dt)`.
    pub fn window_len(&self, dt: f64) -> usize {
        // guard against 0.030 / 0.001 = 30.000000000000004
        let ratio = self.window / dt;
        let len = libm::ceil(ratio - 1e-9 * ratio.max(1.0));
        (len as usize).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct DetectorState {
    cfg: DetectorConfig,
    samples: VecDeque<f64>,
    capacity: usize,
    v_prev: Vec<f64>,
    a_filt: Vec<f64>,
    alpha: f64,
    average: f64,
    flag: bool,
    last_flag_time: Option<f64>,
}

impl DetectorState {
    /// Detector for a robot starting at rest.
    pub fn new(cfg: DetectorConfig, n: usize, dt: f64) -> Result<Self, CoreError> {
        Self::with_initial_velocity(cfg, &vec![0.0; n], dt)
    }

    pub fn with_initial_velocity(
        cfg: DetectorConfig,
        v0: &[f64],
        dt: f64,
    ) -> Result<Self, CoreError> {
        cfg.validate()?;
        if !(dt > 0.0) {
            return Err(CoreError::config("dt", "must be > 0"));
        }
        let capacity = cfg.window_len(dt);
        let alpha = if cfg.accel_cutoff.is_infinite() {
            1.0
        } else {
            let tau = 1.0 / (2.0 * PI * cfg.accel_cutoff);
            dt / (dt + tau)
        };
        let mut samples = VecDeque::with_capacity(capacity);
        samples.extend(core::iter::repeat_n(0.0, capacity));
        Ok(Self {
            cfg,
            samples,
            capacity,
            v_prev: v0.to_vec(),
            a_filt: vec![0.0; v0.len()],
            alpha,
            average: 0.0,
            flag: false,
            last_flag_time: None,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Filtered finite-difference estimate of the acceleration; updates the
    /// filter state with the new velocity sample.
    pub fn estimate_acceleration(&mut self, v: &[f64], dt: f64) -> &[f64] {
        debug_assert_eq!(v.len(), self.v_prev.len());
        for ((a, prev), &vj) in self.a_filt.iter_mut().zip(&mut self.v_prev).zip(v) {
            let raw = (vj - *prev) / dt;
            *a += self.alpha * (raw - *a);
            *prev = vj;
        }
        &self.a_filt
    }

    pub fn acceleration(&self) -> &[f64] {
        &self.a_filt
    }

    /// Pushes one residual sample and re-evaluates the flag. Returns the flag.
    pub fn update(&mut self, psi: f64, t: f64) -> bool {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(psi);
        self.average = self.samples.iter().sum::<f64>() / self.capacity as f64;
        let flag = self.average > self.cfg.epsilon;
        if flag && !self.flag {
            self.last_flag_time = Some(t);
        }
        self.flag = flag;
        flag
    }

    pub fn moving_average(&self) -> f64 {
        self.average
    }

    pub fn flag(&self) -> bool {
        self.flag
    }

    /// Time of the most recent rising edge of the flag.
    pub fn last_flag_time(&self) -> Option<f64> {
        self.last_flag_time
    }

    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().copied()
    }

    pub fn window_len(&self) -> usize {
        self.capacity
    }
}

/// `ψ = ‖F − M a − D v‖₂`.
pub fn compute_psi(f: &[f64], a: &[f64], v: &[f64], p: &AdmittanceParams) -> f64 {
    let sq: f64 = f
        .iter()
        .zip(a)
        .zip(v)
        .zip(p.m.iter().zip(&p.d))
        .map(|(((f, a), v), (m, d))| {
            let r = f - m * a - d * v;
            r * r
        })
        .sum();
    libm::sqrt(sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DT: f64 = 0.001;

    fn nominal() -> AdmittanceParams {
        AdmittanceParams {
            m: vec![2.0, 2.0, 2.0, 0.5, 0.5, 0.5],
            d: vec![30.0, 30.0, 30.0, 3.0, 3.0, 3.0],
        }
    }

    #[test]
    fn window_length_is_thirty_samples() {
        assert_eq!(DetectorConfig::default().window_len(DT), 30);
        let cfg = DetectorConfig {
            window: 0.0305,
            ..Default::default()
        };
        assert_eq!(cfg.window_len(DT), 31);
    }

    #[test]
    fn constant_velocity_gives_decaying_estimate() {
        let mut det = DetectorState::new(DetectorConfig::default(), 1, DT).unwrap();
        det.estimate_acceleration(&[0.5], DT);
        let first = det.acceleration()[0];
        assert!(first > 0.0);
        for _ in 0..500 {
            det.estimate_acceleration(&[0.5], DT);
        }
        assert!(det.acceleration()[0].abs() < 1e-20 * first.max(1.0) + 1e-20);
    }

    #[test]
    fn ramp_estimate_converges_within_five_time_constants() {
        let cfg = DetectorConfig::default();
        let mut det = DetectorState::new(cfg, 1, DT).unwrap();
        let tau = 1.0 / (2.0 * PI * cfg.accel_cutoff);
        let settle = libm::ceil(5.0 * tau / DT) as usize;
        for k in 1..=1000 {
            let a = det.estimate_acceleration(&[k as f64 * DT], DT)[0];
            if k >= settle {
                assert!((a - 1.0).abs() < 0.01, "k={k} a={a}");
            }
        }
    }

    #[test]
    fn bypassed_filter_is_raw_difference() {
        let cfg = DetectorConfig {
            accel_cutoff: f64::INFINITY,
            ..Default::default()
        };
        let mut det = DetectorState::new(cfg, 1, DT).unwrap();
        let a = det.estimate_acceleration(&[0.001], DT)[0];
        assert_relative_eq!(a, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn psi_is_zero_on_nominal_motion() {
        let p = nominal();
        let f = [3.0, -1.0, 0.5, 0.1, 0.0, -0.2];
        let v = [0.05, 0.01, -0.02, 0.3, 0.0, 0.1];
        let a: Vec<f64> = (0..6).map(|j| (f[j] - p.d[j] * v[j]) / p.m[j]).collect();
        assert!(compute_psi(&f, &a, &v, &p) < 1e-12);
    }

    #[test]
    fn psi_examples() {
        let p = AdmittanceParams {
            m: vec![2.0],
            d: vec![30.0],
        };
        assert_relative_eq!(compute_psi(&[10.0], &[0.0], &[0.0], &p), 10.0);
        let mut f = vec![0.0; 6];
        f[0] = 12.0;
        let psi = compute_psi(&f, &[0.0; 6], &[0.0; 6], &nominal());
        assert_relative_eq!(psi, 12.0);
        assert!(psi > DetectorConfig::default().epsilon);
    }

    #[test]
    fn flag_examples() {
        let mut det = DetectorState::new(DetectorConfig::default(), 1, DT).unwrap();
        assert!(!det.update(0.0, 0.0));

        let mut det = DetectorState::new(DetectorConfig::default(), 1, DT).unwrap();
        let mut flag = false;
        for k in 0..30 {
            flag = det.update(12.0, k as f64 * DT);
        }
        assert!(flag);
        assert_relative_eq!(det.moving_average(), 12.0, max_relative = 1e-12);
        // 26 samples of 12 in a window of 30: mean 10.4
        assert_eq!(det.last_flag_time(), Some(25.0 * DT));

        // one spike in a window of zeros: 1000 / 30 = 33.3
        let mut det = DetectorState::new(DetectorConfig::default(), 1, DT).unwrap();
        assert!(det.update(1000.0, 0.0));
        assert_relative_eq!(det.moving_average(), 1000.0 / 30.0, max_relative = 1e-12);

        // a spike that keeps the mean at or below 10
        let mut det = DetectorState::new(DetectorConfig::default(), 1, DT).unwrap();
        assert!(!det.update(300.0, 0.0));
    }

    #[test]
    fn invalid_config_is_rejected() {
        for cfg in [
            DetectorConfig {
                epsilon: 0.0,
                ..Default::default()
            },
            DetectorConfig {
                window: -1.0,
                ..Default::default()
            },
            DetectorConfig {
                accel_cutoff: 0.0,
                ..Default::default()
            },
        ] {
            assert!(DetectorState::new(cfg, 1, DT).is_err());
        }
    }

    proptest! {
        #[test]
        fn average_matches_brute_force_mean(psis in proptest::collection::vec(0.0f64..50.0, 1..200)) {
            let cfg = DetectorConfig::default();
            let mut det = DetectorState::new(cfg, 1, DT).unwrap();
            let cap = cfg.window_len(DT);
            let mut history: Vec<f64> = vec![0.0; cap];
            for (k, psi) in psis.iter().enumerate() {
                let flag = det.update(*psi, k as f64 * DT);
                history.push(*psi);
                let tail = &history[history.len() - cap..];
                let mean = tail.iter().sum::<f64>() / cap as f64;
                prop_assert!((det.moving_average() - mean).abs() <= 1e-12 * mean.max(1.0));
                prop_assert_eq!(flag, det.moving_average() > cfg.epsilon);
            }
        }

        #[test]
        fn replay_reproduces_flags(psis in proptest::collection::vec(0.0f64..30.0, 1..300)) {
            let run = || {
                let mut det = DetectorState::new(DetectorConfig::default(), 1, DT).unwrap();
                psis.iter().enumerate().map(|(k, p)| det.update(*p, k as f64 * DT)).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
