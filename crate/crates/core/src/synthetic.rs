//! Synthetic inputs: randomized force and power traces, and a deliberately
//! non-passive trace used as a negative control for the audit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::admittance::{step_admittance, IntegratorConfig};
use crate::sim::{Trace, TraceRecord};
use crate::tank::PowerPair;
use crate::types::{AdmittanceParams, ForceSample, RobotState};

/// Smooth random wrench: per DOF, three sinusoids of random amplitude,
/// frequency and phase plus white noise. Entries stay within about ±20.
pub fn random_force_trace(seed: u64, n: usize, ticks: usize, dt: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = Uniform::new(0.0, 6.0).expect("valid range");
    let freq = Uniform::new(0.05, 4.0).expect("valid range");
    let phase = Uniform::new(0.0, 2.0 * PI).expect("valid range");
    let noise = Normal::new(0.0, 0.5).expect("valid std");
    let tones: Vec<[(f64, f64, f64); 3]> = (0..n)
        .map(|_| {
            core::array::from_fn(|_| {
                (
                    amp.sample(&mut rng),
                    freq.sample(&mut rng),
                    phase.sample(&mut rng),
                )
            })
        })
        .collect();
    (0..ticks)
        .map(|k| {
            let t = k as f64 * dt;
            tones
                .iter()
                .map(|dof| {
                    dof.iter()
                        .map(|(a, f, p)| a * libm::sin(2.0 * PI * f * t + p))
                        .sum::<f64>()
                        + noise.sample(&mut rng)
                })
                .collect()
        })
        .collect()
}

/// Random power pairs: `P_D ∈ [0, 20]` W and `P_M ∈ [−5, 10]` W, with about
/// a third of the ticks free of inertia variation.
pub fn random_power_trace(seed: u64, len: usize) -> Vec<PowerPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_d = Uniform::new(0.0, 20.0).expect("valid range");
    let p_m = Uniform::new(-5.0, 10.0).expect("valid range");
    let pick = Uniform::new(0u8, 3).expect("valid range");
    (0..len)
        .map(|_| {
            let d = p_d.sample(&mut rng);
            let m = if pick.sample(&mut rng) == 0 {
                0.0
            } else {
                p_m.sample(&mut rng)
            };
            PowerPair {
                p_d: d,
                p_m: m,
                p_m_release: m.min(0.0),
            }
        })
        .collect()
}

/// One-DOF trace whose inertia grows at 10 kg/s for 10 s with almost no
/// damping and nothing metering the injected energy. The environment
/// brakes the robot (`F = −ẋ`) and extracts more energy than `W(0)`.
pub fn unmetered_inertia_ramp() -> Trace {
    let dt = 0.001;
    let ticks = 10_000;
    let cfg = IntegratorConfig { dt };
    let tank_floor = 0.1;
    let mut s = RobotState::at_rest(1);
    s.v[0] = 1.0;
    let mut records = Vec::with_capacity(ticks);
    for k in 0..ticks {
        let t = k as f64 * dt;
        let p = AdmittanceParams {
            m: vec![2.0 + 10.0 * t],
            d: vec![0.1],
        };
        let f = vec![-s.v[0]];
        records.push(TraceRecord {
            t,
            x: s.x.clone(),
            v: s.v.clone(),
            a_est: vec![0.0],
            f_ext: f.clone(),
            psi: 0.0,
            psi_avg: 0.0,
            flag: false,
            m: p.m.clone(),
            d: p.d.clone(),
            tank_t: tank_floor,
            phi: false,
            gamma: false,
            p_d: p.d[0] * s.v[0] * s.v[0],
            p_m: 0.0,
            adapting: true,
        });
        s = step_admittance(&s, &p, &ForceSample { f, t }, &cfg)
            .expect("bounded inputs stay finite");
    }
    Trace {
        dt,
        records,
        final_velocity: Some(s.v),
        ..Trace::default()
    }
}
