//! Domain value types shared by every module.
//!
//! Vectors are per-DOF and heterogeneous in units: translational entries are
//! in meters / newtons, rotational entries in radians / newton-meters. Each
//! DOF is an independent scalar channel, tagged with its [`DofKind`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, ParamKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofKind {
    Translation,
    Rotation,
}

impl DofKind {
    pub const ALL: [DofKind; 2] = [DofKind::Translation, DofKind::Rotation];
}

/// Number and kind of the Cartesian DOFs of a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofLayout {
    kinds: Vec<DofKind>,
}

impl DofLayout {
    pub fn new(kinds: Vec<DofKind>) -> Result<Self, CoreError> {
        if kinds.is_empty() {
            return Err(CoreError::config("dofs", "at least one DOF is required"));
        }
        Ok(Self { kinds })
    }

    /// Three translations followed by three rotations.
    pub fn cartesian6() -> Self {
        use DofKind::*;
        Self {
            kinds: vec![
                Translation,
                Translation,
                Translation,
                Rotation,
                Rotation,
                Rotation,
            ],
        }
    }

    pub fn single_translation() -> Self {
        Self {
            kinds: vec![DofKind::Translation],
        }
    }

    pub fn n(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[DofKind] {
        &self.kinds
    }

    pub fn kind(&self, j: usize) -> DofKind {
        self.kinds[j]
    }

    /// Indices of the DOFs of one kind.
    pub fn indices(&self, kind: DofKind) -> impl Iterator<Item = usize> + '_ {
        self.kinds
            .iter()
            .enumerate()
            .filter(move |(_, k)| **k == kind)
            .map(|(j, _)| j)
    }
}

impl Default for DofLayout {
    fn default() -> Self {
        Self::cartesian6()
    }
}

/// Diagonal inertia and damping of the admittance model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceParams {
    /// Inertia diagonal (kg, kg·m²).
    pub m: Vec<f64>,
    /// Damping diagonal (N·s/m, N·m·s/rad).
    pub d: Vec<f64>,
}

impl AdmittanceParams {
    pub fn new(m: Vec<f64>, d: Vec<f64>) -> Result<Self, CoreError> {
        let p = Self { m, d };
        validate_params(&p)?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }
}

/// Accepts exactly the parameter sets whose entries are all finite and > 0.
pub fn validate_params(p: &AdmittanceParams) -> Result<(), CoreError> {
    if p.m.len() != p.d.len() {
        return Err(CoreError::DimensionMismatch {
            what: "damping",
            expected: p.m.len(),
            found: p.d.len(),
        });
    }
    if p.m.is_empty() {
        return Err(CoreError::config("params", "empty parameter vectors"));
    }
    for (kind, values) in [(ParamKind::Inertia, &p.m), (ParamKind::Damping, &p.d)] {
        if let Some(index) = values.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(CoreError::NonPositiveParameter { kind, index });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    /// Pose (m / rad).
    pub x: Vec<f64>,
    /// Velocity (m/s / rad/s).
    pub v: Vec<f64>,
    /// Acceleration used by the last model step (m/s² / rad/s²).
    pub a_est: Vec<f64>,
    /// Simulation time (s).
    pub t: f64,
}

impl RobotState {
    pub fn at_rest(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            v: vec![0.0; n],
            a_est: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self
                .x
                .iter()
                .chain(&self.v)
                .chain(&self.a_est)
                .all(|x| x.is_finite())
    }
}

/// External wrench measured at the wrist (N / N·m).
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSample {
    pub f: Vec<f64>,
    pub t: f64,
}

impl ForceSample {
    pub fn zero(n: usize, t: f64) -> Self {
        Self { f: vec![0.0; n], t }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyLimits {
    /// Per-DOF velocity bound (m/s, rad/s).
    pub v_max: Vec<f64>,
    /// Tank floor (J).
    pub delta: f64,
    /// Tank ceiling (J).
    pub t_bar: f64,
}

impl SafetyLimits {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.v_max.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CoreError::config(
                "limits.velocity",
                "entries must be finite and > 0",
            ));
        }
        if !(self.delta > 0.0 && self.delta < self.t_bar && self.t_bar.is_finite()) {
            return Err(CoreError::config(
                "limits.delta",
                "tank bounds must satisfy 0 < delta < t_bar",
            ));
        }
        Ok(())
    }

    /// `Σ v_max_j²` over the DOFs of one kind.
    pub fn speed_bound_sq(&self, layout: &DofLayout, kind: DofKind) -> f64 {
        layout
            .indices(kind)
            .map(|j| self.v_max[j] * self.v_max[j])
            .sum()
    }
}

/// Clamps each component into `[-v_max_j, v_max_j]`; the flag reports
/// whether any component was changed.
pub fn clamp_velocity(v: &[f64], lim: &SafetyLimits) -> (Vec<f64>, bool) {
    let mut out = v.to_vec();
    let clamped = clamp_velocity_in_place(&mut out, &lim.v_max);
    (out, clamped)
}

pub(crate) fn clamp_velocity_in_place(v: &mut [f64], v_max: &[f64]) -> bool {
    let mut clamped = false;
    for (vj, &bound) in v.iter_mut().zip(v_max) {
        let c = vj.clamp(-bound, bound);
        if c != *vj {
            clamped = true;
            *vj = c;
        }
    }
    clamped
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nominal_limits() -> SafetyLimits {
        SafetyLimits {
            v_max: vec![1.3, 1.5, 1.3, 0.9, 0.9, 0.9],
            delta: 0.1,
            t_bar: 5.0,
        }
    }

    #[test]
    fn nominal_gains_are_valid() {
        let p = AdmittanceParams {
            m: vec![2.0, 2.0, 2.0, 0.5, 0.5, 0.5],
            d: vec![30.0, 30.0, 30.0, 3.0, 3.0, 3.0],
        };
        assert_eq!(validate_params(&p), Ok(()));
    }

    #[test]
    fn zero_or_negative_inertia_is_rejected() {
        for bad in [0.0, -1.0] {
            let p = AdmittanceParams {
                m: vec![2.0, 2.0, bad, 0.5, 0.5, 0.5],
                d: vec![30.0; 6],
            };
            assert_eq!(
                validate_params(&p),
                Err(CoreError::NonPositiveParameter {
                    kind: ParamKind::Inertia,
                    index: 2
                })
            );
        }
    }

    #[test]
    fn nan_damping_is_rejected() {
        let p = AdmittanceParams {
            m: vec![1.0],
            d: vec![f64::NAN],
        };
        assert!(matches!(
            validate_params(&p),
            Err(CoreError::NonPositiveParameter {
                kind: ParamKind::Damping,
                index: 0
            })
        ));
    }

    #[test]
    fn clamp_examples() {
        let lim = nominal_limits();
        let (v, c) = clamp_velocity(&[0.0; 6], &lim);
        assert_eq!(v, vec![0.0; 6]);
        assert!(!c);

        let (v, c) = clamp_velocity(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0], &lim);
        assert_eq!(v, vec![1.3, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(c);

        let (v, c) = clamp_velocity(&[-1.4, 0.0, 0.0, 0.0, 0.0, 0.0], &lim);
        // scalar oracle: sign(v) * min(|v|, bound)
        let oracle = -(1.4f64.min(1.3));
        assert_eq!(v[0], oracle);
        assert!(c);
    }

    #[test]
    fn group_speed_bounds() {
        let lim = nominal_limits();
        let layout = DofLayout::cartesian6();
        let trans = lim.speed_bound_sq(&layout, DofKind::Translation);
        let rot = lim.speed_bound_sq(&layout, DofKind::Rotation);
        assert!((trans - 5.63).abs() < 1e-12);
        assert!((rot - 2.43).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn validate_accepts_exactly_positive_finite(
            m in proptest::collection::vec(-10.0f64..10.0, 1..8),
            seed in 0usize..1000,
        ) {
            let d: Vec<f64> = m.iter().enumerate().map(|(i, x)| if (i + seed) % 3 == 0 { x.abs() + 0.1 } else { *x }).collect();
            let p = AdmittanceParams { m: m.clone(), d: d.clone() };
            let expected = m.iter().chain(&d).all(|x| x.is_finite() && *x > 0.0);
            prop_assert_eq!(validate_params(&p).is_ok(), expected);
        }

        #[test]
        fn clamp_is_idempotent(v in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let lim = nominal_limits();
            let (once, _) = clamp_velocity(&v, &lim);
            let (twice, changed) = clamp_velocity(&once, &lim);
            prop_assert_eq!(&once, &twice);
            prop_assert!(!changed);
            for (x, b) in once.iter().zip(&lim.v_max) {
                prop_assert!(x.abs() <= *b);
            }
        }
    }
}
