//! Variable admittance control for physical human-robot interaction.
//!
//! The crate simulates an admittance-controlled manipulator whose desired
//! dynamics are the diagonal mass-damper model `M(t) ẍ + D(t) ẋ = F_ext`.
//! It detects deviations from that nominal behavior with a residual
//! heuristic and reacts by increasing the inertia (and optionally the
//! damping) while keeping the controlled system passive, either through the
//! instantaneous rule `ṁ_j ≤ 2 d_j` or by paying for the inertia increase
//! out of an energy tank that stores the energy dissipated by the damper.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV traces
//! and the command-line tool live in the `admittance-sim` crate.
//!
//! Module map:
//!
//! - [`types`]: shared value types (parameters, state, limits).
//! - [`admittance`]: fixed-step integration of the admittance model.
//! - [`detector`]: residual heuristic, moving average and detection flag.
//! - [`tank`]: energy tank bookkeeping.
//! - [`adaptation`]: passive inertia/damping update rules and the trigger policy.
//! - [`arm`]: synthetic human operator that produces the interaction force.
//! - [`sim`]: scenario description and the tick loop.
//! - [`audit`]: passivity and tank-ledger audits over recorded traces.
//! - [`calibrate`]: stiffness sweep used to build destabilizing scenarios.
//! - [`synthetic`]: deliberately non-passive traces used as negative controls.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adaptation;
pub mod admittance;
pub mod arm;
pub mod audit;
pub mod calibrate;
pub mod detector;
mod error;
pub mod sim;
pub mod synthetic;
pub mod tank;
pub mod types;

pub use error::{CoreError, ParamKind};
pub use types::{
    clamp_velocity, validate_params, AdmittanceParams, DofKind, DofLayout, ForceSample, RobotState,
    SafetyLimits,
};
