use core::fmt;

/// Which diagonal a parameter error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Inertia,
    Damping,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKind::Inertia => f.write_str("inertia"),
            ParamKind::Damping => f.write_str("damping"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("{kind} entry {index} must be finite and strictly positive")]
    NonPositiveParameter { kind: ParamKind, index: usize },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite state at t = {t} s (dof {index})")]
    NonFiniteState { t: f64, index: usize },

    #[error("tank energy {energy} J would fall to {next} J, below the floor {floor} J")]
    TankUnderflow { energy: f64, next: f64, floor: f64 },

    #[error("tank cannot cover {required} J (available above the floor: {available} J)")]
    InsufficientEnergy { required: f64, available: f64 },

    #[error("invalid {field}: {reason}")]
    InvalidConfig {
        field: &'static str,
        reason: &'static str,
    },
}

impl CoreError {
    pub(crate) fn config(field: &'static str, reason: &'static str) -> Self {
        CoreError::InvalidConfig { field, reason }
    }
}
