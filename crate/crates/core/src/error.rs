use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for {what}")]
    NonFinite { what: String },

    #[error("invalid node {node} (system has {buses} buses)")]
    InvalidNode { node: usize, buses: usize },

    #[error("conductance stamp requires distinct terminals, got {node} twice")]
    SameTerminal { node: usize },

    #[error("singular system: pivot for row {row} ({label}) is {pivot:e}, below threshold {threshold:e}")]
    SingularSystem { row: usize, label: String, pivot: f64, threshold: f64 },

    #[error("voltage collapse at device: |V| = {magnitude:e} is at or below the floor {floor:e}")]
    VoltageCollapse { magnitude: f64, floor: f64 },

    #[error("torque {torque} N·m exceeds capability at |V| = {voltage}: breakdown torque {breakdown} N·m")]
    TorqueExceedsCapability { torque: f64, voltage: f64, breakdown: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polynomial order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: u32, max: u32 },

    #[error("insufficient records: {found} supplied, at least {required} required")]
    InsufficientRecords { found: usize, required: usize },

    #[error("degenerate excitation: monomials {} are not identifiable from the data", fmt_monomials(.monomials))]
    DegenerateExcitation { monomials: Vec<(u32, u32)> },

    #[error("case has {found} slack buses, exactly one is required")]
    SlackCount { found: usize },

    #[error("{location}: {message}")]
    Format { location: String, message: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to exit code 2 in the CLI.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::VoltageCollapse { .. }
                | Error::TorqueExceedsCapability { .. }
                | Error::DegenerateExcitation { .. }
        )
    }

    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format { location: location.into(), message: message.into() }
    }
}

pub(crate) fn fmt_monomials(m: &[(u32, u32)]) -> String {
    m.iter().map(|&(r, i)| crate::glass::monomial_label(r, i)).collect::<Vec<_>>().join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
