//! Crate-wide error type.

use std::fmt;

/// Errors produced by the modeling and search pipeline.
#[derive(Debug)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidArgument(String),
    /// Die area exceeds the usable wafer area, so no dies can be cut.
    ZeroDies { die_area: f64, wafer_area: f64 },
    /// No tile assignment satisfies the buffer and register-file capacities.
    InfeasibleMapping(String),
    /// The request is outside the supported envelope (e.g. exhaustive budget).
    Unsupported(String),
    /// A lookup into a table or library failed.
    Lookup(String),
    /// A configuration file is missing, malformed, or inconsistent.
    Config(String),
    /// A search space exceeded its enumeration budget.
    Budget(String),
    /// No individual satisfied the constraints; carries the diagnosis.
    Infeasible(InfeasibilityReport),
    /// Text parsing failed (netlist, workload, or library files).
    Parse(String),
    Io(std::io::Error),
}

/// Why a constrained search returned empty-handed.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityReport {
    /// Number of distinct candidates evaluated.
    pub evaluated: usize,
    /// Best frames-per-second observed among mappable candidates.
    pub best_fps_seen: f64,
    /// Smallest accuracy drop observed.
    pub min_drop_seen: f64,
    /// The constraint(s) no candidate could satisfy.
    pub binding: BindingConstraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingConstraint {
    /// No candidate reached the FPS floor.
    FpsMin,
    /// No candidate stayed under the accuracy-drop ceiling.
    DropMax,
    /// Neither constraint was satisfiable on its own.
    Both,
    /// Constraints were individually satisfiable but never jointly.
    Joint,
    /// No candidate produced a feasible mapping at all.
    Mapping,
}

impl fmt::Display for BindingConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BindingConstraint::FpsMin => write!(f, "fps_min"),
            BindingConstraint::DropMax => write!(f, "drop_max"),
            BindingConstraint::Both => write!(f, "fps_min and drop_max"),
            BindingConstraint::Joint => write!(f, "fps_min jointly with drop_max"),
            BindingConstraint::Mapping => write!(f, "mapping feasibility"),
        }
    }
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no feasible design after {} evaluations; binding constraint: {} \
             (best fps seen {:.3}, min accuracy drop seen {:.4}%)",
            self.evaluated, self.binding, self.best_fps_seen, self.min_drop_seen
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ZeroDies { die_area, wafer_area } => write!(
                f,
                "die area {die_area} mm2 exceeds usable wafer area {wafer_area} mm2"
            ),
            Error::InfeasibleMapping(msg) => write!(f, "no feasible mapping: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Lookup(msg) => write!(f, "lookup failed: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Budget(msg) => write!(f, "budget exceeded: {msg}"),
            Error::Infeasible(report) => write!(f, "{report}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
