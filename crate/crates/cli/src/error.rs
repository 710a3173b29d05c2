//! Error classes and their process exit codes.

use std::fmt;
use std::process::ExitCode;

use regdyn::algebra::AlgebraError;
use regdyn::dynamics::DynamicsError;
use regdyn::network::NetworkError;
use regdyn::odecheck::OdeError;
use regdyn::paramgraph::ParamGraphError;
use regdyn::stats::StatsError;

/// Exit code 1: bad invocation or unreadable input file.
pub const EXIT_USAGE: u8 = 1;
/// Exit code 2: the input is understood but rejected.
pub const EXIT_DOMAIN: u8 = 2;
/// Exit code 3: some candidate orders are unresolved.
pub const EXIT_UNRESOLVED: u8 = 3;
/// Exit code 4: internal inconsistency.
pub const EXIT_INTERNAL: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Unresolved(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Unresolved(_) => EXIT_UNRESOLVED,
            CliError::Internal(_) => EXIT_INTERNAL,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
            CliError::Unresolved(m) => write!(f, "unresolved: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        let m = e.to_string();
        match e {
            AlgebraError::SignatureSyntax { .. }
            | AlgebraError::OrderTooLarge { .. }
            | AlgebraError::NonPositiveParameter
            | AlgebraError::ParameterLength { .. } => CliError::Domain(m),
            AlgebraError::CacheWrite(_) => CliError::Usage(m),
            AlgebraError::WitnessDegenerate(_)
            | AlgebraError::CacheCorrupt { .. }
            | AlgebraError::Inconsistent(_) => CliError::Internal(m),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<ParamGraphError> for CliError {
    fn from(e: ParamGraphError) -> Self {
        match e {
            ParamGraphError::Algebra(a) => a.into(),
            ParamGraphError::VerificationFailed(_) => CliError::Internal(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::ParamGraph(p) => p.into(),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::Index { source, .. } => source.into(),
            StatsError::Unresolved(_) => CliError::Unresolved(e.to_string()),
            StatsError::ParamGraph(p) => p.into(),
            StatsError::Range { .. } | StatsError::CalibrationFailed { .. } => {
                CliError::Domain(e.to_string())
            }
        }
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::ParamGraph(p) => p.into(),
            OdeError::Dynamics(d) => d.into(),
            OdeError::SignMismatch { .. } => CliError::Internal(e.to_string()),
            OdeError::TangencyAbort { .. }
            | OdeError::OnWall { .. }
            | OdeError::BadInitialCondition { .. } => CliError::Domain(e.to_string()),
        }
    }
}
