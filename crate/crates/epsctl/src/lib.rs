//! Shared pieces of the `epsctl` command-line tool: the system-file format,
//! run reports, and the bundled literature reference constants.

pub mod reference;
pub mod report;
pub mod systemfile;

/// Formats a float with 17 significant digits; round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Maps a library error to the CLI exit code contract: 3 for structural,
/// stability, and precondition failures; 4 for numerical solver failures.
pub fn exit_code_for(err: &epskit::Error) -> i32 {
    use epskit::Error::*;
    match err {
        NonSquare { .. }
        | DimensionMismatch { .. }
        | NonFinite { .. }
        | AlphaOutOfRange { .. }
        | SingularLimit { .. }
        | UnstableSystem { .. }
        | NotStrictlyProper
        | BadInterval { .. }
        | StructuralAssumptionViolated { .. }
        | BadSpec { .. }
        | BadPlane { .. } => 3,
        EigenFailure
        | UnstableF { .. }
        | NonSymmetricW { .. }
        | NoStabilizingSolution { .. }
        | SingularInnerMatrix { .. }
        | AllInfeasible
        | SeparationCheckFailed { .. }
        | ConsistencyCheckFailed { .. }
        | NotPositiveDefinite { .. }
        | ConvergenceFailure { .. }
        | Overflow { .. } => 4,
    }
}

/// Short machine-parsable name of a library error variant.
pub fn error_name(err: &epskit::Error) -> &'static str {
    use epskit::Error::*;
    match err {
        NonSquare { .. } => "NonSquare",
        DimensionMismatch { .. } => "DimensionMismatch",
        NonFinite { .. } => "NonFinite",
        EigenFailure => "EigenFailure",
        UnstableF { .. } => "UnstableF",
        NonSymmetricW { .. } => "NonSymmetricW",
        AlphaOutOfRange { .. } => "AlphaOutOfRange",
        SingularLimit { .. } => "SingularLimit",
        NoStabilizingSolution { .. } => "NoStabilizingSolution",
        SingularInnerMatrix { .. } => "SingularInnerMatrix",
        UnstableSystem { .. } => "UnstableSystem",
        NotStrictlyProper => "NotStrictlyProper",
        BadInterval { .. } => "BadInterval",
        AllInfeasible => "AllInfeasible",
        StructuralAssumptionViolated { .. } => "StructuralAssumptionViolated",
        SeparationCheckFailed { .. } => "SeparationCheckFailed",
        ConsistencyCheckFailed { .. } => "ConsistencyCheckFailed",
        NotPositiveDefinite { .. } => "NotPositiveDefinite",
        ConvergenceFailure { .. } => "ConvergenceFailure",
        Overflow { .. } => "Overflow",
        BadSpec { .. } => "BadSpec",
        BadPlane { .. } => "BadPlane",
    }
}
