use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

/// Which structural invariant a checked object failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invariant {
    JStructure,
    Hermiticity,
    HNegativity,
    Definiteness,
    PairSymmetry,
    PairRank,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Invariant::JStructure => "J-structure",
            Invariant::Hermiticity => "Hermiticity",
            Invariant::HNegativity => "H-negativity",
            Invariant::Definiteness => "definiteness",
            Invariant::PairSymmetry => "pair symmetry",
            Invariant::PairRank => "pair rank",
        };
        f.write_str(s)
    }
}

/// Conditions on an `(A, B)` parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AbCondition {
    /// `-i(A J A* - B J B*) >= 0` in the upper half-plane.
    A,
    /// `A J A^# = B J B^#`.
    B,
    /// `rank [A B] = p`.
    C,
}

impl fmt::Display for AbCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AbCondition::A => "a",
            AbCondition::B => "b",
            AbCondition::C => "c",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("non-finite value produced by {context}")]
    NonFinite { context: &'static str },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invariant violation ({kind}){}: {detail}", segment_suffix(.segment))]
    InvariantViolation {
        kind: Invariant,
        segment: Option<usize>,
        detail: String,
    },

    #[error("lambda = {lambda} is an eigenvalue of A0 (|det(I+U)| = {det:.3e})")]
    SpectrumOfA0 { lambda: Complex64, det: f64 },

    #[error("singular denominator at lambda = {lambda} (|det| = {det:.3e})")]
    SingularDenominator { lambda: Complex64, det: f64 },

    #[error("confluent point: lambda = {lambda} coincides with conj(omega) for omega = {omega}")]
    ConfluentPoint { lambda: Complex64, omega: Complex64 },

    #[error("rank deficient at lambda = {lambda}: rank {rank} < {expected}")]
    RankDeficient {
        lambda: Complex64,
        rank: usize,
        expected: usize,
    },

    #[error("condition ({condition}) violated at lambda = {lambda} (value {value:.3e})")]
    ConditionViolated {
        condition: AbCondition,
        lambda: Complex64,
        value: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

fn segment_suffix(segment: &Option<usize>) -> String {
    match segment {
        Some(k) => format!(" in segment {k}"),
        None => String::new(),
    }
}

impl Error {
    /// Short machine-readable name used in structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonHermitian { .. } => "NonHermitian",
            Error::NonFinite { .. } => "NonFinite",
            Error::Schema(_) => "SchemaError",
            Error::InvariantViolation { .. } => "InvariantViolation",
            Error::SpectrumOfA0 { .. } => "SpectrumOfA0",
            Error::SingularDenominator { .. } => "SingularDenominator",
            Error::ConfluentPoint { .. } => "ConfluentPoint",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::ConditionViolated { .. } => "ConditionViolated",
            Error::Dimension(_) => "Dimension",
        }
    }

    /// Spectral hits are legitimate outputs of a sweep rather than failures.
    pub fn is_spectral(&self) -> bool {
        matches!(
            self,
            Error::SpectrumOfA0 { .. } | Error::SingularDenominator { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
