use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("point representation does not match a {kind} system")]
    PointMismatch { kind: &'static str },

    #[error("symbol {letter} outside alphabet 1..={n}")]
    LetterOutOfRange { letter: u8, n: usize },

    #[error("branch inversion failed to bracket a root at y = {y}")]
    BracketFailure { y: f64 },

    #[error("spillover {mass:.3e} of column {column} exceeds tolerance {tolerance:.1e}")]
    Spillover { column: usize, mass: f64, tolerance: f64 },

    #[error("rank deficient: smallest singular value {sigma_min:.3e}")]
    RankDeficient { sigma_min: f64 },

    #[error("exact polar decomposition needs an isometric input")]
    ExactPolarUnsupported,

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("not unitary: defect {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("module basis not orthonormal: defect {defect:.3e}")]
    NotOrthonormal { defect: f64 },

    #[error("transfer routes disagree: {defect:.3e}")]
    RoutesDisagree { defect: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
