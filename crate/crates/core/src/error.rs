//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown gate name `{0}`")]
    UnknownGate(String),

    #[error("gate `{0}` does not take an angle")]
    UnexpectedTheta(&'static str),

    #[error("gate `{0}` requires an angle")]
    MissingTheta(&'static str),

    #[error("qubit index {index} out of range for {nqubits} qubits")]
    QubitOutOfRange { index: usize, nqubits: usize },

    #[error("duplicate qubit index {0} in target list")]
    DuplicateTarget(usize),

    #[error("operator dimension {got} does not match 2^{targets} targets")]
    DimensionMismatch { got: usize, targets: usize },

    #[error("projector is not idempotent Hermitian (deviation {0:.3e})")]
    NotAProjector(f64),

    #[error("empty keep list in partial trace")]
    EmptyKeep,

    #[error("density matrix must have more than {0} qubits")]
    TooFewQubits(usize),

    #[error("density matrix limited to 5 qubits, got {0}")]
    TooManyQubits(usize),

    #[error("k = {0} outside the supported range 3..=89")]
    KOutOfRange(u32),

    #[error("unphysical noise parameters: eps = {eps}, |delta|^2 = {delta_sq}")]
    UnphysicalParams { eps: f64, delta_sq: f64 },

    #[error("m = {0} outside the supported range 1..=16")]
    MOutOfRange(u32),

    #[error("gamma = {0} outside [0, 1/2]")]
    GammaOutOfRange(f64),

    #[error("exact gamma map is only defined for the m = 1 code")]
    GammaRequiresM1,

    #[error("fault must act on a single site of the gadget, got `{0}`")]
    UnsupportedFault(String),

    #[error("W_{k} cascade needs resources for j = 3..{k}, got {got}")]
    WrongResourceCount { k: u32, got: usize },

    #[error("probability {0} vanished; cannot normalize")]
    ZeroProbability(f64),

    #[error("j = {j} outside 3..{k}")]
    ConsumptionIndex { j: u32, k: u32 },

    #[error("axis has norm {0}, expected a unit vector")]
    NonUnitAxis(f64),

    #[error("rotation angle {0} exceeds pi/8 after normalization")]
    AngleOutOfRange(f64),

    #[error("relative accuracy {0} outside (0, 1)")]
    EpsRelOutOfRange(f64),

    #[error("accuracy delta = {0} outside the supported range")]
    DeltaOutOfRange(f64),

    #[error("distillation target eps = {target:.3e} unreachable at k = {k}: floor {floor:.3e} after {rounds} rounds")]
    TargetUnreachable { k: u32, target: f64, floor: f64, rounds: u32 },

    #[error("no cost entry at level {k} with eps <= {target:.3e}")]
    NoCostEntry { k: u32, target: f64 },

    #[error("cost fit for level {0} has no data")]
    EmptyFit(u32),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
