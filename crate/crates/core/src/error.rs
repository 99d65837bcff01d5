use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("placement {site:?} is not a strictly ascending triple inside 1..={n}")]
    Placement { site: [usize; 3], n: usize },

    #[error("architecture needs at least 3 wires, got n={0}")]
    Architecture(usize),

    #[error("wire count mismatch: expected n={expected}, got n={got}")]
    WireMismatch { expected: usize, got: usize },

    #[error("value {0} does not fit in {1} bits")]
    ValueWidth(u64, usize),

    #[error("gate table is not a bijection on 0..8")]
    NotBijective,

    #[error("odd-parity gate outside the two-bit-controlled family is not allowed in circuits")]
    OddGate,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate regime: k={k} tuples need 2^|S| >= k+2, but 2^|S|={values}")]
    DegenerateRegime { k: usize, values: usize },

    #[error("state space 2^(n*k) = {dim} exceeds the configured cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("spectrum is degenerate: fewer than two distinct eigenvalues")]
    DegenerateSpectrum,

    #[error("iteration failed to converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("path rule produced no word for generator {0}")]
    IncompleteMap(String),

    #[error("function bank has no entry for {0}")]
    MissingFunction(String),

    #[error("word contains a generator outside the codomain set: {0}")]
    ForeignGenerator(String),

    #[error("cannot reroute anchor {anchor} on {n} wires: helper anchor falls off the chain")]
    RerouteBoundary { anchor: usize, n: usize },

    #[error("need {need} distinct rows but the space only has {have}")]
    TooManyRows { need: u64, have: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
