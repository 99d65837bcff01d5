//! Random reversible circuits on n-bit strings and the Markov operators they
//! induce on k-tuples: exact construction, spectral analysis, canonical-path
//! congestion, and a block-cipher-style mixing construction, all at scales
//! where every quantity can be computed exactly or cross-checked.

pub mod circuit;
pub mod codec;
pub mod error;
pub mod feistel;
pub mod gate;
pub mod linalg;
pub mod paths;
pub mod rng;
pub mod spectral;
pub mod walk;

pub use circuit::{Arch, BitString, Circuit, GateDist, Layer, PlacedGate, Placement};
pub use error::{Error, Result};
pub use gate::{Des2Form, Gate3, Parity};
pub use linalg::DenseMatrix;
pub use walk::{FourierIndex, FunctionVector, OperatorSpec, TupleState};
