//! Structured dynamic mode decomposition: fit linear operators to snapshot data
//! under physical constraints and analyse the fitted operators.

pub mod causal;
pub mod cli;
pub mod conservative;
pub mod diagnostics;
pub mod error;
pub mod exact_dmd;
pub mod flags;
pub mod fourier;
pub mod linalg;
pub mod local;
pub mod model;
pub mod random;
pub mod selfadjoint;
mod serde_matrix;
pub mod shift_invariant;
pub mod snapshot;
pub mod testbeds;

pub use error::{PidmdError, Result};
pub use linalg::{Matrix, C64};
pub use diagnostics::{Spectrum, ResolventSet};
pub use model::{fit, ManifoldSpec, PiDmdModel};
pub use snapshot::{Grid, Pairing, SnapshotPair, TimeKind};
