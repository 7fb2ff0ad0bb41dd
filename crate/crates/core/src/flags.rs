use serde::{Deserialize, Serialize};

/// Per-row status of a row-decoupled fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    #[default]
    Ok,
    /// The data carry no information about this row; a conventional value was used.
    Undetermined,
    /// Total least squares has no solution; the least-squares value was used.
    TlsDegenerate,
    /// The triangular pivot for this row is below tolerance, so its diagonal entry is unreliable.
    SmallPivot,
}

/// Non-fatal conditions recorded on a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FitWarning {
    /// The requested rank exceeded the numerical rank of X; the fit was truncated.
    RankDeficient { requested: usize, effective: usize },
    /// A linear system was numerically singular; the minimum-norm solution was used.
    Condition { estimate: f64 },
}

pub fn count(flags: &[RowFlag], which: RowFlag) -> usize {
    flags.iter().filter(|&&f| f == which).count()
}
