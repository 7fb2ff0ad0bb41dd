//! A tagged union over every fitted representation, and a single entry point
//! that dispatches a manifold selection to the matching solver.

use serde::{Deserialize, Serialize};

use crate::causal::{fit_lower_triangular, fit_triangular, Orientation, TriangularMethod, TriangularModel};
use crate::conservative::{fit_unitary, UnitaryModel};
use crate::error::{invalid, Result};
use crate::exact_dmd::{fit_exact, ExactDmdModel};
use crate::local::{
    fit_banded, fit_regularized_local, fit_symmetric_tridiagonal, fit_tridiagonal, fit_tridiagonal_tls,
    BandedModel, LocalityPenalty,
};
use crate::linalg::Matrix;
use crate::selfadjoint::{fit_symmetric, SymmetricModel, SymmetryKind};
use crate::shift_invariant::{fit_circulant, fit_toeplitz, CirculantModel, CirculantVariant, ToeplitzFlavor, ToeplitzModel};
use crate::snapshot::{Grid, SnapshotPair};

/// An operator stored as a plain dense matrix (used by the soft-locality fit).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseModel {
    #[serde(with = "crate::serde_matrix")]
    pub operator: Matrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "manifold")]
pub enum PiDmdModel {
    Exact(ExactDmdModel),
    Circulant(CirculantModel),
    Toeplitz(ToeplitzModel),
    Unitary(UnitaryModel),
    Symmetric(SymmetricModel),
    Banded(BandedModel),
    Triangular(TriangularModel),
    Dense(DenseModel),
}

impl PiDmdModel {
    pub fn n(&self) -> usize {
        match self {
            PiDmdModel::Exact(m) => m.n(),
            PiDmdModel::Circulant(m) => m.n(),
            PiDmdModel::Toeplitz(m) => m.n(),
            PiDmdModel::Unitary(m) => m.n(),
            PiDmdModel::Symmetric(m) => m.n(),
            PiDmdModel::Banded(m) => m.n,
            PiDmdModel::Triangular(m) => m.n,
            PiDmdModel::Dense(m) => m.operator.nrows(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PiDmdModel::Exact(_) => "exact",
            PiDmdModel::Circulant(_) => "circulant",
            PiDmdModel::Toeplitz(_) => "toeplitz",
            PiDmdModel::Unitary(_) => "unitary",
            PiDmdModel::Symmetric(_) => "symmetric",
            PiDmdModel::Banded(_) => "banded",
            PiDmdModel::Triangular(_) => "triangular",
            PiDmdModel::Dense(_) => "dense",
        }
    }

    /// Full `n x n` operator. For exact DMD this is `Y V_r S_r^-1 U_r^*`.
    pub fn materialize(&self) -> Matrix {
        match self {
            PiDmdModel::Exact(m) => m.operator(),
            PiDmdModel::Circulant(m) => m.materialize(),
            PiDmdModel::Toeplitz(m) => m.materialize(),
            PiDmdModel::Unitary(m) => m.materialize(),
            PiDmdModel::Symmetric(m) => m.materialize(),
            PiDmdModel::Banded(m) => m.materialize(),
            PiDmdModel::Triangular(m) => m.materialize(),
            PiDmdModel::Dense(m) => m.operator.clone(),
        }
    }

    /// `A x` without forming `A` where the structure allows it.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        match self {
            PiDmdModel::Exact(m) => &m.lifting * (m.pod_basis.adjoint() * x),
            PiDmdModel::Circulant(m) => m.apply(x),
            PiDmdModel::Toeplitz(m) => m.materialize() * x,
            PiDmdModel::Unitary(m) => m.apply(x),
            PiDmdModel::Symmetric(m) => m.apply(x),
            PiDmdModel::Banded(m) => m.apply(x),
            PiDmdModel::Triangular(m) => m.apply(x),
            PiDmdModel::Dense(m) => &m.operator * x,
        }
    }
}

/// Which solver to run, with its options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "manifold")]
pub enum ManifoldSpec {
    Exact { rank: usize },
    Circulant { variant: CirculantVariant },
    Toeplitz { flavor: ToeplitzFlavor },
    Unitary { pod_rank: Option<usize> },
    Symmetric { kind: SymmetryKind, rank: Option<usize> },
    Tridiagonal { periodic: bool },
    Banded { lower: usize, upper: usize, periodic: bool },
    SymmetricTridiagonal,
    TridiagonalTls,
    RegularizedLocal { sigma: f64, lambda: f64, allow_large: bool },
    Triangular { method: TriangularMethod, orientation: Orientation },
}

pub fn fit(pair: &SnapshotPair, spec: &ManifoldSpec) -> Result<PiDmdModel> {
    let n = pair.n();
    Ok(match spec {
        ManifoldSpec::Exact { rank } => PiDmdModel::Exact(fit_exact(pair, *rank)?),
        ManifoldSpec::Circulant { variant } => PiDmdModel::Circulant(fit_circulant(pair, *variant)?),
        ManifoldSpec::Toeplitz { flavor } => PiDmdModel::Toeplitz(fit_toeplitz(pair, *flavor)?),
        ManifoldSpec::Unitary { pod_rank } => PiDmdModel::Unitary(fit_unitary(pair, *pod_rank)?),
        ManifoldSpec::Symmetric { kind, rank } => PiDmdModel::Symmetric(fit_symmetric(pair, *kind, *rank)?),
        ManifoldSpec::Tridiagonal { periodic } => PiDmdModel::Banded(fit_tridiagonal(pair, *periodic)?),
        ManifoldSpec::Banded { lower, upper, periodic } => {
            PiDmdModel::Banded(fit_banded(pair, &vec![*lower; n], &vec![*upper; n], *periodic)?)
        }
        ManifoldSpec::SymmetricTridiagonal => PiDmdModel::Banded(fit_symmetric_tridiagonal(pair)?),
        ManifoldSpec::TridiagonalTls => PiDmdModel::Banded(fit_tridiagonal_tls(pair)?),
        ManifoldSpec::RegularizedLocal {
            sigma,
            lambda,
            allow_large,
        } => {
            let grid = match &pair.grid {
                Some(g) => g.clone(),
                None => Grid::new((0..n).map(|i| i as f64 / n as f64).collect())?,
            };
            let penalty = LocalityPenalty::kernel(&grid, *sigma, *lambda)?;
            PiDmdModel::Dense(DenseModel {
                operator: fit_regularized_local(pair, &penalty, *allow_large)?,
            })
        }
        ManifoldSpec::Triangular { method, orientation } => PiDmdModel::Triangular(match orientation {
            Orientation::Upper => fit_triangular(pair, *method)?,
            Orientation::Lower => fit_lower_triangular(pair, *method)?,
        }),
    })
}

impl ManifoldSpec {
    /// Rejects option combinations that no solver accepts, before any data is read.
    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldSpec::Exact { rank: 0 } => Err(invalid("rank must be at least 1")),
            ManifoldSpec::RegularizedLocal { sigma, lambda, .. } if !(*sigma > 0.0) || !(*lambda >= 0.0) => {
                Err(invalid("regularized locality needs sigma > 0 and lambda >= 0"))
            }
            _ => Ok(()),
        }
    }
}
