//! Unitary (orthogonal Procrustes) fits for energy-preserving dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::flags::RowFlag;
use crate::linalg::{svd, Matrix, RANK_RTOL};
use crate::snapshot::SnapshotPair;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitaryModel {
    /// Unitary matrix acting on the full state, or on POD coordinates when `pod_basis` is set.
    #[serde(with = "crate::serde_matrix")]
    pub operator: Matrix,
    #[serde(with = "crate::serde_matrix::option")]
    pub pod_basis: Option<Matrix>,
    /// Whether `Y X^*` has full rank, which makes the optimum unique.
    pub unique: bool,
    pub flag: RowFlag,
}

impl UnitaryModel {
    pub fn n(&self) -> usize {
        match &self.pod_basis {
            Some(u) => u.nrows(),
            None => self.operator.nrows(),
        }
    }

    pub fn materialize(&self) -> Matrix {
        match &self.pod_basis {
            Some(u) => u * &self.operator * u.adjoint(),
            None => self.operator.clone(),
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        match &self.pod_basis {
            Some(u) => u * (&self.operator * (u.adjoint() * x)),
            None => &self.operator * x,
        }
    }
}

/// Closest unitary map from `X` to `Y`: `A = U V^*` where `Y X^* = U S V^*`.
///
/// With `pod_rank`, both matrices are first projected onto the leading left singular
/// vectors of `X` and the unitary acts in those coordinates.
pub fn fit_unitary(pair: &SnapshotPair, pod_rank: Option<usize>) -> Result<UnitaryModel> {
    let (n, m) = (pair.n(), pair.m());
    let (x, y, basis) = match pod_rank {
        Some(r) => {
            if r == 0 || r > n.min(m) {
                return Err(invalid(format!("POD rank must lie in 1..={}, got {r}", n.min(m))));
            }
            let u = svd(&pair.x).u.columns(0, r).into_owned();
            (u.adjoint() * &pair.x, u.adjoint() * &pair.y, Some(u))
        }
        None => (pair.x.clone(), pair.y.clone(), None),
    };
    let k = x.nrows();
    let cross = &y * x.adjoint();
    let dec = svd(&cross);
    if dec.s[0] == 0.0 {
        return Ok(UnitaryModel {
            operator: Matrix::identity(k, k),
            pod_basis: basis,
            unique: false,
            flag: RowFlag::Undetermined,
        });
    }
    let unique = dec.rank(RANK_RTOL) == k;
    Ok(UnitaryModel {
        operator: &dec.u * dec.v.adjoint(),
        pod_basis: basis,
        unique,
        flag: RowFlag::Ok,
    })
}
