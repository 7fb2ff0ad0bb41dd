//! Hermitian and skew-Hermitian Procrustes fits, and the entrywise variance of
//! the symmetric and unconstrained estimators under noise in `Y`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PidmdError, Result};
use crate::flags::FitWarning;
use crate::linalg::{svd, Matrix, RealMatrix, C64, RANK_RTOL, ZERO};
use crate::snapshot::SnapshotPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    Symmetric,
    Skew,
}

/// `A = U L U^*` with `U` orthonormal and `L` (skew-)Hermitian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetricModel {
    #[serde(with = "crate::serde_matrix")]
    pub basis: Matrix,
    #[serde(with = "crate::serde_matrix")]
    pub core: Matrix,
    pub kind: SymmetryKind,
    pub warnings: Vec<FitWarning>,
}

impl SymmetricModel {
    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn materialize(&self) -> Matrix {
        &self.basis * &self.core * self.basis.adjoint()
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        &self.basis * (&self.core * (self.basis.adjoint() * x))
    }
}

pub fn fit_symmetric(pair: &SnapshotPair, kind: SymmetryKind, rank: Option<usize>) -> Result<SymmetricModel> {
    let dec = svd(&pair.x);
    let effective = dec.rank(RANK_RTOL);
    if effective == 0 {
        return Err(PidmdError::DegenerateInput("X is zero".into()));
    }
    let mut warnings = Vec::new();
    let q = match rank {
        None => effective,
        Some(0) => return Err(invalid("rank must be at least 1")),
        Some(r) if r > effective => {
            warnings.push(FitWarning::RankDeficient {
                requested: r,
                effective,
            });
            effective
        }
        Some(r) => r,
    };
    let t = dec.truncate(q);
    let c = t.u.adjoint() * &pair.y * &t.v;
    let s = &t.s;
    let core = Matrix::from_fn(q, q, |i, j| {
        let denom = s[i] * s[i] + s[j] * s[j];
        if denom == 0.0 {
            return ZERO;
        }
        let mirrored = c[(j, i)].conj() * s[i];
        let direct = c[(i, j)] * s[j];
        match kind {
            SymmetryKind::Symmetric => (mirrored + direct) / denom,
            SymmetryKind::Skew => (direct - mirrored) / denom,
        }
    });
    Ok(SymmetricModel {
        basis: t.u,
        core,
        kind,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    Exact,
    Symmetric,
}

/// Entrywise variance of the rank-`r` estimator when `Y` carries unit-variance
/// i.i.d. noise.
pub fn variance_profile(x: &Matrix, r: usize, which: VarianceKind) -> Result<RealMatrix> {
    let dec = svd(x);
    let effective = dec.rank(RANK_RTOL);
    if effective == 0 {
        return Err(PidmdError::DegenerateInput("X is zero".into()));
    }
    if r == 0 || r > effective {
        return Err(invalid(format!("rank must lie in 1..={effective}, got {r}")));
    }
    let n = x.nrows();
    let u = dec.u.columns(0, r);
    let s2: Vec<f64> = dec.s[..r].iter().map(|s| s * s).collect();
    let out = match which {
        VarianceKind::Exact => {
            let per_row: Vec<f64> = (0..n)
                .map(|j| (0..r).map(|l| u[(j, l)].norm_sqr() / s2[l]).sum())
                .collect();
            RealMatrix::from_fn(n, n, |_, j| per_row[j])
        }
        VarianceKind::Symmetric => RealMatrix::from_fn(n, n, |i, j| {
            let mut acc = 0.0;
            for k in 0..r {
                for l in 0..r {
                    let t: C64 = u[(i, k)] * u[(j, l)] + u[(i, l)] * u[(j, k)];
                    acc += t.norm_sqr() / (s2[k] + s2[l]);
                }
            }
            acc / 2.0
        }),
    };
    Ok(out)
}
