//! Exact DMD: the unconstrained low-rank baseline.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PidmdError, Result};
use crate::flags::FitWarning;
use crate::linalg::{eig, svd, Matrix, Vector, C64, RANK_RTOL};
use crate::snapshot::SnapshotPair;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactDmdModel {
    pub rank: usize,
    #[serde(with = "crate::serde_matrix")]
    pub pod_basis: Matrix,
    pub singular_values: Vec<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub reduced_operator: Matrix,
    pub eigenvalues: Vec<C64>,
    #[serde(with = "crate::serde_matrix")]
    pub reduced_modes: Matrix,
    #[serde(with = "crate::serde_matrix")]
    pub modes: Matrix,
    pub amplitudes: Vec<C64>,
    /// `Y V_r S_r^-1`; the full-space operator is `lifting * pod_basis^*`.
    #[serde(with = "crate::serde_matrix")]
    pub lifting: Matrix,
    pub warnings: Vec<FitWarning>,
}

pub fn fit_exact(pair: &SnapshotPair, r: usize) -> Result<ExactDmdModel> {
    let (n, m) = (pair.n(), pair.m());
    if r == 0 || r > n.min(m) {
        return Err(invalid(format!("rank must lie in 1..={}, got {r}", n.min(m))));
    }
    let dec = svd(&pair.x);
    let effective = dec.rank(RANK_RTOL);
    if effective == 0 {
        return Err(PidmdError::DegenerateInput("X is zero".into()));
    }
    let mut warnings = Vec::new();
    let r = if r > effective {
        warnings.push(FitWarning::RankDeficient {
            requested: r,
            effective,
        });
        effective
    } else {
        r
    };
    let t = dec.truncate(r);
    let mut v_sinv = t.v.clone();
    for (k, &s) in t.s.iter().enumerate() {
        v_sinv.column_mut(k).unscale_mut(s);
    }
    let lifting = &pair.y * v_sinv;
    let reduced = t.u.adjoint() * &lifting;
    let (eigenvalues, reduced_modes) = eig(&reduced)?;
    let modes = &lifting * &reduced_modes;
    let x1 = pair.x.column(0).into_owned();
    let amplitudes = crate::linalg::pinv(&modes) * x1;
    Ok(ExactDmdModel {
        rank: r,
        pod_basis: t.u,
        singular_values: t.s,
        reduced_operator: reduced,
        eigenvalues,
        reduced_modes,
        modes,
        amplitudes: amplitudes.iter().copied().collect(),
        lifting,
        warnings,
    })
}

impl ExactDmdModel {
    pub fn n(&self) -> usize {
        self.pod_basis.nrows()
    }

    /// `U_r Â U_r^*`, the operator restricted to the POD subspace.
    pub fn projected_operator(&self) -> Matrix {
        &self.pod_basis * &self.reduced_operator * self.pod_basis.adjoint()
    }

    /// `Y V_r S_r^-1 U_r^*`, the operator whose eigenvectors are the exact DMD modes.
    pub fn operator(&self) -> Matrix {
        &self.lifting * self.pod_basis.adjoint()
    }

    /// State at time index `j >= 1`: `Psi Lambda^(j-1) b`.
    pub fn reconstruct(&self, j: usize) -> Result<Vector> {
        if j == 0 {
            return Err(invalid("time index starts at 1"));
        }
        let p = (j - 1) as i32;
        let weights = Vector::from_iterator(
            self.rank,
            self.eigenvalues
                .iter()
                .zip(&self.amplitudes)
                .map(|(l, b)| if p == 0 { *b } else { l.powi(p) * b }),
        );
        Ok(&self.modes * weights)
    }
}
