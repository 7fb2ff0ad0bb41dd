//! Spectra, predictions, residuals, resolvent modes and spectrum comparison
//! for any fitted model.

use serde::{Deserialize, Serialize};

use crate::causal::triangular_eigenvalues;
use crate::error::{invalid, mismatch, PidmdError, Result};
use crate::flags::RowFlag;
use crate::fourier::fourier_mode;
use crate::linalg::{
    c64, canonical_order, condition_number, eig, eigh, expm, normalize_column, pinv, svd, Matrix, Vector, C64, I,
};
use crate::model::{fit, ManifoldSpec, PiDmdModel};
use crate::selfadjoint::SymmetryKind;
use crate::snapshot::{SnapshotPair, TimeKind};

/// Mode matrices with condition number above this are not used for spectral propagation.
pub const MODE_CONDITION_LIMIT: f64 = 1e8;

/// Distance from `i omega` to the nearest eigenvalue below which the resolvent is refused.
pub const RESOLVENT_SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    #[serde(with = "crate::serde_matrix")]
    pub modes: Matrix,
    pub amplitudes: Option<Vec<C64>>,
    pub time_kind: TimeKind,
    /// False where the eigenvalue rests on a numerically undetermined parameter.
    pub reliable: Vec<bool>,
}

impl Spectrum {
    /// Puts eigenpairs in canonical order and normalizes each mode.
    pub fn from_pairs(vals: Vec<C64>, modes: Matrix, reliable: Vec<bool>, time_kind: TimeKind) -> Spectrum {
        let order = canonical_order(&vals);
        let mut out = Matrix::zeros(modes.nrows(), order.len());
        for (dst, &src) in order.iter().enumerate() {
            out.set_column(dst, &modes.column(src));
            normalize_column(&mut out, dst);
        }
        Spectrum {
            eigenvalues: order.iter().map(|&i| vals[i]).collect(),
            modes: out,
            amplitudes: None,
            time_kind,
            reliable: order.iter().map(|&i| reliable[i]).collect(),
        }
    }

    /// Mode weights `b = Psi^+ x0`.
    pub fn with_amplitudes(mut self, x0: &Vector) -> Result<Spectrum> {
        if x0.len() != self.modes.nrows() {
            return Err(mismatch(format!(
                "modes have {} rows but the state has length {}",
                self.modes.nrows(),
                x0.len()
            )));
        }
        let b = pinv(&self.modes) * x0;
        self.amplitudes = Some(b.iter().copied().collect());
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

pub fn spectrum(model: &PiDmdModel, time_kind: TimeKind) -> Result<Spectrum> {
    let all = |k: usize| vec![true; k];
    Ok(match model {
        PiDmdModel::Exact(m) => Spectrum::from_pairs(m.eigenvalues.clone(), m.modes.clone(), all(m.rank), time_kind),
        PiDmdModel::Circulant(m) => {
            let n = m.n();
            let modes = Matrix::from_fn(n, n, |_, _| c64(0.0, 0.0));
            let mut modes = modes;
            for j in 0..n {
                modes.set_column(j, &Vector::from_vec(fourier_mode(j, n)));
            }
            let reliable = m.flags.iter().map(|&f| f == RowFlag::Ok).collect();
            Spectrum::from_pairs(m.eigenvalues.clone(), modes, reliable, time_kind)
        }
        PiDmdModel::Symmetric(m) => {
            let (vals, vecs) = match m.kind {
                SymmetryKind::Symmetric => {
                    let (v, w) = eigh(&m.core);
                    (v.into_iter().map(|x| c64(x, 0.0)).collect::<Vec<_>>(), w)
                }
                // i K is Hermitian when K is skew-Hermitian
                SymmetryKind::Skew => {
                    let (v, w) = eigh(&(&m.core * I));
                    (v.into_iter().map(|x| c64(0.0, -x)).collect(), w)
                }
            };
            let k = vals.len();
            Spectrum::from_pairs(vals, &m.basis * vecs, all(k), time_kind)
        }
        PiDmdModel::Unitary(m) => {
            let (vals, vecs) = eig(&m.operator)?;
            let modes = match &m.pod_basis {
                Some(u) => u * vecs,
                None => vecs,
            };
            let k = vals.len();
            Spectrum::from_pairs(vals, modes, all(k), time_kind)
        }
        PiDmdModel::Triangular(m) => triangular_eigenvalues(m, time_kind),
        PiDmdModel::Banded(m) => {
            let (vals, vecs) = eig(&m.materialize())?;
            let reliable = m.flags.iter().all(|&f| f == RowFlag::Ok);
            let k = vals.len();
            Spectrum::from_pairs(vals, vecs, vec![reliable; k], time_kind)
        }
        PiDmdModel::Toeplitz(_) | PiDmdModel::Dense(_) => {
            let (vals, vecs) = eig(&model.materialize())?;
            let k = vals.len();
            Spectrum::from_pairs(vals, vecs, all(k), time_kind)
        }
    })
}

/// Trajectory with `steps + 1` columns starting at `x0`.
///
/// Discrete time iterates the model. Continuous time propagates
/// `Psi diag(exp(Lambda t)) Psi^+ x0`, or steps with `expm(A dt)` when the modes
/// are too ill-conditioned to trust.
pub fn predict(model: &PiDmdModel, x0: &Vector, steps: usize, time_kind: TimeKind, dt: f64) -> Result<Matrix> {
    let n = model.n();
    if x0.len() != n {
        return Err(mismatch(format!("model has n = {n} but the initial state has length {}", x0.len())));
    }
    let mut out = Matrix::zeros(n, steps + 1);
    out.set_column(0, x0);
    match time_kind {
        TimeKind::Discrete => {
            for k in 1..=steps {
                let prev = out.columns(k - 1, 1).into_owned();
                out.set_column(k, &model.apply(&prev).column(0));
            }
        }
        TimeKind::Continuous => {
            if !(dt > 0.0) {
                return Err(invalid("continuous prediction needs dt > 0"));
            }
            let spec = spectrum(model, time_kind)?;
            let full = spec.len() == n;
            if full && condition_number(&spec.modes) <= MODE_CONDITION_LIMIT {
                let b = pinv(&spec.modes) * x0;
                for k in 1..=steps {
                    let t = k as f64 * dt;
                    let w = Vector::from_iterator(
                        spec.len(),
                        spec.eigenvalues.iter().zip(b.iter()).map(|(l, bj)| (l * t).exp() * bj),
                    );
                    out.set_column(k, &(&spec.modes * w));
                }
            } else {
                let step = expm(&model.materialize().scale(dt));
                for k in 1..=steps {
                    let next = &step * out.column(k - 1);
                    out.set_column(k, &next);
                }
            }
        }
    }
    Ok(out)
}

/// `||Y - A X||_F`.
pub fn residual(model: &PiDmdModel, pair: &SnapshotPair) -> Result<f64> {
    if pair.n() != model.n() {
        return Err(mismatch(format!("model has n = {} but the data have n = {}", model.n(), pair.n())));
    }
    Ok(match model {
        PiDmdModel::Circulant(m) => m.residual(pair),
        _ => (&pair.y - model.apply(&pair.x)).norm(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventSet {
    pub omega: f64,
    /// Descending.
    pub gains: Vec<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub forcings: Matrix,
    #[serde(with = "crate::serde_matrix")]
    pub responses: Matrix,
}

/// Leading `k` singular triplets of `(i omega I - A)^-1`.
///
/// Exact DMD models use the reduced operator and lift the vectors by the POD basis.
pub fn resolvent_modes(model: &PiDmdModel, omega: f64, k: usize) -> Result<ResolventSet> {
    if k == 0 {
        return Err(invalid("need at least one resolvent mode"));
    }
    if !omega.is_finite() {
        return Err(invalid("frequency must be finite"));
    }
    let (op, basis) = match model {
        PiDmdModel::Exact(m) => (m.reduced_operator.clone(), Some(&m.pod_basis)),
        _ => (model.materialize(), None),
    };
    let dim = op.nrows();
    let iw = c64(0.0, omega);
    let (vals, _) = eig(&op)?;
    if let Some(near) = vals
        .iter()
        .copied()
        .min_by(|a, b| (a - iw).norm().total_cmp(&(b - iw).norm()))
    {
        let distance = (near - iw).norm();
        if distance <= RESOLVENT_SINGULAR_TOL * omega.abs().max(1.0) {
            return Err(PidmdError::NearSingularResolvent {
                omega,
                eigenvalue: near,
                distance,
            });
        }
    }
    let shifted = Matrix::from_diagonal_element(dim, dim, iw) - &op;
    let inv = shifted.lu().try_inverse().ok_or_else(|| PidmdError::Numerical("resolvent is singular".into()))?;
    let dec = svd(&inv);
    let k = k.min(dec.s.len());
    let u = dec.u.columns(0, k).into_owned();
    let v = dec.v.columns(0, k).into_owned();
    let (responses, forcings) = match basis {
        Some(b) => (b * u, b * v),
        None => (u, v),
    };
    Ok(ResolventSet {
        omega,
        gains: dec.s[..k].to_vec(),
        forcings,
        responses,
    })
}

/// Closest matrix to `a_hat` on a manifold: the fit with `X = I` and `Y = a_hat`.
pub fn nearest_on_manifold(a_hat: &Matrix, spec: &ManifoldSpec) -> Result<PiDmdModel> {
    if a_hat.nrows() != a_hat.ncols() {
        return Err(mismatch(format!(
            "nearest-matrix projection needs a square matrix, got {}x{}",
            a_hat.nrows(),
            a_hat.ncols()
        )));
    }
    let n = a_hat.nrows();
    fit(&SnapshotPair::new(Matrix::identity(n, n), a_hat.clone())?, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralError {
    /// Mean `|lambda_est - lambda_true|` over matched pairs; `None` when nothing matched.
    pub matched_mean_abs_error: Option<f64>,
    pub matched_count: usize,
    /// Truth eigenvalues left without a partner within tolerance.
    pub unmatched_count: usize,
    pub tolerance: f64,
}

pub fn spectral_error(estimated: &Spectrum, truth: &Spectrum) -> SpectralError {
    match_eigenvalues(&estimated.eigenvalues, &truth.eigenvalues)
}

/// Greedy matching without replacement: repeatedly pair the closest remaining
/// (estimate, truth) couple while it lies within `1e-2 * max(1, max |truth|)`.
pub fn match_eigenvalues(estimated: &[C64], truth: &[C64]) -> SpectralError {
    let scale = truth.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let tolerance = 1e-2 * scale;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(estimated.len() * truth.len());
    for (i, e) in estimated.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let d = (e - t).norm();
            if d <= tolerance {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; estimated.len()];
    let mut used_t = vec![false; truth.len()];
    let mut total = 0.0;
    let mut matched = 0;
    for (d, i, j) in pairs {
        if !used_e[i] && !used_t[j] {
            used_e[i] = true;
            used_t[j] = true;
            total += d;
            matched += 1;
        }
    }
    SpectralError {
        matched_mean_abs_error: (matched > 0).then(|| total / matched as f64),
        matched_count: matched,
        unmatched_count: truth.len() - matched,
        tolerance,
    }
}
