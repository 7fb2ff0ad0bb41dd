//! Shift-invariant operators: circulant fits in the Fourier basis, non-uniform
//! grids, and Toeplitz/Hankel fits through a circulant embedding.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};
use crate::flags::{FitWarning, RowFlag};
use crate::fourier::{
    apply_circulant, circulant_matrix, from_fourier, ifft, row_energy, row_inner, to_fourier,
    wavenumber,
};
use crate::linalg::{c64, hermitian_min_norm_solve, svd, Matrix, Vector, C64, I, ONE, ZERO};
use crate::snapshot::{Grid, SnapshotPair};

/// Rows whose Fourier energy falls below this fraction of the largest row are treated as empty.
const EMPTY_ROW_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CirculantVariant {
    Plain,
    Symmetric,
    Skew,
    Unitary,
    LowRank { rank: usize },
    Tls,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CirculantModel {
    /// Eigenvalue per DFT index, in FFT order.
    pub eigenvalues: Vec<C64>,
    pub variant: CirculantVariant,
    pub flags: Vec<RowFlag>,
}

impl CirculantModel {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n()).map(|j| wavenumber(j, self.n())).collect()
    }

    pub fn materialize(&self) -> Matrix {
        circulant_matrix(&self.eigenvalues)
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        apply_circulant(&self.eigenvalues, x)
    }

    /// `||Y - A X||_F`, evaluated row by row in the Fourier basis.
    pub fn residual(&self, pair: &SnapshotPair) -> f64 {
        let xh = to_fourier(&pair.x);
        let yh = to_fourier(&pair.y);
        let mut total = 0.0;
        for (xc, yc) in xh.column_iter().zip(yh.column_iter()) {
            for ((a, x), y) in self.eigenvalues.iter().zip(xc.iter()).zip(yc.iter()) {
                total += (y - a * x).norm_sqr();
            }
        }
        total.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualScores {
    pub scores: Vec<f64>,
}

struct FourierRows {
    xh: Matrix,
    yh: Matrix,
    energy: Vec<f64>,
    cross: Vec<C64>,
    empty: Vec<bool>,
}

fn fourier_rows(pair: &SnapshotPair) -> FourierRows {
    let xh = to_fourier(&pair.x);
    let yh = to_fourier(&pair.y);
    let energy = row_energy(&xh);
    let cross = row_inner(&yh, &xh);
    let top = energy.iter().copied().fold(0.0_f64, f64::max).sqrt();
    let empty = energy
        .iter()
        .map(|e| top == 0.0 || e.sqrt() <= EMPTY_ROW_RTOL * top)
        .collect();
    FourierRows {
        xh,
        yh,
        energy,
        cross,
        empty,
    }
}

pub fn fit_circulant(pair: &SnapshotPair, variant: CirculantVariant) -> Result<CirculantModel> {
    match variant {
        CirculantVariant::LowRank { rank } => return Ok(fit_circulant_lowrank(pair, rank)?.0),
        CirculantVariant::Tls => return fit_circulant_tls(pair),
        _ => {}
    }
    let rows = fourier_rows(pair);
    let n = pair.n();
    let mut eigenvalues = vec![ZERO; n];
    let mut flags = vec![RowFlag::Ok; n];
    let ynorm = row_energy(&rows.yh);
    for j in 0..n {
        let s = rows.cross[j];
        let e = rows.energy[j];
        if variant == CirculantVariant::Unitary {
            let scale = (e * ynorm[j]).sqrt();
            if rows.empty[j] || s.norm() <= EMPTY_ROW_RTOL * scale || scale == 0.0 {
                eigenvalues[j] = ONE;
                flags[j] = RowFlag::Undetermined;
            } else {
                eigenvalues[j] = s / s.norm();
            }
            continue;
        }
        if rows.empty[j] {
            flags[j] = RowFlag::Undetermined;
            continue;
        }
        eigenvalues[j] = match variant {
            CirculantVariant::Plain => s / e,
            CirculantVariant::Symmetric => c64(s.re / e, 0.0),
            CirculantVariant::Skew => I * (s.im / e),
            _ => unreachable!(),
        };
    }
    Ok(CirculantModel {
        eigenvalues,
        variant,
        flags,
    })
}

/// Best circulant with at most `r` nonzero eigenvalues.
///
/// Rows are ranked by `|Y_j X_j^*| / ||X_j||`, the square root of the drop in squared
/// residual obtained by keeping row `j`. Ties go to the smaller `|k|`, then to positive `k`.
pub fn fit_circulant_lowrank(pair: &SnapshotPair, r: usize) -> Result<(CirculantModel, ResidualScores)> {
    let n = pair.n();
    if r == 0 || r > n {
        return Err(invalid(format!("rank must lie in 1..={n}, got {r}")));
    }
    let mut model = fit_circulant(pair, CirculantVariant::Plain)?;
    let rows = fourier_rows(pair);
    let scores: Vec<f64> = (0..n)
        .map(|j| {
            if rows.empty[j] {
                0.0
            } else {
                rows.cross[j].norm() / rows.energy[j].sqrt()
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (wavenumber(a, n), wavenumber(b, n));
        scores[b]
            .total_cmp(&scores[a])
            .then(ka.abs().cmp(&kb.abs()))
            .then(kb.cmp(&ka))
    });
    for &j in &order[r..] {
        model.eigenvalues[j] = ZERO;
    }
    model.variant = CirculantVariant::LowRank { rank: r };
    Ok((model, ResidualScores { scores }))
}

/// Scalar total least squares on each Fourier row.
pub fn fit_circulant_tls(pair: &SnapshotPair) -> Result<CirculantModel> {
    let m = pair.m();
    if m < 2 {
        return Err(crate::error::PidmdError::InsufficientSnapshots { needed: 2, got: m });
    }
    let rows = fourier_rows(pair);
    let n = pair.n();
    let mut eigenvalues = vec![ZERO; n];
    let mut flags = vec![RowFlag::Ok; n];
    for j in 0..n {
        if rows.empty[j] {
            flags[j] = RowFlag::Undetermined;
            continue;
        }
        let stack = Matrix::from_fn(2, m, |r, t| if r == 0 { rows.xh[(j, t)] } else { rows.yh[(j, t)] });
        match scalar_tls(&stack) {
            Some(a) => eigenvalues[j] = a,
            None => {
                eigenvalues[j] = rows.cross[j] / rows.energy[j];
                flags[j] = RowFlag::TlsDegenerate;
            }
        }
    }
    Ok(CirculantModel {
        eigenvalues,
        variant: CirculantVariant::Tls,
        flags,
    })
}

/// TLS solution of `a (x + s) = y + r` for the 2 x m stack `[x; y]`, or `None` when
/// it does not exist.
fn scalar_tls(stack: &Matrix) -> Option<C64> {
    let dec = svd(stack);
    let (s1, s2) = (dec.s[0], dec.s.get(1).copied().unwrap_or(0.0));
    if s1 == 0.0 || s1 - s2 <= 1e-12 * s1 {
        return None;
    }
    // left singular vector of the smallest singular value is orthogonal to [1; a]
    let u = dec.u.column(1);
    if u[1].norm() <= 1e-12 {
        return None;
    }
    Some(-u[0].conj() / u[1].conj())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonuniformShiftModel {
    pub wavenumbers: Vec<i64>,
    pub eigenvalues: Vec<C64>,
    pub flags: Vec<RowFlag>,
}

impl NonuniformShiftModel {
    pub fn eigenvalue(&self, k: i64) -> Option<C64> {
        self.wavenumbers.iter().position(|&w| w == k).map(|i| self.eigenvalues[i])
    }
}

/// Shift-invariant fit on a non-uniform periodic grid of period 2, using trapezoid
/// quadrature for the Fourier coefficients `k = -K..=K`.
pub fn fit_shift_invariant_nonuniform(
    u: &Matrix,
    v: &Matrix,
    grid: &Grid,
    k_max: usize,
) -> Result<NonuniformShiftModel> {
    let n = u.nrows();
    if u.shape() != v.shape() {
        return Err(mismatch(format!(
            "U is {}x{} but V is {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    if grid.len() != n {
        return Err(mismatch(format!("grid has {} points for {} states", grid.len(), n)));
    }
    if !grid.is_periodic() || (grid.period_length() - 2.0).abs() > 1e-12 {
        return Err(invalid("non-uniform fit needs a periodic grid of period 2"));
    }
    if 2 * k_max + 1 > n {
        return Err(invalid(format!("2K+1 = {} exceeds the {} grid points", 2 * k_max + 1, n)));
    }
    let xi = grid.points();
    let period = grid.period_length();
    let weights: Vec<f64> = (0..n)
        .map(|l| {
            let next = if l + 1 < n { xi[l + 1] } else { xi[0] + period };
            let prev = if l > 0 { xi[l - 1] } else { xi[n - 1] - period };
            (next - prev) / 2.0
        })
        .collect();
    let ks: Vec<i64> = (-(k_max as i64)..=k_max as i64).collect();
    let e = Matrix::from_fn(ks.len(), n, |r, l| C64::from_polar(weights[l], -PI * ks[r] as f64 * xi[l]));
    let uh = &e * u;
    let vh = &e * v;
    let energy = row_energy(&uh);
    let cross = row_inner(&vh, &uh);
    let top = energy.iter().copied().fold(0.0_f64, f64::max).sqrt();
    let mut eigenvalues = vec![ZERO; ks.len()];
    let mut flags = vec![RowFlag::Ok; ks.len()];
    for r in 0..ks.len() {
        if top == 0.0 || energy[r].sqrt() <= EMPTY_ROW_RTOL * top {
            flags[r] = RowFlag::Undetermined;
        } else {
            eigenvalues[r] = cross[r] / energy[r];
        }
    }
    Ok(NonuniformShiftModel {
        wavenumbers: ks,
        eigenvalues,
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToeplitzFlavor {
    Toeplitz,
    Hankel,
}

/// Toeplitz model `A[i][j] = c[i - j + n - 1]`, or Hankel model `A[i][j] = c[i + j]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToeplitzModel {
    pub coefficients: Vec<C64>,
    pub flavor: ToeplitzFlavor,
    pub warnings: Vec<FitWarning>,
}

impl ToeplitzModel {
    pub fn n(&self) -> usize {
        self.coefficients.len().div_ceil(2)
    }

    pub fn materialize(&self) -> Matrix {
        let n = self.n();
        let c = &self.coefficients;
        match self.flavor {
            ToeplitzFlavor::Toeplitz => Matrix::from_fn(n, n, |i, j| c[i + n - 1 - j]),
            ToeplitzFlavor::Hankel => Matrix::from_fn(n, n, |i, j| c[i + j]),
        }
    }
}

pub fn fit_toeplitz(pair: &SnapshotPair, flavor: ToeplitzFlavor) -> Result<ToeplitzModel> {
    let (coefficients, warnings) = match flavor {
        ToeplitzFlavor::Toeplitz => toeplitz_coefficients(&pair.x, &pair.y),
        ToeplitzFlavor::Hankel => {
            let (mut c, w) = toeplitz_coefficients(&pair.x, &crate::linalg::flip_rows(&pair.y));
            c.reverse();
            (c, w)
        }
    };
    Ok(ToeplitzModel {
        coefficients,
        flavor,
        warnings,
    })
}

/// Least-squares Toeplitz coefficients through the 2n circulant embedding: the
/// operator is the leading block of `F* diag(a) F`, and `a` solves `H a = d`.
fn toeplitz_coefficients(x: &Matrix, y: &Matrix) -> (Vec<C64>, Vec<FitWarning>) {
    let (n, m) = x.shape();
    let big = 2 * n;
    let pad = |a: &Matrix| {
        let mut out = Matrix::zeros(big, m);
        out.rows_mut(0, n).copy_from(a);
        out
    };
    let xe = from_fourier(&pad(x));
    let ye = from_fourier(&pad(y));
    // (I I^*)[k][l] depends only on (k - l) mod 2n
    let kernel: Vec<C64> = (0..big)
        .map(|d| {
            (0..n)
                .map(|i| C64::from_polar(1.0, 2.0 * PI * ((d * i) % big) as f64 / big as f64))
                .sum::<C64>()
                / big as f64
        })
        .collect();
    let gram = &xe * xe.adjoint();
    let h = Matrix::from_fn(big, big, |k, l| kernel[(k + big - l) % big] * gram[(k, l)].conj());
    let d = Vector::from_vec(row_inner(&ye, &xe));
    let sol = hermitian_min_norm_solve(&h, &d, 1e-13);
    let mut warnings = Vec::new();
    // one null direction is structural: the embedding has 2n parameters for 2n - 1 diagonals
    if sol.rank < big - 1 {
        let top = sol.eigenvalues[0];
        let low = sol.eigenvalues[big - 2].max(f64::MIN_POSITIVE);
        warnings.push(FitWarning::Condition { estimate: top / low });
    }
    let a: Vec<C64> = sol.x.iter().copied().collect();
    let gamma: Vec<C64> = ifft(&a).into_iter().map(|z| z / big as f64).collect();
    // C[p][q] = gamma[(q - p) mod 2n], so offset p - q = delta reads gamma[-delta]
    let coefficients = (0..2 * n - 1)
        .map(|idx| {
            let delta = idx as i64 - (n as i64 - 1);
            gamma[(-delta).rem_euclid(big as i64) as usize]
        })
        .collect();
    (coefficients, warnings)
}
