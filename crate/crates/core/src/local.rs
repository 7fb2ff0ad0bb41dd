//! Local (banded) operators: each state interacts only with a window of
//! neighbouring states.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PidmdError, Result};
use crate::flags::{FitWarning, RowFlag};
use crate::linalg::{hermitian_min_norm_solve, svd, Matrix, RealMatrix, Vector, C64, RANK_RTOL, ZERO};
use crate::snapshot::{Grid, SnapshotPair};

/// Default size limit for the dense per-row solves of [`fit_regularized_local`].
pub const REGULARIZED_SIZE_LIMIT: usize = 200;

/// Row `i` holds coefficients for offsets `-lower[i]..=upper[i]`; offsets that fall
/// outside the matrix (non-periodic) are stored as zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandedModel {
    pub n: usize,
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
    pub bands: Vec<Vec<C64>>,
    pub periodic: bool,
    pub flags: Vec<RowFlag>,
    pub warnings: Vec<FitWarning>,
}

impl BandedModel {
    /// Column index of `offset` in row `i`, if the entry exists.
    pub fn column(&self, i: usize, offset: i64) -> Option<usize> {
        window_column(self.n, i, offset, self.periodic)
    }

    pub fn materialize(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (k, &coef) in self.bands[i].iter().enumerate() {
                let offset = k as i64 - self.lower[i] as i64;
                if let Some(j) = self.column(i, offset) {
                    a[(i, j)] = coef;
                }
            }
        }
        a
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.n, x.ncols());
        for i in 0..self.n {
            for (k, &coef) in self.bands[i].iter().enumerate() {
                let offset = k as i64 - self.lower[i] as i64;
                if let Some(j) = self.column(i, offset) {
                    for t in 0..x.ncols() {
                        out[(i, t)] += coef * x[(j, t)];
                    }
                }
            }
        }
        out
    }
}

fn window_column(n: usize, i: usize, offset: i64, periodic: bool) -> Option<usize> {
    let j = i as i64 + offset;
    if periodic {
        Some(j.rem_euclid(n as i64) as usize)
    } else if (0..n as i64).contains(&j) {
        Some(j as usize)
    } else {
        None
    }
}

fn rows_of(x: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), x.ncols(), |r, t| x[(idx[r], t)])
}

/// Minimum-norm `a` minimizing `||y - a S||` for a row vector `y`; returns the rank of `S`.
fn row_lstsq(s: &Matrix, y: &Matrix) -> (Vec<C64>, usize) {
    let dec = svd(s);
    let rank = dec.rank(RANK_RTOL);
    let a = y * dec.pinv(RANK_RTOL);
    (a.iter().copied().collect(), rank)
}

pub fn fit_tridiagonal(pair: &SnapshotPair, periodic: bool) -> Result<BandedModel> {
    let n = pair.n();
    if n < 2 {
        return Err(invalid("tridiagonal fit needs n >= 2"));
    }
    fit_banded(pair, &vec![1; n], &vec![1; n], periodic)
}

pub fn fit_banded(pair: &SnapshotPair, lower: &[usize], upper: &[usize], periodic: bool) -> Result<BandedModel> {
    let n = pair.n();
    check_widths(n, lower, upper, periodic)?;
    let mut bands = Vec::with_capacity(n);
    let mut flags = vec![RowFlag::Ok; n];
    for i in 0..n {
        let (offsets, cols) = window(n, i, lower[i], upper[i], periodic);
        let s = rows_of(&pair.x, &cols);
        let y = pair.y.rows(i, 1).into_owned();
        let (coef, rank) = row_lstsq(&s, &y);
        if rank < cols.len() {
            flags[i] = RowFlag::Undetermined;
        }
        bands.push(scatter(&offsets, &coef, lower[i], upper[i]));
    }
    Ok(BandedModel {
        n,
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        bands,
        periodic,
        flags,
        warnings: Vec::new(),
    })
}

fn check_widths(n: usize, lower: &[usize], upper: &[usize], periodic: bool) -> Result<()> {
    if lower.len() != n || upper.len() != n {
        return Err(invalid(format!(
            "band widths need one entry per state ({n}), got {} lower and {} upper",
            lower.len(),
            upper.len()
        )));
    }
    for i in 0..n {
        if lower[i] >= n.max(1) || upper[i] >= n.max(1) {
            return Err(invalid(format!("band widths for row {i} exceed n - 1")));
        }
        if periodic && lower[i] + upper[i] + 1 > n {
            return Err(invalid(format!("periodic window of row {i} wraps onto itself")));
        }
    }
    Ok(())
}

/// Offsets and matrix columns present in row `i`'s window.
fn window(n: usize, i: usize, lower: usize, upper: usize, periodic: bool) -> (Vec<i64>, Vec<usize>) {
    let mut offsets = Vec::new();
    let mut cols = Vec::new();
    for off in -(lower as i64)..=upper as i64 {
        if let Some(j) = window_column(n, i, off, periodic) {
            offsets.push(off);
            cols.push(j);
        }
    }
    (offsets, cols)
}

fn scatter(offsets: &[i64], coef: &[C64], lower: usize, upper: usize) -> Vec<C64> {
    let mut band = vec![ZERO; lower + upper + 1];
    for (&off, &c) in offsets.iter().zip(coef) {
        band[(off + lower as i64) as usize] = c;
    }
    band
}

/// Conjugate-linear inner product of two rows: `sum_t conj(a_t) b_t`.
fn dot_rows(x: &Matrix, a: usize, y: &Matrix, b: usize) -> C64 {
    let mut acc = ZERO;
    for t in 0..x.ncols() {
        acc += x[(a, t)].conj() * y[(b, t)];
    }
    acc
}

/// Tridiagonal fit with `A[i][i+1] = A[i+1][i]`, solved as one global system.
///
/// Unknowns are interleaved as `(d_0, e_0, d_1, e_1, ..., d_{n-1})` with `d` the
/// diagonal and `e` the shared off-diagonal, which makes the normal equations a
/// Hermitian system of bandwidth 2.
pub fn fit_symmetric_tridiagonal(pair: &SnapshotPair) -> Result<BandedModel> {
    let n = pair.n();
    if n < 2 {
        return Err(invalid("symmetric tridiagonal fit needs n >= 2"));
    }
    let (x, y) = (&pair.x, &pair.y);
    let size = 2 * n - 1;
    let mut t = Matrix::zeros(size, size);
    let mut d = Vector::zeros(size);
    for i in 0..n {
        let di = 2 * i;
        t[(di, di)] = dot_rows(x, i, x, i);
        d[di] = dot_rows(x, i, y, i);
        if i + 1 < n {
            let ei = 2 * i + 1;
            // e_i enters row i through x_{i+1} and row i+1 through x_i
            t[(di, ei)] = dot_rows(x, i, x, i + 1);
            t[(ei, ei)] = dot_rows(x, i + 1, x, i + 1) + dot_rows(x, i, x, i);
            t[(di + 2, ei)] = dot_rows(x, i + 1, x, i);
            d[ei] = dot_rows(x, i + 1, y, i) + dot_rows(x, i, y, i + 1);
            if i + 2 < n {
                t[(ei, ei + 2)] = dot_rows(x, i, x, i + 2);
            }
        }
    }
    for r in 0..size {
        for c in 0..r {
            if t[(r, c)] == ZERO {
                t[(r, c)] = t[(c, r)].conj();
            } else {
                t[(c, r)] = t[(r, c)].conj();
            }
        }
    }
    let mut warnings = Vec::new();
    let c = match banded_cholesky_solve(&t, &d, 2) {
        Some(c) => c,
        None => {
            let sol = hermitian_min_norm_solve(&t, &d, RANK_RTOL);
            let top = sol.eigenvalues[0];
            let low = sol.eigenvalues[size - 1].max(0.0);
            warnings.push(FitWarning::Condition {
                estimate: if low > 0.0 { top / low } else { f64::INFINITY },
            });
            sol.x
        }
    };
    let mut bands = Vec::with_capacity(n);
    for i in 0..n {
        let below = if i > 0 { c[2 * i - 1] } else { ZERO };
        let above = if i + 1 < n { c[2 * i + 1] } else { ZERO };
        bands.push(vec![below, c[2 * i], above]);
    }
    Ok(BandedModel {
        n,
        lower: vec![1; n],
        upper: vec![1; n],
        bands,
        periodic: false,
        flags: vec![RowFlag::Ok; n],
        warnings,
    })
}

/// Cholesky solve of a Hermitian positive definite matrix with bandwidth `p`;
/// `None` when a pivot is not safely positive.
fn banded_cholesky_solve(t: &Matrix, d: &Vector, p: usize) -> Option<Vector> {
    let n = t.nrows();
    let scale = (0..n).map(|i| t[(i, i)].re).fold(0.0_f64, f64::max);
    if scale <= 0.0 {
        return None;
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let lo = j.saturating_sub(p);
        let mut diag = t[(j, j)].re;
        for k in lo..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if diag <= 1e-12 * scale {
            return None;
        }
        let ljj = diag.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..(j + p + 1).min(n) {
            let mut acc = t[(i, j)];
            for k in i.saturating_sub(p)..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / ljj;
        }
    }
    let mut z = d.clone();
    for i in 0..n {
        for k in i.saturating_sub(p)..i {
            let lik = l[(i, k)];
            let zk = z[k];
            z[i] -= lik * zk;
        }
        z[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..(i + p + 1).min(n) {
            let lki = l[(k, i)].conj();
            let zk = z[k];
            z[i] -= lki * zk;
        }
        z[i] /= l[(i, i)];
    }
    Some(z)
}

/// Row-wise total least squares over the tridiagonal window.
pub fn fit_tridiagonal_tls(pair: &SnapshotPair) -> Result<BandedModel> {
    let (n, m) = (pair.n(), pair.m());
    if n < 2 {
        return Err(invalid("tridiagonal fit needs n >= 2"));
    }
    if m < 4 {
        return Err(PidmdError::InsufficientSnapshots { needed: 4, got: m });
    }
    let mut bands = Vec::with_capacity(n);
    let mut flags = vec![RowFlag::Ok; n];
    for i in 0..n {
        let (offsets, cols) = window(n, i, 1, 1, false);
        let s = rows_of(&pair.x, &cols);
        let y = pair.y.rows(i, 1).into_owned();
        let coef = match row_tls(&s, &y) {
            Some(c) => c,
            None => {
                flags[i] = RowFlag::TlsDegenerate;
                let (c, rank) = row_lstsq(&s, &y);
                if rank < cols.len() {
                    flags[i] = RowFlag::Undetermined;
                }
                c
            }
        };
        bands.push(scatter(&offsets, &coef, 1, 1));
    }
    Ok(BandedModel {
        n,
        lower: vec![1; n],
        upper: vec![1; n],
        bands,
        periodic: false,
        flags,
        warnings: Vec::new(),
    })
}

/// TLS solution of `a (S + E) = y + r` from the stack `[S; y]`, or `None` when it
/// does not exist or is not unique.
fn row_tls(s: &Matrix, y: &Matrix) -> Option<Vec<C64>> {
    let k = s.nrows();
    let mut stack = Matrix::zeros(k + 1, s.ncols());
    stack.rows_mut(0, k).copy_from(s);
    stack.rows_mut(k, 1).copy_from(y);
    let dec = svd(&stack);
    if dec.s.len() < k + 1 || dec.s[0] == 0.0 {
        return None;
    }
    if dec.s[k - 1] - dec.s[k] <= 1e-12 * dec.s[0] {
        return None;
    }
    // the smallest left singular vector is orthogonal to the columns of [I; a]
    let u = dec.u.column(k);
    let last = u[k];
    if last.norm() <= 1e-12 {
        return None;
    }
    Some((0..k).map(|j| -u[j].conj() / last.conj()).collect())
}

/// Soft locality weights: the fit minimizes `||Y - A X||^2 + lambda * sum H_ij |A_ij|^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalityPenalty {
    #[serde(skip)]
    h: RealMatrix,
    lambda: f64,
}

impl LocalityPenalty {
    pub fn new(h: RealMatrix, lambda: f64) -> Result<LocalityPenalty> {
        if h.nrows() != h.ncols() {
            return Err(invalid("penalty weights must be square"));
        }
        if h.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("penalty weights must be finite and non-negative"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid("penalty strength must be finite and non-negative"));
        }
        Ok(LocalityPenalty { h, lambda })
    }

    /// `H_ij = exp(|x_i - x_j| / (2 sigma^2))`, which grows with distance so far
    /// couplings are penalized hardest. Distances wrap on periodic grids.
    pub fn kernel(grid: &Grid, sigma: f64, lambda: f64) -> Result<LocalityPenalty> {
        if !(sigma > 0.0) {
            return Err(invalid("kernel width must be positive"));
        }
        let p = grid.points();
        let n = p.len();
        let h = RealMatrix::from_fn(n, n, |i, j| {
            let mut d = (p[i] - p[j]).abs();
            if grid.is_periodic() {
                d = d.min(grid.period_length() - d);
            }
            (d / (2.0 * sigma * sigma)).exp()
        });
        LocalityPenalty::new(h, lambda)
    }

    pub fn weights(&self) -> &RealMatrix {
        &self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Dense operator minimizing the penalized objective, one row at a time:
/// `A_i = y_i X^* (X X^* + lambda diag(H_i))^-1`.
pub fn fit_regularized_local(pair: &SnapshotPair, penalty: &LocalityPenalty, allow_large: bool) -> Result<Matrix> {
    let n = pair.n();
    if n > REGULARIZED_SIZE_LIMIT && !allow_large {
        return Err(PidmdError::SizeLimitExceeded {
            n,
            limit: REGULARIZED_SIZE_LIMIT,
        });
    }
    if penalty.h.nrows() != n {
        return Err(crate::error::mismatch(format!(
            "penalty is {}x{} but the state has {n} entries",
            penalty.h.nrows(),
            penalty.h.ncols()
        )));
    }
    let x = &pair.x;
    let gram = x * x.adjoint();
    let trace: f64 = (0..n).map(|i| gram[(i, i)].re).sum();
    let rhs_all = x * pair.y.adjoint();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        let mut g = gram.clone();
        for j in 0..n {
            g[(j, j)] += penalty.lambda * penalty.h[(i, j)];
        }
        let rhs = rhs_all.column(i).into_owned();
        let z = solve_hermitian(g, &rhs, trace);
        for j in 0..n {
            a[(i, j)] = z[j].conj();
        }
    }
    Ok(a)
}

fn solve_hermitian(g: Matrix, rhs: &Vector, trace: f64) -> Vector {
    if let Some(ch) = g.clone().cholesky() {
        return ch.solve(rhs);
    }
    let mut shifted = g;
    let n = shifted.nrows();
    let shift = 1e-12 * trace.max(f64::MIN_POSITIVE);
    for j in 0..n {
        shifted[(j, j)] += shift;
    }
    match shifted.clone().cholesky() {
        Some(ch) => ch.solve(rhs),
        None => hermitian_min_norm_solve(&shifted, rhs, RANK_RTOL).x,
    }
}
