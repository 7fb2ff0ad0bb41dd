//! Causal (upper-triangular) operators: state `i` depends only on states `j >= i`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::Spectrum;
use crate::error::Result;
use crate::flags::RowFlag;
use crate::linalg::{flip_rows, rq, svd, triangular_eigenvectors, Matrix, C64, RANK_RTOL, ZERO};
use crate::snapshot::{SnapshotPair, TimeKind};

/// Rows processed between from-scratch pseudo-inverse refreshes in the update chains.
pub const REFRESH: usize = 50;

/// Pivot tolerance relative to the largest pivot (or row norm for the X-based chain).
pub const PIVOT_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangularMethod {
    Naive,
    FastUpdate,
    RqStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Upper,
    Lower,
}

/// Upper: `rows[i]` is `A[i, i..n]`. Lower: `rows[i]` is `A[i, 0..=i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangularModel {
    pub n: usize,
    pub rows: Vec<Vec<C64>>,
    pub orientation: Orientation,
    pub method: TriangularMethod,
    pub pivot_flags: Vec<RowFlag>,
}

impl TriangularModel {
    pub fn materialize(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let start = match self.orientation {
                Orientation::Upper => i,
                Orientation::Lower => 0,
            };
            for (k, &v) in row.iter().enumerate() {
                a[(i, start + k)] = v;
            }
        }
        a
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.rows
            .iter()
            .map(|row| match self.orientation {
                Orientation::Upper => row[0],
                Orientation::Lower => row[row.len() - 1],
            })
            .collect()
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.n, x.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            let start = match self.orientation {
                Orientation::Upper => i,
                Orientation::Lower => 0,
            };
            for t in 0..x.ncols() {
                let mut acc = ZERO;
                for (k, &v) in row.iter().enumerate() {
                    acc += v * x[(start + k, t)];
                }
                out[(i, t)] = acc;
            }
        }
        out
    }
}

pub fn fit_triangular(pair: &SnapshotPair, method: TriangularMethod) -> Result<TriangularModel> {
    let (rows, pivot_flags) = match method {
        TriangularMethod::Naive => naive(&pair.x, &pair.y),
        TriangularMethod::FastUpdate => fast_update(&pair.x, &pair.y),
        TriangularMethod::RqStable => rq_stable(&pair.x, &pair.y),
    };
    Ok(TriangularModel {
        n: pair.n(),
        rows,
        orientation: Orientation::Upper,
        method,
        pivot_flags,
    })
}

/// Lower-triangular fit by reversing the state order, fitting upper, and reversing back.
pub fn fit_lower_triangular(pair: &SnapshotPair, method: TriangularMethod) -> Result<TriangularModel> {
    let flipped = SnapshotPair::new(flip_rows(&pair.x), flip_rows(&pair.y))?;
    let upper = fit_triangular(&flipped, method)?;
    let n = upper.n;
    let mut rows = Vec::with_capacity(n);
    let mut pivot_flags = Vec::with_capacity(n);
    // A_lower[i][j] = A_upper[n-1-i][n-1-j]
    for i in 0..n {
        let mut row = upper.rows[n - 1 - i].clone();
        row.reverse();
        rows.push(row);
        pivot_flags.push(upper.pivot_flags[n - 1 - i]);
    }
    Ok(TriangularModel {
        n,
        rows,
        orientation: Orientation::Lower,
        method,
        pivot_flags,
    })
}

type Rows = (Vec<Vec<C64>>, Vec<RowFlag>);

fn naive(x: &Matrix, y: &Matrix) -> Rows {
    let n = x.nrows();
    let mut rows = vec![Vec::new(); n];
    let mut flags = vec![RowFlag::Ok; n];
    let mut rank_below = 0;
    for i in (0..n).rev() {
        let s = x.rows(i, n - i).into_owned();
        let dec = svd(&s);
        // the pivot vanishes when row i adds nothing to the span of the rows below
        let rank = dec.rank(RANK_RTOL);
        if rank == rank_below {
            flags[i] = RowFlag::SmallPivot;
        }
        rank_below = rank;
        let a = y.rows(i, 1) * dec.pinv(RANK_RTOL);
        rows[i] = a.iter().copied().collect();
    }
    (rows, flags)
}

/// Pseudo-inverse of `[c; B]` from `B^+` when a row `c` is prepended to `B`.
///
/// `b = c B^+` and `r = c - b B` (the part of `c` outside the row space of `B`).
/// When `r` is not negligible, `[c; B]^+ = [r^+, B^+ - r^+ b]`; otherwise
/// `[c; B]^+ = [h / (1 + |b|^2), B^+ - h b / (1 + |b|^2)]` with `h = B^+ b^*`.
fn prepend_row(bp: &Matrix, b: &Matrix, r: &Matrix, tol: f64) -> Matrix {
    let cols = bp.nrows();
    let k = bp.ncols();
    let mut out = Matrix::zeros(cols, k + 1);
    let rn2 = r.norm_squared();
    if k == 0 {
        // nalgebra's products reject empty operands, so the first row is handled directly
        if rn2.sqrt() > tol {
            out.column_mut(0).copy_from(&r.adjoint().unscale(rn2));
        }
        return out;
    }
    if rn2.sqrt() > tol {
        let rp = r.adjoint().unscale(rn2);
        out.column_mut(0).copy_from(&rp);
        out.columns_mut(1, k).copy_from(&(bp - &rp * b));
    } else {
        let h = bp * b.adjoint();
        let denom = 1.0 + b.norm_squared();
        out.column_mut(0).copy_from(&h.unscale(denom));
        out.columns_mut(1, k).copy_from(&(bp - (&h * b).unscale(denom)));
    }
    out
}

/// Rank-1 update chain on the rows of X: `X[i.., :]^+` is built from `X[i+1.., :]^+`.
fn fast_update(x: &Matrix, y: &Matrix) -> Rows {
    let (n, m) = x.shape();
    let max_row = (0..n).map(|i| x.row(i).norm()).fold(0.0_f64, f64::max);
    let tol = PIVOT_RTOL * max_row;
    let mut rows = vec![Vec::new(); n];
    let mut flags = vec![RowFlag::Ok; n];
    let mut p = Matrix::zeros(m, 0);
    for step in 0..n {
        let i = n - 1 - step;
        let c = x.rows(i, 1);
        let below = x.rows(i + 1, n - i - 1);
        let (b, r) = if step == 0 {
            (Matrix::zeros(1, 0), c.into_owned())
        } else {
            let b = c * &p;
            let r = c - &b * below;
            (b, r)
        };
        if r.norm() <= tol {
            flags[i] = RowFlag::SmallPivot;
        }
        p = prepend_row(&p, &b, &r, tol);
        if (step + 1) % REFRESH == 0 {
            p = svd(&x.rows(i, n - i).into_owned()).pinv(RANK_RTOL);
        }
        let a = y.rows(i, 1) * &p;
        rows[i] = a.iter().copied().collect();
    }
    (rows, flags)
}

/// Fit through the RQ factorization `X = R Q`.
///
/// With `W = Y Q^*`, row `i` solves `min ||W[i,:] - a R[i.., :]||`. In the square
/// part (`i >= n - p`) the block `R[i.., s..]`, `s = i - (n - p)`, is square upper
/// triangular with pivot `R[i][s]`, and its pseudo-inverse is carried upward by
/// [`prepend_row`]. Above it (only when `n > m`) the rows have all `p` columns
/// and the minimum-norm solution `w (R_i^* R_i)^-1 R_i^*` uses a triangular factor
/// of `R_i^* R_i` maintained by Givens rotations.
fn rq_stable(x: &Matrix, y: &Matrix) -> Rows {
    let n = x.nrows();
    let f = rq(x);
    let (r, q) = (f.r, f.q);
    let p = r.ncols();
    let w = y * q.adjoint();
    let off = n - p;
    let max_pivot = (off..n).map(|i| r[(i, i - off)].norm()).fold(0.0_f64, f64::max);
    let tol = PIVOT_RTOL * max_pivot;
    let mut rows = vec![Vec::new(); n];
    let mut flags = vec![RowFlag::Ok; n];

    let mut pinv = Matrix::zeros(0, 0);
    for step in 0..p {
        let i = n - 1 - step;
        let s = i - off;
        let k = n - i;
        let pivot = r[(i, s)];
        if pivot.norm() <= tol {
            flags[i] = RowFlag::SmallPivot;
        }
        // B = [0 | M_{i+1}] so B^+ = [0; M_{i+1}^+]
        let tail = r.view((i + 1, s + 1), (k - 1, k - 1));
        let rest = r.view((i, s + 1), (1, k - 1));
        let mut rhat = Matrix::zeros(1, k);
        rhat[(0, 0)] = pivot;
        let b = if k == 1 {
            Matrix::zeros(1, 0)
        } else {
            let b = rest * &pinv;
            rhat.columns_mut(1, k - 1).copy_from(&(rest - &b * tail));
            b
        };
        let mut bp = Matrix::zeros(k, k - 1);
        bp.rows_mut(1, k - 1).copy_from(&pinv);
        pinv = prepend_row(&bp, &b, &rhat, tol);
        if (step + 1) % REFRESH == 0 {
            let block = r.view((i, s), (k, k)).into_owned();
            let dec = svd(&block);
            let rtol = if dec.s[0] > 0.0 { tol / dec.s[0] } else { 0.0 };
            pinv = dec.pinv(rtol);
        }
        let a = w.view((i, s), (1, k)) * &pinv;
        rows[i] = a.iter().copied().collect();
    }

    if off > 0 {
        let z = tall_rows(&r, &w, off, tol, &mut flags);
        let zr = z * r.adjoint();
        for (i, row) in rows.iter_mut().enumerate().take(off) {
            *row = zr.view((i, i), (1, n - i)).iter().copied().collect();
        }
    }
    (rows, flags)
}

/// `z_i = w_i (R_i^* R_i)^-1` for the rows above the square block.
fn tall_rows(r: &Matrix, w: &Matrix, off: usize, tol: f64, flags: &mut [RowFlag]) -> Matrix {
    let (n, p) = r.shape();
    let mut t = r.rows(off, p).into_owned();
    let mut z = Matrix::zeros(off, p);
    for i in (0..off).rev() {
        let mut row: Vec<C64> = r.row(i).iter().copied().collect();
        givens_append(&mut t, &mut row);
        let small = (0..p).any(|k| t[(k, k)].norm() <= tol);
        let wi = w.rows(i, 1);
        if small {
            flags[i] = RowFlag::SmallPivot;
            let block = r.rows(i, n - i).into_owned();
            let pinv = svd(&block).pinv(RANK_RTOL);
            // (R_i^* R_i)^+ = R_i^+ (R_i^+)^*
            z.row_mut(i).copy_from(&(wi * &pinv * pinv.adjoint()));
        } else {
            let v = gram_solve(&t, &wi.adjoint().into_owned());
            z.row_mut(i).copy_from(&v.adjoint());
        }
    }
    z
}

/// Updates upper-triangular `t` so that `t^* t` gains `row^* row`.
fn givens_append(t: &mut Matrix, row: &mut [C64]) {
    let p = t.nrows();
    for k in 0..p {
        let b = row[k];
        if b == ZERO {
            continue;
        }
        let a = t[(k, k)];
        let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if a == ZERO {
            (0.0, b.conj() / b.norm())
        } else {
            (a.norm() / rho, (a / a.norm()) * b.conj() / rho)
        };
        for j in k..p {
            let tj = t[(k, j)];
            let rj = row[j];
            t[(k, j)] = tj * c + s * rj;
            row[j] = rj * c - s.conj() * tj;
        }
        row[k] = ZERO;
    }
}

/// Solves `t^* t v = rhs` for upper-triangular `t`.
fn gram_solve(t: &Matrix, rhs: &Matrix) -> Matrix {
    let p = t.nrows();
    let mut u = rhs.clone();
    for i in 0..p {
        let mut acc = u[(i, 0)];
        for k in 0..i {
            acc -= t[(k, i)].conj() * u[(k, 0)];
        }
        u[(i, 0)] = acc / t[(i, i)].conj();
    }
    for i in (0..p).rev() {
        let mut acc = u[(i, 0)];
        for k in i + 1..p {
            acc -= t[(i, k)] * u[(k, 0)];
        }
        u[(i, 0)] = acc / t[(i, i)];
    }
    u
}

/// Diagonal entries as eigenvalues, with eigenvectors by back substitution.
/// Eigenvalues of rows with a small pivot are marked unreliable.
pub fn triangular_eigenvalues(model: &TriangularModel, time_kind: TimeKind) -> Spectrum {
    let n = model.n;
    let vals = model.diagonal();
    let reliable: Vec<bool> = model.pivot_flags.iter().map(|&f| f == RowFlag::Ok).collect();
    let modes = match model.orientation {
        Orientation::Upper => triangular_eigenvectors(&model.materialize()),
        Orientation::Lower => {
            // P L P is upper triangular with reversed diagonal
            let flipped = crate::linalg::flip_cols(&flip_rows(&model.materialize()));
            let v = triangular_eigenvectors(&flipped);
            crate::linalg::flip_cols(&flip_rows(&v))
        }
    };
    debug_assert_eq!(modes.ncols(), n);
    Spectrum::from_pairs(vals, modes, reliable, time_kind)
}
